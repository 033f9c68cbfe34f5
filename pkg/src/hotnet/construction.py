"""Constructed equilibrium profiles on a step density, player counts and bounds.

Notation: on step ``i`` of edge ``e`` the step density takes value ``g`` over a
length ``ell``; with a scale ``theta`` we write ``u = theta / g`` (the length
that carries mass ``theta``) and ``c = ceil(g * ell / (2 * theta))``.

Step layouts, measured from the step end nearest the special feature:

* interior step, or step touching a vertex of degree >= 2: a pair at ``2u``,
  then ``c - 2`` singles from ``4u`` spaced ``a * u`` (last one ``2u`` before
  the far end);
* step touching a leaf: pairs at ``u`` and ``3u`` from the leaf, then
  ``c - 2`` singles from ``5u`` spaced ``b * u``.

Interior steps are laid out from their lower end. Step junctions inside an
edge hold 2 players, a vertex of degree ``d >= 2`` holds ``d`` players, and
leaves hold none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ._num import exact, to_json_exact, to_json_number
from .density import Density, StepDensity, step_approximate, step_cap
from .graph import GraphPoint, MetricGraph
from .payoff import Profile

__all__ = [
    "ConstructionError",
    "PreconditionError",
    "StepDescriptor",
    "StepPlan",
    "PlacementPlan",
    "BoundSet",
    "ConstructionResult",
    "coefficients",
    "classify_steps",
    "build_profile",
    "player_count",
    "closed_form_count",
    "theta_bar",
    "trim_to_n",
    "bounds",
    "eps1_for",
    "n_of_eps_displayed",
    "construct_equilibrium",
    "annex_diagnostics",
]

INTERIOR, VERTEX, LEAF = "interior", "vertex", "leaf"


class ConstructionError(ValueError):
    pass


class PreconditionError(ConstructionError):
    """Raised when ``n`` is below the guaranteed threshold and no override is given."""

    def __init__(self, message: str, required: int):
        super().__init__(message)
        self.required = required


def _ceil(x) -> int:
    return math.ceil(x)


def coefficients(g, ell, theta) -> tuple[Fraction, Fraction]:
    """Single-player spacing factors ``(a, b)`` for one step."""
    g, ell, theta = exact(g), exact(ell), exact(theta)
    r = g * ell / theta
    c = _ceil(r / 2)
    if c - 3 <= 0:
        raise ConstructionError(f"theta={theta} too large for the step: ceil(g*ell/(2 theta))={c} <= 3")
    return (r - 6) / (c - 3), (r - 7) / (c - 3)


@dataclass(frozen=True)
class StepDescriptor:
    edge: str
    index: int
    kind: str  # interior | vertex | leaf
    g: Fraction
    ell: Fraction
    #: vertex (or leaf) touching the step, and which end of the step it is on
    vertex: str | None = None
    degree: int | None = None
    at_upper: bool = False

    @property
    def lo(self) -> Fraction:
        return self.index * self.ell

    def to_json(self) -> dict:
        out = {"edge": self.edge, "index": self.index, "type": self.kind,
               "g": to_json_exact(self.g), "ell": to_json_exact(self.ell)}
        if self.vertex is not None:
            out.update(vertex=self.vertex, degree=self.degree, end="upper" if self.at_upper else "lower")
        return out


def classify_steps(graph: MetricGraph, sd: StepDensity) -> list[StepDescriptor]:
    out = []
    deg = graph.degrees
    for e in graph.edges:
        I, ell, vals = sd.steps[e.id]
        if I < 2:
            raise ConstructionError(f"edge {e.id!r} has {I} step(s); at least 2 are required")
        for i, g in enumerate(vals):
            if i == 0:
                kind = LEAF if deg[e.u] == 1 else VERTEX
                out.append(StepDescriptor(e.id, i, kind, g, ell, e.u, deg[e.u], False))
            elif i == I - 1:
                kind = LEAF if deg[e.v] == 1 else VERTEX
                out.append(StepDescriptor(e.id, i, kind, g, ell, e.v, deg[e.v], True))
            else:
                out.append(StepDescriptor(e.id, i, INTERIOR, g, ell))
    return out


@dataclass
class StepPlan:
    step: StepDescriptor
    c: int
    coef: Fraction  # a for interior/vertex steps, b for leaf steps
    #: interior positions as (arc length on the edge, multiplicity), increasing
    positions: list[tuple[Fraction, int]]
    #: arc of the pair that may lose a player when trimming
    spare: Fraction

    def gaps(self) -> list[Fraction]:
        """Consecutive distances from the lower step end to the upper one."""
        pts = [self.step.lo] + [p for p, _ in self.positions] + [self.step.lo + self.step.ell]
        return [b - a for a, b in zip(pts, pts[1:])]

    def to_json(self) -> dict:
        out = self.step.to_json()
        out.update({
            "c": self.c,
            ("b" if self.step.kind == LEAF else "a"): to_json_exact(self.coef),
            "positions": [[to_json_exact(p), k] for p, k in self.positions],
            "gaps": [to_json_exact(x) for x in self.gaps()],
        })
        return out


@dataclass
class PlacementPlan:
    theta: Fraction
    steps: list[StepPlan]
    vertex_counts: dict[str, int]
    #: intra-edge step junctions, as (edge, arc) each holding 2 players
    junctions: list[tuple[str, Fraction]]

    @property
    def n(self) -> int:
        return (sum(k for s in self.steps for _, k in s.positions)
                + sum(self.vertex_counts.values()) + 2 * len(self.junctions))

    def to_json(self) -> dict:
        return {
            "theta": to_json_exact(self.theta),
            "n": self.n,
            "steps": [s.to_json() for s in self.steps],
            "vertices": dict(sorted(self.vertex_counts.items())),
            "junctions": [[e, to_json_exact(a)] for e, a in self.junctions],
        }


def _step_plan(step: StepDescriptor, theta, strict: bool) -> StepPlan:
    g, ell = step.g, step.ell
    if strict and theta > g * ell / 10:
        raise ConstructionError(
            f"theta={theta} exceeds g*ell/10={g * ell / 10} on step {step.index} of edge {step.edge!r}")
    a, b = coefficients(g, ell, theta)
    c = _ceil(g * ell / (2 * theta))
    u = theta / g
    if step.kind == LEAF:
        coef = b
        rel = [(u, 2), (3 * u, 2)] + [(5 * u + j * b * u, 1) for j in range(c - 2)]
        spare = 3 * u
    else:
        coef = a
        rel = [(2 * u, 2)] + [(4 * u + j * a * u, 1) for j in range(c - 2)]
        spare = 2 * u
    if coef <= 0 or rel[-1][0] >= ell:
        raise ConstructionError(f"theta={theta} leaves no room on step {step.index} of edge {step.edge!r}")
    lo, hi = step.lo, step.lo + ell
    if step.at_upper:
        pos = sorted((hi - r, k) for r, k in rel)
        spare = hi - spare
    else:
        pos = [(lo + r, k) for r, k in rel]
        spare = lo + spare
    return StepPlan(step, c, coef, pos, spare)


def _plan(graph: MetricGraph, sd: StepDensity, theta, strict: bool = True) -> PlacementPlan:
    theta = exact(theta)
    if theta <= 0:
        raise ConstructionError("theta must be positive")
    steps = [_step_plan(s, theta, strict) for s in classify_steps(graph, sd)]
    vcounts = {v: d for v, d in graph.degrees.items() if d >= 2}
    junctions = [(e.id, i * sd.ell(e.id)) for e in graph.edges for i in range(1, sd.n_steps(e.id))]
    return PlacementPlan(theta, steps, vcounts, junctions)


def build_profile(graph: MetricGraph, step_density: StepDensity, theta, *,
                  strict: bool = True) -> tuple[Profile, PlacementPlan]:
    """Profile for scale ``theta``; ``strict`` enforces ``theta <= g*ell/10`` on every step."""
    plan = _plan(graph, step_density, theta, strict)
    entries: list[tuple[GraphPoint, int]] = [(graph.vertex_point(v), k) for v, k in plan.vertex_counts.items()]
    by_edge: dict[str, list[tuple[Fraction, int]]] = {e.id: [] for e in graph.edges}
    for s in plan.steps:
        by_edge[s.step.edge].extend(s.positions)
    for eid, arc in plan.junctions:
        by_edge[eid].append((arc, 2))
    for e in graph.edges:
        for arc, k in sorted(by_edge[e.id]):
            entries.append((graph.point_at_arc(e.id, arc), k))
    return Profile.from_counts(entries), plan


def _fixed_players(graph: MetricGraph, sd: StepDensity) -> int:
    """Players that do not depend on theta: junctions, vertices and leaf-step extras."""
    deg = graph.degrees
    leaves = sum(1 for d in deg.values() if d == 1)
    return (2 * sum(sd.n_steps(e.id) - 1 for e in graph.edges)
            + sum(d for d in deg.values() if d >= 2) + 2 * leaves)


def _halves(sd: StepDensity) -> list[Fraction]:
    return [g * sd.ell(e) / 2 for e, i in sd.step_list() for g in (sd.g(e, i),)]


def player_count(graph: MetricGraph, step_density: StepDensity, theta) -> int:
    """Number of players :func:`build_profile` places at ``theta``."""
    theta = exact(theta)
    return sum(_ceil(h / theta) for h in _halves(step_density)) + _fixed_players(graph, step_density)


def closed_form_count(graph: MetricGraph, step_density: StepDensity, theta, K=None) -> int:
    """The count as given by the published formula (diagnostic only)."""
    theta = exact(theta)
    K = step_density.base.K if K is None else exact(K)
    deg = graph.degrees
    n_leaf_edges = sum(1 for e in graph.edges if deg[e.u] == 1 or deg[e.v] == 1)
    ssum = sum(_ceil(h / theta) for h in _halves(step_density))
    return ssum + 2 * n_leaf_edges + 2 * sum(
        _ceil(e.length * K / (2 * step_density.eps1)) for e in graph.edges)


def _jump_points(halves: list[Fraction], kmax: int) -> list[Fraction]:
    return sorted({h / k for h in halves for k in range(1, kmax + 1)})


def theta_bar(graph: MetricGraph, step_density: StepDensity, n: int) -> Fraction:
    """Minimal theta with ``n <= player_count(theta) <= n + (number of steps)``.

    The count is a right-continuous step function of theta that only jumps
    at ``g*ell/(2k)``; the minimal solution is one of those points, found by
    binary search over the sorted candidates.
    """
    n = int(n)
    halves = _halves(step_density)
    fixed = _fixed_players(graph, step_density)
    target = n + step_density.n_steps()
    floor_count = len(halves) + fixed  # every ceiling equal to 1
    if floor_count > target:
        raise ConstructionError(
            f"n={n} is too small: even the coarsest profile has {floor_count} players "
            f"(> n + steps = {target})")
    cands = _jump_points(halves, target + 1)

    def h(theta):
        return sum(_ceil(x / theta) for x in halves) + fixed

    lo, hi = 0, len(cands) - 1  # h(cands[-1]) == floor_count <= target
    while lo < hi:
        mid = (lo + hi) // 2
        if h(cands[mid]) <= target:
            hi = mid
        else:
            lo = mid + 1
    theta = cands[lo]
    if h(theta) < n:
        raise ConstructionError(f"no theta gives between {n} and {target} players")
    return theta


def trim_to_n(profile: Profile, plan: PlacementPlan, n: int, graph: MetricGraph | None = None) -> Profile:
    """Drop one player from the spare pair of the first ``n' - n`` steps.

    Steps are taken in (edge id, step index) order. ``graph`` is only needed
    to turn arcs into points; it defaults to the graph of the profile's points.
    """
    extra = profile.n - int(n)
    if extra < 0:
        raise ConstructionError(f"profile has {profile.n} players, fewer than n={n}")
    order = sorted(plan.steps, key=lambda s: (s.step.edge, s.step.index))
    if extra > len(order):
        raise ConstructionError(f"cannot drop {extra} players: only {len(order)} steps have a spare pair")
    if extra == 0:
        return profile
    if graph is None:
        raise ConstructionError("trim_to_n needs the graph to locate spare pairs")
    pts = list(profile.points)
    for s in order[:extra]:
        x = graph.point_at_arc(s.step.edge, s.spare)
        k = len(pts) - 1 - pts[::-1].index(x)
        del pts[k]
    return Profile(pts)


# -- bounds -------------------------------------------------------------------------


@dataclass
class BoundSet:
    eps1: Fraction
    omega: int
    psi: Fraction
    phi: Fraction
    eps: Fraction | None = None
    N: int | None = None
    theta_bar: Fraction | None = None
    inputs: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "eps1": to_json_exact(self.eps1),
            "Omega": self.omega,
            "Psi": to_json_number(self.psi),
            "Phi": to_json_number(self.phi),
            "inputs": self.inputs,
        }
        if self.eps is not None:
            out["eps"] = to_json_exact(self.eps)
            out["N"] = self.N
        if self.theta_bar is not None:
            out["theta_bar"] = to_json_exact(self.theta_bar)
        return out


def eps1_for(eps, m):
    """Largest step resolution whose multiplicative slack does not exceed ``eps``."""
    eps, m = exact(eps), exact(m)
    return eps * m / (12 + eps)


def _omega(L, K, m, M, n_edges, min_len, eps1) -> int:
    inner = 5 * L * (M + eps1) / (m - eps1) * (K / (2 * eps1) + 1 / min_len) + 3 * L * K / (2 * eps1)
    return 5 * n_edges + _ceil(inner)


def n_of_eps_displayed(L, K, m, M, n_edges, min_len, eps) -> int:
    """Player threshold for target ``eps`` written out in terms of ``eps`` alone."""
    L, K, m, M, min_len, eps = (exact(x) for x in (L, K, m, M, min_len, eps))
    q = eps * m / (12 + eps)
    inner = (5 * L * (M + q) / (m - q) * ((12 + eps) * K / (2 * eps * m) + 1 / min_len)
             + 3 * L * K * (12 + eps) / (2 * eps * m))
    return 5 * n_edges + _ceil(inner)


def bounds(density: Density, *, eps1=None, eps=None, graph: MetricGraph | None = None) -> BoundSet:
    """All explicit constants for resolution ``eps1`` (or for target ``eps``)."""
    graph = graph or density.graph
    if (eps1 is None) == (eps is None):
        raise ValueError("give exactly one of eps1 and eps")
    K, m, M = density.K, density.m, density.M
    if K <= 0 or m <= 0:
        raise ValueError("bounds need K > 0 and m > 0")
    if eps is not None:
        eps = exact(eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        eps1 = eps1_for(eps, m)
    eps1 = exact(eps1)
    cap = step_cap(density)
    if not 0 < eps1 < cap:
        raise ValueError(f"eps1={eps1} outside (0, {cap}) = (0, min length * K / 2)")
    if eps1 >= m:
        raise ValueError(f"eps1={eps1} must be below m={m}")
    L = density.total_mass()
    min_len = graph.min_length()
    n_edges = len(graph.edges)
    omega = _omega(L, K, m, M, n_edges, min_len, eps1)
    psi = 5 * eps1 ** 2 * (M + eps1) / (12 * K * (m - eps1))
    phi = 12 * eps1 / (m - eps1)
    inputs = {"L": to_json_number(L), "K": to_json_number(K), "m": to_json_number(m),
              "M": to_json_number(M), "edges": n_edges, "min_length": to_json_number(min_len)}
    return BoundSet(eps1, omega, psi, phi, eps, omega if eps is not None else None, inputs=inputs)


# -- full pipeline ----------------------------------------------------------------------


@dataclass
class ConstructionResult:
    profile: Profile
    bounds: BoundSet
    plan: PlacementPlan
    step_density: StepDensity
    theta_bar: Fraction
    n_prime: int
    trimmed: int
    warnings: list[str] = field(default_factory=list)

    def to_json(self, graph: MetricGraph) -> dict:
        return {
            "eps": None if self.bounds.eps is None else to_json_exact(self.bounds.eps),
            "eps1": to_json_exact(self.bounds.eps1),
            "theta_bar": to_json_exact(self.theta_bar),
            "n": self.profile.n,
            "n_prime": self.n_prime,
            "trimmed": self.trimmed,
            "bounds": self.bounds.to_json(),
            "steps": [s.to_json() for s in self.plan.steps],
            "vertices": dict(sorted(self.plan.vertex_counts.items())),
            "step_density": self.step_density.to_json(),
            "profile": self.profile.to_json(graph),
            "warnings": list(self.warnings),
        }


def construct_equilibrium(graph: MetricGraph, density: Density, n: int, eps=None, *,
                          eps1=None, override: bool = False) -> ConstructionResult:
    """Build the ``n``-player profile for target ``eps`` (or a given ``eps1``)."""
    n = int(n)
    b = bounds(density, eps=eps, eps1=eps1 if eps is None else None, graph=graph)
    warnings = []
    if n < b.omega:
        msg = f"n={n} is below the guaranteed threshold {b.omega}"
        if not override:
            raise PreconditionError(msg, b.omega)
        warnings.append(msg + "; guarantees do not apply")
    sd = step_approximate(density, b.eps1)
    tb = theta_bar(graph, sd, n)
    b.theta_bar = tb
    limit = min(s.g * s.ell for s in classify_steps(graph, sd)) / 10
    if tb > limit:
        if not override:
            raise ConstructionError(f"theta_bar={tb} exceeds min g*ell/10={limit}")
        warnings.append(f"theta_bar={to_json_number(tb)} exceeds min g*ell/10={to_json_number(limit)}")
    full, plan = build_profile(graph, sd, tb, strict=not override)
    prof = trim_to_n(full, plan, n, graph)
    return ConstructionResult(prof, b, plan, sd, tb, full.n, full.n - n, warnings)


def annex_diagnostics(graph: MetricGraph, density: Density, eps1, n: int) -> dict:
    """Numerical checks of the two auxiliary inequalities on one instance."""
    b = bounds(density, eps1=eps1, graph=graph)
    sd = step_approximate(density, b.eps1)
    steps = classify_steps(graph, sd)
    per_step = []
    for s in steps:
        th = s.ell * s.g / 10
        per_step.append({"edge": s.edge, "index": s.index, "theta": to_json_exact(th),
                         "closed_form": closed_form_count(graph, sd, th),
                         "exact": player_count(graph, sd, th)})
    omega_ok = all(r["closed_form"] <= b.omega for r in per_step)
    K, M = density.K, density.M
    out = {"eps1": to_json_exact(b.eps1), "n": int(n), "Omega": b.omega,
           "n_at_least_Omega": int(n) >= b.omega,
           "omega_vs_count": {"ok": omega_ok, "steps": per_step}}
    tb = theta_bar(graph, sd, n)
    cap5 = b.eps1 * (M + b.eps1) / (5 * K)
    cap4 = b.eps1 * (M + b.eps1) / (4 * K)
    smin = min(s.ell * s.g for s in steps) / 10
    out["theta_bar"] = to_json_exact(tb)
    out["theta_bar_vs_5K"] = {"ok": tb <= cap5, "bound": to_json_number(cap5)}
    out["theta_bar_vs_4K"] = {"ok": tb <= cap4, "bound": to_json_number(cap4)}
    out["theta_bar_vs_steps"] = {"ok": tb <= smin, "bound": to_json_number(smin)}
    out["ok"] = omega_ok and tb <= cap5 and tb <= smin
    return out
