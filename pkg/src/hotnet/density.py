"""Consumer densities on a metric graph and their step approximation.

Every supported density is stored per edge as a list of linear pieces
``(a, b, f(a), f(b))`` in arc length, so integrals, cumulative masses and
bounds are all closed form. Pieces are contiguous; at an interior breakpoint
the right-hand piece gives the value (matters only for step functions).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

import numpy as np

from ._num import Q, exact, to_json_exact, to_json_number, to_q
from .graph import MetricGraph, SubInterval

__all__ = [
    "Density",
    "StepDensity",
    "SubInterval",
    "DensityReport",
    "integrate",
    "total_mass",
    "step_approximate",
    "step_cap",
    "validate_density",
]

Piece = tuple  # (a, b, fa, fb)


def _linear_pieces(lam, ts, vals, *, constant: bool) -> list[Piece]:
    ts = [exact(t) for t in ts]
    vals = [exact(v) for v in vals]
    if ts[0] != 0 or ts[-1] != 1 or any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("breakpoints must increase strictly from 0 to 1")
    need = len(ts) - 1 if constant else len(ts)
    if len(vals) != need:
        raise ValueError(f"expected {need} values for {len(ts)} breakpoints, got {len(vals)}")
    out = []
    for i in range(len(ts) - 1):
        fa = vals[i]
        fb = vals[i] if constant else vals[i + 1]
        out.append((ts[i] * lam, ts[i + 1] * lam, fa, fb))
    return out


class Density:
    """Piecewise-linear density with declared constants ``K``, ``m``, ``M``.

    Use the classmethod constructors (:meth:`uniform`, :meth:`affine`,
    :meth:`piecewise_constant`, :meth:`piecewise_linear`) or
    :meth:`from_json`. When ``m`` or ``M`` is omitted it is computed exactly
    from the pieces.
    """

    def __init__(self, graph: MetricGraph, pieces: Mapping[str, list[Piece]], K, m=None, M=None,
                 *, spec: dict | None = None):
        self.graph = graph
        self.pieces: dict[str, list[Piece]] = {}
        for e in graph.edges:
            if e.id not in pieces:
                raise ValueError(f"no density given for edge {e.id!r}")
            ps = [tuple(exact(x) for x in p) for p in pieces[e.id]]
            if ps[0][0] != 0 or ps[-1][1] != e.length:
                raise ValueError(f"density pieces on {e.id!r} do not cover [0, {e.length}]")
            for p, q in zip(ps, ps[1:]):
                if p[1] != q[0]:
                    raise ValueError(f"density pieces on {e.id!r} are not contiguous")
            self.pieces[e.id] = ps
        extra = set(pieces) - set(self.pieces)
        if extra:
            raise ValueError(f"density given for unknown edges {sorted(extra)}")
        self.K = exact(K)
        self.m = exact(m) if m is not None else self.inf_value()
        self.M = exact(M) if M is not None else self.sup_value()
        self.spec = spec
        self._starts = {e: [p[0] for p in ps] for e, ps in self.pieces.items()}
        prefix = {}
        for e, ps in self.pieces.items():
            acc, cum = Fraction(0), [Fraction(0)]
            for a, b, fa, fb in ps:
                acc += (b - a) * (fa + fb) / 2
                cum.append(acc)
            prefix[e] = cum
        self._prefix = prefix

    # -- constructors ------------------------------------------------------

    @classmethod
    def uniform(cls, graph: MetricGraph, value=1, K=None, m=None, M=None) -> "Density":
        value = exact(value)
        if K is None:
            K = Fraction(1, 10**6) * value / graph.min_length()
        pieces = {e.id: [(0, e.length, value, value)] for e in graph.edges}
        return cls(graph, pieces, K, m, M, spec={"kind": "uniform", "value": value})

    @classmethod
    def affine(cls, graph: MetricGraph, coeffs, K=None, m=None, M=None) -> "Density":
        """``f_e(s) = alpha_e + beta_e * s``; ``coeffs`` is one pair or a dict per edge."""
        if not isinstance(coeffs, Mapping):
            coeffs = {e.id: coeffs for e in graph.edges}
        pieces, betas = {}, []
        for e in graph.edges:
            al, be = (exact(x) for x in coeffs[e.id])
            betas.append(abs(be))
            pieces[e.id] = [(0, e.length, al, al + be * e.length)]
        if K is None:
            K = max(betas)
        return cls(graph, pieces, K, m, M,
                   spec={"kind": "affine", "edges": {k: tuple(exact(x) for x in v) for k, v in coeffs.items()}})

    @classmethod
    def piecewise_constant(cls, graph, per_edge: Mapping, K, m=None, M=None) -> "Density":
        """``per_edge[e] = (breakpoints in t, values)`` with one value per cell."""
        pieces = {e.id: _linear_pieces(e.length, *per_edge[e.id], constant=True) for e in graph.edges}
        return cls(graph, pieces, K, m, M, spec={"kind": "pwc", "edges": dict(per_edge)})

    @classmethod
    def piecewise_linear(cls, graph, per_edge: Mapping, K=None, m=None, M=None) -> "Density":
        """``per_edge[e] = (breakpoints in t, values at breakpoints)``."""
        pieces = {e.id: _linear_pieces(e.length, *per_edge[e.id], constant=False) for e in graph.edges}
        if K is None:
            K = max(abs(fb - fa) / (b - a) for ps in pieces.values() for a, b, fa, fb in ps)
        return cls(graph, pieces, K, m, M, spec={"kind": "pwl", "edges": dict(per_edge)})

    @classmethod
    def from_json(cls, graph: MetricGraph, data: Mapping) -> "Density":
        kind = data.get("kind")
        K, m, M = data.get("K"), data.get("m"), data.get("M")
        if K is None:
            raise ValueError("density JSON needs a Lipschitz constant 'K'")

        def per_edge(key_fn):
            edges = data.get("edges")
            out = {}
            for e in graph.edges:
                payload = edges.get(e.id) if edges is not None else data
                if payload is None:
                    raise ValueError(f"density JSON has no entry for edge {e.id!r}")
                out[e.id] = key_fn(payload)
            return out

        if kind == "uniform":
            vals = per_edge(lambda p: exact(p["value"]))
            pieces = {e.id: [(0, e.length, vals[e.id], vals[e.id])] for e in graph.edges}
            return cls(graph, pieces, K, m, M, spec=dict(data))
        if kind == "affine":
            return cls.affine(graph, per_edge(lambda p: (p["alpha"], p["beta"])), K, m, M)
        if kind == "pwc":
            return cls.piecewise_constant(graph, per_edge(lambda p: (p["breakpoints"], p["values"])), K, m, M)
        if kind == "pwl":
            return cls.piecewise_linear(graph, per_edge(lambda p: (p["breakpoints"], p["values"])), K, m, M)
        if kind == "pieces":
            pieces = {e.id: [tuple(p) for p in data["edges"][e.id]] for e in graph.edges}
            return cls(graph, pieces, K, m, M, spec=dict(data))
        raise ValueError(f"unknown density kind {kind!r}")

    def to_json(self) -> dict:
        return {
            "kind": "pieces",
            "K": to_json_exact(self.K),
            "m": to_json_exact(self.m),
            "M": to_json_exact(self.M),
            "edges": {
                e: [[to_json_exact(x) for x in p] for p in ps] for e, ps in sorted(self.pieces.items())
            },
        }

    # -- evaluation ----------------------------------------------------------

    def value(self, edge: str, s):
        """Density at arc length ``s`` of ``edge`` (right-continuous)."""
        ps = self.pieces[edge]
        i = max(0, min(bisect_right(self._starts[edge], s) - 1, len(ps) - 1))
        a, b, fa, fb = ps[i]
        return fa + (fb - fa) * (s - a) / (b - a)

    def breakpoints(self, edge: str) -> list:
        ps = self.pieces[edge]
        return [p[0] for p in ps] + [ps[-1][1]]

    def cumulative(self, edge: str, s):
        """Mass of ``[0, s]`` along ``edge``."""
        ps = self.pieces[edge]
        lam = ps[-1][1]
        if s <= 0:
            return Fraction(0) * s
        if s >= lam:
            return self._prefix[edge][-1]
        i = bisect_right(self._starts[edge], s) - 1
        a, b, fa, fb = ps[i]
        fs = fa + (fb - fa) * (s - a) / (b - a)
        return self._prefix[edge][i] + (s - a) * (fa + fs) / 2

    def mass(self, edge: str, s0, s1):
        """Mass of the arc ``[s0, s1]`` of ``edge`` (zero if empty)."""
        if s1 <= s0:
            return Fraction(0)
        return self.cumulative(edge, s1) - self.cumulative(edge, s0)

    @cached_property
    def _qtables(self):
        out = {}
        for e, ps in self.pieces.items():
            out[e] = ([to_q(a) for a, _, _, _ in ps], [to_q(x) for _, _, x, _ in ps],
                      [to_q((y - x) / (b - a)) for a, b, x, y in ps], [to_q(x) for x in self._prefix[e]],
                      to_q(ps[-1][1]))
        return out

    def mass_q(self, edge: str, s0, s1):
        """:meth:`mass` on fast rationals (inputs and output of type ``Q``)."""
        if s1 <= s0:
            return Q(0)
        starts, fa, slope, prefix, lam = self._qtables[edge]

        def cum(s):
            if s <= 0:
                return Q(0)
            if s >= lam:
                return prefix[-1]
            i = bisect_right(starts, s) - 1
            x = s - starts[i]
            return prefix[i] + x * (fa[i] + slope[i] * x / 2)

        return cum(s1) - cum(s0)

    def edge_mass(self, edge: str):
        return self._prefix[edge][-1]

    def total_mass(self):
        return sum((self._prefix[e][-1] for e in self.pieces), Fraction(0))

    def inf_value(self):
        return min(min(fa, fb) for ps in self.pieces.values() for _, _, fa, fb in ps)

    def sup_value(self):
        return max(max(fa, fb) for ps in self.pieces.values() for _, _, fa, fb in ps)

    @property
    def is_piecewise_constant(self) -> bool:
        return all(fa == fb for ps in self.pieces.values() for _, _, fa, fb in ps)

    # -- float views for vectorised code -------------------------------------------

    def float_tables(self, edge: str):
        """``(starts, fa, slope, prefix)`` as float arrays for :meth:`cumulative_np`."""
        ps = self.pieces[edge]
        starts = np.array([float(p[0]) for p in ps])
        fa = np.array([float(p[2]) for p in ps])
        slope = np.array([float((p[3] - p[2]) / (p[1] - p[0])) for p in ps])
        prefix = np.array([float(x) for x in self._prefix[edge]])
        return starts, fa, slope, prefix

    def cumulative_np(self, edge: str, s: np.ndarray, tables=None) -> np.ndarray:
        starts, fa, slope, prefix = tables if tables is not None else self.float_tables(edge)
        lam = float(self.pieces[edge][-1][1])
        s = np.clip(s, 0.0, lam)
        i = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(starts) - 1)
        x = s - starts[i]
        return prefix[i] + x * fa[i] + 0.5 * slope[i] * x * x

    def value_np(self, edge: str, s: np.ndarray, tables=None) -> np.ndarray:
        starts, fa, slope, _ = tables if tables is not None else self.float_tables(edge)
        i = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(starts) - 1)
        return fa[i] + slope[i] * (s - starts[i])

    def __repr__(self) -> str:
        return f"Density(K={self.K}, m={self.m}, M={self.M}, edges={len(self.pieces)})"


def integrate(density: Density, interval: SubInterval):
    lam = density.graph.edge(interval.edge).length
    return density.mass(interval.edge, interval.t_lo * lam, interval.t_hi * lam)


def total_mass(density: Density):
    return density.total_mass()


# -- step approximation ------------------------------------------------------------


class StepDensity(Density):
    """Midpoint step approximation of a density at resolution ``eps1``.

    ``steps[e] = (I_e, ell_e, (g_e^0, ..., g_e^{I_e - 1}))``.
    """

    def __init__(self, base: Density, eps1, steps: dict[str, tuple[int, Fraction, tuple]]):
        pieces = {
            eid: [(i * ell, (i + 1) * ell, g, g) for i, g in enumerate(vals)]
            for eid, (_, ell, vals) in steps.items()
        }
        # keep the last breakpoint exactly on the edge end
        for eid, ps in pieces.items():
            a, _, g, _ = ps[-1]
            ps[-1] = (a, base.graph.edge(eid).length, g, g)
        super().__init__(base.graph, pieces, base.K)
        self.base = base
        self.eps1 = eps1
        self.steps = steps

    def step_list(self) -> list[tuple[str, int]]:
        return [(e.id, i) for e in self.graph.edges for i in range(self.steps[e.id][0])]

    def g(self, edge: str, i: int):
        return self.steps[edge][2][i]

    def ell(self, edge: str):
        return self.steps[edge][1]

    def n_steps(self, edge: str | None = None) -> int:
        if edge is not None:
            return self.steps[edge][0]
        return sum(v[0] for v in self.steps.values())

    def to_json(self) -> dict:
        return {
            "eps1": to_json_exact(self.eps1),
            "edges": {
                eid: {
                    "I": I,
                    "ell": to_json_exact(ell),
                    "values": [to_json_exact(v) for v in vals],
                }
                for eid, (I, ell, vals) in sorted(self.steps.items())
            },
        }


def step_cap(density: Density):
    """Exclusive upper bound on ``eps1``: every edge must get two steps or more."""
    return density.graph.min_length() * density.K / 2


def step_approximate(density: Density, eps1) -> StepDensity:
    eps1 = exact(eps1)
    cap = step_cap(density)
    if not 0 < eps1 < cap:
        raise ValueError(f"eps1 must lie in (0, {cap}) = (0, min length * K / 2); got {eps1}")
    steps = {}
    for e in density.graph.edges:
        I = math.ceil(e.length * density.K / (2 * eps1))
        ell = e.length / I
        vals = tuple(density.value(e.id, (i + Fraction(1, 2)) * ell) for i in range(I))
        steps[e.id] = (I, ell, vals)
    return StepDensity(density, eps1, steps)


# -- validation ----------------------------------------------------------------------


@dataclass
class DensityReport:
    ok: bool
    errors: list[str] = field(default_factory=list)
    witnesses: list[dict] = field(default_factory=list)
    observed: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"ok": self.ok, "errors": list(self.errors), "witnesses": self.witnesses,
                "observed": self.observed}


def validate_density(density: Density) -> DensityReport:
    """Check ``m > 0``, ``M >= m``, ``K > 0`` and that the pieces respect them.

    All supported forms are piecewise linear, so extremes sit at piece
    endpoints and slopes are exact; the check is analytic, not sampled.
    """
    errors, witnesses = [], []
    if density.m <= 0:
        errors.append(f"lower bound m={density.m} must be positive")
    if density.M < density.m:
        errors.append(f"upper bound M={density.M} is below m={density.m}")
    if density.K <= 0:
        errors.append(f"Lipschitz constant K={density.K} must be positive")
    for eid, ps in density.pieces.items():
        for a, b, fa, fb in ps:
            for s, v in ((a, fa), (b, fb)):
                if v > density.M:
                    witnesses.append({"edge": eid, "s": to_json_exact(s), "value": to_json_number(v),
                                      "violates": "M"})
                if v < density.m:
                    witnesses.append({"edge": eid, "s": to_json_exact(s), "value": to_json_number(v),
                                      "violates": "m"})
            slope = abs(fb - fa) / (b - a)
            if slope > density.K:
                witnesses.append({"edge": eid, "s": to_json_exact(a), "slope": to_json_number(slope),
                                  "violates": "K"})
        for p, q in zip(ps, ps[1:]):
            if p[3] != q[2]:
                witnesses.append({"edge": eid, "s": to_json_exact(p[1]),
                                  "jump": to_json_number(q[2] - p[3]), "violates": "K"})
    seen = set()
    for w in witnesses:
        key = (w["edge"], w["s"], w["violates"])
        if key in seen:
            continue
        seen.add(key)
        if w["violates"] == "K" and "jump" in w:
            errors.append(f"edge {w['edge']!r}: jump at s={w['s']} is not Lipschitz on the edge")
        elif w["violates"] == "K":
            errors.append(f"edge {w['edge']!r}: slope {w['slope']} exceeds K={to_json_number(density.K)}")
        else:
            bound = density.M if w["violates"] == "M" else density.m
            errors.append(f"edge {w['edge']!r}: f(s={w['s']})={w['value']} violates "
                          f"{w['violates']}={to_json_number(bound)}")
    observed = {"min": to_json_number(density.inf_value()), "max": to_json_number(density.sup_value()),
                "total_mass": to_json_number(density.total_mass())}
    return DensityReport(ok=not errors, errors=errors, witnesses=witnesses, observed=observed)
