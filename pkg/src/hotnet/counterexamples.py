"""Small games on the unit segment where equilibria fail or need special densities.

Three suites, each returning a JSON-ready report:

* :func:`counterexample_increasing`: the density ``1 + slope*x`` admits no
  pure equilibrium for ``n >= 3``; every canonical candidate profile is shown
  to have a strictly improving deviation.
* :func:`counterexample_quartile`: with four players the only candidate is
  two players at each of the outer quartiles, which needs the median to be
  the midpoint of the outer quartiles; the profile is then audited.
* :func:`counterexample_three_players`: three players never reach an
  additive (or multiplicative) ``1/14``-equilibrium, certified on an
  exhaustive grid of profiles.

These are checks on dense finite families, not proofs over the continuum.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from ._num import Q, from_q, to_json_exact, to_json_number, to_q
from .density import Density
from .graph import MetricGraph, path_graph
from .payoff import Profile, payoffs
from .verify import best_response, check_epsilon_equilibrium

__all__ = [
    "quantile",
    "counterexample_increasing",
    "counterexample_quartile",
    "counterexample_three_players",
    "segment_best_responses",
    "increasing_density",
    "canonical_candidates",
]

BISECT_TOL = Fraction(1, 10**12)
THREE_PLAYER_THRESHOLD = Fraction(1, 14)


def _segment(density: Density) -> tuple[MetricGraph, str]:
    g = density.graph
    if len(g.edges) != 1:
        raise ValueError("these suites live on a single edge")
    return g, g.edges[0].id


def quantile(density: Density, level, tol=BISECT_TOL) -> Fraction:
    """Arc position where the cumulative mass reaches ``level``, by bisection.

    Runs in exact arithmetic on dyadic midpoints, so quantiles that happen to
    be dyadic (such as the quartiles of a uniform density) are found exactly.
    """
    g, eid = _segment(density)
    level = Fraction(level)
    lo, hi = Fraction(0), Fraction(g.edge(eid).length)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        c = density.cumulative(eid, mid)
        if c == level:
            return mid
        if c < level:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _profile(graph: MetricGraph, eid: str, arcs) -> Profile:
    lam = graph.edge(eid).length
    return Profile(graph.point(eid, Fraction(a) / lam) for a in arcs)


def _audit(graph, profile, density) -> dict:
    rep = check_epsilon_equilibrium(graph, profile, density, 0)
    worst = rep.rows[rep.worst_additive]
    return {
        "pass": rep.verdict["additive"],
        "max_gain": to_json_number(worst.gap),
        "player": worst.player,
        "witness": worst.witness.to_json(),
        "best": to_json_number(worst.best),
        "payoff": to_json_number(worst.payoff),
    }


# -- quartile test -------------------------------------------------------------------------------


def counterexample_quartile(density: Density) -> dict:
    """Quartile condition and the audit of the two-pairs profile."""
    g, eid = _segment(density)
    total = density.total_mass()
    q = [quantile(density, total * k / 4) for k in (1, 2, 3)]
    residual = q[1] - (q[0] + q[2]) / 2
    holds = abs(residual) <= Fraction(1, 10**9)
    prof = _profile(g, eid, [q[0], q[0], q[2], q[2]])
    audit = _audit(g, prof, density)
    return {
        "suite": "quartile",
        "quartiles": [to_json_exact(x) for x in q],
        "quartiles_float": [float(x) for x in q],
        "midpoint_residual": float(residual),
        "condition_holds": holds,
        "equilibrium": audit["pass"],
        "audit": audit,
        # the condition is necessary; the audit decides sufficiency, which
        # fails for densities concentrated between the outer quartiles
        "audit_agrees_with_condition": holds == audit["pass"],
    }


# -- three players -------------------------------------------------------------------------------


class _Segment:
    """Cumulative mass on ``[0, 1]`` for a single affine piece, in fast rationals."""

    def __init__(self, density: Density):
        g, eid = _segment(density)
        pieces = density.pieces[eid]
        if len(pieces) != 1:
            raise ValueError("fast segment solver needs one affine piece")
        a, b, fa, fb = pieces[0]
        self.lam = to_q(b)
        self.fa = to_q(fa)
        self.slope = to_q((fb - fa) / (b - a))
        self.total = self.F(self.lam)

    def F(self, s):
        return s * (self.fa + self.slope * s / 2)

    def mass(self, a, b):
        return self.F(b) - self.F(a)


def _cells(seg: _Segment, sites):
    """Cell bounds of sorted distinct sites."""
    out = []
    for i, s in enumerate(sites):
        lo = (sites[i - 1] + s) / 2 if i else Q(0)
        hi = (s + sites[i + 1]) / 2 if i + 1 < len(sites) else seg.lam
        out.append((lo, hi))
    return out


def _segment_best(seg: _Segment, sites, counts):
    """Best deviation payoff against sorted distinct ``sites`` with ``counts``.

    With one affine piece the payoff inside a gap is monotone, so the
    supremum is a one-sided limit at a site or a join of an occupied site.
    Returns ``(value, (arc, side))``; side is None for a join.
    """
    best = None
    cells = _cells(seg, sites)
    for i, s in enumerate(sites):
        lo, hi = cells[i]
        cands = [(seg.mass(lo, hi) / (counts[i] + 1), (s, None))]
        if s > 0:
            cands.append((seg.mass(lo, s), (s, "-")))
        if s < seg.lam:
            cands.append((seg.mass(s, hi), (s, "+")))
        for c in cands:
            if best is None or c[0] > best[0]:
                best = c
    return best


def _generic_best_responses(density: Density, arcs) -> list[tuple]:
    g, eid = _segment(density)
    lam = Fraction(g.edge(eid).length)
    prof = _profile(g, eid, arcs)
    pay = payoffs(g, prof, density)
    out = []
    for k in range(prof.n):
        br = best_response(g, prof, k, density)
        out.append((to_q(pay[k]), to_q(br.sup), (to_q(br.witness.t * lam), br.witness.side)))
    return out


def segment_best_responses(density: Density, arcs) -> list[tuple]:
    """Per player ``(payoff, best, witness)`` for a profile on the segment.

    Uses the closed-form solver for a single affine piece and the generic
    exact best response otherwise.
    """
    try:
        seg = _Segment(density)
    except ValueError:
        return _generic_best_responses(density, arcs)
    arcs = [to_q(Fraction(a)) for a in arcs]
    sites = sorted(set(arcs))
    counts = [arcs.count(s) for s in sites]
    cells = _cells(seg, sites)
    pay = {s: seg.mass(*cells[i]) / counts[i] for i, s in enumerate(sites)}
    out = []
    for a in arcs:
        j = sites.index(a)
        if counts[j] > 1:
            o_sites, o_counts = sites, counts[:j] + [counts[j] - 1] + counts[j + 1:]
        else:
            o_sites, o_counts = sites[:j] + sites[j + 1:], counts[:j] + counts[j + 1:]
        if o_sites:
            val, wit = _segment_best(seg, o_sites, o_counts)
        else:
            val, wit = seg.total, (a, None)
        out.append((pay[a], val, wit))
    return out


def _case(arcs) -> str:
    x1, x2, x3 = arcs
    if x1 == x2 == x3:
        return "all equal"
    if x1 == x2:
        return "left pair"
    if x2 == x3:
        return "right pair"
    return "distinct"


def counterexample_three_players(density: Density, *, pitch=Fraction(1, 60), profiles=None,
                                 cross_checks: int = 20, seed: int = 0) -> dict:
    """Certify that every sampled three-player profile has a gain of at least 1/14.

    Payoffs are normalized by the total mass. The default sample is every
    nondecreasing triple on the grid of the given pitch, which covers the
    structural cases (all equal, a pair and a single, three distinct). A few
    random triples are re-solved with the generic best response as a check on
    the fast segment solver.
    """
    g, eid = _segment(density)
    lam = Fraction(g.edge(eid).length)
    pitch = Fraction(pitch)
    if profiles is None:
        steps = int(lam / pitch)
        grid = [pitch * i for i in range(steps + 1)]
        profiles = list(itertools.combinations_with_replacement(grid, 3))
    else:
        profiles = [tuple(sorted(Fraction(x) for x in p)) for p in profiles]
    total = to_q(density.total_mass())
    threshold = to_q(THREE_PLAYER_THRESHOLD)
    worst = None
    worst_ratio = None
    cases: dict[str, dict] = {}
    for arcs in profiles:
        rows = segment_best_responses(density, arcs)
        gains = [(best - pay) / total for pay, best, _ in rows]
        k = max(range(3), key=lambda i: gains[i])
        gain = gains[k]
        ratios = [(best - pay) / pay for pay, best, _ in rows if pay > 0]
        ratio = max(ratios) if ratios else None
        c = cases.setdefault(_case(arcs), {"profiles": 0, "min_gain": None, "argmin": None})
        c["profiles"] += 1
        if c["min_gain"] is None or gain < c["min_gain"]:
            c["min_gain"], c["argmin"] = gain, arcs
        if worst is None or gain < worst[0]:
            worst = (gain, arcs, k, rows[k][2])
        if ratio is not None and (worst_ratio is None or ratio < worst_ratio):
            worst_ratio = ratio
    gain, arcs, k, wit = worst

    rng = random.Random(seed)
    mismatches = 0
    sample = rng.sample(profiles, min(cross_checks, len(profiles)))
    for p in sample:
        fast = segment_best_responses(density, p)
        prof = _profile(g, eid, p)
        for i in range(3):
            br = best_response(g, prof, i, density)
            if to_q(br.sup) != fast[i][1]:
                mismatches += 1
    tol = to_q(Fraction(1, 10**9))
    return {
        "suite": "three-player",
        "profiles": len(profiles),
        "pitch": to_json_exact(pitch),
        "threshold": to_json_exact(THREE_PLAYER_THRESHOLD),
        "min_max_gain": float(gain),
        "min_max_gain_exact": to_json_exact(from_q(gain)),
        "argmin_profile": [to_json_exact(from_q(to_q(x))) for x in arcs],
        "argmin_player": k,
        "argmin_witness": {"t": to_json_exact(from_q(wit[0]) / lam), "side": wit[1]},
        "additive_certified": gain >= threshold - tol,
        "min_max_relative_gain": float(worst_ratio) if worst_ratio is not None else None,
        # payoffs are at most 1 after normalization, so a relative gain is
        # never below the additive one
        "multiplicative_certified": worst_ratio is not None and worst_ratio >= threshold - tol,
        "cases": {name: {"profiles": c["profiles"], "min_gain": float(c["min_gain"]),
                         "argmin": [float(x) for x in c["argmin"]]} for name, c in sorted(cases.items())},
        "cross_checks": {"profiles": len(sample), "mismatches": mismatches},
        "scope": "finite profile family; not a proof over all profiles",
    }


# -- increasing density --------------------------------------------------------------------------


def increasing_density(slope) -> Density:
    """``1 + slope*x`` on the unit segment, Lipschitz constant ``slope``."""
    slope = Fraction(slope)
    if slope <= 0:
        raise ValueError("slope must be positive")
    return Density.affine(path_graph(1), (1, slope), K=slope)


def _balanced_pairs(density: Density, n: int):
    """Coupled profile where each pair's two sides attract equal mass.

    The first pair position is found by bisection so that the last pair is
    balanced too; ``None`` when no such chain fits on the segment.
    """
    g, eid = _segment(density)
    lam = Fraction(g.edge(eid).length)
    total = density.total_mass()
    F = lambda s: density.cumulative(eid, s)

    def build(x1):
        """Pair positions from ``x1`` and the imbalance of the last pair."""
        xs = [x1]
        left = F(x1)
        for _ in range(n // 2 - 1):
            x = xs[-1]
            # the right side of this pair matches its left side
            m = quantile(density, min(F(x) + left, total)) if F(x) + left < total else lam
            nxt = 2 * m - x
            if nxt >= lam:
                return xs, None
            xs.append(nxt)
            left = F(nxt) - F(m)
        return xs, (total - F(xs[-1])) - left

    lo, hi = Fraction(0), quantile(density, total / 2)
    for _ in range(60):
        mid = (lo + hi) / 2
        _, r = build(mid)
        if r is None or r < 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= BISECT_TOL:
            break
    xs, r = build(lo)
    if r is None:
        return None
    return [x for x in xs for _ in range(2)]


def _pair_masses(density: Density, arcs) -> list[Fraction]:
    """Masses ``A_1..A_n`` of the coupled-profile decomposition."""
    g, eid = _segment(density)
    lam = Fraction(g.edge(eid).length)
    sites = sorted(set(arcs))
    out = []
    for i, s in enumerate(sites):
        lo = (sites[i - 1] + s) / 2 if i else Fraction(0)
        hi = (s + sites[i + 1]) / 2 if i + 1 < len(sites) else lam
        out += [density.mass(eid, lo, s), density.mass(eid, s, hi)]
    return out


def canonical_candidates(density: Density, n: int) -> dict[str, list[Fraction]]:
    total = density.total_mass()
    q = lambda level: quantile(density, level)
    singles = [q(total * (2 * k - 1) / (2 * n)) for k in range(1, n + 1)]
    out = {"quantile": singles}
    if n % 2 == 0:
        out["coupled quantile"] = [x for i in range(1, n // 2 + 1) for x in [q(total * (2 * i - 1) / n)] * 2]
        bal = _balanced_pairs(density, n)
        if bal is not None:
            out["coupled balanced"] = bal
    if n >= 3:
        mid = n // 2
        med = q(total / 2)
        stacked = list(singles)
        for k in range(mid - 1, mid + 2):
            stacked[k] = med
        out["stacked"] = sorted(stacked)
    return out


def counterexample_increasing(n: int, slope, candidates: dict | None = None) -> dict:
    """Show improving deviations for candidate profiles under ``1 + slope*x``."""
    if n < 3:
        raise ValueError("n must be at least 3")
    density = increasing_density(slope)
    g, eid = _segment(density)
    slope = Fraction(slope)
    cands = canonical_candidates(density, n)
    for name, arcs in (candidates or {}).items():
        cands[f"user:{name}"] = [Fraction(a) for a in arcs]
    results = {}
    for name, arcs in cands.items():
        prof = _profile(g, eid, arcs)
        audit = _audit(g, prof, density)
        entry = {"profile": [float(a) for a in arcs], "deviation_found": not audit["pass"]
                 and float(audit["max_gain"]) > 0, "audit": audit}
        if name.startswith("coupled"):
            A = _pair_masses(density, arcs)
            sites = sorted(set(arcs))
            # adjacent intervals either side of a pair midpoint have equal
            # length h, so their masses differ by exactly slope*h^2
            res = []
            for i in range(len(sites) - 1):
                h = (sites[i + 1] - sites[i]) / 2
                diff = A[2 * i + 2] - A[2 * i + 1]
                res.append({"residual": float(diff), "closed_form": float(slope * h * h),
                            "match": diff == slope * h * h})
            entry["A"] = [float(a) for a in A]
            entry["A2_A3_residuals"] = res
        if name == "stacked":
            sites = sorted(set(arcs))
            cnt = {s: arcs.count(s) for s in sites}
            s = max(sites, key=lambda x: cnt[x])
            i = sites.index(s)
            lam = Fraction(g.edge(eid).length)
            lo = (sites[i - 1] + s) / 2 if i else Fraction(0)
            hi = (s + sites[i + 1]) / 2 if i + 1 < len(sites) else lam
            left, right = density.mass(eid, lo, s), density.mass(eid, s, hi)
            share = (left + right) / cnt[s]
            entry["stacked_check"] = {"players": cnt[s], "left": float(left), "right": float(right),
                                      "share": float(share), "side_exceeds_share": max(left, right) > share}
        results[name] = entry
    return {
        "suite": "increasing",
        "n": n,
        "slope": to_json_exact(slope),
        "candidates": results,
        "all_deviate": all(r["deviation_found"] for r in results.values()),
        "scope": "finite candidate family; not a proof over all profiles",
    }
