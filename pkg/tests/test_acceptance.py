"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL summary with its runtime; the lines
are printed at the end of the session by the hook in ``conftest.py``.
"""

import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction as F

import numpy as np
import pytest

from hotnet.construction import (annex_diagnostics, bounds, build_profile, classify_steps, coefficients,
                                  n_of_eps_displayed)
from hotnet.counterexamples import (counterexample_increasing, counterexample_quartile,
                                    counterexample_three_players)
from hotnet.density import Density, step_approximate, step_cap
from hotnet.graph import contract_degree_two, path_graph
from hotnet.payoff import Profile, payoffs
from hotnet.verify import best_response, check_epsilon_equilibrium, deviation_payoff

from helpers import FIXTURES, brute_payoffs, constructed, random_affine, random_graph, random_pwl

# criterion number -> list of (status, title, part, seconds, detail)
RESULTS: dict[int, list] = {}

# every payoff vector computed below is checked for conservation (criterion 9)
_CONSERVATION: list[float] = []


def _conserved(pv, density):
    err = abs(float(pv.total - density.total_mass())) + abs(float(sum(pv.players) - pv.total))
    _CONSERVATION.append(err)
    return pv


@contextmanager
def criterion(number: int, title: str, budget: float | None = None, part: str | None = None):
    start = time.perf_counter()
    status, detail = "FAIL", ""
    try:
        yield
        status = "PASS"
    except AssertionError as exc:
        detail = str(exc).splitlines()[0] if str(exc) else "assertion failed"
        raise
    except Exception as exc:
        detail = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        dt = time.perf_counter() - start
        if status == "PASS" and budget is not None and dt > budget:
            status, detail = "FAIL", f"runtime over {budget:g} s"
        RESULTS.setdefault(number, []).append((status, title, part, dt, detail))
    assert budget is None or dt <= budget, f"runtime {dt:.1f} s over {budget} s"


def summary_lines() -> list[str]:
    out = []
    for number in sorted(RESULTS):
        rows = RESULTS[number]
        ok = all(r[0] == "PASS" for r in rows)
        parts = [r[2] for r in rows if r[2]]
        title = rows[0][1] + (f" [{', '.join(parts)}]" if parts else "")
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({sum(r[3] for r in rows):.1f} s)"
        bad = [f"{r[2] or ''} {r[4]}".strip() for r in rows if r[0] != "PASS"]
        if bad:
            line += "  <" + "; ".join(bad) + ">"
        out.append(line)
    return out


def random_point(rng, g):
    return g.point(rng.choice(g.edge_ids), F(rng.randint(0, 64), 64))


# -- 1 ---------------------------------------------------------------------------------------------


def test_criterion_1_approximation_bound():
    with criterion(1, "step approximation within eps1 in sup norm", budget=10):
        rng = random.Random(101)
        for _ in range(50):
            g = random_graph(rng, 10)
            f = random_pwl(rng, g)
            eps1 = step_cap(f) * F(rng.randint(1, 99), 100)
            sd = step_approximate(f, eps1)
            for e in g.edges:
                s = np.linspace(0, float(e.length), 10_000)
                diff = np.abs(f.value_np(e.id, s) - sd.value_np(e.id, s)).max()
                assert diff <= float(eps1) + 1e-12, (e.id, diff, float(eps1))


# -- 2 ---------------------------------------------------------------------------------------------


def _occupied_arcs(g, prof, eid):
    """Arc positions of occupied points on one edge, endpoints included when occupied."""
    e = g.edge(eid)
    arcs = set()
    for x in prof.locations:
        a = g.arc_on(x, eid)
        if a is not None:
            arcs.add(a)
    for w, a in ((e.u, 0), (e.v, e.length)):
        if g.vertex_point(w) in prof.locations:
            arcs.add(F(a))
    return sorted(arcs)


def test_criterion_2_construction_invariants():
    with criterion(2, "construction invariants on 100 random instances", budget=30):
        rng = random.Random(202)
        done = 0
        while done < 100:
            g = contract_degree_two(random_graph(rng, 5)).graph
            f = random_pwl(rng, g, pieces=2) if rng.random() < 0.5 else random_affine(rng, g)
            sd = step_approximate(f, step_cap(f) * F(rng.randint(20, 95), 100))
            steps = classify_steps(g, sd)
            limit = min(s.g * s.ell for s in steps) / 10
            theta = limit * F(rng.randint(50, 100), 100)
            prof, plan = build_profile(g, sd, theta)
            tol = 1e-9
            # coefficients in [1, 2]
            for sp in plan.steps:
                a, b = coefficients(sp.step.g, sp.step.ell, theta)
                assert 1 <= b <= a <= 2 and 1 <= sp.coef <= 2
            pv = _conserved(payoffs(g, prof, sd), sd)
            per_loc = {j: pv.locations[j] / prof.counts[j] for j in range(len(prof.locations))}
            for j, x in enumerate(prof.locations):
                # coupled players on edges earn theta
                if prof.counts[j] == 2 and x.edge is not None:
                    assert abs(float(per_loc[j] - theta)) <= tol, ("coupled", float(per_loc[j]), float(theta))
            # every payoff in [theta, 2 theta]
            for p in pv.players:
                assert float(theta) - tol <= float(p) <= 2 * float(theta) + tol
            # mass between neighbouring locations is at most 2 theta
            for e in g.edges:
                arcs = _occupied_arcs(g, prof, e.id)
                for lo, hi in zip(arcs, arcs[1:]):
                    assert float(sd.mass(e.id, lo, hi)) <= 2 * float(theta) + tol
            done += 1


# -- 3 ---------------------------------------------------------------------------------------------


@pytest.mark.parametrize("name", list(FIXTURES))
def test_criterion_3_exact_equilibrium_under_steps(name):
    with criterion(3, "exact equilibrium under the step density", budget=60, part=name):
        g, f, eps1, b, res = constructed(name)
        assert res.profile.n >= b.omega
        rep = check_epsilon_equilibrium(g, res.profile, res.step_density, 0)
        _conserved(payoffs(g, res.profile, res.step_density), res.step_density)
        assert rep.certification["method"] == "exact"
        assert float(rep.max_gap) <= 1e-9, float(rep.max_gap)
        assert rep.verdict["additive"] and rep.verdict["multiplicative"]


# -- 4 ---------------------------------------------------------------------------------------------


@pytest.mark.parametrize("name", list(FIXTURES))
def test_criterion_4_epsilon_equilibrium_under_f(name):
    with criterion(4, "additive at Psi and multiplicative at Phi under f", part=name):
        g, f, eps1, b, res = constructed(name)
        prof = res.profile
        pv = _conserved(payoffs(g, prof, f), f)
        pmin = float(min(pv.players))
        psi, phi = float(b.psi), float(b.phi)
        # certification error at most 10% of the slack in either test
        tol = 0.1 * min(psi, phi * pmin)
        add = check_epsilon_equilibrium(g, prof, f, b.psi, method="grid", tol=tol)
        mul = check_epsilon_equilibrium(g, prof, f, b.phi, method="grid", tol=tol)
        assert add.certification["error_bound"] <= 0.1 * psi + 1e-15
        assert mul.certification["error_bound"] <= 0.1 * phi * pmin + 1e-15
        assert add.verdict["additive"], "additive verdict at Psi"
        assert mul.verdict["multiplicative"], "multiplicative verdict at Phi"
        # extra check: the exact sweep agrees
        exact = check_epsilon_equilibrium(g, prof, f, b.psi)
        assert exact.verdict["additive"]
        assert all(float(r.best) <= (1 + phi) * float(r.payoff) + 1e-12 for r in exact.rows)


# -- 5 ---------------------------------------------------------------------------------------------


@pytest.mark.parametrize("name", list(FIXTURES))
def test_criterion_5_payoff_closeness(name):
    with criterion(5, "payoffs under f and the step density stay close", part=name):
        g, f, eps1, b, res = constructed(name)
        sd, tb = res.step_density, res.theta_bar
        bound = 4 * eps1 * tb / (f.m - eps1)
        prof = res.profile
        p = _conserved(payoffs(g, prof, f), f).players
        pi = _conserved(payoffs(g, prof, sd), sd).players
        assert max(abs(a - c) for a, c in zip(p, pi)) <= bound
        rng = random.Random(505)
        for _ in range(1000):
            k = rng.randrange(prof.n)
            y = random_point(rng, g)
            dp = deviation_payoff(g, prof, k, y, f).value
            dpi = deviation_payoff(g, prof, k, y, sd).value
            assert abs(dp - dpi) <= 2 * bound, (k, y, float(dp - dpi), float(2 * bound))


# -- 6 ---------------------------------------------------------------------------------------------


def test_criterion_6_counterexamples():
    with criterion(6, "quartile, three-player and increasing-density suites", budget=120):
        seg = path_graph(1)
        uni = Density.uniform(seg)
        lin = Density.affine(seg, (1, 1), K=1)
        q = counterexample_quartile(uni)
        assert q["quartiles"] == ["1/4", "1/2", "3/4"] and q["equilibrium"]
        q = counterexample_quartile(lin)
        assert not q["condition_holds"] and not q["equilibrium"]
        assert q["audit"]["max_gain"] > 0 and "witness" in q["audit"]
        # 1 + x normalized to unit mass keeps the gains comparable
        norm = Density.affine(seg, (F(2, 3), F(2, 3)), K=F(2, 3))
        for dens in (uni, norm):
            rep = counterexample_three_players(dens, pitch=F(1, 60))
            assert rep["profiles"] > 30_000
            assert rep["min_max_gain"] >= 1 / 14 - 1e-9, rep["min_max_gain"]
            assert rep["additive_certified"] and rep["cross_checks"]["mismatches"] == 0
        for n in (3, 4, 6):
            rep = counterexample_increasing(n, 1)
            assert rep["all_deviate"], n


# -- 7 ---------------------------------------------------------------------------------------------


def test_criterion_7_oracle_equivalence():
    with criterion(7, "payoffs vs sampling oracle; exact vs fine-grid best responses"):
        rng = random.Random(707)
        for _ in range(20):
            g = random_graph(rng, 5)
            f = random_affine(rng, g) if rng.random() < 0.5 else random_pwl(rng, g, pieces=2)
            prof = Profile(random_point(rng, g) for _ in range(rng.randint(2, 6)))
            exact = [float(x) for x in _conserved(payoffs(g, prof, f), f).players]
            approx = brute_payoffs(g, prof, f, samples=100_000)
            L = float(f.total_mass())
            assert max(abs(a - c) for a, c in zip(exact, approx)) <= 1e-3 * L
        delta = 1e-5
        for _ in range(10):
            g = random_graph(rng, 3)
            # short edges keep the fine grid small
            g = type(g)(g.vertices, [(e.id, e.u, e.v, e.length / 10) for e in g.edges])
            f = random_affine(rng, g)
            prof = Profile(random_point(rng, g) for _ in range(3))
            C = float(f.M) * (len(g.edges) + 1)
            ex = best_response(g, prof, 0, f)
            gr = best_response(g, prof, 0, f, method="grid", pitch=delta)
            assert abs(float(ex.sup) - float(gr.sup)) <= C * delta + 1e-12


# -- 8 ---------------------------------------------------------------------------------------------


def _threshold_oracle(L, K, m, M, n_edges, min_len, eps):
    """The closed-form player threshold, evaluated from scratch in floats."""
    e1 = eps * m / (12 + eps)
    val = (5 * L * (M + e1) / (m - e1) * ((12 + eps) * K / (2 * eps * m) + 1 / min_len)
           + 3 * L * K * (12 + eps) / (2 * eps * m))
    return 5 * n_edges + math.ceil(val - 1e-9), val


def test_criterion_8_bounds_arithmetic():
    with criterion(8, "Omega(0.1) = 133, N(eps) formula, annex diagnostics"):
        f = Density.affine(path_graph(1), (1, 1), K=1)
        # hand evaluation: 5 + ceil(17.5 * 6 + 22.5) = 133
        assert bounds(f, eps1=F(1, 10)).omega == 5 + math.ceil(F(35, 2) * 6 + F(45, 2)) == 133
        rng = random.Random(808)
        for _ in range(5):
            g = random_graph(rng, 6)
            f = random_pwl(rng, g)
            eps = F(rng.randint(1, 200), 1000)
            b = bounds(f, eps=eps)
            args = (float(f.total_mass()), float(f.K), float(f.m), float(f.M), len(g.edges),
                    float(g.min_length()), float(eps))
            oracle, raw = _threshold_oracle(*args)
            if abs(raw - round(raw)) > 1e-6:  # float oracle is unambiguous away from integers
                assert b.N == oracle, (b.N, oracle)
            assert b.N == n_of_eps_displayed(f.total_mass(), f.K, f.m, f.M, len(g.edges), g.min_length(), eps)
            assert b.N >= 5 * len(g.edges)
        for name in FIXTURES:
            g, f, eps1, b, res = constructed(name)
            diag = annex_diagnostics(g, f, eps1, res.profile.n)
            assert diag["omega_vs_count"]["ok"] and diag["theta_bar_vs_5K"]["ok"], name
            assert diag["theta_bar_vs_steps"]["ok"] and diag["ok"], name


# -- 9 ---------------------------------------------------------------------------------------------


def test_criterion_9_metric_and_conservation():
    with criterion(9, "metric axioms on 10^4 triples; payoffs sum to L"):
        rng = random.Random(909)
        graphs = [random_graph(rng, 8) for _ in range(20)]
        for i in range(10_000):
            g = graphs[i % len(graphs)]
            x, y, z = (random_point(rng, g) for _ in range(3))
            dxy, dyz, dxz = g.distance(x, y), g.distance(y, z), g.distance(x, z)
            assert dxy >= 0 and g.distance(x, x) == 0
            assert (dxy == 0) == (x == y)
            assert dxy == g.distance(y, x)
            assert dxz <= dxy + dyz
        for _ in range(30):
            g = random_graph(rng, 10)
            f = random_pwl(rng, g)
            prof = Profile(random_point(rng, g) for _ in range(rng.randint(1, 40)))
            pv = _conserved(payoffs(g, prof, f), f)
            assert sum(pv.players) == f.total_mass()
        assert max(_CONSERVATION) <= 1e-9, max(_CONSERVATION)
