import math
import random
from fractions import Fraction as F

import pytest

from hotnet.construction import (ConstructionError, PreconditionError, annex_diagnostics, bounds,
                                  build_profile, classify_steps, closed_form_count, coefficients,
                                  construct_equilibrium, eps1_for, n_of_eps_displayed, player_count,
                                  theta_bar, trim_to_n)
from hotnet.density import Density, step_approximate, step_cap
from hotnet.graph import contract_degree_two, path_graph, star_graph
from hotnet.payoff import payoffs

from helpers import FIXTURES, constructed, fixture_density, random_graph, random_pwl


def test_coefficients_examples():
    assert coefficients(12, 1, 1) == (2, F(5, 3))
    assert coefficients(13, 1, 1) == (F(7, 4), F(3, 2))
    assert coefficients(10, 1, 1) == (2, F(3, 2))
    with pytest.raises(ConstructionError):
        coefficients(6, 1, 1)


def step_density(g, eps1=None, K=F(1, 2)):
    f = Density.affine(g, (1, F(1, 2)), K=K)
    return f, step_approximate(f, eps1 if eps1 is not None else step_cap(f) - F(1, 100))


def test_length_identity_and_coefficient_range():
    g = star_graph((1, F(3, 2), 2))
    f, sd = step_density(g)
    theta = min(s.g * s.ell for s in classify_steps(g, sd)) / 10
    for th in (theta, theta / 3, theta / F(37, 10)):
        _, plan = build_profile(g, sd, th)
        for sp in plan.steps:
            s = sp.step
            k = 7 if s.kind == "leaf" else 6
            assert s.ell == k * th / s.g + sp.coef * th / s.g * (math.ceil(s.g * s.ell / (2 * th)) - 3)
            assert sum(sp.gaps()) == s.ell
            a, b = coefficients(s.g, s.ell, th)
            assert 1 <= b <= a <= 2


def test_star_centre_holds_three():
    g = star_graph()
    f, sd = step_density(g)
    th = min(s.g * s.ell for s in classify_steps(g, sd)) / 10
    prof, plan = build_profile(g, sd, th)
    assert prof.counts[prof.location_index(g.vertex_point("c"))] == 3
    assert plan.vertex_counts == {"c": 3}
    assert all(g.vertex_point(f"l{i}") not in prof.locations for i in range(3))


def test_build_rejects_large_theta():
    g = path_graph(1)
    f, sd = step_density(g)
    th = min(s.g * s.ell for s in classify_steps(g, sd)) / 10
    with pytest.raises(ConstructionError, match="step"):
        build_profile(g, sd, th * 2)


def test_count_matches_plan_and_closed_form_relation():
    for name, make in FIXTURES.items():
        g = make()
        f, sd = step_density(g)
        th = min(s.g * s.ell for s in classify_steps(g, sd)) / 10
        prof, plan = build_profile(g, sd, th)
        assert prof.n == plan.n == player_count(g, sd, th)
        deg = g.degrees
        leaves = sum(1 for d in deg.values() if d == 1)
        leaf_edges = sum(1 for e in g.edges if deg[e.u] == 1 or deg[e.v] == 1)
        assert closed_form_count(g, sd, th) - player_count(g, sd, th) == 2 * leaf_edges - leaves


def test_count_monotone_in_theta():
    g = star_graph((1, 2, 3))
    f, sd = step_density(g)
    th = min(s.g * s.ell for s in classify_steps(g, sd)) / 10
    counts = [player_count(g, sd, th * F(k, 4)) for k in range(1, 40)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def _oracle_theta_bar(g, sd, n):
    halves = [sd.g(e, i) * sd.ell(e) / 2 for e, i in sd.step_list()]
    target = n + sd.n_steps()
    cands = sorted({h / k for h in halves for k in range(1, target + 2)})
    for c in cands:
        if n <= player_count(g, sd, c) <= target:
            return c
    return None


def test_theta_bar_oracle_and_monotone():
    for g in (path_graph(1), star_graph()):
        f, sd = step_density(g)
        prev = None
        for n in (60, 45, 30, 20):
            tb = theta_bar(g, sd, n)
            assert tb == _oracle_theta_bar(g, sd, n)
            assert n <= player_count(g, sd, tb) <= n + sd.n_steps()
            if prev is not None:
                assert tb >= prev
            prev = tb


def test_trim_effects():
    g, f, eps1, b, res = constructed("star")
    sd = res.step_density
    th = res.theta_bar
    full, plan = build_profile(g, sd, th)
    if full.n == res.profile.n:
        pytest.skip("no trimming needed")
    assert trim_to_n(full, plan, full.n, g) is full
    one = trim_to_n(full, plan, full.n - 1, g)
    before = payoffs(g, full, sd)
    after = payoffs(g, one, sd)
    first = sorted(plan.steps, key=lambda s: (s.step.edge, s.step.index))[0]
    spare = g.point_at_arc(first.step.edge, first.spare)
    j_before = full.location_index(spare)
    j_after = one.location_index(spare)
    assert before.locations[j_before] / 2 == th
    assert after.locations[j_after] == 2 * th
    changed = {x for x, v in zip(full.locations, before.locations)
               if one.location_index(x) is not None and after.locations[one.location_index(x)] != v}
    assert changed == set()


def test_bounds_examples():
    f = Density.affine(path_graph(1), (1, 1), K=1)
    b = bounds(f, eps1=F(1, 10))
    assert b.omega == 133
    assert b.phi == F(4, 3)
    assert abs(float(b.psi) - 0.0097222222222222) < 1e-12


def test_n_of_eps_matches_displayed_formula():
    rng = random.Random(21)
    for _ in range(5):
        g = random_graph(rng, 6)
        f = random_pwl(rng, g)
        eps = F(rng.randint(1, 100), 1000)
        b = bounds(f, eps=eps)
        assert b.N == b.omega == bounds(f, eps1=eps1_for(eps, f.m)).omega
        assert b.N == n_of_eps_displayed(f.total_mass(), f.K, f.m, f.M, len(g.edges), g.min_length(), eps)
        assert b.N >= 5 * len(g.edges)


def test_bounds_domain_errors():
    f = Density.affine(path_graph(1), (1, 1), K=1)
    with pytest.raises(ValueError):
        bounds(f, eps1=F(1, 2))
    with pytest.raises(ValueError):
        bounds(f)


def test_construct_precondition_and_override():
    g = star_graph()
    f = fixture_density(g)
    eps1 = step_cap(f) - F(1, 100)
    with pytest.raises(PreconditionError) as exc:
        construct_equilibrium(g, f, 10, eps1=eps1)
    assert exc.value.required == bounds(f, eps1=eps1).omega
    res = construct_equilibrium(g, f, 60, eps1=eps1, override=True)
    assert res.profile.n == 60 and res.warnings


@pytest.mark.parametrize("name", list(FIXTURES))
def test_constructed_fixture_payoff_bounds(name):
    g, f, eps1, b, res = constructed(name)
    th = res.theta_bar
    assert res.profile.n == b.omega
    pv = payoffs(g, res.profile, res.step_density)
    assert all(th <= p <= 2 * th for p in pv.players)
    assert pv.total == f.total_mass() or pv.total == res.step_density.total_mass()
    diag = annex_diagnostics(g, f, eps1, b.omega)
    assert diag["ok"], diag


def test_construct_from_eps():
    g = star_graph()
    f = fixture_density(g)
    eps = F(3, 2)
    b = bounds(f, eps=eps)
    assert b.eps1 == eps * f.m / (12 + eps)
    res = construct_equilibrium(g, f, b.N, eps)
    assert res.profile.n == b.N and res.bounds.phi <= eps


def test_contracted_random_graphs_build():
    rng = random.Random(5)
    for _ in range(5):
        g = contract_degree_two(random_graph(rng, 6)).graph
        f = random_pwl(rng, g)
        sd = step_approximate(f, step_cap(f) * F(1, 2))
        th = min(s.g * s.ell for s in classify_steps(g, sd)) / 10
        prof, plan = build_profile(g, sd, th)
        assert prof.n == player_count(g, sd, th)
