import random
from fractions import Fraction as F

import numpy as np
import pytest

from hotnet.density import Density
from hotnet.graph import path_graph, star_graph
from hotnet.payoff import Profile, payoffs
from hotnet.verify import best_response, check_epsilon_equilibrium, deviation_payoff

from helpers import random_affine, random_graph, random_pwl


def seg(*ts):
    g = path_graph(1)
    return g, Profile(g.point("e0", F(t)) for t in ts), Density.uniform(g)


def midpoint_payoff(ys, others):
    """Uniform-segment payoff of a lone deviator at ``ys`` by the midpoint rule (1e5 cells)."""
    s = (np.arange(100_000) + 0.5) / 100_000
    d_other = np.min(np.abs(s[None, :] - np.array(others)[:, None]), axis=0)
    return np.array([np.mean(np.abs(s - y) < d_other) for y in ys])


def test_deviation_limit_at_occupied_point():
    g, prof, u = seg(F(1, 4), F(3, 4))
    dev = deviation_payoff(g, prof, 0, g.point("e0", F(3, 4)), u, limits=True)
    assert dev.limits[("e0", "-")] == F(3, 4)
    assert dev.value == F(1, 2)  # joining the lone opponent splits everything
    assert abs(midpoint_payoff([0.75 - 1e-5], [0.75])[0] - 0.75) < 1e-4


def test_deviation_join_two_incumbents_splits_by_three():
    g, prof, u = seg(F(1, 2), F(1, 2), F(1, 10))
    dev = deviation_payoff(g, prof, 2, g.point("e0", F(1, 2)), u)
    assert dev.value == F(1, 3)


def test_identity_deviation():
    g, prof, u = seg(F(1, 5), F(3, 5), F(4, 5))
    for k in range(3):
        assert deviation_payoff(g, prof, k, prof.points[k], u).value == payoffs(g, prof, u)[k]


def test_best_response_unattained_limit():
    g, prof, u = seg(F(1, 4), F(3, 4))
    br = best_response(g, prof, 0, u)
    assert br.sup == F(3, 4) and not br.attained
    assert br.witness.t == F(3, 4) and br.witness.side == "-"
    grid = best_response(g, prof, 0, u, method="grid", pitch=1e-5)
    assert abs(float(grid.sup) - 0.75) <= grid.certification["error_bound"] + 1e-12


def test_best_response_symmetric_pair():
    g, prof, u = seg(F(1, 2), F(1, 2))
    br = best_response(g, prof, 0, u)
    assert br.sup == F(1, 2)


def test_check_fails_with_witness():
    g, prof, u = seg(F(1, 4), F(3, 4))
    rep = check_epsilon_equilibrium(g, prof, u, F(1, 10))
    assert not rep.verdict["additive"]
    row = rep.rows[rep.worst_additive]
    assert row.gap == F(1, 4)
    assert abs(float(row.witness.t) - 0.75) < 1e-12
    dev = deviation_payoff(g, prof, row.player, row.witness.point(g), u, limits=True)
    claimed = dev.limits.get((row.witness.edge, row.witness.side), dev.value)
    assert abs(float(claimed) - float(row.best)) <= 1e-9


def test_exact_vs_grid_on_random_instances():
    rng = random.Random(31)
    for _ in range(4):
        g = random_graph(rng, 4)
        f = random_pwl(rng, g, pieces=2)
        pts = [g.point(rng.choice(g.edge_ids), F(rng.randint(1, 15), 16)) for _ in range(4)]
        prof = Profile(pts)
        ex = best_response(g, prof, 0, f)
        gr = best_response(g, prof, 0, f, method="grid", tol=1e-3)
        err = gr.certification["error_bound"]
        assert float(gr.sup) <= float(ex.sup) + 1e-9
        assert float(ex.sup) <= float(gr.sup) + err + 1e-9


def test_witnesses_are_valid():
    rng = random.Random(32)
    for _ in range(4):
        g = random_graph(rng, 4)
        f = random_affine(rng, g)
        pts = [g.point(rng.choice(g.edge_ids), F(rng.randint(0, 8), 8)) for _ in range(5)]
        prof = Profile(pts)
        rep = check_epsilon_equilibrium(g, prof, f, 0)
        for row in rep.rows:
            dev = deviation_payoff(g, prof, row.player, row.witness.point(g), f, limits=True)
            if row.witness.side is None:
                val = dev.value
            else:
                val = dev.limits[(row.witness.edge, row.witness.side)]
            assert abs(float(val) - float(row.best)) <= 1e-9


def test_deviation_lipschitz_bound():
    rng = random.Random(33)
    for _ in range(5):
        g = random_graph(rng, 4)
        f = random_affine(rng, g)
        pts = [g.point(rng.choice(g.edge_ids), F(rng.randint(0, 4), 4)) for _ in range(3)]
        prof = Profile(pts)
        C = float(f.M) * (len(g.edges) + 1)
        for _ in range(10):
            e = rng.choice(g.edges)
            t = F(rng.randint(1, 999), 1000)
            dt = F(1, 10_000)
            y0, y1 = g.point(e.id, t), g.point(e.id, t + dt)
            arcs = [g.arc_on(x, e.id) for x in prof.locations]
            if any(a is not None and t * e.length <= a <= (t + dt) * e.length for a in arcs):
                continue
            p0 = deviation_payoff(g, prof, 0, y0, f).value
            p1 = deviation_payoff(g, prof, 0, y1, f).value
            assert abs(float(p1 - p0)) <= C * float(g.distance(y0, y1)) + 1e-12


def test_threads_give_same_report(monkeypatch):
    g = star_graph()
    f = Density.affine(g, (1, F(1, 2)), K=F(1, 2))
    prof = Profile([g.point(e, F(k, 5)) for e in g.edge_ids for k in (1, 3)])
    one = check_epsilon_equilibrium(g, prof, f, 0).to_json()
    monkeypatch.setenv("HOTNET_THREADS", "2")
    two = check_epsilon_equilibrium(g, prof, f, 0).to_json()
    assert one == two


def test_ratio_for_symmetric_pair():
    g, prof, u = seg(F(1, 2), F(1, 2))
    rep = check_epsilon_equilibrium(g, prof, u, 0)
    assert all(r.ratio == 1.0 for r in rep.rows)


def test_negative_eps_rejected():
    g, prof, u = seg(F(1, 2))
    with pytest.raises(ValueError):
        check_epsilon_equilibrium(g, prof, u, -1)


def test_grid_pass_is_sound():
    g = star_graph((1, 2, F(3, 2)))
    f = Density.affine(g, (1, F(1, 4)), K=F(1, 2))
    prof = Profile([g.point(e, F(k, 4)) for e in g.edge_ids for k in (1, 2, 3)])
    rep = check_epsilon_equilibrium(g, prof, f, F(1, 2), method="grid", tol=1e-3)
    exact = check_epsilon_equilibrium(g, prof, f, F(1, 2))
    for r, x in zip(rep.rows, exact.rows):
        assert float(x.best) <= float(r.upper) + 1e-12
    if rep.verdict["additive"]:
        assert exact.verdict["additive"]
