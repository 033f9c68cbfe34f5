"""Shared builders for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction as F
from functools import lru_cache

from hotnet.construction import bounds, construct_equilibrium
from hotnet.density import Density, step_cap
from hotnet.graph import MetricGraph, cycle_graph, path_graph, star_graph, theta_graph

FIXTURES = {
    "segment": lambda: path_graph(1),
    "star": lambda: star_graph((1, 1, 1)),
    "cycle": lambda: cycle_graph((1, 1)),
    "theta": lambda: theta_graph((1, 1, 1)),
}


def random_graph(rng: random.Random, max_edges: int = 10) -> MetricGraph:
    """Connected graph with rational lengths: a random tree plus a few extra edges."""
    n_edges = rng.randint(1, max_edges)
    n_vertices = rng.randint(2, n_edges + 1)
    vs = [f"v{i}" for i in range(n_vertices)]
    edges = []
    for i in range(1, n_vertices):
        edges.append((vs[rng.randrange(i)], vs[i]))
    while len(edges) < n_edges:
        a, b = rng.sample(vs, 2)
        edges.append((a, b))
    return MetricGraph(vs, [(f"e{i}", a, b, F(rng.randint(2, 20), rng.randint(1, 4)))
                            for i, (a, b) in enumerate(edges)])


def random_pwl(rng: random.Random, graph: MetricGraph, pieces: int = 4) -> Density:
    """Piecewise-linear density in [1, 3] with a valid declared K."""
    per_edge = {}
    for e in graph.edges:
        k = rng.randint(1, pieces)
        ts = sorted({F(rng.randint(1, 99), 100) for _ in range(k - 1)})
        ts = [F(0)] + ts + [F(1)]
        vals = [F(rng.randint(10, 30), 10) for _ in ts]
        per_edge[e.id] = (ts, vals)
    return Density.piecewise_linear(graph, per_edge)


def random_affine(rng: random.Random, graph: MetricGraph) -> Density:
    coeffs = {}
    for e in graph.edges:
        alpha = F(rng.randint(10, 20), 10)
        beta = F(rng.randint(-5, 5), 10) / e.length
        coeffs[e.id] = (alpha, beta)
    return Density.affine(graph, coeffs, K=F(1, 2))


def fixture_density(graph: MetricGraph) -> Density:
    """``1 + s/2`` along every edge, ``K = 1/2``."""
    return Density.affine(graph, (1, F(1, 2)), K=F(1, 2))


@lru_cache(maxsize=None)
def constructed(name: str):
    """(graph, f, eps1, bounds, construction) for a named fixture."""
    g = FIXTURES[name]()
    f = fixture_density(g)
    eps1 = step_cap(f) - F(1, 100)
    b = bounds(f, eps1=eps1)
    res = construct_equilibrium(g, f, b.omega, eps1=eps1)
    return g, f, eps1, b, res


def brute_payoffs(graph: MetricGraph, profile, density, samples: int = 100_000, seed: int = 0):
    """Nearest-location payoffs from midpoint samples of every edge (equal split on ties)."""
    import numpy as np

    L = sum(float(e.length) for e in graph.edges)
    locs = profile.locations
    mass = np.zeros(len(locs))
    for e in graph.edges:
        lam = float(e.length)
        m = max(10, int(samples * lam / L))
        s = (np.arange(m) + 0.5) * lam / m
        w = np.array([float(density.value(e.id, x)) for x in s]) * lam / m
        d = np.empty((len(locs), m))
        for j, x in enumerate(locs):
            du = float(graph.to_vertex(x, e.u))
            dv = float(graph.to_vertex(x, e.v))
            dd = np.minimum(du + s, dv + lam - s)
            arc = graph.arc_on(x, e.id)
            if arc is not None:
                dd = np.minimum(dd, np.abs(s - float(arc)))
            d[j] = dd
        best = d.min(axis=0)
        tie = np.isclose(d, best, rtol=0, atol=1e-12)
        mass += (tie / tie.sum(axis=0) * w).sum(axis=1)
    return [mass[j] / profile.counts[j] for j in profile.player_location]
