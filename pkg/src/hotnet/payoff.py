"""Profiles, attraction partitions and payoffs.

For a set of locations, each edge is cut into pieces on which the set of
nearest locations is constant. On an edge ``(u, v)`` of length ``lam`` the
distance from the nearest location to arc position ``r`` is

    D(r) = min(D(u) + r, D(v) + lam - r, |r - p| for locations p on the edge),

and only the nearest location on each side of ``r`` matters among the
on-edge ones. All candidate crossings of these slope +-1 lines are rational
when the inputs are, so pieces and payoffs are computed exactly.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from ._num import Q, from_q, to_json_exact, to_json_number, to_q
from .density import Density
from .graph import GraphPoint, MetricGraph, SubInterval

__all__ = [
    "Profile",
    "Piece",
    "AttractionPartition",
    "PayoffVector",
    "attraction_partition",
    "payoffs",
]


class Profile:
    """Player locations; player ``k`` sits at ``points[k]``.

    Distinct locations are kept in order of first appearance, with their
    multiplicities in ``counts``.
    """

    def __init__(self, points: Iterable[GraphPoint]):
        self.points: tuple[GraphPoint, ...] = tuple(points)
        if not self.points:
            raise ValueError("a profile needs at least one player")
        index: dict[GraphPoint, int] = {}
        locs, counts, owner = [], [], []
        for x in self.points:
            if x not in index:
                index[x] = len(locs)
                locs.append(x)
                counts.append(0)
            counts[index[x]] += 1
            owner.append(index[x])
        self.locations: tuple[GraphPoint, ...] = tuple(locs)
        self.counts: tuple[int, ...] = tuple(counts)
        self.player_location: tuple[int, ...] = tuple(owner)
        self._index = index

    @classmethod
    def from_counts(cls, entries: Iterable[tuple[GraphPoint, int]]) -> "Profile":
        pts = []
        for x, c in entries:
            if int(c) < 1:
                raise ValueError(f"multiplicity must be positive, got {c}")
            pts.extend([x] * int(c))
        return cls(pts)

    @property
    def n(self) -> int:
        return len(self.points)

    def location_index(self, x: GraphPoint) -> int | None:
        return self._index.get(x)

    def moved(self, k: int, y: GraphPoint) -> "Profile":
        """Same players, with player ``k`` relocated to ``y``."""
        pts = list(self.points)
        pts[k] = y
        return Profile(pts)

    def without(self, k: int) -> "Profile":
        return Profile(self.points[:k] + self.points[k + 1:])

    def to_json(self, graph: MetricGraph) -> list[dict]:
        out = []
        for x, c in zip(self.locations, self.counts):
            if x.is_vertex:
                eid = graph.incident(x.vertex)[0]
                e = graph.edge(eid)
                t = Fraction(0) if e.u == x.vertex else Fraction(1)
            else:
                eid, t = x.edge, x.t
            out.append({"edge": eid, "t": to_json_exact(t), "count": c})
        return out

    @classmethod
    def from_json(cls, graph: MetricGraph, data: Sequence[Mapping]) -> "Profile":
        entries = []
        for item in data:
            if "vertex" in item:
                x = graph.vertex_point(str(item["vertex"]))
            else:
                x = graph.point(str(item["edge"]), item["t"])
            entries.append((x, int(item.get("count", 1))))
        return cls.from_counts(entries)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Profile(n={self.n}, locations={len(self.locations)})"


@dataclass(frozen=True)
class Piece:
    """Arc ``[lo, hi]`` of ``edge`` whose nearest locations are ``owners``."""

    edge: str
    lo: Fraction
    hi: Fraction
    owners: tuple[int, ...]
    # the same ends as fast rationals, for internal arithmetic
    qlo: object = field(default=None, repr=False, compare=False)
    qhi: object = field(default=None, repr=False, compare=False)

    def interval(self, graph: MetricGraph) -> SubInterval:
        lam = graph.edge(self.edge).length
        return SubInterval(self.edge, self.lo / lam, self.hi / lam)


@dataclass
class AttractionPartition:
    graph: MetricGraph
    locations: tuple[GraphPoint, ...]
    pieces: dict[str, list[Piece]]
    #: per edge, ``(r, D(r))`` at every kink of the nearest-location distance
    #: (exact rationals of the fast type ``Q``)
    envelope: dict[str, list[tuple[object, object]]]

    def location_pieces(self, j: int) -> list[Piece]:
        return [p for ps in self.pieces.values() for p in ps if j in p.owners]

    def distance_to_nearest(self, edge: str, r):
        env = self.envelope[edge]
        rs = [x for x, _ in env]
        i = bisect_right(rs, r) - 1
        i = min(max(i, 0), len(env) - 2)
        (r0, d0), (r1, d1) = env[i], env[i + 1]
        return d0 + (d1 - d0) * (r - r0) / (r1 - r0)

    def to_json(self) -> dict:
        return {
            eid: [
                {"lo": to_json_number(p.lo), "hi": to_json_number(p.hi), "owners": list(p.owners)}
                for p in ps
            ]
            for eid, ps in sorted(self.pieces.items())
        }


def _nearest_table(graph: MetricGraph, locs: Sequence[GraphPoint]):
    """Per vertex: distance to the nearest location and the tying locations."""
    ap = graph.apsp_q
    rows = []
    for x in locs:
        if x.is_vertex:
            anc = [(x.vertex, Q(0))]
        else:
            e = graph.edge(x.edge)
            a = to_q(x.t * e.length)
            anc = [(e.u, a), (e.v, to_q(e.length) - a)]
        rows.append({w: min(off + ap[b][w] for b, off in anc) for w in graph.vertices})
    out = {}
    for w in graph.vertices:
        best = min(r[w] for r in rows)
        out[w] = (best, tuple(j for j, r in enumerate(rows) if r[w] == best))
    return out


def _edge_partition(graph: MetricGraph, locs, nearest, eid: str):
    e = graph.edge(eid)
    lam = to_q(e.length)
    du, nu = nearest[e.u]
    dv, nv = nearest[e.v]
    sites = sorted((to_q(x.t) * lam, j) for j, x in enumerate(locs) if not x.is_vertex and x.edge == eid)
    arcs = [a for a, _ in sites]

    cand = {Q(0), lam, (dv + lam - du) / 2}
    for i, p in enumerate(arcs):
        cand.add(p)
        cand.add((p - du) / 2)
        cand.add((p + dv + lam) / 2)
        if i + 1 < len(arcs):
            cand.add((p + arcs[i + 1]) / 2)
    bps = sorted(c for c in cand if 0 <= c <= lam)

    def options(r):
        """Candidate (distance, owner set) lines at ``r``."""
        out = [(du + r, nu), (dv + lam - r, nv)]
        i = bisect_left(arcs, r)
        if i < len(arcs):
            out.append((arcs[i] - r, (sites[i][1],)))
        if i > 0:
            out.append((r - arcs[i - 1], (sites[i - 1][1],)))
        return out

    envelope = [(r, min(d for d, _ in options(r))) for r in bps]
    raw: list[list] = []
    for a, b in zip(bps, bps[1:]):
        opts = options((a + b) / 2)
        best = min(d for d, _ in opts)
        owners = tuple(sorted({j for d, js in opts if d == best for j in js}))
        if raw and raw[-1][2] == owners:
            raw[-1][1] = b
        else:
            raw.append([a, b, owners])
    pieces = [Piece(eid, from_q(a), from_q(b), owners, a, b) for a, b, owners in raw]
    return pieces, envelope


def attraction_partition(graph: MetricGraph, profile: Profile | Sequence[GraphPoint]) -> AttractionPartition:
    locs = profile.locations if isinstance(profile, Profile) else tuple(dict.fromkeys(profile))
    nearest = _nearest_table(graph, locs)
    pieces, env = {}, {}
    for e in graph.edges:
        pieces[e.id], env[e.id] = _edge_partition(graph, locs, nearest, e.id)
    return AttractionPartition(graph, tuple(locs), pieces, env)


@dataclass
class PayoffVector:
    players: tuple
    locations: tuple
    total: Fraction

    def __getitem__(self, k: int):
        return self.players[k]

    def __len__(self) -> int:
        return len(self.players)

    def to_json(self) -> dict:
        return {
            "players": [to_json_number(p) for p in self.players],
            "locations": [to_json_number(p) for p in self.locations],
            "total": to_json_number(self.total),
        }


def location_masses(partition: AttractionPartition, density: Density) -> list:
    """Consumer mass attracted by each location (ties split equally)."""
    mass = [Q(0)] * len(partition.locations)
    for eid in partition.graph.edge_ids:
        for p in partition.pieces[eid]:
            lo, hi = (p.qlo, p.qhi) if p.qlo is not None else (to_q(p.lo), to_q(p.hi))
            share = density.mass_q(eid, lo, hi) / len(p.owners)
            for j in p.owners:
                mass[j] += share
    return [from_q(x) for x in mass]


def payoffs(graph: MetricGraph, profile: Profile, density: Density,
            partition: AttractionPartition | None = None) -> PayoffVector:
    if partition is None:
        partition = attraction_partition(graph, profile)
    loc = location_masses(partition, density)
    players = tuple(loc[j] / profile.counts[j] for j in profile.player_location)
    return PayoffVector(players, tuple(loc), sum(loc, Fraction(0)))
