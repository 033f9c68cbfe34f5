"""Metric graphs: length-weighted edges, points along edges, shortest-path distance.

A point is stored as ``(edge id, t)`` with ``t`` the fraction of the edge
travelled from its stored endpoint ``u`` towards ``v``. Points at ``t = 0`` or
``t = 1`` are vertices and are normalised to a vertex-anchored form, so the
same vertex compares equal whichever incident edge was used to name it.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

from ._num import exact, to_json_exact, to_q

__all__ = [
    "Edge",
    "GraphPoint",
    "SubInterval",
    "MetricGraph",
    "ValidationReport",
    "GraphValidationError",
    "Contraction",
    "DistanceField",
    "validate",
    "contract_degree_two",
    "distance",
    "distance_field",
    "total_length",
    "path_graph",
    "star_graph",
    "cycle_graph",
    "theta_graph",
]


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    length: Fraction

    def other(self, w: str) -> str:
        return self.v if w == self.u else self.u


@dataclass(frozen=True, order=True)
class GraphPoint:
    """A location on the network; build it with :meth:`MetricGraph.point`."""

    edge: str | None = None
    t: Fraction | None = None
    vertex: str | None = None

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __repr__(self) -> str:
        if self.is_vertex:
            return f"GraphPoint(vertex={self.vertex!r})"
        return f"GraphPoint({self.edge!r}, t={self.t})"


@dataclass(frozen=True)
class SubInterval:
    edge: str
    t_lo: Fraction
    t_hi: Fraction

    def __post_init__(self):
        if not 0 <= self.t_lo <= self.t_hi <= 1:
            raise ValueError(f"need 0 <= t_lo <= t_hi <= 1, got [{self.t_lo}, {self.t_hi}]")

    def length(self, graph: MetricGraph):
        return graph.edge(self.edge).length * (self.t_hi - self.t_lo)


@dataclass
class ValidationReport:
    ok: bool
    errors: list[str] = field(default_factory=list)
    degrees: dict[str, int] = field(default_factory=dict)
    connected: bool = True

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "errors": list(self.errors),
            "degrees": dict(sorted(self.degrees.items())),
            "connected": self.connected,
        }


class GraphValidationError(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__("invalid graph: " + "; ".join(report.errors))


class MetricGraph:
    """Undirected multigraph with positive edge lengths.

    Construction only checks referential integrity (unique ids, known
    endpoints); the model invariants are checked by :func:`validate`.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge | tuple]):
        self.vertices: tuple[str, ...] = tuple(str(v) for v in vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex ids")
        es = []
        for e in edges:
            if not isinstance(e, Edge):
                eid, u, v, lam = e
                e = Edge(str(eid), str(u), str(v), exact(lam))
            es.append(e)
        self.edges: tuple[Edge, ...] = tuple(es)
        self._edge_by_id = {e.id: e for e in self.edges}
        if len(self._edge_by_id) != len(self.edges):
            raise ValueError("duplicate edge ids")
        vset = set(self.vertices)
        self._incident: dict[str, list[str]] = {v: [] for v in self.vertices}
        for e in self.edges:
            if e.u not in vset or e.v not in vset:
                raise ValueError(f"edge {e.id!r} references an unknown vertex")
            self._incident[e.u].append(e.id)
            if e.v != e.u:
                self._incident[e.v].append(e.id)

    # -- structure -------------------------------------------------------

    def edge(self, eid: str) -> Edge:
        try:
            return self._edge_by_id[eid]
        except KeyError:
            raise KeyError(f"unknown edge {eid!r}") from None

    def has_edge(self, eid: str) -> bool:
        return eid in self._edge_by_id

    def incident(self, v: str) -> tuple[str, ...]:
        return tuple(self._incident[v])

    def degree(self, v: str) -> int:
        return sum(2 if self._edge_by_id[e].u == self._edge_by_id[e].v else 1
                   for e in self._incident[v])

    @cached_property
    def degrees(self) -> dict[str, int]:
        return {v: self.degree(v) for v in self.vertices}

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.edges)

    def total_length(self):
        return sum((e.length for e in self.edges), Fraction(0))

    def min_length(self):
        return min(e.length for e in self.edges)

    # -- distances between vertices ------------------------------------------

    @cached_property
    def apsp(self) -> dict[str, dict[str, Fraction]]:
        """All-pairs vertex distances (one Dijkstra per vertex)."""
        adj: dict[str, dict[str, Fraction]] = {v: {} for v in self.vertices}
        for e in self.edges:
            for a, b in ((e.u, e.v), (e.v, e.u)):
                if b not in adj[a] or e.length < adj[a][b]:
                    adj[a][b] = e.length
        out = {}
        order = {v: i for i, v in enumerate(self.vertices)}
        for s in self.vertices:
            dist = {s: Fraction(0)}
            heap = [(Fraction(0), order[s], s)]
            done = set()
            while heap:
                d, _, a = heapq.heappop(heap)
                if a in done:
                    continue
                done.add(a)
                for b, w in adj[a].items():
                    nd = d + w
                    if b not in dist or nd < dist[b]:
                        dist[b] = nd
                        heapq.heappush(heap, (nd, order[b], b))
            out[s] = dist
        return out

    @cached_property
    def apsp_q(self) -> dict[str, dict[str, object]]:
        """:attr:`apsp` converted to the fast rational type."""
        return {a: {b: to_q(x) for b, x in row.items()} for a, row in self.apsp.items()}

    def vertex_distance(self, a: str, b: str):
        try:
            return self.apsp[a][b]
        except KeyError:
            raise ValueError(f"{a!r} and {b!r} are not connected") from None

    # -- points ------------------------------------------------------------

    def point(self, edge_id: str, t, *, start: str | None = None) -> GraphPoint:
        """Canonical point at fraction ``t`` along ``edge_id``.

        ``start`` names the endpoint ``t`` is measured from; by default the
        stored ``u``. Passing ``start=v`` gives the ``(v, u, 1 - t)`` reading.
        """
        e = self.edge(edge_id)
        t = exact(t)
        if start is not None and start != e.u:
            if start != e.v:
                raise ValueError(f"{start!r} is not an endpoint of {edge_id!r}")
            t = 1 - t
        if t < 0 or t > 1:
            raise ValueError(f"t={t} outside [0, 1]")
        if t == 0:
            return GraphPoint(vertex=e.u)
        if t == 1:
            return GraphPoint(vertex=e.v)
        return GraphPoint(edge=edge_id, t=t)

    def vertex_point(self, v: str) -> GraphPoint:
        if v not in self._incident:
            raise KeyError(f"unknown vertex {v!r}")
        return GraphPoint(vertex=v)

    def point_at_arc(self, edge_id: str, s) -> GraphPoint:
        e = self.edge(edge_id)
        return self.point(edge_id, s / e.length)

    def anchors(self, x: GraphPoint) -> list[tuple[str, object]]:
        """Vertices a path out of ``x`` must pass through, with their offsets."""
        if x.is_vertex:
            return [(x.vertex, Fraction(0))]
        e = self.edge(x.edge)
        a = x.t * e.length
        return [(e.u, a), (e.v, e.length - a)]

    def arc_on(self, x: GraphPoint, edge_id: str):
        """Arc-length position of ``x`` on ``edge_id`` (``None`` if not on it)."""
        e = self.edge(edge_id)
        if x.is_vertex:
            if x.vertex == e.u:
                return Fraction(0)
            if x.vertex == e.v:
                return e.length
            return None
        if x.edge == edge_id:
            return x.t * e.length
        return None

    def to_vertex(self, x: GraphPoint, w: str):
        ap = self.apsp
        return min(off + ap[a][w] for a, off in self.anchors(x))

    def distance(self, x: GraphPoint, y: GraphPoint):
        ap = self.apsp
        best = min(ox + ap[a][b] + oy for a, ox in self.anchors(x) for b, oy in self.anchors(y))
        if not x.is_vertex and not y.is_vertex and x.edge == y.edge:
            lam = self.edge(x.edge).length
            best = min(best, abs(x.t - y.t) * lam)
        return best

    # -- serialisation -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "vertices": [{"id": v} for v in self.vertices],
            "edges": [
                {"id": e.id, "u": e.u, "v": e.v, "length": to_json_exact(e.length)}
                for e in self.edges
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping, *, contract: bool = False) -> "MetricGraph":
        try:
            vertices = [str(v["id"]) if isinstance(v, Mapping) else str(v) for v in data["vertices"]]
            edges = [
                Edge(str(e["id"]), str(e["u"]), str(e["v"]), exact(e["length"]))
                for e in data["edges"]
            ]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed graph JSON: {exc}") from None
        g = cls(vertices, edges)
        report = validate(g)
        if not report.ok:
            raise GraphValidationError(report)
        if contract:
            g = contract_degree_two(g).graph
        return g

    def __repr__(self) -> str:
        return f"MetricGraph({len(self.vertices)} vertices, {len(self.edges)} edges)"


def validate(graph: MetricGraph) -> ValidationReport:
    errors = []
    for e in graph.edges:
        if not e.length > 0:
            errors.append(f"edge {e.id!r} has nonpositive length {e.length}")
        if e.u == e.v:
            errors.append(f"edge {e.id!r} is a self-loop at {e.u!r}")
    connected = True
    if graph.vertices:
        seen = {graph.vertices[0]}
        stack = [graph.vertices[0]]
        while stack:
            a = stack.pop()
            for eid in graph.incident(a):
                b = graph.edge(eid).other(a)
                if b not in seen:
                    seen.add(b)
                    stack.append(b)
        connected = len(seen) == len(graph.vertices)
        if not connected:
            errors.append(f"graph is not connected ({len(seen)} of {len(graph.vertices)} vertices reachable)")
    else:
        errors.append("graph has no vertices")
    if not graph.edges:
        errors.append("graph has no edges")
    return ValidationReport(ok=not errors, errors=errors, degrees=dict(graph.degrees), connected=connected)


# -- degree-two contraction ----------------------------------------------------


@dataclass
class Contraction:
    """Result of :func:`contract_degree_two`.

    ``remap[old_edge] = (new_edge, offset, forward)``: the old edge occupies
    ``[offset, offset + length]`` of the new edge, in the same direction when
    ``forward`` is true.
    """

    graph: MetricGraph
    remap: dict[str, tuple[str, Fraction, bool]]
    irreducible_cycles: list[tuple[str, ...]]
    old: MetricGraph

    def map_point(self, x: GraphPoint) -> GraphPoint:
        if x.is_vertex:
            if x.vertex in self.graph._incident:
                return x
            # a removed vertex: locate it through any incident old edge
            eid = self.old.incident(x.vertex)[0]
            e = self.old.edge(eid)
            t = Fraction(0) if e.u == x.vertex else Fraction(1)
            return self.map_point(GraphPoint(edge=eid, t=t))
        old = self.old.edge(x.edge)
        new_id, off, fwd = self.remap[x.edge]
        a = x.t * old.length
        s = off + (a if fwd else old.length - a)
        return self.graph.point_at_arc(new_id, s)


def contract_degree_two(graph: MetricGraph) -> Contraction:
    """Merge the two edges at every degree-2 vertex, adding their lengths.

    A cycle made only of degree-2 vertices cannot be removed without a
    self-loop; it is kept as two vertices joined by two parallel edges and
    listed in ``irreducible_cycles``.
    """
    # chains: new edge id -> (u, v, [(old edge, forward)], length)
    chains: dict[str, tuple[str, str, list[tuple[str, bool]], Fraction]] = {
        e.id: (e.u, e.v, [(e.id, True)], e.length) for e in graph.edges
    }
    incident: dict[str, list[str]] = {v: list(graph.incident(v)) for v in graph.vertices}
    alive = list(graph.vertices)
    changed = True
    while changed:
        changed = False
        for w in sorted(alive):
            inc = incident[w]
            if len(inc) != 2:
                continue
            c1, c2 = inc
            u1, v1, p1, l1 = chains[c1]
            u2, v2, p2, l2 = chains[c2]
            a = v1 if u1 == w else u1
            b = v2 if u2 == w else u2
            if a == b:
                continue  # merging would make a self-loop
            # orient chain 1 as a -> w and chain 2 as w -> b
            seq1 = p1 if v1 == w else [(eid, not f) for eid, f in reversed(p1)]
            seq2 = p2 if u2 == w else [(eid, not f) for eid, f in reversed(p2)]
            new_id = c1 + "+" + c2
            chains[new_id] = (a, b, seq1 + seq2, l1 + l2)
            del chains[c1], chains[c2]
            incident[a] = [new_id if c == c1 else c for c in incident[a]]
            incident[b] = [new_id if c == c2 else c for c in incident[b]]
            del incident[w]
            alive.remove(w)
            changed = True
            break
    irreducible = []
    for w in alive:
        inc = incident[w]
        if len(inc) == 2 and all(set(chains[c][:2]) == set(chains[inc[0]][:2]) for c in inc):
            pair = tuple(sorted(chains[inc[0]][:2]))
            if pair not in irreducible and all(len(incident[x]) == 2 for x in pair):
                irreducible.append(pair)
    remap: dict[str, tuple[str, Fraction, bool]] = {}
    new_edges = []
    for cid in sorted(chains, key=lambda c: min(graph.edge_ids.index(eid) for eid, _ in chains[c][2])):
        u, v, seq, lam = chains[cid]
        off = Fraction(0)
        for eid, fwd in seq:
            remap[eid] = (cid, off, fwd)
            off += graph.edge(eid).length
        new_edges.append(Edge(cid, u, v, lam))
    new_vertices = [v for v in graph.vertices if v in incident]
    return Contraction(MetricGraph(new_vertices, new_edges), remap, irreducible, graph)


# -- distance fields -------------------------------------------------------------


@dataclass
class DistanceField:
    """Distances from each site to every vertex, plus nearest-site sets."""

    graph: MetricGraph
    sites: tuple[GraphPoint, ...]
    to_vertex: list[dict[str, object]]

    @cached_property
    def _nearest(self) -> dict[str, tuple[object, tuple[int, ...]]]:
        from ._num import eq

        out = {}
        for w in self.graph.vertices:
            best = min(d[w] for d in self.to_vertex)
            out[w] = (best, tuple(i for i, d in enumerate(self.to_vertex) if eq(d[w], best)))
        return out

    def nearest(self, w: str) -> tuple[object, tuple[int, ...]]:
        """``(distance, site indices)`` of the sites closest to vertex ``w``."""
        return self._nearest[w]

    def endpoint_distances(self, i: int, edge_id: str) -> tuple[object, object]:
        e = self.graph.edge(edge_id)
        return self.to_vertex[i][e.u], self.to_vertex[i][e.v]

    def site_distance(self, i: int, edge_id: str, r):
        """Distance from site ``i`` to the point at arc ``r`` of ``edge_id``."""
        e = self.graph.edge(edge_id)
        d = self.to_vertex[i]
        best = min(d[e.u] + r, d[e.v] + e.length - r)
        s = self.graph.arc_on(self.sites[i], edge_id)
        if s is not None:
            best = min(best, abs(r - s))
        return best


def distance(graph: MetricGraph, x: GraphPoint, y: GraphPoint):
    return graph.distance(x, y)


def total_length(graph: MetricGraph):
    return graph.total_length()


def distance_field(graph: MetricGraph, sites: Iterable[GraphPoint]) -> DistanceField:
    sites = tuple(sites)
    if not sites:
        raise ValueError("distance_field needs at least one site")
    ap = graph.apsp
    rows = []
    for x in sites:
        anc = graph.anchors(x)
        rows.append({w: min(off + ap[a][w] for a, off in anc) for w in graph.vertices})
    return DistanceField(graph, sites, rows)


# -- fixtures ----------------------------------------------------------------------


def path_graph(length=1) -> MetricGraph:
    """A single edge ``e0`` from ``a`` to ``b``."""
    return MetricGraph(["a", "b"], [("e0", "a", "b", length)])


def star_graph(lengths=(1, 1, 1)) -> MetricGraph:
    """Centre ``c`` joined to leaves ``l0, l1, ...``; edge ``ei`` runs c -> li."""
    leaves = [f"l{i}" for i in range(len(lengths))]
    return MetricGraph(["c", *leaves], [(f"e{i}", "c", leaves[i], lam) for i, lam in enumerate(lengths)])


def cycle_graph(lengths=(2, 2)) -> MetricGraph:
    """A cycle kept as two vertices and two parallel edges."""
    return MetricGraph(["a", "b"], [(f"e{i}", "a", "b", lam) for i, lam in enumerate(lengths)])


def theta_graph(lengths=(1, 1, 1)) -> MetricGraph:
    """Two degree-3 vertices joined by three parallel edges."""
    return MetricGraph(["a", "b"], [(f"e{i}", "a", "b", lam) for i, lam in enumerate(lengths)])
