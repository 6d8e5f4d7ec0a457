"""Cut graphs from greedy homotopy generators.

For a genus-g map the tree-cotree construction yields 2g loops through a
basepoint r, each made of two shortest root paths plus at most one extra
edge.  Their union H has a one-disk complement, certified combinatorially:
H connected, one face when traced with the ambient rotations, and
V_H - E_H + 1 = 2 - 2g.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import inf

from .errors import InputError, InternalError
from .shortest_paths import REL_TOL, dijkstra, parent_tree, tree_path, tree_path_edges
from .surface_map import (
    EmbeddedGraph,
    _face_orbits,
    euler_genus,
    induced_embedded_subgraph,
    is_connected,
)


@dataclass(frozen=True)
class CertificateRecord:
    """Disk-complement certificate for an edge subset."""

    vertices: int
    edges: int
    faces: int
    ambient_genus: int
    connected: bool
    passed: bool


@dataclass(frozen=True)
class Loop:
    """Cycle through the root: tree path to u, edge {u,v}, tree path back from v."""

    to_u: tuple[str, ...]
    edge: str
    from_v: tuple[str, ...]
    length: float

    def vertex_cycle(self) -> tuple[str, ...]:
        return self.to_u + self.from_v


@dataclass(frozen=True)
class CutGraph:
    root: str
    edges: frozenset[str]
    loops: tuple[Loop, ...]
    certificate: CertificateRecord


@dataclass(frozen=True)
class PathSystem:
    """Shortest paths with a common endpoint whose vertices cover the cut graph."""

    root: str
    paths: tuple[tuple[str, ...], ...]
    path_edges: tuple[tuple[str, ...], ...]
    point_set: frozenset[str]

    @property
    def k(self) -> int:
        return len(self.paths)


def shortest_path_tree(g: EmbeddedGraph, r: str):
    """Distances and parent map of the shortest-path tree rooted at r."""
    if not is_connected(g):
        raise InputError("shortest_path_tree requires a connected graph")
    return parent_tree(g, r)


def default_root(g: EmbeddedGraph) -> str:
    """Approximate metric center by a double sweep, ties to the smallest id."""
    adj = g.adjacency()
    start = min(g.vertices)
    d0 = dijkstra(g, start, adj=adj)
    a = min(g.vertices, key=lambda v: (-d0[v], v))
    da = dijkstra(g, a, adj=adj)
    b = min(g.vertices, key=lambda v: (-da[v], v))
    db = dijkstra(g, b, adj=adj)
    return min(g.vertices, key=lambda v: (max(da[v], db[v]), v))


def verify_disk_certificate(g: EmbeddedGraph, h) -> CertificateRecord:
    """Certify that the complement of the subgraph on ``h`` is a single disk."""
    hset = set(h)
    genus = euler_genus(g)
    if not hset:
        return CertificateRecord(0, 0, 0, genus, False, False)
    sub = induced_embedded_subgraph(g, hset)
    faces = len(_face_orbits(sub))
    connected = is_connected(sub)
    v_h, e_h = len(sub.vertices), len(sub.edges)
    passed = connected and faces == 1 and (v_h - e_h + faces) == 2 - 2 * genus
    return CertificateRecord(v_h, e_h, faces, genus, connected, passed)


class _DualUnion:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def greedy_system_of_loops(g: EmbeddedGraph, r: str) -> CutGraph:
    """Build the cut graph from 2g greedy loops through r.

    T is the shortest-path tree at r.  Each non-tree edge e = {u, v} closes
    the loop (tree path to u) + e + (tree path from v) of length
    d(r,u) + len(e) + d(r,v).  A maximum-weight spanning tree of the dual
    graph restricted to non-tree edges is discarded; the 2g leftover edges
    define the loops, reported in increasing length order.
    """
    genus = euler_genus(g)
    if genus == 0:
        raise InputError("nothing to cut: input drawing has genus 0")
    if r not in g.vertices:
        raise InputError(f"unknown root {r}")
    dist, parent = shortest_path_tree(g, r)
    tree_edges = {pe[1] for pe in parent.values() if pe is not None}

    face_of = {}
    faces = _face_orbits(g)
    for idx, face in enumerate(faces):
        for d in face:
            face_of[d] = idx

    nontree = sorted(set(g.edges) - tree_edges)
    loop_len = {}
    for eid in nontree:
        u, v, w = g.edges[eid]
        loop_len[eid] = dist[u] + w + dist[v]

    # Keep the most expensive loops in the dual spanning tree; the cheapest
    # 2g loops are the leftover edges.
    dual = _DualUnion(len(faces))
    leftover = []
    from .surface_map import Dart

    for eid in sorted(nontree, key=lambda e: (-loop_len[e], e)):
        fa = face_of[Dart(eid, 0)]
        fb = face_of[Dart(eid, 1)]
        if not dual.union(fa, fb):
            leftover.append(eid)
    if len(leftover) != 2 * genus:
        raise InternalError(
            f"expected {2 * genus} leftover loop edges, found {len(leftover)}"
        )

    loops = []
    for eid in leftover:
        u, v, _ = g.edges[eid]
        back = tree_path(parent, v)
        back.reverse()
        loops.append(
            Loop(
                to_u=tuple(tree_path(parent, u)),
                edge=eid,
                from_v=tuple(back),
                length=loop_len[eid],
            )
        )
    loops.sort(key=lambda lp: (lp.length, lp.edge))

    h_edges = set()
    for lp in loops:
        h_edges.add(lp.edge)
        for path in (lp.to_u, tuple(reversed(lp.from_v))):
            for v in path[1:]:
                h_edges.add(parent[v][1])

    cert = verify_disk_certificate(g, h_edges)
    if not cert.passed:
        raise InternalError(
            "cut graph complement is not a disk: "
            f"V={cert.vertices} E={cert.edges} F={cert.faces} "
            f"expected V-E+F={2 - 2 * genus}"
        )
    return CutGraph(
        root=r, edges=frozenset(h_edges), loops=tuple(loops), certificate=cert
    )


def decompose_into_paths(c: CutGraph, g: EmbeddedGraph, r: str) -> PathSystem:
    """Split the loops into at most 4g distinct shortest root paths covering V(H)."""
    if c.root != r:
        raise InputError("path decomposition root differs from the cut graph root")
    dist, parent = shortest_path_tree(g, r)
    paths: list[tuple[str, ...]] = []
    path_edges: list[tuple[str, ...]] = []
    seen_endpoints: set[str] = set()
    for lp in c.loops:
        u, v, _ = g.edges[lp.edge]
        for endpoint in (u, v):
            if endpoint in seen_endpoints:
                continue
            seen_endpoints.add(endpoint)
            pv = tuple(tree_path(parent, endpoint))
            pe = tuple(tree_path_edges(parent, endpoint))
            _check_prefix_shortest(g, dist, pv, pe)
            paths.append(pv)
            path_edges.append(pe)

    covered = set()
    for pv in paths:
        covered.update(pv)
    h_vertices = set()
    for eid in c.edges:
        u, v, _ = g.edges[eid]
        h_vertices.update((u, v))
    if covered != h_vertices:
        raise InternalError("path system does not cover the cut graph vertices")
    return PathSystem(
        root=r,
        paths=tuple(paths),
        path_edges=tuple(path_edges),
        point_set=frozenset(covered),
    )


def _check_prefix_shortest(g: EmbeddedGraph, dist, pv, pe) -> None:
    total = 0.0
    for i, eid in enumerate(pe):
        total += g.length(eid)
        end = pv[i + 1]
        if abs(total - dist[end]) > REL_TOL * max(1.0, dist[end]):
            raise InternalError(f"path prefix to {end} is not shortest")


def prefix_positions(g: EmbeddedGraph, pv, pe) -> list[float]:
    """Cumulative lengths along a path, starting at 0."""
    pos = [0.0]
    for eid in pe:
        pos.append(pos[-1] + g.length(eid))
    return pos
