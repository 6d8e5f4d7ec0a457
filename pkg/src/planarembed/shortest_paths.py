"""Dijkstra engines used throughout the pipeline.

All graphs are small enough for exact single-source runs; ties are broken on
vertex identifier so every result is deterministic.
"""

from __future__ import annotations

import heapq
from math import inf

from .errors import InputError
from .surface_map import EmbeddedGraph

REL_TOL = 1e-9  # documented comparison slack for all real-valued assertions


def close_leq(a: float, b: float, tol: float = REL_TOL) -> bool:
    """a <= b up to the package-wide relative tolerance."""
    return a <= b + tol * max(1.0, abs(a), abs(b))


def dijkstra(g: EmbeddedGraph, source: str, adj=None) -> dict[str, float]:
    """Exact single-source distances; unreachable vertices get inf."""
    if source not in g.vertices:
        raise InputError(f"unknown source vertex {source}")
    if adj is None:
        adj = g.adjacency()
    dist = {v: inf for v in g.vertices}
    dist[source] = 0.0
    heap = [(0.0, source)]
    done: set[str] = set()
    while heap:
        d, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        for y, _, w in adj[x]:
            nd = d + w
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def multi_source_dijkstra(
    g: EmbeddedGraph, sources: dict[str, float], adj=None
) -> dict[str, float]:
    """Distances to the nearest source; ``sources`` maps source -> start offset."""
    if adj is None:
        adj = g.adjacency()
    dist = {v: inf for v in g.vertices}
    heap = []
    for s in sorted(sources):
        if s not in g.vertices:
            raise InputError(f"unknown source vertex {s}")
        if sources[s] < dist[s]:
            dist[s] = sources[s]
            heap.append((sources[s], s))
    heapq.heapify(heap)
    done: set[str] = set()
    while heap:
        d, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        for y, _, w in adj[x]:
            nd = d + w
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def dijkstra_adj(adj: dict, source, members=None) -> dict:
    """Dijkstra over a raw adjacency dict {v: [(u, weight), ...]}.

    ``members`` restricts the search to an induced vertex subset.
    """
    dist = {v: inf for v in (members if members is not None else adj)}
    if source not in dist:
        raise InputError(f"source {source} outside the searched set")
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, x = heapq.heappop(heap)
        if d > dist[x]:
            continue
        for y, w in adj[x]:
            if y not in dist:
                continue
            nd = d + w
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def voronoi_owners(
    g: EmbeddedGraph, sites: list[str], adj=None
) -> tuple[dict[str, float], dict[str, str]]:
    """Nearest-site distances and owners, ties resolved to the earlier site.

    Site rank is the position in ``sites`` (callers pass a sorted list to get
    lexicographic tie-breaking).  Keys (distance, rank) are compared
    lexicographically during relaxation, so the owner of every vertex is the
    least-ranked among its nearest sites.
    """
    if adj is None:
        adj = g.adjacency()
    rank = {s: i for i, s in enumerate(sites)}
    best: dict[str, tuple[float, int]] = {}
    heap = []
    for s in sites:
        if s not in g.vertices:
            raise InputError(f"unknown site {s}")
        key = (0.0, rank[s])
        if s not in best or key < best[s]:
            best[s] = key
            heap.append((0.0, rank[s], s))
    heapq.heapify(heap)
    done: set[str] = set()
    while heap:
        d, r, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        for y, _, w in adj[x]:
            key = (d + w, r)
            if y not in best or key < best[y]:
                best[y] = key
                heapq.heappush(heap, (d + w, r, y))
    dist = {v: best[v][0] for v in best}
    owner = {v: sites[best[v][1]] for v in best}
    return dist, owner


def parent_tree(g: EmbeddedGraph, source: str, adj=None):
    """Shortest-path tree rooted at ``source``.

    Among predecessors u with dist[u] + len(e) exactly equal to dist[v], the
    parent is the one with the smallest (vertex id, edge id).  Returns
    (dist, parent) with parent[v] = (u, eid); the root maps to None.
    """
    if adj is None:
        adj = g.adjacency()
    dist = dijkstra(g, source, adj=adj)
    parent: dict[str, tuple[str, str] | None] = {source: None}
    for v in g.vertices:
        if v == source or dist[v] == inf:
            continue
        candidates = []
        for u, eid, w in adj[v]:
            if u != v and dist[u] + w == dist[v]:
                candidates.append((u, eid))
        if not candidates:
            # Distances came from float sums along some relaxation order, so
            # an exact-match parent always exists; lack of one is a bug.
            raise InputError(f"no shortest-path parent for {v}; disconnected?")
        parent[v] = min(candidates)
    return dist, parent


def tree_path(parent, v: str) -> list[str]:
    """Vertex sequence from the root to v along the parent tree."""
    path = [v]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]][0])
    path.reverse()
    return path


def tree_path_edges(parent, v: str) -> list[str]:
    """Edge ids from the root to v along the parent tree."""
    edges = []
    while parent[v] is not None:
        u, eid = parent[v]
        edges.append(eid)
        v = u
    edges.reverse()
    return edges
