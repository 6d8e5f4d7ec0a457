"""Random tree embedding of a path system driven by a partition hierarchy.

Trees are built bottom-up over the hierarchy.  Each level-0 singleton is a
one-node tree.  For a cluster at level i, the trees of each trunk family's
band children are glued onto a fresh copy of the trunk subpath spanning the
family (the family's stem), identifying stem nodes of the children with their
copies by trunk vertex; the families are then joined by edges of length
lambda * 2**i from their roots to the root of the cluster's own trunk family.
A cluster's stem and root are those of the family used as the hub.

Stems carry exact subpath metrics, so vertical gluing never stretches
distances; only the horizontal star edges add length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as sparse_dijkstra

from .cut_graph import PathSystem
from .errors import InputError, InternalError
from .partitions import (
    Cluster,
    PartitionHierarchy,
    PathMetrics,
    build_hierarchy,
    rescale_min_distance,
    subdivide_long_path_edges,
)
from .shortest_paths import REL_TOL, close_leq

DEFAULT_EDGE_SCALE = 1.0  # multiplier for the root-joining edges (safe mode: 4)


@dataclass(frozen=True)
class TreeNode:
    kind: str  # "copy" for an image of a point, "stem" for a trunk copy
    source: str  # graph vertex this node is a copy of
    cluster: str  # cluster or family the node was created for


@dataclass(frozen=True)
class StemRecord:
    trunk: int
    interval: tuple[float, float]
    nodes: tuple[int, ...]  # ordered by distance to the root vertex


@dataclass
class EmbedTree:
    nodes: dict[int, TreeNode]
    edges: list[tuple[int, int, float]]
    fmap: dict[str, int]
    stems: dict[str, StemRecord]
    roots: dict[str, int]
    events: tuple[str, ...]  # fallbacks taken during composition
    edge_scale: float

    def adjacency(self) -> dict[int, list[tuple[int, float]]]:
        adj: dict[int, list[tuple[int, float]]] = {n: [] for n in self.nodes}
        for a, b, w in self.edges:
            adj[a].append((b, w))
            adj[b].append((a, w))
        return adj

    def node_distances(self, source: int, adj=None) -> dict[int, float]:
        """Single-source distances inside the tree."""
        import heapq

        if adj is None:
            adj = self.adjacency()
        dist = {n: math.inf for n in self.nodes}
        dist[source] = 0.0
        heap = [(0.0, source)]
        while heap:
            d, x = heapq.heappop(heap)
            if d > dist[x]:
                continue
            for y, w in adj[x]:
                nd = d + w
                if nd < dist[y]:
                    dist[y] = nd
                    heapq.heappush(heap, (nd, y))
        return dist

    def distance_matrix(self, node_ids: list[int]) -> np.ndarray:
        """Pairwise tree distances between the given nodes (scipy, exact sums)."""
        index = {n: i for i, n in enumerate(sorted(self.nodes))}
        n = len(index)
        rows, cols, data = [], [], []
        for a, b, w in self.edges:
            rows.extend((index[a], index[b]))
            cols.extend((index[b], index[a]))
            data.extend((w, w))
        mat = csr_matrix((data, (rows, cols)), shape=(n, n))
        src = [index[nid] for nid in node_ids]
        full = sparse_dijkstra(mat, directed=False, indices=src)
        return full[:, src]

    def is_tree(self) -> bool:
        if len(self.edges) != len(self.nodes) - 1:
            return False
        seen = set()
        adj = self.adjacency()
        stack = [next(iter(self.nodes))] if self.nodes else []
        seen.update(stack)
        while stack:
            x = stack.pop()
            for y, _ in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(self.nodes)


@dataclass
class _ClusterTree:
    """Per-cluster bookkeeping during the bottom-up composition."""

    trunk: int
    stem_vertices: tuple[str, ...]
    stem_nodes: tuple[int, ...]
    interval: tuple[float, float]
    root: int
    root_position: float


class _Builder:
    def __init__(self, hierarchy: PartitionHierarchy, edge_scale: float):
        self.h = hierarchy
        self.pm: PathMetrics = hierarchy.metrics
        self.lam = edge_scale
        self.kinds: list[str] = []
        self.sources: list[str] = []
        self.clusters: list[str] = []
        self.uf: list[int] = []
        self.raw_edges: list[tuple[int, int, float]] = []
        self.events: list[str] = []
        self.trunk_seq: list[list[tuple[float, str]]] = []
        for pv in self.pm.ps.paths:
            seq = [(self.pm.positions[v], v) for v in pv]
            for (p0, _), (p1, _) in zip(seq, seq[1:]):
                if not p1 > p0:
                    raise InternalError("trunk positions must increase along the path")
            self.trunk_seq.append(seq)

    def new_node(self, kind: str, source: str, cluster: str) -> int:
        nid = len(self.uf)
        self.kinds.append(kind)
        self.sources.append(source)
        self.clusters.append(cluster)
        self.uf.append(nid)
        return nid

    def find(self, x: int) -> int:
        while self.uf[x] != x:
            self.uf[x] = self.uf[self.uf[x]]
            x = self.uf[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller id as representative for deterministic output
            lo, hi = (ra, rb) if ra < rb else (rb, ra)
            self.uf[hi] = lo

    def spine_vertices(self, trunk: int, lo: float, hi: float) -> list[tuple[float, str]]:
        return [
            (p, v)
            for p, v in self.trunk_seq[trunk]
            if close_leq(lo, p) and close_leq(p, hi)
        ]

    def nearest_trunk_vertex(self, trunk: int, lo: float, hi: float) -> tuple[float, str]:
        def gap(p: float) -> float:
            if p < lo:
                return lo - p
            if p > hi:
                return p - hi
            return 0.0

        return min(self.trunk_seq[trunk], key=lambda pv: (gap(pv[0]), pv[0]))

    def compose_vertical(
        self, family_id: str, level: int, trunk: int, children: list[_ClusterTree],
        member_lo: float, member_hi: float,
    ) -> _ClusterTree:
        """Glue band children onto a fresh copy of their trunk subpath."""
        lo, hi = member_lo, member_hi
        native = [c for c in children if c.trunk == trunk]
        foreign = [c for c in children if c.trunk != trunk]
        for c in native:
            lo = min(lo, c.interval[0])
            hi = max(hi, c.interval[1])

        spine = self.spine_vertices(trunk, lo, hi)
        if not spine:
            spine = [self.nearest_trunk_vertex(trunk, lo, hi)]
            self.events.append(f"empty-spine {family_id}")
        spine_node = {
            v: self.new_node("stem", v, family_id) for _, v in spine
        }
        for (p0, v0), (p1, v1) in zip(spine, spine[1:]):
            self.raw_edges.append((spine_node[v0], spine_node[v1], p1 - p0))

        claimed: dict[str, int] = {}
        for idx, child in enumerate(native):
            for v, node in zip(child.stem_vertices, child.stem_nodes):
                if v not in spine_node:
                    raise InternalError(
                        f"stem vertex {v} of a band child missing from the spine"
                    )
                prev = claimed.get(v)
                if prev is not None:
                    # Bands are disjoint, so only degenerate single-vertex
                    # stems produced by the nearest-vertex fallback may meet.
                    if len(native[prev].stem_nodes) > 1 and len(child.stem_nodes) > 1:
                        raise InternalError(
                            f"band children share stem vertex {v} at {family_id}"
                        )
                    self.events.append(f"stem-overlap {family_id} {v}")
                claimed[v] = idx
                self.union(node, spine_node[v])

        for child in foreign:
            target = min(
                spine, key=lambda pv: (abs(pv[0] - child.root_position), pv[0])
            )
            self.raw_edges.append(
                (child.root, spine_node[target[1]], self.lam * 2.0**level)
            )
            self.events.append(f"foreign-stem {family_id}")

        vertices = tuple(v for _, v in spine)
        nodes = tuple(spine_node[v] for v in vertices)
        return _ClusterTree(
            trunk=trunk,
            stem_vertices=vertices,
            stem_nodes=nodes,
            interval=(spine[0][0], spine[-1][0]),
            root=nodes[0],
            root_position=spine[0][0],
        )

    def compose_horizontal(
        self, cluster: Cluster, level: int, families: list[tuple[int, int, _ClusterTree]]
    ) -> _ClusterTree:
        """Join the trunk families by star edges at the hub family's root."""
        hub = None
        for _, trunk, tree in families:
            if trunk == cluster.trunk:
                hub = tree
                break
        if hub is None:
            hub = families[0][2]
            self.events.append(f"empty-trunk-child {cluster.cid}")
        for _, _, tree in families:
            if tree is hub:
                continue
            self.raw_edges.append((tree.root, hub.root, self.lam * 2.0**level))
        return hub


def base_trees(hierarchy: PartitionHierarchy) -> dict[str, _ClusterTree]:
    """One trivial tree per level-0 singleton (exposed for direct testing)."""
    builder = _Builder(hierarchy, DEFAULT_EDGE_SCALE)
    return _base_trees(builder, hierarchy)


def _base_trees(builder: _Builder, hierarchy: PartitionHierarchy):
    out: dict[str, _ClusterTree] = {}
    for c in hierarchy.levels[0]:
        if len(c.members) != 1:
            raise InputError(f"level-0 cluster {c.cid} is not a singleton")
        (v,) = c.members
        pos = hierarchy.metrics.positions[v]
        node = builder.new_node("copy", v, c.cid)
        out[c.cid] = _ClusterTree(
            trunk=c.trunk,
            stem_vertices=(v,),
            stem_nodes=(node,),
            interval=(pos, pos),
            root=node,
            root_position=pos,
        )
    return out


def build_tree(
    hierarchy: PartitionHierarchy,
    ps: PathSystem | None = None,
    edge_scale: float = DEFAULT_EDGE_SCALE,
) -> EmbedTree:
    """Assemble the tree and the injection from the point set into its nodes."""
    builder = _Builder(hierarchy, edge_scale)
    current = _base_trees(builder, hierarchy)
    level0_node = {tree.stem_nodes[0]: cid for cid, tree in current.items()}
    fmap_raw = {
        next(iter(hierarchy.by_id()[cid].members)): tree.stem_nodes[0]
        for cid, tree in current.items()
    }
    stems_raw: dict[str, _ClusterTree] = dict(current)

    for level in range(1, hierarchy.top_level + 1):
        nxt: dict[str, _ClusterTree] = {}
        for cluster in hierarchy.levels[level]:
            children = hierarchy.children_of(cluster.cid, level)
            by_family: dict[tuple[int, int], list[Cluster]] = {}
            for ch in children:
                by_family.setdefault((ch.sigma_pos, ch.trunk), []).append(ch)
            families = []
            for (sigma_pos, trunk), group in sorted(by_family.items()):
                group.sort(key=lambda ch: ch.band_index)
                fam_id = f"{cluster.cid}.s{sigma_pos}"
                fam_tree = builder.compose_vertical(
                    fam_id,
                    level,
                    trunk,
                    [current[ch.cid] for ch in group],
                    min(ch.top for ch in group),
                    max(ch.bottom for ch in group),
                )
                stems_raw[fam_id] = fam_tree
                families.append((sigma_pos, trunk, fam_tree))
            if not families:
                raise InternalError(f"cluster {cluster.cid} has no children")
            hub = builder.compose_horizontal(cluster, level, families)
            nxt[cluster.cid] = hub
            stems_raw[cluster.cid] = hub
        current = nxt

    # Resolve identifications into canonical node ids.
    rep_order: dict[int, int] = {}
    for nid in range(len(builder.uf)):
        rep = builder.find(nid)
        if rep not in rep_order:
            rep_order[rep] = len(rep_order)
    nodes: dict[int, TreeNode] = {}
    for nid in range(len(builder.uf)):
        rep = builder.find(nid)
        cid = rep_order[rep]
        if cid not in nodes or (builder.kinds[nid] == "copy" and nodes[cid].kind != "copy"):
            nodes[cid] = TreeNode(
                kind=builder.kinds[nid],
                source=builder.sources[nid],
                cluster=level0_node.get(nid, builder.clusters[nid])
                if builder.kinds[nid] == "copy"
                else builder.clusters[nid],
            )

    edges: dict[tuple[int, int], float] = {}
    for a, b, w in builder.raw_edges:
        ca, cb = rep_order[builder.find(a)], rep_order[builder.find(b)]
        if ca == cb:
            raise InternalError("composition produced a self-loop")
        key = (ca, cb) if ca < cb else (cb, ca)
        if key in edges:
            if abs(edges[key] - w) > REL_TOL * max(1.0, abs(w)):
                raise InternalError("identified stem edges disagree on length")
        else:
            edges[key] = w

    def canon(nid: int) -> int:
        return rep_order[builder.find(nid)]

    tree = EmbedTree(
        nodes=nodes,
        edges=[(a, b, w) for (a, b), w in sorted(edges.items())],
        fmap={v: canon(n) for v, n in fmap_raw.items()},
        stems={
            cid: StemRecord(
                trunk=ct.trunk,
                interval=ct.interval,
                nodes=tuple(canon(n) for n in ct.stem_nodes),
            )
            for cid, ct in stems_raw.items()
        },
        roots={cid: canon(ct.root) for cid, ct in stems_raw.items()},
        events=tuple(builder.events),
        edge_scale=edge_scale,
    )
    if not tree.is_tree():
        raise InternalError("composition did not produce a tree")
    if len(set(tree.fmap.values())) != len(tree.fmap):
        raise InternalError("point injection collapsed two points")
    return tree


def vertical_composition(
    hierarchy: PartitionHierarchy, family_id: str, level: int, trunk: int,
    children: list[_ClusterTree], member_lo: float, member_hi: float,
    builder: _Builder | None = None,
):
    """Single vertical gluing step (exposed for direct testing)."""
    b = builder or _Builder(hierarchy, DEFAULT_EDGE_SCALE)
    return b.compose_vertical(family_id, level, trunk, children, member_lo, member_hi), b


def horizontal_composition(
    hierarchy: PartitionHierarchy, cluster: Cluster, level: int, families, builder: _Builder
):
    """Single star-joining step (exposed for direct testing)."""
    return builder.compose_horizontal(cluster, level, families)


def extend_to_attachments(
    t: EmbedTree, attachments: list[tuple[str, str, float]]
) -> EmbedTree:
    """Hang new leaves off existing images: (new vertex, host point, length)."""
    nodes = dict(t.nodes)
    edges = list(t.edges)
    fmap = dict(t.fmap)
    next_id = max(nodes) + 1 if nodes else 0
    for w, host, length in attachments:
        if host not in fmap:
            raise InputError(f"attachment host {host} is not an embedded point")
        if not length > 0:
            raise InputError("attachment lengths must be positive")
        if w in fmap:
            raise InputError(f"attachment vertex {w} already embedded")
        nid = next_id
        next_id += 1
        nodes[nid] = TreeNode(kind="copy", source=w, cluster="attached")
        edges.append((fmap[host], nid, float(length)))
        fmap[w] = nid
    return EmbedTree(
        nodes=nodes,
        edges=edges,
        fmap=fmap,
        stems=t.stems,
        roots=t.roots,
        events=t.events,
        edge_scale=t.edge_scale,
    )


@dataclass
class TreeSamplerPrep:
    """Seed-independent preprocessing for repeated tree sampling."""

    metrics: PathMetrics
    scale_factor: float


def prepare_tree_sampler(g, ps: PathSystem) -> TreeSamplerPrep:
    """Rescale, subdivide and precompute the distances the sampler consumes.

    Rescaling keeps identifiers, so the path system carries over unchanged
    into the subdivision step.
    """
    g1, factor = rescale_min_distance(g)
    g2, ps2 = subdivide_long_path_edges(g1, ps)
    return TreeSamplerPrep(metrics=PathMetrics.compute(g2, ps2), scale_factor=factor)


def sample_prepared_tree(
    prep: TreeSamplerPrep, seed: int, edge_scale: float = DEFAULT_EDGE_SCALE
) -> EmbedTree:
    """One seeded tree over prepared metrics, weights in the input units."""
    hierarchy = build_hierarchy(
        prep.metrics, seed=seed, scale_factor=prep.scale_factor
    )
    tree = build_tree(hierarchy, edge_scale=edge_scale)
    if prep.scale_factor != 1.0:
        tree = EmbedTree(
            nodes=tree.nodes,
            edges=[(a, b, w / prep.scale_factor) for a, b, w in tree.edges],
            fmap=tree.fmap,
            stems=tree.stems,
            roots=tree.roots,
            events=tree.events,
            edge_scale=tree.edge_scale,
        )
    return tree


def sample_tree_embedding(
    g, ps: PathSystem, seed: int, edge_scale: float = DEFAULT_EDGE_SCALE
) -> EmbedTree:
    """Rescale, subdivide, build the hierarchy and the tree for one seed."""
    return sample_prepared_tree(prepare_tree_sampler(g, ps), seed, edge_scale=edge_scale)
