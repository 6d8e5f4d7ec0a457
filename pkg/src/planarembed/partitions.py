"""Random hierarchy of alternating partitions over a shortest-path system.

Level i is refined from level i+1 in two steps.  The horizontal step hands
each point to the first path (in a random order) within distance
radius_scale * 2**(i-2) of it; that path is the cluster's trunk.  The
vertical step then slices each trunk cluster into half-open distance-to-root
bands of width 2**(i-2), shifted by a random offset.  Level 0 always consists
of singletons sitting on their trunks, which the tree builder relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cut_graph import PathSystem, prefix_positions
from .errors import InputError, InternalError
from .rng import STREAM_HIERARCHY, rand_permutation, stream_rng, uniform53
from .shortest_paths import close_leq, dijkstra, multi_source_dijkstra
from .surface_map import Dart, EmbeddedGraph, make_graph


@dataclass(frozen=True)
class RandomnessRecord:
    """All randomness behind one hierarchy: deterministic function of seed."""

    band_offset: float  # uniform in [0, 1)
    radius_scale: float  # uniform in [1, 2)
    path_order: tuple[int, ...]  # permutation of range(k)
    seed: int | None


@dataclass
class Cluster:
    cid: str
    level: int
    members: frozenset[str]
    trunk: int  # path index into the path system
    sigma_pos: int  # position of the trunk in the random path order
    band_index: int | None
    parent: str | None
    top: float
    bottom: float


@dataclass
class PathMetrics:
    """Distances the construction consumes, computed once per instance."""

    graph: EmbeddedGraph
    ps: PathSystem
    positions: dict[str, float]
    path_dist: dict[str, tuple[float, ...]]
    x_list: list[str]
    x_index: dict[str, int]
    dmat: np.ndarray
    aspect: float

    @classmethod
    def compute(cls, g: EmbeddedGraph, ps: PathSystem) -> "PathMetrics":
        adj = g.adjacency()
        positions = dijkstra(g, ps.root, adj=adj)
        per_path = []
        for pv in ps.paths:
            sources = {v: 0.0 for v in pv}
            per_path.append(multi_source_dijkstra(g, sources, adj=adj))
        x_list = sorted(ps.point_set)
        x_index = {v: i for i, v in enumerate(x_list)}
        dmat = np.zeros((len(x_list), len(x_list)))
        for i, x in enumerate(x_list):
            dx = dijkstra(g, x, adj=adj)
            for j, y in enumerate(x_list):
                dmat[i, j] = dx[y]
        aspect = float(dmat.max()) if len(x_list) > 1 else 0.0
        path_dist = {
            x: tuple(per_path[s][x] for s in range(len(ps.paths))) for x in x_list
        }
        return cls(
            graph=g,
            ps=ps,
            positions=positions,
            path_dist=path_dist,
            x_list=x_list,
            x_index=x_index,
            dmat=dmat,
            aspect=aspect,
        )

    def distance(self, x: str, y: str) -> float:
        return float(self.dmat[self.x_index[x], self.x_index[y]])


@dataclass
class PartitionHierarchy:
    levels: list[list[Cluster]]  # index = level, 0 .. top
    aspect: float
    randomness: RandomnessRecord
    scale_factor: float
    metrics: PathMetrics

    @property
    def top_level(self) -> int:
        return len(self.levels) - 1

    def by_id(self) -> dict[str, Cluster]:
        return {c.cid: c for level in self.levels for c in level}

    def children_of(self, cid: str, level: int) -> list[Cluster]:
        if level == 0:
            return []
        return [c for c in self.levels[level - 1] if c.parent == cid]

    def diameter_statistic(self) -> float:
        """Max over clusters of diam(A) / 2**level (levels above 0)."""
        worst = 0.0
        for level in range(1, self.top_level + 1):
            for c in self.levels[level]:
                idx = [self.metrics.x_index[v] for v in c.members]
                if len(idx) < 2:
                    continue
                diam = float(self.metrics.dmat[np.ix_(idx, idx)].max())
                worst = max(worst, diam / 2.0**level)
        return worst


def rescale_min_distance(g: EmbeddedGraph) -> tuple[EmbeddedGraph, float]:
    """Scale all lengths so the minimum pairwise distance is exactly 1.

    The minimum pairwise distance equals the minimum non-loop edge length
    (every path between distinct vertices uses at least one non-loop edge).
    Returns the multiplier applied; divide output lengths by it to undo.
    """
    nonloop = [w for (u, v, w) in g.edges.values() if u != v]
    if not nonloop:
        return g, 1.0
    m = min(nonloop)
    if m <= 0:
        raise InputError("edge lengths must be positive")
    if m == 1.0:
        return g, 1.0
    edges = {e: (u, v, w / m) for e, (u, v, w) in g.edges.items()}
    return (
        make_graph(g.name, g.vertices, edges, g.rotation),
        1.0 / m,
    )


def subdivide_long_path_edges(
    g: EmbeddedGraph, ps: PathSystem
) -> tuple[EmbeddedGraph, PathSystem]:
    """Split every path edge longer than 1 into unit segments plus a remainder.

    Inserted vertices join the paths (hence the point set); distances between
    existing vertices are unchanged.  Off-path edges are never split.
    """
    on_path = sorted({e for pe in ps.path_edges for e in pe})
    pieces: dict[str, tuple[list[str], list[str]]] = {}
    vertices = set(g.vertices)
    edges = dict(g.edges)
    rotation = {v: list(rot) for v, rot in g.rotation.items()}

    for eid in on_path:
        u, v, w = g.edges[eid]
        nseg = max(1, math.ceil(w - 1e-9))
        if nseg == 1:
            continue
        sub_vertices = [f"{eid}@s{n}" for n in range(1, nseg)]
        sub_edges = [f"{eid}@{n}" for n in range(nseg)]
        chain = [u] + sub_vertices + [v]
        del edges[eid]
        for n in range(nseg):
            seg_len = 1.0 if n < nseg - 1 else w - (nseg - 1)
            edges[sub_edges[n]] = (chain[n], chain[n + 1], seg_len)
        for n, sv in enumerate(sub_vertices, start=1):
            vertices.add(sv)
            rotation[sv] = [Dart(sub_edges[n - 1], 1), Dart(sub_edges[n], 0)]
        _replace_dart(rotation[u], Dart(eid, 0), Dart(sub_edges[0], 0))
        _replace_dart(rotation[v], Dart(eid, 1), Dart(sub_edges[-1], 1))
        pieces[eid] = (sub_vertices, sub_edges)

    g2 = make_graph(g.name, vertices, edges, {v: tuple(r) for v, r in rotation.items()})

    new_paths = []
    new_path_edges = []
    for pv, pe in zip(ps.paths, ps.path_edges):
        nv, ne = [pv[0]], []
        for i, eid in enumerate(pe):
            a, b = pv[i], pv[i + 1]
            if eid not in pieces:
                nv.append(b)
                ne.append(eid)
                continue
            sub_vertices, sub_edges = pieces[eid]
            u, _, _ = g.edges[eid]
            if a == u:
                nv.extend(sub_vertices + [b])
                ne.extend(sub_edges)
            else:
                nv.extend(list(reversed(sub_vertices)) + [b])
                ne.extend(reversed(sub_edges))
        new_paths.append(tuple(nv))
        new_path_edges.append(tuple(ne))

    point_set = frozenset(v for pv in new_paths for v in pv)
    ps2 = PathSystem(
        root=ps.root,
        paths=tuple(new_paths),
        path_edges=tuple(new_path_edges),
        point_set=point_set,
    )
    return g2, ps2


def _replace_dart(rot: list[Dart], old: Dart, new: Dart) -> None:
    rot[rot.index(old)] = new


def draw_randomness(seed: int, k: int) -> RandomnessRecord:
    rng = stream_rng(seed, STREAM_HIERARCHY)
    band_offset = uniform53(rng)
    radius_scale = 1.0 + uniform53(rng)
    path_order = rand_permutation(rng, k)
    return RandomnessRecord(band_offset, radius_scale, path_order, seed)


def horizontal_step(
    members, level: int, radius_scale: float, path_order, pm: PathMetrics
) -> list[tuple[int, int, list[str]]]:
    """Assign each member to the first path within the level's radius.

    Returns (sigma position, trunk path index, members) triples in path-order
    position, empty entries dropped.
    """
    radius = radius_scale * 2.0 ** (level - 2)
    buckets: dict[int, list[str]] = {}
    for x in sorted(members):
        dists = pm.path_dist[x]
        for s, path_idx in enumerate(path_order):
            if close_leq(dists[path_idx], radius):
                buckets.setdefault(s, []).append(x)
                break
        else:
            raise InternalError(
                f"{x} not captured by any path at level {level}; "
                "points of the system always sit on some path"
            )
    return [(s + 1, path_order[s], buckets[s]) for s in sorted(buckets)]


def band_index_of(position: float, level: int, band_offset: float) -> int:
    """Index j of the half-open band holding a distance-to-root value.

    Band j covers (j - 1 + offset) * w <= position < (j + offset) * w with
    w = 2**(level-2), so j = floor(position / w - offset) + 1.
    """
    w = 2.0 ** (level - 2)
    return int(math.floor(position / w - band_offset)) + 1


def vertical_step(
    members, level: int, band_offset: float, pm: PathMetrics
) -> dict[int, list[str]]:
    """Slice a trunk cluster into distance-to-root bands; keys are band indices."""
    bands: dict[int, list[str]] = {}
    for x in members:
        j = band_index_of(pm.positions[x], level, band_offset)
        bands.setdefault(j, []).append(x)
    return {j: sorted(bands[j]) for j in sorted(bands)}


def top_level_for_aspect(aspect: float) -> int:
    if aspect <= 0.0:
        return 0
    return 2 + max(0, math.ceil(math.log2(aspect) - 1e-12))


def build_hierarchy_from_randomness(
    pm: PathMetrics, randomness: RandomnessRecord, scale_factor: float = 1.0
) -> PartitionHierarchy:
    x_all = frozenset(pm.ps.point_set)
    if not x_all:
        raise InputError("empty point set")
    k = pm.ps.k
    if len(randomness.path_order) != k:
        raise InputError("path order length does not match the path count")
    top = top_level_for_aspect(pm.aspect)
    trunk0 = randomness.path_order[0]

    levels: list[list[Cluster]] = [[] for _ in range(top + 1)]
    positions = pm.positions
    top_cluster = Cluster(
        cid=f"L{top}N0",
        level=top,
        members=x_all,
        trunk=trunk0,
        sigma_pos=1,
        band_index=None,
        parent=None,
        top=min(positions[v] for v in x_all),
        bottom=max(positions[v] for v in x_all),
    )
    levels[top] = [top_cluster]

    for level in range(top - 1, -1, -1):
        seq = 0
        out: list[Cluster] = []
        for parent in levels[level + 1]:
            families = horizontal_step(
                parent.members, level, randomness.radius_scale,
                randomness.path_order, pm,
            )
            for sigma_pos, trunk, fam_members in families:
                bands = vertical_step(fam_members, level, randomness.band_offset, pm)
                for j, band_members in bands.items():
                    out.append(
                        Cluster(
                            cid=f"L{level}N{seq}",
                            level=level,
                            members=frozenset(band_members),
                            trunk=trunk,
                            sigma_pos=sigma_pos,
                            band_index=j,
                            parent=parent.cid,
                            top=min(positions[v] for v in band_members),
                            bottom=max(positions[v] for v in band_members),
                        )
                    )
                    seq += 1
        levels[level] = out

    for c in levels[0]:
        if len(c.members) != 1:
            raise InternalError(f"level-0 cluster {c.cid} is not a singleton")
        (v,) = c.members
        if v not in pm.ps.paths[c.trunk]:
            raise InternalError(f"level-0 singleton {v} is off its trunk")
    return PartitionHierarchy(
        levels=levels,
        aspect=pm.aspect,
        randomness=randomness,
        scale_factor=scale_factor,
        metrics=pm,
    )


def build_hierarchy(
    g_or_metrics, ps: PathSystem | None = None, seed: int = 0, scale_factor: float = 1.0
) -> PartitionHierarchy:
    """Seeded hierarchy over a rescaled, subdivided instance.

    Accepts either (graph, path system, seed) or precomputed PathMetrics for
    repeated sampling.
    """
    if isinstance(g_or_metrics, PathMetrics):
        pm = g_or_metrics
    else:
        if ps is None:
            raise InputError("build_hierarchy needs a path system")
        pm = PathMetrics.compute(g_or_metrics, ps)
    randomness = draw_randomness(seed, pm.ps.k)
    return build_hierarchy_from_randomness(pm, randomness, scale_factor=scale_factor)
