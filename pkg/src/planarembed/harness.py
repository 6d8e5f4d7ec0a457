"""Instance generators, distortion estimator, oracles, and CSV reporting."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .cut_graph import PathSystem, decompose_into_paths, default_root, greedy_system_of_loops
from .errors import InputError
from .partitions import RandomnessRecord, build_hierarchy_from_randomness
from .rng import STREAM_PAIRS, rand_below, stream_rng
from .shortest_paths import dijkstra, tree_path, tree_path_edges, parent_tree
from .surface_map import Dart, EmbeddedGraph, euler_genus, make_graph
from .tree_embedding import (
    DEFAULT_EDGE_SCALE,
    build_tree,
    prepare_tree_sampler,
    sample_prepared_tree,
)


def shortest_distances(g: EmbeddedGraph, sources) -> dict[str, dict[str, float]]:
    """Exact Dijkstra distances from each source vertex."""
    adj = g.adjacency()
    return {s: dijkstra(g, s, adj=adj) for s in sources}


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

FAMILIES = ("torus-grid", "genus-sum", "bouquet", "path-star")


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    rows: int = 0
    cols: int = 0
    genus: int = 0
    arms: int = 0
    arm_length: int = 0


def torus_grid(rows: int, cols: int) -> EmbeddedGraph:
    """Cartesian product of two cycles with the standard torus rotation.

    Every face is a quadrilateral, so the drawing has genus 1.  Sizes below 3
    would create parallel edges with ambiguous rotations and are rejected.
    """
    if rows < 3 or cols < 3:
        raise InputError("torus-grid needs rows >= 3 and cols >= 3")
    return _torus_block("", rows, cols)


def _torus_block(prefix: str, rows: int, cols: int) -> EmbeddedGraph:
    vertices = [f"{prefix}v{i}_{j}" for i in range(rows) for j in range(cols)]
    edges = {}
    for i in range(rows):
        for j in range(cols):
            edges[f"{prefix}h{i}_{j}"] = (
                f"{prefix}v{i}_{j}",
                f"{prefix}v{i}_{(j + 1) % cols}",
                1.0,
            )
            edges[f"{prefix}s{i}_{j}"] = (
                f"{prefix}v{i}_{j}",
                f"{prefix}v{(i + 1) % rows}_{j}",
                1.0,
            )
    rotation = {}
    for i in range(rows):
        for j in range(cols):
            east = Dart(f"{prefix}h{i}_{j}", 0)
            west = Dart(f"{prefix}h{i}_{(j - 1) % cols}", 1)
            south = Dart(f"{prefix}s{i}_{j}", 0)
            north = Dart(f"{prefix}s{(i - 1) % rows}_{j}", 1)
            rotation[f"{prefix}v{i}_{j}"] = (east, north, west, south)
    return make_graph(f"torus{rows}x{cols}", vertices, edges, rotation)


def genus_sum(genus: int, size: int) -> EmbeddedGraph:
    """Chain of ``genus`` torus grids joined by unit bridge edges.

    Each bridge merges the two faces at its insertion corners, so the total
    drawing has genus equal to the number of blocks.
    """
    if genus < 1:
        raise InputError("genus-sum needs genus >= 1")
    if size < 3:
        raise InputError("genus-sum needs block size >= 3")
    blocks = [_torus_block(f"g{t}_", size, size) for t in range(genus)]
    vertices = []
    edges = {}
    rotation = {}
    for b in blocks:
        vertices.extend(sorted(b.vertices))
        edges.update(b.edges)
        rotation.update(b.rotation)
    for t in range(genus - 1):
        bid = f"bridge{t}"
        a = f"g{t}_v0_0"
        b = f"g{t + 1}_v0_0"
        edges[bid] = (a, b, 1.0)
        rotation[a] = (Dart(bid, 0),) + rotation[a]
        rotation[b] = (Dart(bid, 1),) + rotation[b]
    return make_graph(f"genussum{genus}x{size}", vertices, edges, rotation)


def bouquet(genus: int) -> EmbeddedGraph:
    """One vertex with 2*genus unit loops, consecutive pairs interleaved.

    The rotation a b a' b' per pair yields a single face, hence genus g.
    """
    if genus < 1:
        raise InputError("bouquet needs genus >= 1")
    edges = {}
    rot: list[Dart] = []
    for t in range(genus):
        a, b = f"a{t}", f"b{t}"
        edges[a] = ("r", "r", 1.0)
        edges[b] = ("r", "r", 1.0)
        rot.extend([Dart(a, 0), Dart(b, 0), Dart(a, 1), Dart(b, 1)])
    return make_graph(f"bouquet{genus}", ["r"], edges, {"r": tuple(rot)})


def path_star(arms: int, arm_length: int) -> EmbeddedGraph:
    """``arms`` unit paths of ``arm_length`` edges sharing the root r (planar)."""
    if arms < 1 or arm_length < 1:
        raise InputError("path-star needs arms >= 1 and arm length >= 1")
    vertices = ["r"]
    edges = {}
    rotation: dict[str, tuple[Dart, ...]] = {}
    root_rot = []
    for a in range(arms):
        prev = "r"
        for j in range(1, arm_length + 1):
            vid = f"a{a}_{j}"
            vertices.append(vid)
            eid = f"e{a}_{j}"
            edges[eid] = (prev, vid, 1.0)
            if prev == "r":
                root_rot.append(Dart(eid, 0))
            else:
                rotation[prev] = rotation[prev] + (Dart(eid, 0),)
            rotation[vid] = (Dart(eid, 1),)
            prev = vid
    rotation["r"] = tuple(root_rot)
    return make_graph(f"pathstar{arms}x{arm_length}", vertices, edges, rotation)


def planar_grid(rows: int, cols: int) -> EmbeddedGraph:
    """Plain rows x cols unit grid with planar rotations (no wraparound)."""
    if rows < 2 or cols < 2:
        raise InputError("planar grid needs rows >= 2 and cols >= 2")
    vertices = [f"v{i}_{j}" for i in range(rows) for j in range(cols)]
    edges = {}
    for i in range(rows):
        for j in range(cols):
            if j + 1 < cols:
                edges[f"h{i}_{j}"] = (f"v{i}_{j}", f"v{i}_{j + 1}", 1.0)
            if i + 1 < rows:
                edges[f"s{i}_{j}"] = (f"v{i}_{j}", f"v{i + 1}_{j}", 1.0)
    rotation = {}
    for i in range(rows):
        for j in range(cols):
            rot = []
            if j + 1 < cols:
                rot.append(Dart(f"h{i}_{j}", 0))
            if i > 0:
                rot.append(Dart(f"s{i - 1}_{j}", 1))
            if j > 0:
                rot.append(Dart(f"h{i}_{j - 1}", 1))
            if i + 1 < rows:
                rot.append(Dart(f"s{i}_{j}", 0))
            rotation[f"v{i}_{j}"] = tuple(rot)
    return make_graph(f"grid{rows}x{cols}", vertices, edges, rotation)


def generate(spec: GeneratorSpec) -> EmbeddedGraph:
    if spec.family == "torus-grid":
        return torus_grid(spec.rows, spec.cols)
    if spec.family == "genus-sum":
        return genus_sum(spec.genus, spec.rows if spec.rows else 3)
    if spec.family == "bouquet":
        return bouquet(spec.genus)
    if spec.family == "path-star":
        return path_star(spec.arms, spec.arm_length)
    raise InputError(f"unknown family {spec.family!r}; known: {', '.join(FAMILIES)}")


# ---------------------------------------------------------------------------
# Path systems for the tree sampler
# ---------------------------------------------------------------------------


def tree_path_system(g: EmbeddedGraph, root: str | None = None) -> PathSystem:
    """Path system the tree sampler embeds.

    Positive-genus drawings use the cut-graph decomposition.  For planar
    inputs there is no cut graph, so the paths run from the root to every
    leaf of the shortest-path tree, covering all vertices.
    """
    if euler_genus(g) >= 1:
        r = root if root is not None else default_root(g)
        return decompose_into_paths(greedy_system_of_loops(g, r), g, r)
    r = root if root is not None else default_root(g)
    return leaf_path_system(g, r)


def leaf_path_system(g: EmbeddedGraph, root: str) -> PathSystem:
    """Shortest paths from the root to every leaf of its shortest-path tree."""
    dist, parent = parent_tree(g, root)
    internal = {pe[0] for pe in parent.values() if pe is not None}
    leaves = sorted(v for v in g.vertices if v not in internal and v != root)
    if not leaves:
        leaves = [root]
    paths = []
    path_edges = []
    for leaf in leaves:
        paths.append(tuple(tree_path(parent, leaf)))
        path_edges.append(tuple(tree_path_edges(parent, leaf)))
    return PathSystem(
        root=root,
        paths=tuple(paths),
        path_edges=tuple(path_edges),
        point_set=frozenset(v for p in paths for v in p),
    )


# ---------------------------------------------------------------------------
# Distortion estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairRecord:
    u: str
    v: str
    d_g: float
    mean_out: float
    max_out: float
    samples: int

    @property
    def stretch(self) -> float:
        return self.mean_out / self.d_g


@dataclass
class DistortionReport:
    """Per-pair expected output distances against the input metric.

    ``distortion`` is the empirical stochastic-embedding distortion: the max
    over pairs of mean output distance divided by input distance.
    ``mean_max_stretch`` is the secondary curve statistic, the mean over
    seeds of the per-seed worst pair.
    """

    mode: str
    pairs: list[PairRecord]
    distortion: float
    min_stretch: float
    mean_max_stretch: float
    seeds: int
    wall_time: float


def select_pairs(
    eligible: list[str], pairs, seed0: int, cap_vertices: int = 400,
    sample_size: int = 100_000,
):
    """Pair universe: every pair up to the size cap, a seeded sample beyond."""
    eligible = sorted(eligible)
    n = len(eligible)
    if pairs == "all" or (pairs == "auto" and n <= cap_vertices):
        return [
            (eligible[i], eligible[j])
            for i in range(n)
            for j in range(i + 1, n)
        ]
    count = sample_size if pairs == "auto" else int(pairs)
    total = n * (n - 1) // 2
    if count >= total:
        return select_pairs(eligible, "all", seed0)
    rng = stream_rng(seed0, STREAM_PAIRS)
    chosen = set()
    while len(chosen) < count:
        i = rand_below(rng, n)
        j = rand_below(rng, n)
        if i == j:
            continue
        chosen.add((min(i, j), max(i, j)))
    return [(eligible[i], eligible[j]) for i, j in sorted(chosen)]


def empirical_distortion(
    g: EmbeddedGraph,
    sampler: str = "tree",
    pairs="auto",
    n_seeds: int = 100,
    seed0: int = 0,
    edge_scale: float = DEFAULT_EDGE_SCALE,
    root: str | None = None,
) -> DistortionReport:
    """Monte-Carlo estimate of the stochastic embedding distortion.

    Runs the chosen sampler for seeds seed0 .. seed0 + n_seeds - 1 and maps
    every selected pair through the sample's vertex map.  Pairs touching
    pipeline-inserted vertices never appear: the universe is the input's own
    vertex set (tree mode restricts it to the embedded point set).
    """
    if n_seeds < 1:
        raise InputError("need at least one seed")
    t0 = time.perf_counter()
    if sampler == "tree":
        ps = tree_path_system(g, root=root)
        prep = prepare_tree_sampler(g, ps)
        eligible = sorted(set(ps.point_set) & set(g.vertices))
        pair_list = select_pairs(eligible, pairs, seed0)
        d_in = _pair_distances(g, pair_list)

        def out_distances(seed):
            tree = sample_prepared_tree(prep, seed, edge_scale=edge_scale)
            idx = sorted(set(u for p in pair_list for u in p))
            mat = tree.distance_matrix([tree.fmap[v] for v in idx])
            pos = {v: i for i, v in enumerate(idx)}
            return np.array([mat[pos[u], pos[v]] for u, v in pair_list])

    elif sampler == "planar":
        from .planarization import planarize_prepare, planarize_sample

        prep = planarize_prepare(g, root=root)
        eligible = sorted(g.vertices)
        pair_list = select_pairs(eligible, pairs, seed0)
        d_in = _pair_distances(g, pair_list)

        def out_distances(seed):
            sample = planarize_sample(prep, seed, edge_scale=edge_scale)
            return _mapped_pair_distances(sample.planar_out, sample.vmap, pair_list)

    else:
        raise InputError(f"unknown sampler {sampler!r}; use tree or planar")

    if not pair_list:
        raise InputError("no pairs to evaluate")
    sums = np.zeros(len(pair_list))
    maxes = np.zeros(len(pair_list))
    min_stretch = math.inf
    per_seed_max = []
    for seed in range(seed0, seed0 + n_seeds):
        d_out = out_distances(seed)
        sums += d_out
        np.maximum(maxes, d_out, out=maxes)
        ratios = d_out / d_in
        min_stretch = min(min_stretch, float(ratios.min()))
        per_seed_max.append(float(ratios.max()))
    means = sums / n_seeds
    records = [
        PairRecord(
            u=u, v=v, d_g=float(d_in[i]), mean_out=float(means[i]),
            max_out=float(maxes[i]), samples=n_seeds,
        )
        for i, (u, v) in enumerate(pair_list)
    ]
    distortion = max(r.stretch for r in records)
    return DistortionReport(
        mode=sampler,
        pairs=records,
        distortion=distortion,
        min_stretch=min_stretch,
        mean_max_stretch=float(np.mean(per_seed_max)),
        seeds=n_seeds,
        wall_time=time.perf_counter() - t0,
    )


def _pair_distances(g: EmbeddedGraph, pair_list) -> np.ndarray:
    adj = g.adjacency()
    cache: dict[str, dict[str, float]] = {}
    out = np.zeros(len(pair_list))
    for i, (u, v) in enumerate(pair_list):
        if u not in cache:
            cache[u] = dijkstra(g, u, adj=adj)
        out[i] = cache[u][v]
    return out


def _mapped_pair_distances(out_graph: EmbeddedGraph, vmap, pair_list) -> np.ndarray:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra as sparse_dijkstra

    verts = sorted(out_graph.vertices)
    index = {v: i for i, v in enumerate(verts)}
    rows, cols, data = [], [], []
    for u, v, w in out_graph.edges.values():
        rows.extend((index[u], index[v]))
        cols.extend((index[v], index[u]))
        data.extend((w, w))
    mat = csr_matrix((data, (rows, cols)), shape=(len(verts), len(verts)))
    sources = sorted({vmap[u] for u, _ in pair_list} | {vmap[v] for _, v in pair_list})
    src_idx = [index[s] for s in sources]
    dmat = sparse_dijkstra(mat, directed=False, indices=src_idx)
    row_of = {s: i for i, s in enumerate(sources)}
    return np.array(
        [dmat[row_of[vmap[u]], index[vmap[v]]] for u, v in pair_list]
    )


# ---------------------------------------------------------------------------
# Brute-force expectation oracle
# ---------------------------------------------------------------------------


def bruteforce_expectation_oracle(
    g: EmbeddedGraph, ps: PathSystem, grid_bits: int,
    edge_scale: float = DEFAULT_EDGE_SCALE,
) -> dict[tuple[str, str], float]:
    """Exact tree-distance expectations on a discretized randomness grid.

    Enumerates every path order and a midpoint grid of the two uniform draws,
    builds each tree deterministically, and averages the tree distances per
    pair of embedded points.  Desk-scale only; guards reject larger inputs.
    """
    if ps.k > 3:
        raise InputError("oracle guard: needs k <= 3 paths")
    if len(ps.point_set) > 40:
        raise InputError("oracle guard: needs at most 40 points")
    if grid_bits > 8:
        raise InputError("oracle guard: needs grid_bits <= 8")
    prep = prepare_tree_sampler(g, ps)
    pm = prep.metrics
    points = sorted(set(ps.point_set) & set(g.vertices))
    pair_list = [
        (points[i], points[j])
        for i in range(len(points))
        for j in range(i + 1, len(points))
    ]
    steps = 1 << grid_bits
    total = np.zeros(len(pair_list))
    count = 0
    for order in itertools.permutations(range(pm.ps.k)):
        for ai in range(steps):
            for bi in range(steps):
                randomness = RandomnessRecord(
                    band_offset=(ai + 0.5) / steps,
                    radius_scale=1.0 + (bi + 0.5) / steps,
                    path_order=order,
                    seed=None,
                )
                hierarchy = build_hierarchy_from_randomness(
                    pm, randomness, scale_factor=prep.scale_factor
                )
                tree = build_tree(hierarchy, edge_scale=edge_scale)
                mat = tree.distance_matrix([tree.fmap[v] for v in points])
                pos = {v: i for i, v in enumerate(points)}
                total += np.array(
                    [mat[pos[u], pos[v]] for u, v in pair_list]
                )
                count += 1
    total /= count * prep.scale_factor
    return {pair: float(total[i]) for i, pair in enumerate(pair_list)}


# ---------------------------------------------------------------------------
# Lipschitz-partition quality estimate
# ---------------------------------------------------------------------------


def estimate_kpr_beta(
    g: EmbeddedGraph, scales, n_seeds: int, seed0: int = 0, pair_cap: int = 4000,
) -> dict[int, float]:
    """Monte-Carlo separation-probability estimate per partition scale.

    For each scale delta the estimate is the max over sampled pairs at
    distance at most delta/2 of Pr[separated] * delta / d(u, v); pairs are
    all edges plus a seeded sample of vertex pairs.
    """
    from .planarization import kpr_hierarchy

    adj = g.adjacency()
    dist = {v: dijkstra(g, v, adj=adj) for v in sorted(g.vertices)}
    verts = sorted(g.vertices)
    base_pairs = {
        (min(u, v), max(u, v)) for u, v, _ in g.edges.values() if u != v
    }
    rng = stream_rng(seed0, STREAM_PAIRS)
    while len(base_pairs) < pair_cap and len(base_pairs) < len(verts) * (len(verts) - 1) // 2:
        i = rand_below(rng, len(verts))
        j = rand_below(rng, len(verts))
        if i != j:
            u, v = verts[i], verts[j]
            if dist[u][v] < math.inf:
                base_pairs.add((min(u, v), max(u, v)))
    pair_list = sorted(base_pairs)

    counts = {s: np.zeros(len(pair_list), dtype=int) for s in scales}
    for seed in range(seed0, seed0 + n_seeds):
        parts = kpr_hierarchy(g, seed, scales=list(scales), ambient_dist=dist)
        for part, s in zip(parts, scales):
            cluster_of = {}
            for i, cl in enumerate(part.clusters):
                for v in cl:
                    cluster_of[v] = i
            for i, (u, v) in enumerate(pair_list):
                if cluster_of[u] != cluster_of[v]:
                    counts[s][i] += 1
    betas = {}
    for s in scales:
        delta = 2.0**s
        best = 0.0
        for i, (u, v) in enumerate(pair_list):
            d = dist[u][v]
            if 0 < d <= delta / 2.0:
                best = max(best, (counts[s][i] / n_seeds) * delta / d)
        betas[s] = best
    return betas


# ---------------------------------------------------------------------------
# CSV reporting
# ---------------------------------------------------------------------------

CSV_HEADER = "u,v,d_g,mean_out,max_out,stretch"


def format_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def report_to_csv(report: DistortionReport) -> str:
    """Fixed-schema CSV with one aggregate footer row.

    The footer keeps the six columns: the pair slots carry the aggregate tag
    and seed count, d_g carries the global minimum stretch, and the stretch
    column carries the empirical distortion.  Wall time stays out of the CSV
    so identical seeds give byte-identical output.
    """
    lines = [CSV_HEADER]
    for r in report.pairs:
        lines.append(
            ",".join(
                (
                    r.u,
                    r.v,
                    format_number(r.d_g),
                    format_number(r.mean_out),
                    format_number(r.max_out),
                    format_number(r.stretch),
                )
            )
        )
    lines.append(
        ",".join(
            (
                "__aggregate__",
                f"seeds={report.seeds}",
                format_number(report.min_stretch),
                "",
                "",
                format_number(report.distortion),
            )
        )
    )
    return "\n".join(lines) + "\n"
