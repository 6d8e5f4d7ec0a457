"""Planarization pipeline: peel the cut graph off and replace it by a tree.

Boundary edges leaving the cut-graph vertex set X are split half a unit from
the X side; the new midpoints together with X form Y.  Exact pairwise
distances on Y (the implicit clique) are what the sampled tree must preserve;
the rest of the graph (the residue) is drawn inside a disk by cutting the
surface along the cut graph, partitioned at every scale by randomly shifted
band chopping, and every vertex is routed to a portal midpoint chosen per
partition cluster.  The final sample is the tree with one fresh copy of each
portal's residue component glued at the portal's image, which is planar by
construction and never contracts distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cut_graph import (
    decompose_into_paths,
    default_root,
    greedy_system_of_loops,
    verify_disk_certificate,
)
from .errors import InputError, InternalError, StageError
from .partitions import (
    PathMetrics,
    build_hierarchy,
    rescale_min_distance,
    subdivide_long_path_edges,
)
from .rng import STREAM_KPR, stream_rng, uniform53
from .shortest_paths import REL_TOL, dijkstra, dijkstra_adj, voronoi_owners
from .surface_map import (
    Dart,
    EmbeddedGraph,
    cut_along,
    euler_genus,
    is_plane_map,
    make_graph,
    validate_map,
)
from .tree_embedding import (
    DEFAULT_EDGE_SCALE,
    EmbedTree,
    build_tree,
    extend_to_attachments,
)


@dataclass
class PlanarInstance:
    """Deterministic part of the pipeline, reusable across seeds."""

    g2: EmbeddedGraph
    x_set: frozenset[str]
    y_set: frozenset[str]
    cut_edges: frozenset[str]
    host_of: dict[str, tuple[str, str]]  # midpoint -> (X endpoint, outer endpoint)
    clique: dict[str, dict[str, float]]  # exact pairwise distances on Y
    residue: EmbeddedGraph | None = None
    residue_origin: dict[str, str] | None = None
    residue_dist: dict[str, dict[str, float]] | None = None
    component_of: dict[str, int] | None = None
    components: list[frozenset[str]] | None = None


@dataclass(frozen=True)
class LipschitzPartition:
    delta: float
    clusters: tuple[frozenset[str], ...]
    offsets: tuple[float, ...]
    max_weak_diameter: float
    cut_edges: int


@dataclass(frozen=True)
class PortalAssignment:
    portal_of: dict[str, str]
    scale_used: dict[str, int]


@dataclass(frozen=True)
class Provenance:
    seed: int
    edge_scale: float
    scale_factor: float
    identity: bool
    events: tuple[str, ...]
    kpr_stats: tuple[tuple[float, int, float, int], ...]  # delta, clusters, diam/delta, cut


@dataclass
class PlanarizationSample:
    planar_out: EmbeddedGraph
    vmap: dict[str, str]
    tree: EmbedTree | None
    provenance: Provenance


def subdivide_boundary_edges(g: EmbeddedGraph, x_set) -> PlanarInstance:
    """Split every edge from X to the outside half a unit from the X side.

    Requires the minimum distance rescaled to 1, so every boundary edge has
    length at least 1 and the outer part stays positive.  The midpoint w gets
    degree 2 and inherits the edge's slots in both endpoint rotations.
    """
    x_set = frozenset(x_set)
    unknown = x_set - g.vertices
    if unknown:
        raise InputError(f"unknown cut-graph vertices: {sorted(unknown)}")
    vertices = set(g.vertices)
    edges = dict(g.edges)
    rotation = {v: list(rot) for v, rot in g.rotation.items()}
    host_of: dict[str, tuple[str, str]] = {}
    for eid in sorted(g.edges):
        u, v, w = g.edges[eid]
        if (u in x_set) == (v in x_set):
            continue
        if v in x_set:
            u, v = v, u
            flip = True
        else:
            flip = False
        if w < 1.0 - REL_TOL:
            raise InternalError(f"boundary edge {eid} shorter than the minimum distance")
        mid = f"{eid}%w"
        e_in = f"{eid}%a"  # X side, length 1/2
        e_out = f"{eid}%b"
        del edges[eid]
        edges[e_in] = (u, mid, 0.5)
        edges[e_out] = (mid, v, w - 0.5)
        vertices.add(mid)
        rotation[mid] = [Dart(e_in, 1), Dart(e_out, 0)]
        old_u = Dart(eid, 1 if flip else 0)
        old_v = Dart(eid, 0 if flip else 1)
        rotation[u][rotation[u].index(old_u)] = Dart(e_in, 0)
        rotation[v][rotation[v].index(old_v)] = Dart(e_out, 1)
        host_of[mid] = (u, v)

    g2 = make_graph(g.name, vertices, edges, {v: tuple(r) for v, r in rotation.items()})
    y_set = frozenset(x_set | set(host_of))
    return PlanarInstance(
        g2=g2,
        x_set=x_set,
        y_set=y_set,
        cut_edges=frozenset(),
        host_of=host_of,
        clique={},
    )


def build_clique_and_residue(inst: PlanarInstance, cut_edges) -> PlanarInstance:
    """Fill in the exact Y distance table and the cut-open residue drawing."""
    cut_edges = frozenset(cut_edges)
    for eid in cut_edges:
        u, v, _ = inst.g2.edges[eid]
        if u not in inst.x_set or v not in inst.x_set:
            raise InputError(f"cut edge {eid} leaves the cut-graph vertex set")
    cert = verify_disk_certificate(inst.g2, cut_edges)
    if not cert.passed:
        raise InputError("cut edges do not satisfy the disk certificate")

    adj = inst.g2.adjacency()
    clique = {
        y: dijkstra(inst.g2, y, adj=adj) for y in sorted(inst.y_set)
    }

    cut = cut_along(inst.g2, cut_edges)
    in_y = inst.y_set
    kept = {}
    for eid, (cu, cv, w) in cut.graph.edges.items():
        ou, ov, _ = inst.g2.edges[eid]
        if ou in in_y and ov in in_y:
            continue
        kept[eid] = (cu, cv, w)
    rotation = {
        v: tuple(d for d in cut.graph.rotation[v] if d.edge in kept)
        for v in cut.graph.vertices
    }
    residue = make_graph(f"{inst.g2.name}#residue", cut.graph.vertices, kept, rotation)
    diags = validate_map(residue)
    if diags:
        raise InternalError("residue map invalid: " + "; ".join(diags))
    if not is_plane_map(residue):
        raise InternalError("residue drawing is not plane; cut surgery bug")
    for v in residue.vertices:
        if cut.origin[v] in inst.x_set and rotation[v]:
            raise InternalError(f"cut-graph copy {v} kept edges in the residue")

    radj = residue.adjacency()
    rdist = {v: dijkstra_adj(_plain_adj(radj), v) for v in sorted(residue.vertices)}
    comps: list[frozenset[str]] = []
    comp_of: dict[str, int] = {}
    seen: set[str] = set()
    for v in sorted(residue.vertices):
        if v in seen:
            continue
        comp = frozenset(u for u in residue.vertices if rdist[v][u] < math.inf)
        for u in comp:
            comp_of[u] = len(comps)
        seen |= comp
        comps.append(comp)

    inst.cut_edges = cut_edges
    inst.clique = clique
    inst.residue = residue
    inst.residue_origin = dict(cut.origin)
    inst.residue_dist = rdist
    inst.component_of = comp_of
    inst.components = comps
    return inst


def _plain_adj(adj):
    return {v: [(u, w) for u, _, w in lst] for v, lst in adj.items()}


def kpr_hierarchy(
    graph: EmbeddedGraph,
    seed: int,
    scales: list[int] | None = None,
    ambient_dist: dict[str, dict[str, float]] | None = None,
) -> list[LipschitzPartition]:
    """Random bounded-diameter partitions of a plane map at powers of two.

    Per scale delta: three rounds of band chopping at width delta/6 from the
    lexicographically least vertex of each cluster, each with a fresh uniform
    offset; clusters are split into connected components after every round,
    and any cluster whose weak diameter still exceeds 2*delta is re-split by
    greedy ball carving at radius delta/4.
    """
    if not is_plane_map(graph):
        raise InputError("Lipschitz partitions expect a plane map")
    adj = _plain_adj(graph.adjacency())
    if ambient_dist is None:
        ambient_dist = {v: dijkstra_adj(adj, v) for v in sorted(graph.vertices)}
    if scales is None:
        finite = [
            d
            for v in graph.vertices
            for d in ambient_dist[v].values()
            if d < math.inf and d > 0
        ]
        top = max(finite) if finite else 1.0
        scales = list(range(1, 3 + max(0, math.ceil(math.log2(top)))))
    rng = stream_rng(seed, STREAM_KPR)

    base = _component_clusters(graph, adj)
    out = []
    for scale in scales:
        delta = 2.0**scale
        width = delta / 6.0
        clusters = list(base)
        offsets: list[float] = []
        cuts = 0
        for _ in range(3):
            nxt: list[frozenset[str]] = []
            for cluster in sorted(clusters, key=min):
                root = min(cluster)
                offset = uniform53(rng) * width
                offsets.append(offset)
                dist = dijkstra_adj(adj, root, members=cluster)
                bands = chop_bands(dist, offset, width)
                for t in sorted(bands):
                    nxt.extend(_split_components(bands[t], adj))
            clusters = nxt
        repaired: list[frozenset[str]] = []
        max_ratio = 0.0
        for cluster in sorted(clusters, key=min):
            for piece in _carver(cluster, delta, ambient_dist):
                diam = _weak_diameter(piece, ambient_dist)
                max_ratio = max(max_ratio, diam / delta)
                repaired.append(piece)
        cluster_of = {}
        for i, cl in enumerate(repaired):
            for v in cl:
                cluster_of[v] = i
        for u, v, _ in graph.edges.values():
            if cluster_of[u] != cluster_of[v]:
                cuts += 1
        out.append(
            LipschitzPartition(
                delta=delta,
                clusters=tuple(repaired),
                offsets=tuple(offsets),
                max_weak_diameter=max_ratio * delta,
                cut_edges=cuts,
            )
        )
    return out


def chop_bands(dist: dict[str, float], offset: float, width: float) -> dict[int, set[str]]:
    """Group vertices into half-open annuli of the given width.

    Band t holds v with t*width <= dist[v] - offset < (t+1)*width, so two
    vertices on a shortest path at distance d apart are separated with
    probability min(1, d/width) over a uniform offset.
    """
    bands: dict[int, set[str]] = {}
    for v, d in dist.items():
        t = int(math.floor((d - offset) / width))
        bands.setdefault(t, set()).add(v)
    return bands


def _component_clusters(graph: EmbeddedGraph, adj) -> list[frozenset[str]]:
    out = []
    seen: set[str] = set()
    for start in sorted(graph.vertices):
        if start in seen:
            continue
        stack, comp = [start], {start}
        seen.add(start)
        while stack:
            x = stack.pop()
            for y, _ in adj[x]:
                if y not in seen:
                    seen.add(y)
                    comp.add(y)
                    stack.append(y)
        out.append(frozenset(comp))
    return out


def _split_components(members: set[str], adj) -> list[frozenset[str]]:
    out = []
    left = set(members)
    while left:
        start = min(left)
        stack, comp = [start], {start}
        left.discard(start)
        while stack:
            x = stack.pop()
            for y, _ in adj[x]:
                if y in left:
                    left.discard(y)
                    comp.add(y)
                    stack.append(y)
        out.append(frozenset(comp))
    return out


def _weak_diameter(cluster, ambient_dist) -> float:
    if len(cluster) < 2:
        return 0.0
    return max(
        ambient_dist[u][v] for u in cluster for v in cluster if u < v
    )


def _carver(cluster, delta, ambient_dist):
    if _weak_diameter(cluster, ambient_dist) <= 2.0 * delta + REL_TOL:
        return [cluster]
    pieces = []
    left = set(cluster)
    while left:
        c = min(left)
        ball = frozenset(u for u in left if ambient_dist[c][u] <= delta / 4.0)
        pieces.append(ball)
        left -= ball
    return pieces


def assign_portals(
    inst: PlanarInstance, partitions: list[LipschitzPartition]
) -> PortalAssignment:
    """Route every interior residue vertex to a midpoint portal.

    The portal of v is the lexicographically least midpoint at minimum
    residue distance from v's cluster at scale floor(log2 d(v, W)) + 2, so
    vertices sharing that cluster share a portal.
    """
    residue = inst.residue
    w_sites = sorted(
        v for v in residue.vertices if inst.residue_origin[v] in inst.y_set
        and inst.residue_origin[v] not in inst.x_set
    )
    interior = sorted(
        v
        for v in residue.vertices
        if inst.residue_origin[v] not in inst.y_set
    )
    if not interior:
        return PortalAssignment(portal_of={}, scale_used={})
    if not w_sites:
        raise InputError("dangling residue component: no reachable midpoint")
    dist_w, owner_w = voronoi_owners(residue, w_sites)
    by_scale = {round(math.log2(p.delta)): p for p in partitions}
    max_scale = max(by_scale)
    min_scale = min(by_scale)

    cluster_at: dict[int, dict[str, int]] = {}
    for s, part in by_scale.items():
        lookup = {}
        for i, cl in enumerate(part.clusters):
            for v in cl:
                lookup[v] = i
        cluster_at[s] = lookup

    portal_cache: dict[tuple[int, int], str] = {}
    portal_of: dict[str, str] = {}
    scale_used: dict[str, int] = {}
    for v in interior:
        d = dist_w.get(v, math.inf)
        if d == math.inf:
            raise InputError(f"dangling residue component at {v}")
        scale = int(math.floor(math.log2(d))) + 2 if d > 0 else min_scale
        scale = min(max(scale, min_scale), max_scale)
        scale_used[v] = scale
        ci = cluster_at[scale][v]
        key = (scale, ci)
        if key not in portal_cache:
            members = by_scale[scale].clusters[ci]
            best = min(
                (m for m in members if m in dist_w and dist_w[m] < math.inf),
                key=lambda m: (dist_w[m], w_sites.index(owner_w[m]), m),
                default=None,
            )
            if best is None:
                raise InputError(f"dangling residue component at {v}")
            portal_cache[key] = owner_w[best]
        portal_of[v] = portal_cache[key]
        if inst.component_of[portal_of[v]] != inst.component_of[v]:
            raise InternalError("portal landed outside the vertex's component")
    return PortalAssignment(portal_of=portal_of, scale_used=scale_used)


def assemble_one_sum(
    tree: EmbedTree,
    inst: PlanarInstance,
    portals: PortalAssignment,
    provenance: Provenance,
) -> PlanarizationSample:
    """Glue one fresh copy of each used portal's residue component onto the tree.

    The output is a plane map: the tree takes star rotations in neighbor-id
    order, pieces keep their cut-disk rotations, and each piece's single
    portal dart is spliced after the tree darts at the shared node.
    """
    for w in portals.portal_of.values():
        if w not in tree.fmap:
            raise InputError(f"portal {w} has no image in the tree")

    vertices: set[str] = set()
    edges: dict[str, tuple[str, str, float]] = {}
    rotation: dict[str, list[Dart]] = {}

    tid = {n: f"t{n}" for n in tree.nodes}
    for n in tree.nodes:
        vertices.add(tid[n])
        rotation[tid[n]] = []
    incident: dict[int, list[tuple[int, str]]] = {n: [] for n in tree.nodes}
    for i, (a, b, w) in enumerate(sorted(tree.edges)):
        eid = f"te{i}"
        edges[eid] = (tid[a], tid[b], w)
        incident[a].append((b, eid))
        incident[b].append((a, eid))
    for n in tree.nodes:
        for other, eid in sorted(incident[n]):
            end = 0 if edges[eid][0] == tid[n] else 1
            rotation[tid[n]].append(Dart(eid, end))

    vmap: dict[str, str] = {}
    for v, node in tree.fmap.items():
        vmap[v] = tid[node]

    used = sorted(set(portals.portal_of.values()))
    residue = inst.residue
    for pidx, w in enumerate(used):
        comp = inst.components[inst.component_of[w]]
        name = {v: (tid[tree.fmap[w]] if v == w else f"p{pidx}.{v}") for v in comp}
        for v in comp:
            if v != w:
                vertices.add(name[v])
                rotation[name[v]] = []
        piece_edges = sorted(
            eid
            for eid, (u, v, _) in residue.edges.items()
            if u in comp and v in comp
        )
        emap = {eid: f"pe{pidx}.{eid}" for eid in piece_edges}
        for eid in piece_edges:
            u, v, wt = residue.edges[eid]
            edges[emap[eid]] = (name[u], name[v], wt)
        for v in comp:
            for d in residue.rotation.get(v, ()):
                if d.edge in emap:
                    rotation[name[v]].append(Dart(emap[d.edge], d.end))

    for v in sorted(portals.portal_of):
        orig = inst.residue_origin[v]
        pidx = used.index(portals.portal_of[v])
        vmap[orig] = f"p{pidx}.{v}"

    out = make_graph(
        f"{inst.g2.name}#planar",
        vertices,
        edges,
        {v: tuple(r) for v, r in rotation.items()},
    )
    diags = validate_map(out)
    if diags:
        raise InternalError("assembled map invalid: " + "; ".join(diags))
    if euler_genus(out) != 0:
        raise InternalError("assembled map failed the plane certificate")
    return PlanarizationSample(planar_out=out, vmap=vmap, tree=tree, provenance=provenance)


def dilation(g: EmbeddedGraph, members) -> float:
    """Worst ratio of induced-subgraph distance to ambient distance over pairs."""
    members = sorted(set(members))
    if len(members) < 2:
        raise InputError("dilation needs at least two vertices")
    adj = _plain_adj(g.adjacency())
    induced = {
        v: [(u, w) for u, w in adj[v] if u in set(members)] for v in members
    }
    worst = 0.0
    for u in members:
        full = dijkstra_adj(adj, u)
        part = dijkstra_adj(induced, u, members=set(members))
        for v in members:
            if v == u:
                continue
            if part[v] == math.inf:
                return math.inf
            worst = max(worst, part[v] / full[v])
    return worst


def dilation_of_y(inst: PlanarInstance) -> float:
    """Dilation of Y inside the clique-augmented graph (exactly 1 by design)."""
    ys = sorted(inst.y_set)
    if len(ys) < 2:
        return 1.0
    base = _plain_adj(inst.g2.adjacency())
    induced = {
        y: [(u, w) for u, w in base[y] if u in inst.y_set] for y in ys
    }
    for i, u in enumerate(ys):
        for v in ys[i + 1 :]:
            d = inst.clique[u][v]
            induced[u].append((v, d))
            induced[v].append((u, d))
    worst = 0.0
    for u in ys:
        dist = dijkstra_adj(induced, u, members=set(ys))
        for v in ys:
            if v != u:
                worst = max(worst, dist[v] / inst.clique[u][v])
    return worst


@dataclass
class PreparedPipeline:
    """Everything seed-independent about one planarization instance."""

    g_input: EmbeddedGraph
    genus: int
    scale_factor: float
    root: str
    inst: PlanarInstance | None
    metrics: PathMetrics | None
    attachments: list[tuple[str, str, float]]
    kpr_scales: list[int]


def planarize_prepare(g: EmbeddedGraph, root: str | None = None) -> PreparedPipeline:
    """Run the deterministic stages once; seeds then sample cheaply."""

    def stage(name):
        class _Ctx:
            def __enter__(self):
                return None

            def __exit__(self, et, ev, tb):
                if ev is not None and not isinstance(ev, StageError):
                    raise StageError(name, ev) from ev
                return False

        return _Ctx()

    with stage("validate"):
        diags = validate_map(g)
        if diags:
            raise InputError("invalid map: " + "; ".join(diags))
        genus = euler_genus(g)
    if genus == 0:
        return PreparedPipeline(
            g_input=g, genus=0, scale_factor=1.0, root=min(g.vertices),
            inst=None, metrics=None, attachments=[], kpr_scales=[],
        )
    with stage("rescale"):
        g1, factor = rescale_min_distance(g)
    with stage("cutgraph"):
        r = root if root is not None else default_root(g1)
        cut = greedy_system_of_loops(g1, r)
    with stage("paths"):
        ps = decompose_into_paths(cut, g1, r)
    with stage("subdivide"):
        g1s, ps2 = subdivide_long_path_edges(g1, ps)
        cut_edges = expand_edges(cut.edges, g1s)
    with stage("boundary"):
        inst = subdivide_boundary_edges(g1s, ps2.point_set)
    with stage("clique_residue"):
        inst = build_clique_and_residue(inst, cut_edges)
    with stage("metrics"):
        metrics = PathMetrics.compute(inst.g2, ps2)
        attachments = [
            (w, inst.host_of[w][0], 0.5) for w in sorted(inst.host_of)
        ]
        finite = [
            d
            for v in inst.residue.vertices
            for d in inst.residue_dist[v].values()
            if 0 < d < math.inf
        ]
        top = max(finite) if finite else 1.0
        kpr_scales = list(range(1, 3 + max(0, math.ceil(math.log2(top)))))
    return PreparedPipeline(
        g_input=g, genus=genus, scale_factor=factor, root=r,
        inst=inst, metrics=metrics, attachments=attachments,
        kpr_scales=kpr_scales,
    )


def expand_edges(edge_ids, g_after) -> frozenset[str]:
    """Map edge ids through unit subdivision (children are named <eid>@<n>)."""
    wanted = set(edge_ids)
    out = set()
    for eid in g_after.edges:
        base = eid.rsplit("@", 1)[0] if "@" in eid else eid
        if eid in wanted or base in wanted:
            out.add(eid)
    return frozenset(out)


def planarize_sample(
    prep: PreparedPipeline, seed: int, edge_scale: float = DEFAULT_EDGE_SCALE
) -> PlanarizationSample:
    """Draw one planar graph from a prepared pipeline."""
    if prep.genus == 0:
        prov = Provenance(
            seed=seed, edge_scale=edge_scale, scale_factor=1.0,
            identity=True, events=(), kpr_stats=(),
        )
        return PlanarizationSample(
            planar_out=prep.g_input,
            vmap={v: v for v in prep.g_input.vertices},
            tree=None,
            provenance=prov,
        )
    try:
        hierarchy = build_hierarchy(
            prep.metrics, seed=seed, scale_factor=prep.scale_factor
        )
        tree = build_tree(hierarchy, edge_scale=edge_scale)
        tree = extend_to_attachments(tree, prep.attachments)
    except Exception as e:  # pragma: no cover - wrapped for stage context
        raise StageError("tree", e) from e
    try:
        parts = kpr_hierarchy(
            prep.inst.residue, seed, scales=prep.kpr_scales,
            ambient_dist=prep.inst.residue_dist,
        )
        portals = assign_portals(prep.inst, parts)
    except StageError:
        raise
    except Exception as e:
        raise StageError("portals", e) from e
    prov = Provenance(
        seed=seed,
        edge_scale=edge_scale,
        scale_factor=prep.scale_factor,
        identity=False,
        events=tree.events,
        kpr_stats=tuple(
            (p.delta, len(p.clusters), p.max_weak_diameter / p.delta, p.cut_edges)
            for p in parts
        ),
    )
    try:
        sample = assemble_one_sum(tree, prep.inst, portals, prov)
    except StageError:
        raise
    except Exception as e:
        raise StageError("assemble", e) from e
    if prep.scale_factor != 1.0:
        sample.planar_out = _unscale(sample.planar_out, prep.scale_factor)
    return sample


def _unscale(g: EmbeddedGraph, factor: float) -> EmbeddedGraph:
    edges = {e: (u, v, w / factor) for e, (u, v, w) in g.edges.items()}
    return make_graph(g.name, g.vertices, edges, g.rotation)


def planarize(
    g: EmbeddedGraph, seed: int, edge_scale: float = DEFAULT_EDGE_SCALE,
    root: str | None = None,
) -> PlanarizationSample:
    """Sample one random planar graph stochastically embedding the input."""
    return planarize_sample(planarize_prepare(g, root=root), seed, edge_scale=edge_scale)
