import heapq
import json
import math
import pathlib

import numpy as np
import pytest

from planarembed.cut_graph import decompose_into_paths, default_root, greedy_system_of_loops
from planarembed.errors import InputError, InternalError
from planarembed.harness import (
    bruteforce_expectation_oracle,
    path_star,
    torus_grid,
    tree_path_system,
)
from planarembed.partitions import (
    PathMetrics,
    RandomnessRecord,
    build_hierarchy,
    build_hierarchy_from_randomness,
    rescale_min_distance,
    subdivide_long_path_edges,
)
from planarembed.surface_map import Dart, make_graph
from planarembed.tree_embedding import (
    base_trees,
    build_tree,
    extend_to_attachments,
    prepare_tree_sampler,
    sample_prepared_tree,
    sample_tree_embedding,
)

DATA = pathlib.Path(__file__).parent / "data"


def star_metrics(arms, length):
    g = path_star(arms, length)
    ps = tree_path_system(g, root="r")
    return g, ps, PathMetrics.compute(g, ps)


def torus_metrics(size=6):
    g = torus_grid(size, size)
    r = default_root(g)
    ps = decompose_into_paths(greedy_system_of_loops(g, r), g, r)
    g1, _ = rescale_min_distance(g)
    g2, ps2 = subdivide_long_path_edges(g1, ps)
    return PathMetrics.compute(g2, ps2)


def fixed_hierarchy(pm, order, band_offset=0.0, radius_scale=1.5):
    rr = RandomnessRecord(
        band_offset=band_offset,
        radius_scale=radius_scale,
        path_order=tuple(order),
        seed=None,
    )
    return build_hierarchy_from_randomness(pm, rr)


def tree_dist(tree, a, b):
    adj = tree.adjacency()
    dist = {n: math.inf for n in tree.nodes}
    dist[a] = 0.0
    heap = [(0.0, a)]
    while heap:
        d, x = heapq.heappop(heap)
        if x == b:
            return d
        if d > dist[x]:
            continue
        for y, w in adj[x]:
            if d + w < dist[y]:
                dist[y] = d + w
                heapq.heappush(heap, (d + w, y))
    return dist[b]


class TestBaseTrees:
    def test_singletons(self):
        _, ps, pm = star_metrics(2, 2)
        h = build_hierarchy(pm, seed=0)
        trees = base_trees(h)
        assert len(trees) == len(ps.point_set)
        for cid, ct in trees.items():
            assert len(ct.stem_nodes) == 1
            assert ct.root == ct.stem_nodes[0]

    def test_corrupt_level0_rejected(self):
        _, _, pm = star_metrics(2, 2)
        h = build_hierarchy(pm, seed=0)
        h.levels[0][0].members = frozenset({"r", "a0_1"})
        with pytest.raises((InputError, InternalError)):
            base_trees(h)


class TestCompositions:
    def test_vertical_reglues_unit_path(self):
        # bands 1,2,3 hold r, a0_1, a0_2; the spine re-glues the exact path
        _, _, pm = star_metrics(1, 2)
        h = fixed_hierarchy(pm, order=(0,))
        t = build_tree(h)
        assert len(t.nodes) == 3 and len(t.edges) == 2
        assert sorted(w for _, _, w in t.edges) == [1.0, 1.0]
        assert tree_dist(t, t.fmap["r"], t.fmap["a0_2"]) == 2.0

    def test_horizontal_edge_length_is_level_power(self):
        # arms split at level 2 (the level-1 radius drops below 1), so the two
        # trunk families join by a single edge of length 2**2
        _, _, pm = star_metrics(2, 1)
        h = fixed_hierarchy(pm, order=(0, 1))
        assert h.top_level == 3
        t = build_tree(h)
        assert tree_dist(t, t.fmap["r"], t.fmap["a0_1"]) == 1.0
        assert tree_dist(t, t.fmap["a0_1"], t.fmap["a1_1"]) == 4.0
        assert tree_dist(t, t.fmap["r"], t.fmap["a1_1"]) == 5.0

    def test_three_families_form_star(self):
        # two non-hub families hang off the hub root by one 2**2 edge each
        _, _, pm = star_metrics(3, 1)
        h = fixed_hierarchy(pm, order=(0, 1, 2))
        t = build_tree(h)
        assert tree_dist(t, t.fmap["a1_1"], t.fmap["a0_1"]) == 4.0
        assert tree_dist(t, t.fmap["a2_1"], t.fmap["a0_1"]) == 4.0
        assert tree_dist(t, t.fmap["a1_1"], t.fmap["a2_1"]) == 8.0

    def test_safe_edge_scale(self):
        _, _, pm = star_metrics(2, 1)
        h = fixed_hierarchy(pm, order=(0, 1))
        t = build_tree(h, edge_scale=4.0)
        assert tree_dist(t, t.fmap["a0_1"], t.fmap["a1_1"]) == 16.0


class TestBuildTree:
    def test_k1_isometry_all_pairs(self):
        g, ps, pm = star_metrics(1, 12)
        xs = sorted(ps.point_set)
        for seed in range(25):
            t = build_tree(build_hierarchy(pm, seed=seed))
            mat = t.distance_matrix([t.fmap[v] for v in xs])
            for i, u in enumerate(xs):
                for j, v in enumerate(xs):
                    assert mat[i, j] == pm.distance(u, v)

    def test_single_point(self):
        from planarembed.harness import bouquet

        g = bouquet(1)
        ps = tree_path_system(g, root="r")
        pm = PathMetrics.compute(g, ps)
        t = build_tree(build_hierarchy(pm, seed=5))
        assert len(t.nodes) == 1 and not t.edges
        assert t.fmap == {"r": 0}

    @pytest.mark.parametrize("seed", range(15))
    def test_treeness_and_injection(self, seed):
        pm = torus_metrics(6)
        t = build_tree(build_hierarchy(pm, seed=seed))
        assert t.is_tree()
        assert len(set(t.fmap.values())) == len(t.fmap)
        assert set(t.fmap) == set(pm.ps.point_set)

    @pytest.mark.parametrize("seed", range(15))
    def test_non_contraction(self, seed):
        pm = torus_metrics(6)
        t = build_tree(build_hierarchy(pm, seed=seed))
        xs = sorted(pm.ps.point_set)
        mat = t.distance_matrix([t.fmap[v] for v in xs])
        dg = pm.dmat
        mask = dg > 0
        assert (mat[mask] >= dg[mask] * (1 - 1e-9)).all()

    @pytest.mark.parametrize("seed", range(10))
    def test_stem_reach_bound(self, seed):
        # distance from every member's image to its cluster stem, per level
        pm = torus_metrics(6)
        h = build_hierarchy(pm, seed=seed)
        t = build_tree(h)
        adj = t.adjacency()
        for level, clusters in enumerate(h.levels):
            for c in clusters:
                stem = t.stems[c.cid]
                dist = {n: math.inf for n in t.nodes}
                heap = []
                for n in stem.nodes:
                    dist[n] = 0.0
                    heap.append((0.0, n))
                heapq.heapify(heap)
                while heap:
                    d, x = heapq.heappop(heap)
                    if d > dist[x]:
                        continue
                    for y, w in adj[x]:
                        if d + w < dist[y]:
                            dist[y] = d + w
                            heapq.heappush(heap, (d + w, y))
                worst = max(dist[t.fmap[v]] for v in c.members)
                assert worst <= 2.0 ** (level + 2) * (1 + 1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_stem_metric_fidelity(self, seed):
        pm = torus_metrics(6)
        h = build_hierarchy(pm, seed=seed)
        t = build_tree(h)
        for record in t.stems.values():
            nodes = record.nodes
            for a, b in zip(nodes, nodes[1:]):
                pa = pm.positions[t.nodes[a].source]
                pb = pm.positions[t.nodes[b].source]
                assert tree_dist(t, a, b) == pytest.approx(pb - pa, rel=1e-12)

    def test_deterministic(self):
        pm = torus_metrics(5)
        t1 = build_tree(build_hierarchy(pm, seed=7))
        t2 = build_tree(build_hierarchy(pm, seed=7))
        assert t1.nodes == t2.nodes
        assert t1.edges == t2.edges
        assert t1.fmap == t2.fmap

    def test_roots_are_stem_min_position(self):
        pm = torus_metrics(5)
        h = build_hierarchy(pm, seed=3)
        t = build_tree(h)
        for cid, record in t.stems.items():
            root = t.roots[cid]
            positions = [pm.positions[t.nodes[n].source] for n in record.nodes]
            assert t.nodes[root].source == t.nodes[record.nodes[0]].source
            assert positions[0] == min(positions)


class TestAttachments:
    def test_identity(self):
        _, _, pm = star_metrics(1, 3)
        t = build_tree(build_hierarchy(pm, seed=0))
        t2 = extend_to_attachments(t, [])
        assert t2.nodes == t.nodes and t2.edges == t.edges

    def test_single_leaf(self):
        _, _, pm = star_metrics(1, 3)
        t = build_tree(build_hierarchy(pm, seed=0))
        t2 = extend_to_attachments(t, [("w", "a0_1", 0.5)])
        assert tree_dist(t2, t2.fmap["w"], t2.fmap["a0_1"]) == 0.5
        assert t2.is_tree()

    def test_two_leaves_same_host(self):
        _, _, pm = star_metrics(1, 3)
        t = build_tree(build_hierarchy(pm, seed=0))
        t2 = extend_to_attachments(t, [("w1", "a0_1", 0.5), ("w2", "a0_1", 0.5)])
        assert tree_dist(t2, t2.fmap["w1"], t2.fmap["w2"]) == 1.0

    def test_unknown_host(self):
        _, _, pm = star_metrics(1, 3)
        t = build_tree(build_hierarchy(pm, seed=0))
        with pytest.raises(InputError):
            extend_to_attachments(t, [("w", "nope", 0.5)])


class TestSampler:
    def test_same_seed_same_tree(self):
        g = path_star(3, 4)
        ps = tree_path_system(g, root="r")
        t1 = sample_tree_embedding(g, ps, 11)
        t2 = sample_tree_embedding(g, ps, 11)
        assert t1.edges == t2.edges and t1.fmap == t2.fmap

    def test_rescaling_round_trips_units(self):
        # all lengths doubled: trees must match the unit instance scaled by 2
        g = path_star(2, 3)
        edges = {e: (u, v, 2.0 * w) for e, (u, v, w) in g.edges.items()}
        g2 = make_graph("scaled", g.vertices, edges, g.rotation)
        ps = tree_path_system(g, root="r")
        ps2 = tree_path_system(g2, root="r")
        for seed in (0, 3, 9):
            t1 = sample_tree_embedding(g, ps, seed)
            t2 = sample_tree_embedding(g2, ps2, seed)
            d1 = tree_dist(t1, t1.fmap["a0_3"], t1.fmap["a1_3"])
            d2 = tree_dist(t2, t2.fmap["a0_3"], t2.fmap["a1_3"])
            assert d2 == pytest.approx(2.0 * d1, rel=1e-9)


class TestOracleRegression:
    def test_pathstar_fixture(self):
        g, ps, _ = star_metrics(2, 3)
        fresh = bruteforce_expectation_oracle(g, ps, 6)
        frozen = json.loads((DATA / "oracle_fixtures.json").read_text())[
            "pathstar2x3_bits6"
        ]
        assert len(frozen) == len(fresh)
        for (u, v), value in fresh.items():
            assert value == pytest.approx(frozen[f"{u}|{v}"], rel=1e-12)

    def test_symmetry_under_arm_swap(self):
        g, ps, _ = star_metrics(2, 3)
        oracle = bruteforce_expectation_oracle(g, ps, 5)

        def swap(v):
            return v.replace("a0_", "a1_") if v.startswith("a0_") else v.replace(
                "a1_", "a0_"
            )

        for (u, v), value in oracle.items():
            su, sv = sorted((swap(u), swap(v)))
            assert value == pytest.approx(oracle[(su, sv)], rel=1e-12)

    def test_k1_oracle_is_exact_metric(self):
        g, ps, pm = star_metrics(1, 4)
        oracle = bruteforce_expectation_oracle(g, ps, 4)
        for (u, v), value in oracle.items():
            assert value == pytest.approx(pm.distance(u, v), rel=1e-12)

    def test_guards(self):
        g, ps, _ = star_metrics(2, 3)
        with pytest.raises(InputError):
            bruteforce_expectation_oracle(g, ps, 9)
        g4 = path_star(4, 2)
        ps4 = tree_path_system(g4, root="r")
        with pytest.raises(InputError):
            bruteforce_expectation_oracle(g4, ps4, 3)
