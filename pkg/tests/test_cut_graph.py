import itertools

import pytest

from planarembed.cut_graph import (
    decompose_into_paths,
    default_root,
    greedy_system_of_loops,
    shortest_path_tree,
    verify_disk_certificate,
)
from planarembed.errors import InputError
from planarembed.harness import bouquet, genus_sum, torus_grid
from planarembed.shortest_paths import dijkstra
from planarembed.surface_map import _face_orbits, euler_genus, induced_embedded_subgraph


def loop_length(g, dist, eid):
    u, v, w = g.edges[eid]
    return dist[u] + w + dist[v]


class TestSystemOfLoops:
    def test_torus_grid(self):
        g = torus_grid(3, 3)
        cut = greedy_system_of_loops(g, "v0_0")
        assert len(cut.loops) == 2
        cert = cut.certificate
        assert cert.passed and cert.faces == 1
        assert cert.vertices - cert.edges + cert.faces == 0

    def test_bouquet_loops_are_the_loops(self):
        g = bouquet(1)
        cut = greedy_system_of_loops(g, "r")
        assert sorted(cut.edges) == ["a0", "b0"]
        cert = cut.certificate
        assert (cert.vertices, cert.edges, cert.faces) == (1, 2, 1)
        assert cert.passed

    @pytest.mark.parametrize("genus", [2, 3, 4])
    def test_genus_sum(self, genus):
        g = genus_sum(genus, 3)
        cut = greedy_system_of_loops(g, default_root(g))
        assert len(cut.loops) == 2 * genus
        cert = cut.certificate
        assert cert.passed
        assert cert.vertices - cert.edges + 1 == 2 - 2 * genus

    def test_planar_input_rejected(self):
        from planarembed.harness import path_star

        with pytest.raises(InputError, match="nothing to cut"):
            greedy_system_of_loops(path_star(2, 2), "r")

    def test_loops_sorted_by_length(self):
        g = genus_sum(2, 3)
        cut = greedy_system_of_loops(g, default_root(g))
        lengths = [lp.length for lp in cut.loops]
        assert lengths == sorted(lengths)

    def test_loop_structure(self):
        g = torus_grid(3, 3)
        r = "v1_1"
        cut = greedy_system_of_loops(g, r)
        dist = dijkstra(g, r)
        for lp in cut.loops:
            u, v, w = g.edges[lp.edge]
            assert lp.to_u[0] == r and lp.from_v[-1] == r
            assert lp.to_u[-1] == u and lp.from_v[0] == v
            assert lp.length == pytest.approx(dist[u] + w + dist[v])

    def test_greedy_dual_tree_has_max_weight(self):
        # Brute-force the dual spanning trees of the 3x3 torus: the weight of
        # the discarded loops must be minimal, i.e. the kept dual tree maximal.
        g = torus_grid(3, 3)
        r = "v0_0"
        dist, parent = shortest_path_tree(g, r)
        tree_edges = {pe[1] for pe in parent.values() if pe is not None}
        nontree = sorted(set(g.edges) - tree_edges)
        faces = _face_orbits(g)
        face_of = {}
        for i, f in enumerate(faces):
            for d in f:
                face_of[d] = i
        from planarembed.surface_map import Dart

        def is_spanning_tree(subset):
            parent_arr = list(range(len(faces)))

            def find(x):
                while parent_arr[x] != x:
                    parent_arr[x] = parent_arr[parent_arr[x]]
                    x = parent_arr[x]
                return x

            joined = 0
            for eid in subset:
                a, b = find(face_of[Dart(eid, 0)]), find(face_of[Dart(eid, 1)])
                if a == b:
                    return False
                parent_arr[a] = b
                joined += 1
            return joined == len(faces) - 1

        weights = {e: loop_length(g, dist, e) for e in nontree}
        best = max(
            (
                sum(weights[e] for e in subset)
                for subset in itertools.combinations(nontree, len(faces) - 1)
                if is_spanning_tree(subset)
            ),
        )
        cut = greedy_system_of_loops(g, r)
        kept = sum(weights[e] for e in nontree if e not in cut.edges or e in tree_edges)
        greedy_tree_weight = sum(
            weights[e] for e in nontree if e not in {lp.edge for lp in cut.loops}
        )
        assert greedy_tree_weight == pytest.approx(best)
        assert kept <= best + 1e-9


class TestDiskCertificate:
    def test_single_bouquet_loop_fails(self):
        # The complement of one handle loop is an annulus: the restricted map
        # traces two boundary circuits, so V - E + F = 1 - 1 + 2 = 2 != 0.
        g = bouquet(1)
        cert = verify_disk_certificate(g, ["a0"])
        assert not cert.passed
        assert (cert.vertices, cert.edges, cert.faces) == (1, 1, 2)

    def test_spanning_tree_of_planar_passes(self):
        from planarembed.harness import planar_grid

        g = planar_grid(3, 3)
        _, parent = shortest_path_tree(g, "v0_0")
        tree_edges = {pe[1] for pe in parent.values() if pe is not None}
        cert = verify_disk_certificate(g, tree_edges)
        assert cert.passed
        assert cert.faces == 1

    def test_spanning_tree_on_torus_fails(self):
        g = torus_grid(3, 3)
        _, parent = shortest_path_tree(g, "v0_0")
        tree_edges = {pe[1] for pe in parent.values() if pe is not None}
        cert = verify_disk_certificate(g, tree_edges)
        assert not cert.passed

    def test_empty_subset_fails(self):
        cert = verify_disk_certificate(torus_grid(3, 3), [])
        assert not cert.passed


class TestPathSystem:
    def test_torus_four_paths(self):
        g = torus_grid(3, 3)
        cut = greedy_system_of_loops(g, "v0_0")
        ps = decompose_into_paths(cut, g, "v0_0")
        assert ps.k == 4
        assert ps.root == "v0_0"

    def test_bouquet_degenerates_to_root(self):
        g = bouquet(1)
        cut = greedy_system_of_loops(g, "r")
        ps = decompose_into_paths(cut, g, "r")
        assert ps.paths == (("r",),)
        assert ps.point_set == frozenset({"r"})

    def test_genus2_at_most_eight_paths(self):
        g = genus_sum(2, 3)
        r = default_root(g)
        cut = greedy_system_of_loops(g, r)
        ps = decompose_into_paths(cut, g, r)
        assert ps.k <= 8
        h_vertices = set()
        for eid in cut.edges:
            u, v, _ = g.edges[eid]
            h_vertices.update((u, v))
        assert ps.point_set == frozenset(h_vertices)

    @pytest.mark.parametrize("genus", [1, 2, 3])
    def test_prefix_shortest_exact(self, genus):
        g = genus_sum(genus, 3) if genus > 1 else torus_grid(3, 3)
        r = default_root(g)
        ps = decompose_into_paths(greedy_system_of_loops(g, r), g, r)
        dist = dijkstra(g, r)
        for pv, pe in zip(ps.paths, ps.path_edges):
            total = 0.0
            for i, eid in enumerate(pe):
                total += g.length(eid)
                assert total == dist[pv[i + 1]]

    def test_all_paths_start_at_root(self):
        g = genus_sum(3, 3)
        r = default_root(g)
        ps = decompose_into_paths(greedy_system_of_loops(g, r), g, r)
        assert all(pv[0] == r for pv in ps.paths)


class TestDefaultRoot:
    def test_deterministic(self):
        g = genus_sum(2, 3)
        assert default_root(g) == default_root(g)

    def test_path_center(self):
        from planarembed.harness import path_star

        g = path_star(2, 3)
        assert default_root(g) == "r"
