import pytest

from planarembed.errors import InputError
from planarembed.harness import bouquet, genus_sum, path_star, planar_grid, torus_grid
from planarembed.surface_map import (
    Dart,
    component_genera,
    cut_along,
    emit_graph,
    euler_genus,
    induced_embedded_subgraph,
    is_plane_map,
    make_graph,
    parse_graph,
    trace_faces,
    validate_map,
)


def four_cycle():
    edges = {
        "e1": ("a", "b", 1.0),
        "e2": ("b", "c", 1.0),
        "e3": ("c", "d", 1.0),
        "e4": ("d", "a", 1.0),
    }
    rotation = {
        "a": (Dart("e1", 0), Dart("e4", 1)),
        "b": (Dart("e2", 0), Dart("e1", 1)),
        "c": (Dart("e3", 0), Dart("e2", 1)),
        "d": (Dart("e4", 0), Dart("e3", 1)),
    }
    return make_graph("c4", ["a", "b", "c", "d"], edges, rotation)


def interleaved_bouquet():
    return bouquet(1)


class TestValidate:
    def test_well_formed(self):
        assert validate_map(four_cycle()) == []

    def test_duplicate_dart(self):
        g = four_cycle()
        rotation = dict(g.rotation)
        rotation["a"] = rotation["a"] + (Dart("e1", 1),)
        bad = make_graph("c4", g.vertices, g.edges, rotation)
        diags = validate_map(bad)
        assert len(diags) == 1
        assert "duplicate dart" in diags[0]

    def test_nonpositive_length(self):
        g = four_cycle()
        edges = dict(g.edges)
        edges["e1"] = ("a", "b", 0.0)
        bad = make_graph("c4", g.vertices, edges, g.rotation)
        assert any("nonpositive length" in d for d in validate_map(bad))

    def test_dart_at_wrong_vertex(self):
        g = four_cycle()
        rotation = dict(g.rotation)
        rotation["a"], rotation["b"] = (
            (Dart("e1", 1), Dart("e4", 1)),
            (Dart("e2", 0), Dart("e1", 0)),
        )
        bad = make_graph("c4", g.vertices, g.edges, rotation)
        assert any("incident to" in d for d in validate_map(bad))

    def test_missing_dart(self):
        g = four_cycle()
        rotation = dict(g.rotation)
        rotation["a"] = (Dart("e1", 0),)
        bad = make_graph("c4", g.vertices, g.edges, rotation)
        assert any("missing dart" in d for d in validate_map(bad))


class TestFaces:
    def test_four_cycle_two_faces(self):
        assert len(trace_faces(four_cycle())) == 2

    def test_interleaved_bouquet_single_face(self):
        # Hand trace of the face permutation: a0 -> b1 -> a1 -> b0 -> a0.
        faces = trace_faces(interleaved_bouquet())
        assert len(faces) == 1
        assert len(faces.faces[0]) == 4

    def test_torus_grid_faces(self):
        g = torus_grid(3, 3)
        faces = trace_faces(g)
        assert len(faces) == 9
        assert all(len(f) == 4 for f in faces.faces)
        assert len(g.vertices) - len(g.edges) + len(faces) == 0

    @pytest.mark.parametrize(
        "g",
        [four_cycle(), torus_grid(3, 4), bouquet(2), genus_sum(2, 3), path_star(3, 2)],
        ids=["c4", "torus", "bouquet", "gsum", "star"],
    )
    def test_faces_partition_darts(self, g):
        faces = trace_faces(g)
        darts = [d for f in faces.faces for d in f]
        assert len(darts) == 2 * len(g.edges)
        assert len(set(darts)) == len(darts)

    def test_invalid_map_rejected(self):
        g = four_cycle()
        edges = dict(g.edges)
        edges["e1"] = ("a", "b", -1.0)
        with pytest.raises(InputError):
            trace_faces(make_graph("c4", g.vertices, edges, g.rotation))


class TestGenus:
    def test_planar_cycle(self):
        assert euler_genus(four_cycle()) == 0

    def test_bouquet_torus(self):
        assert euler_genus(interleaved_bouquet()) == 1

    def test_torus_grid(self):
        assert euler_genus(torus_grid(3, 3)) == 1

    def test_disconnected_rejected(self):
        g = make_graph("two", ["a", "b"], {}, {"a": (), "b": ()})
        with pytest.raises(InputError):
            euler_genus(g)

    def test_single_vertex(self):
        assert euler_genus(make_graph("dot", ["a"], {}, {"a": ()})) == 0


class TestInduced:
    def test_full_edge_set_identity(self):
        g = torus_grid(3, 3)
        assert induced_embedded_subgraph(g, g.edges) == g

    def test_empty(self):
        sub = induced_embedded_subgraph(four_cycle(), [])
        assert not sub.vertices and not sub.edges

    def test_one_loop_of_bouquet(self):
        # Restriction of rotation (a0 b0 a1 b1) to loop a is (a0 a1); its face
        # permutation has the two fixed points a0 and a1.
        sub = induced_embedded_subgraph(interleaved_bouquet(), ["a0"])
        assert len(sub.vertices) == 1 and len(sub.edges) == 1
        assert len(trace_faces(sub)) == 2

    def test_unknown_edge(self):
        with pytest.raises(InputError):
            induced_embedded_subgraph(four_cycle(), ["nope"])

    def test_cyclic_order_preserved(self):
        g = torus_grid(3, 3)
        keep = [e for e in g.edges if e.startswith("h")]
        sub = induced_embedded_subgraph(g, keep)
        for v in sub.vertices:
            original = [d for d in g.rotation[v] if d.edge in set(keep)]
            assert list(sub.rotation[v]) == original


class TestCutAlong:
    def test_torus_cut_is_plane(self):
        from planarembed.cut_graph import default_root, greedy_system_of_loops

        g = torus_grid(3, 3)
        cut_edges = greedy_system_of_loops(g, default_root(g)).edges
        result = cut_along(g, cut_edges)
        assert validate_map(result.graph) == []
        assert is_plane_map(result.graph)
        kept = set(g.edges) - set(cut_edges)
        assert set(result.graph.edges) == kept
        assert set(result.origin.values()) <= set(g.vertices)

    def test_planar_cut_stays_plane(self):
        g = four_cycle()
        result = cut_along(g, g.edges)
        assert is_plane_map(result.graph)

    def test_bouquet_cut_open_square(self):
        g = interleaved_bouquet()
        result = cut_along(g, ["a0", "b0"])
        # The cut-open square of the torus: four corner copies of r.
        assert len(result.graph.vertices) == 4
        assert not result.graph.edges
        assert component_genera(result.graph) == [0, 0, 0, 0]
        assert set(result.origin.values()) == {"r"}

    def test_partial_cut_keeps_other_edges(self):
        g = genus_sum(2, 3)
        from planarembed.cut_graph import default_root, greedy_system_of_loops

        cut_edges = greedy_system_of_loops(g, default_root(g)).edges
        result = cut_along(g, cut_edges)
        assert is_plane_map(result.graph)
        for eid, (u, v, w) in result.graph.edges.items():
            ou, ov, ow = g.edges[eid]
            assert result.origin[u] == ou and result.origin[v] == ov
            assert w == ow


class TestTextFormat:
    @pytest.mark.parametrize(
        "g",
        [four_cycle(), torus_grid(3, 3), bouquet(2), genus_sum(2, 3), planar_grid(3, 4)],
        ids=["c4", "torus", "bouquet", "gsum", "grid"],
    )
    def test_round_trip(self, g):
        text = emit_graph(g)
        back = parse_graph(text)
        assert back == g
        assert emit_graph(back) == text

    def test_comments_and_name(self):
        g = parse_graph("# header\ngraph t\nvertex a\nrotation a\n")
        assert g.name == "t" and g.vertices == frozenset({"a"})

    @pytest.mark.parametrize(
        "text,msg",
        [
            ("vertex a\n", "missing graph header"),
            ("graph t\nfrob a\n", "unknown directive"),
            ("graph t\nvertex a\nvertex a\n", "duplicate vertex"),
            ("graph t\nvertex a\n", "missing rotations"),
            ("graph t\nvertex a\nrotation a\nrotation a\n", "duplicate rotation"),
            ("graph t\nvertex a\nrotation a e1.2\n", "malformed dart"),
            ("graph t\nvertex a\nedge e a a x\nrotation a e.0 e.1\n", "bad length"),
            ("graph t\nrotation b\n", "undeclared"),
        ],
    )
    def test_strict_errors(self, text, msg):
        with pytest.raises(InputError, match=msg):
            parse_graph(text)
