"""Combinatorial maps: graphs drawn on orientable surfaces via rotation systems.

A drawing is encoded by a cyclic order of darts (edge ends) around each
vertex.  Faces are the orbits of the face permutation next_at_vertex after
opposite_dart; the Euler formula V - E + F = 2 - 2g then certifies the genus
of the drawing, and cutting along a subgraph is dart-level surgery on the
rotations.  Multi-edges and loops are allowed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import InputError, InternalError


class Dart(NamedTuple):
    """One end of an edge: ``end`` 0 sits at the edge's u, 1 at its v."""

    edge: str
    end: int

    def opposite(self) -> "Dart":
        return Dart(self.edge, 1 - self.end)

    def token(self) -> str:
        return f"{self.edge}.{self.end}"


def parse_dart(token: str) -> Dart:
    base, dot, end = token.rpartition(".")
    if not dot or end not in ("0", "1") or not base:
        raise InputError(f"malformed dart token {token!r}")
    return Dart(base, int(end))


@dataclass(frozen=True)
class EmbeddedGraph:
    """Edge-weighted graph with a rotation system.

    ``edges`` maps edge id to (u, v, length); ``rotation`` maps each vertex to
    the counterclockwise cyclic sequence of darts incident to it.  Instances
    are immutable; all operations build new graphs.
    """

    name: str
    vertices: frozenset[str]
    edges: dict[str, tuple[str, str, float]]
    rotation: dict[str, tuple[Dart, ...]]

    def dart_vertex(self, d: Dart) -> str:
        u, v, _ = self.edges[d.edge]
        return u if d.end == 0 else v

    def length(self, eid: str) -> float:
        return self.edges[eid][2]

    def endpoints(self, eid: str) -> tuple[str, str]:
        u, v, _ = self.edges[eid]
        return u, v

    def darts(self) -> Iterable[Dart]:
        for eid in self.edges:
            yield Dart(eid, 0)
            yield Dart(eid, 1)

    def adjacency(self) -> dict[str, list[tuple[str, str, float]]]:
        """Per-vertex list of (neighbor, edge id, length), loops listed twice."""
        adj: dict[str, list[tuple[str, str, float]]] = {v: [] for v in self.vertices}
        for eid in sorted(self.edges):
            u, v, w = self.edges[eid]
            adj[u].append((v, eid, w))
            adj[v].append((u, eid, w))
        return adj

    def next_in_rotation(self, d: Dart) -> Dart:
        rot = self.rotation[self.dart_vertex(d)]
        i = rot.index(d)
        return rot[(i + 1) % len(rot)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddedGraph):
            return NotImplemented
        if self.vertices != other.vertices or self.edges != other.edges:
            return False
        for v in self.vertices:
            if _canonical_cycle(self.rotation.get(v, ())) != _canonical_cycle(
                other.rotation.get(v, ())
            ):
                return False
        return True

    def __hash__(self):
        return hash((self.name, self.vertices))


@dataclass(frozen=True)
class FaceSet:
    """Orbits of the face permutation; each dart appears in exactly one cycle."""

    faces: tuple[tuple[Dart, ...], ...]

    def __len__(self) -> int:
        return len(self.faces)


@dataclass(frozen=True)
class CutMap:
    """Result of cutting along a subgraph: the cut-open map plus the map from
    vertex copies back to the original vertices."""

    graph: EmbeddedGraph
    origin: dict[str, str]


def _canonical_cycle(rot: tuple[Dart, ...]) -> tuple[Dart, ...]:
    """Rotate a cyclic dart sequence to start at its smallest element."""
    if not rot:
        return rot
    k = min(range(len(rot)), key=lambda i: rot[i])
    return rot[k:] + rot[:k]


def make_graph(name, vertices, edges, rotation) -> EmbeddedGraph:
    """Normalize raw containers into an EmbeddedGraph (no validation)."""
    return EmbeddedGraph(
        name=name,
        vertices=frozenset(vertices),
        edges={e: (u, v, float(w)) for e, (u, v, w) in edges.items()},
        rotation={v: tuple(rot) for v, rot in rotation.items()},
    )


def validate_map(g: EmbeddedGraph) -> list[str]:
    """Check the rotation-system invariants; returns one diagnostic per violation."""
    diags: list[str] = []
    for eid in sorted(g.edges):
        u, v, w = g.edges[eid]
        if u not in g.vertices:
            diags.append(f"edge {eid}: unknown endpoint {u}")
        if v not in g.vertices:
            diags.append(f"edge {eid}: unknown endpoint {v}")
        if not w > 0:
            diags.append(f"edge {eid}: nonpositive length {w}")
    for v in sorted(g.rotation):
        if v not in g.vertices:
            diags.append(f"rotation for unknown vertex {v}")
    occurrences: dict[Dart, list[str]] = {}
    for v in sorted(g.rotation):
        for d in g.rotation[v]:
            if d.edge not in g.edges:
                diags.append(f"rotation at {v}: unknown edge {d.edge}")
                continue
            occurrences.setdefault(d, []).append(v)
    for d in sorted(occurrences):
        places = occurrences[d]
        home = g.dart_vertex(d)
        if len(places) > 1:
            diags.append(f"duplicate dart {d.token()} at {', '.join(places)}")
        elif places[0] != home:
            diags.append(f"dart {d.token()} listed at {places[0]} but incident to {home}")
    for eid in sorted(g.edges):
        if g.edges[eid][0] in g.vertices and g.edges[eid][1] in g.vertices:
            for end in (0, 1):
                d = Dart(eid, end)
                if d not in occurrences:
                    diags.append(f"missing dart {d.token()}")
    return diags


def _require_valid(g: EmbeddedGraph) -> None:
    diags = validate_map(g)
    if diags:
        raise InputError("invalid map: " + "; ".join(diags))


def _face_orbits(g: EmbeddedGraph) -> list[tuple[Dart, ...]]:
    """Orbits of d -> next_in_rotation(opposite(d)), without validation."""
    position: dict[Dart, tuple[str, int]] = {}
    for v, rot in g.rotation.items():
        for i, d in enumerate(rot):
            position[d] = (v, i)

    def face_next(d: Dart) -> Dart:
        opp = d.opposite()
        v, i = position[opp]
        rot = g.rotation[v]
        return rot[(i + 1) % len(rot)]

    faces = []
    visited: set[Dart] = set()
    for start in sorted(position):
        if start in visited:
            continue
        cycle = [start]
        visited.add(start)
        d = face_next(start)
        while d != start:
            cycle.append(d)
            visited.add(d)
            d = face_next(d)
        faces.append(tuple(cycle))
    return faces


def trace_faces(g: EmbeddedGraph) -> FaceSet:
    """Decompose the darts into face cycles of the drawing."""
    _require_valid(g)
    return FaceSet(tuple(_face_orbits(g)))


def components(g: EmbeddedGraph) -> list[frozenset[str]]:
    """Connected components of the underlying graph, sorted by smallest vertex."""
    adj = g.adjacency()
    seen: set[str] = set()
    comps = []
    for start in sorted(g.vertices):
        if start in seen:
            continue
        stack, comp = [start], {start}
        seen.add(start)
        while stack:
            x = stack.pop()
            for y, _, _ in adj[x]:
                if y not in seen:
                    seen.add(y)
                    comp.add(y)
                    stack.append(y)
        comps.append(frozenset(comp))
    return comps


def is_connected(g: EmbeddedGraph) -> bool:
    return len(components(g)) <= 1


def euler_genus(g: EmbeddedGraph) -> int:
    """Genus of the drawing of a connected map via V - E + F = 2 - 2g."""
    _require_valid(g)
    if not g.vertices:
        raise InputError("empty graph has no genus certificate")
    if not is_connected(g):
        raise InputError("euler_genus requires a connected graph")
    v = len(g.vertices)
    e = len(g.edges)
    # A single dartless vertex still bounds one face (the disk around it).
    f = len(_face_orbits(g)) if e else 1
    chi = v - e + f
    if chi % 2 != 0 or chi > 2:
        raise InternalError(f"impossible Euler characteristic {chi} for a valid map")
    return (2 - chi) // 2


def component_genera(g: EmbeddedGraph) -> list[int]:
    """Genus of each connected component's drawing.

    An isolated vertex counts one face (the disk around it), so it is genus 0.
    """
    _require_valid(g)
    comp_of: dict[str, int] = {}
    comps = components(g)
    for i, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = i
    v_count = [len(c) for c in comps]
    e_count = [0] * len(comps)
    for eid, (u, _, _) in g.edges.items():
        e_count[comp_of[u]] += 1
    f_count = [0] * len(comps)
    for face in _face_orbits(g):
        f_count[comp_of[g.dart_vertex(face[0])]] += 1
    genera = []
    for i in range(len(comps)):
        f = f_count[i] if f_count[i] > 0 else 1
        chi = v_count[i] - e_count[i] + f
        if chi % 2 != 0 or chi > 2:
            raise InternalError(f"impossible Euler characteristic {chi} in component")
        genera.append((2 - chi) // 2)
    return genera


def is_plane_map(g: EmbeddedGraph) -> bool:
    """True iff every component of the drawing has genus 0."""
    return all(gen == 0 for gen in component_genera(g))


def induced_embedded_subgraph(g: EmbeddedGraph, edge_subset: Iterable[str]) -> EmbeddedGraph:
    """Subgraph on the given edges and their endpoints, rotations restricted."""
    keep = set(edge_subset)
    unknown = keep - set(g.edges)
    if unknown:
        raise InputError(f"unknown edges: {sorted(unknown)}")
    verts = set()
    for eid in keep:
        u, v, _ = g.edges[eid]
        verts.add(u)
        verts.add(v)
    rotation = {
        v: tuple(d for d in g.rotation.get(v, ()) if d.edge in keep) for v in verts
    }
    return make_graph(
        f"{g.name}#induced",
        verts,
        {e: g.edges[e] for e in keep},
        rotation,
    )


def cut_along(g: EmbeddedGraph, h: Iterable[str]) -> CutMap:
    """Cut the surface along the subgraph on edge set ``h``.

    Darts of cut edges are removed; a vertex incident to c cut darts splits
    into c copies, one per maximal run of surviving darts between consecutive
    cut darts in its rotation (empty runs give isolated corner copies).  The
    result contains every vertex and edge of g not in h and is a plane map
    whenever the complement of h in the surface was a disk.
    """
    _require_valid(g)
    if not is_connected(g):
        raise InputError("cut_along requires a connected graph")
    hset = set(h)
    unknown = hset - set(g.edges)
    if unknown:
        raise InputError(f"unknown edges: {sorted(unknown)}")

    new_rotation: dict[str, tuple[Dart, ...]] = {}
    origin: dict[str, str] = {}
    relocate: dict[Dart, str] = {}
    for v in sorted(g.vertices):
        rot = g.rotation.get(v, ())
        cut_positions = [i for i, d in enumerate(rot) if d.edge in hset]
        if not cut_positions:
            new_rotation[v] = rot
            origin[v] = v
            continue
        n = len(rot)
        for copy_idx in range(len(cut_positions)):
            start = cut_positions[copy_idx]
            stop = cut_positions[(copy_idx + 1) % len(cut_positions)]
            run = []
            i = (start + 1) % n
            while i != stop:
                run.append(rot[i])
                i = (i + 1) % n
            cid = f"{v}|{copy_idx}"
            origin[cid] = v
            new_rotation[cid] = tuple(run)
            for d in run:
                relocate[d] = cid

    kept_edges = {}
    for eid in g.edges:
        if eid in hset:
            continue
        u, v, w = g.edges[eid]
        nu = relocate.get(Dart(eid, 0), u)
        nv = relocate.get(Dart(eid, 1), v)
        kept_edges[eid] = (nu, nv, w)

    out = make_graph(f"{g.name}#cut", new_rotation.keys(), kept_edges, new_rotation)
    diags = validate_map(out)
    if diags:
        raise InternalError("cut surgery produced an invalid map: " + "; ".join(diags))
    return CutMap(graph=out, origin=origin)


# ---------------------------------------------------------------------------
# Text format
#
#   graph <name>
#   vertex <vid>
#   edge <eid> <u> <v> <length>
#   rotation <vid> <dart>...        darts spelled <eid>.0 / <eid>.1, ccw order
#   # comment
#
# Parsing is strict; emission sorts vertices and edges by identifier and
# starts each rotation at its smallest dart, so emit(parse(emit(x))) is
# byte-identical to emit(x).
# ---------------------------------------------------------------------------


def parse_graph(text: str) -> EmbeddedGraph:
    name = None
    vertices: list[str] = []
    edges: dict[str, tuple[str, str, float]] = {}
    rotation: dict[str, tuple[Dart, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "graph":
            if name is not None:
                raise InputError(f"line {lineno}: duplicate graph header")
            if len(parts) != 2:
                raise InputError(f"line {lineno}: graph header takes one name")
            name = parts[1]
        elif kind == "vertex":
            if len(parts) != 2:
                raise InputError(f"line {lineno}: vertex takes one identifier")
            if parts[1] in vertices:
                raise InputError(f"line {lineno}: duplicate vertex {parts[1]}")
            vertices.append(parts[1])
        elif kind == "edge":
            if len(parts) != 5:
                raise InputError(f"line {lineno}: edge takes id, endpoints, length")
            eid, u, v, w = parts[1:]
            if eid in edges:
                raise InputError(f"line {lineno}: duplicate edge {eid}")
            try:
                length = float(w)
            except ValueError:
                raise InputError(f"line {lineno}: bad length {w!r}") from None
            edges[eid] = (u, v, length)
        elif kind == "rotation":
            if len(parts) < 2:
                raise InputError(f"line {lineno}: rotation needs a vertex")
            vid = parts[1]
            if vid in rotation:
                raise InputError(f"line {lineno}: duplicate rotation for {vid}")
            rotation[vid] = tuple(parse_dart(t) for t in parts[2:])
        else:
            raise InputError(f"line {lineno}: unknown directive {kind!r}")
    if name is None:
        raise InputError("missing graph header")
    missing = set(vertices) - set(rotation)
    if missing:
        raise InputError(f"missing rotations for: {sorted(missing)}")
    extra = set(rotation) - set(vertices)
    if extra:
        raise InputError(f"rotations for undeclared vertices: {sorted(extra)}")
    return make_graph(name, vertices, edges, rotation)


def format_length(x: float) -> str:
    """Shortest decimal that round-trips the float; integers print bare."""
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def emit_graph(g: EmbeddedGraph) -> str:
    lines = [f"graph {g.name}"]
    for v in sorted(g.vertices):
        lines.append(f"vertex {v}")
    for eid in sorted(g.edges):
        u, v, w = g.edges[eid]
        lines.append(f"edge {eid} {u} {v} {format_length(w)}")
    for v in sorted(g.vertices):
        rot = _canonical_cycle(g.rotation.get(v, ()))
        tokens = " ".join(d.token() for d in rot)
        lines.append(f"rotation {v} {tokens}".rstrip())
    return "\n".join(lines) + "\n"


def load_graph(path) -> EmbeddedGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def save_graph(g: EmbeddedGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_graph(g))
