"""Vertex splitting, n-splits and edge subdivision as cell-complex transforms.

Splits are stated in the picture where they add a face: a *cell split*
partitions the faces of one cell into connected parts and inserts a new face
along each interface.  In the dual complex this is a vertex split.  A
*vertex split* of the complex itself (edge bipartition at a vertex) is run as
a cell split of the dual complex; see :func:`split_vertex`.

All public functions are pure: the input complex is never modified.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .cell_complex import (
    CellComplex3,
    Edge,
    Pos,
    SyndromeGraph,
    canonical_edge,
    canonical_walk,
    dual_complex,
    lift_offsets,
    reduce_pos,
    vadd,
    vscale,
    vsub,
    walk_from_cycle,
)

SPLIT_OFFSET = Fraction(1, 8)


class InvalidSplitError(ValueError):
    """A split instruction does not describe a valid split of its target."""


@dataclass(frozen=True)
class SplitInstruction:
    """Split of one cell: a partition of its faces into ``n >= 2`` parts.

    With two parts a single face is inserted along the interface; with
    ``n >= 3`` parts the cell becomes ``n`` peripheral cells around a central
    cell bounded only by the ``n`` new faces.
    """

    cell: int
    parts: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(frozenset(int(f) for f in p) for p in self.parts))

    @property
    def arity(self) -> int:
        return len(self.parts)

    def to_json(self) -> dict:
        return {"type": "split_cell", "cell": self.cell, "parts": [sorted(p) for p in self.parts]}


@dataclass(frozen=True)
class VertexSplit:
    """Split of one vertex: a partition of its incident edges.

    Equivalent to a :class:`SplitInstruction` on the dual complex, whose cell
    ``vertex`` has the dual faces ``edge ids`` as boundary.
    """

    vertex: int
    parts: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(frozenset(int(e) for e in p) for p in self.parts))

    def as_cell_split(self) -> SplitInstruction:
        return SplitInstruction(self.vertex, self.parts)

    def to_json(self) -> dict:
        return {"type": "split_vertex", "vertex": self.vertex, "parts": [sorted(p) for p in self.parts]}


@dataclass(frozen=True)
class Subdivision:
    """Divide one edge into ``segments`` pieces by inserting degree-2 vertices."""

    edge: int
    segments: int = 2

    def __post_init__(self):
        if self.segments < 2:
            raise ValueError("an edge subdivision needs at least 2 segments")

    def to_json(self) -> dict:
        return {"type": "subdivide_edge", "edge": self.edge, "segments": self.segments}


@dataclass(frozen=True)
class FaceDuplication:
    """Replace one face by ``copies`` parallel faces with bubble cells between them."""

    face: int
    copies: int = 2

    def __post_init__(self):
        if self.copies < 2:
            raise ValueError("a face duplication needs at least 2 copies")

    def to_json(self) -> dict:
        return {"type": "duplicate_face", "face": self.face, "copies": self.copies}


Instruction = SplitInstruction | VertexSplit | Subdivision | FaceDuplication


def instruction_from_json(obj: dict) -> Instruction:
    kind = obj.get("type")
    if kind == "split_cell":
        return SplitInstruction(int(obj["cell"]), tuple(frozenset(p) for p in obj["parts"]))
    if kind == "split_vertex":
        return VertexSplit(int(obj["vertex"]), tuple(frozenset(p) for p in obj["parts"]))
    if kind == "subdivide_edge":
        return Subdivision(int(obj["edge"]), int(obj.get("segments", 2)))
    if kind == "duplicate_face":
        return FaceDuplication(int(obj["face"]), int(obj.get("copies", 2)))
    raise ValueError(f"unknown instruction type {kind!r}")


class ComplexBuilder:
    """Mutable working copy of a complex used to apply batches of transforms."""

    def __init__(self, cx: CellComplex3):
        self.L = cx.L
        self.vertices: list[Pos] = list(cx.vertices)
        self.edges: list[Edge] = list(cx.edges)
        self.faces: list[list[tuple[int, int]]] = [list(w) for w in cx.faces]
        self.cells: list[set[int]] = [set(c) for c in cx.cells]
        self.cell_positions: list[Pos] = list(cx.cell_positions)
        self.edge_faces: list[set[int]] = [set(fs) for fs in cx.edge_faces]
        self.face_cells: list[set[int]] = [set(cs) for cs in cx.face_cells]

    def freeze(self, validate: bool = True) -> CellComplex3:
        cx = CellComplex3(
            self.L,
            tuple(self.vertices),
            tuple(self.edges),
            tuple(canonical_walk(w) for w in self.faces),
            tuple(tuple(sorted(c)) for c in self.cells),
            tuple(self.cell_positions),
        )
        if validate:
            cx.validate()
        return cx

    # -- primitives ---------------------------------------------------------

    def _face_edge_ids(self, f: int) -> list[int]:
        return [e for e, _ in self.faces[f]]

    def _add_face(self, walk: Sequence[tuple[int, int]]) -> int:
        f = len(self.faces)
        self.faces.append(list(walk))
        self.face_cells.append(set())
        for e, _ in walk:
            self.edge_faces[e].add(f)
        return f

    def _add_cell(self, faces: Iterable[int], pos: Pos) -> int:
        c = len(self.cells)
        self.cells.append(set(faces))
        self.cell_positions.append(pos)
        for f in self.cells[c]:
            self.face_cells[f].add(c)
        return c

    def _set_cell_faces(self, c: int, faces: Iterable[int]) -> None:
        for f in self.cells[c]:
            self.face_cells[f].discard(c)
        self.cells[c] = set(faces)
        for f in self.cells[c]:
            self.face_cells[f].add(c)

    def _add_edge(self, a: int, b: int, wrap) -> tuple[int, int]:
        edge, sign = canonical_edge(a, b, wrap)
        self.edges.append(edge)
        self.edge_faces.append(set())
        return len(self.edges) - 1, sign

    # -- cell split ------------------------------------------------------------

    def split_cell(self, instr: SplitInstruction) -> list[int]:
        """Apply a (possibly n-ary) cell split; returns the ids of the new faces."""
        c = instr.cell
        if not 0 <= c < len(self.cells):
            raise InvalidSplitError(f"unknown cell {c}")
        parts = instr.parts
        if len(parts) < 2:
            raise InvalidSplitError("a split needs at least two parts")
        if any(not p for p in parts):
            raise InvalidSplitError("split parts must be nonempty")
        union: set[int] = set()
        for p in parts:
            if union & p:
                raise InvalidSplitError("split parts overlap")
            union |= p
        if union != self.cells[c]:
            raise InvalidSplitError(f"split parts do not partition the faces of cell {c}")
        if len(parts) == 2:
            return [self._split_two(c, set(parts[0]), set(parts[1]))]
        # star: peel parts off one at a time; the central cell is what remains
        new_faces: list[int] = []
        rest = c
        for i, part in enumerate(parts):
            remaining = set(self.cells[rest]) - set(part)
            new_faces.append(self._split_two(rest, set(part), remaining, keep_first=(i == 0)))
            if i == 0:
                rest = len(self.cells) - 1
        return new_faces

    def _split_two(self, c: int, a: set[int], b: set[int], keep_first: bool = True) -> int:
        if not a or not b:
            raise InvalidSplitError("split parts must be nonempty")
        for name, part in (("first", a), ("second", b)):
            if not self._faces_connected(part):
                raise InvalidSplitError(f"{name} part of cell {c} split is not edge-connected")
        count_a: dict[int, int] = defaultdict(int)
        count_b: dict[int, int] = defaultdict(int)
        for f in a:
            for e in self._face_edge_ids(f):
                count_a[e] += 1
        for f in b:
            for e in self._face_edge_ids(f):
                count_b[e] += 1
        interface = sorted(e for e in count_a if count_a[e] == 1 and count_b.get(e, 0) == 1)
        try:
            walk = walk_from_cycle(interface, self.edges)
        except ValueError as exc:
            raise InvalidSplitError(f"interface of cell {c} split is not a single closed cycle: {exc}") from exc
        pos_a, pos_b = self._child_positions(c, a, b)
        f = self._add_face(walk)
        if keep_first:
            self._set_cell_faces(c, a | {f})
            self.cell_positions[c] = pos_a
            self._add_cell(b | {f}, pos_b)
        else:
            # the central remainder keeps the parent id
            self._set_cell_faces(c, b | {f})
            self.cell_positions[c] = pos_b
            self._add_cell(a | {f}, pos_a)
        return f

    def _faces_connected(self, part: set[int]) -> bool:
        part = set(part)
        start = min(part)
        seen = {start}
        stack = [start]
        while stack:
            f = stack.pop()
            for e in self._face_edge_ids(f):
                for g in self.edge_faces[e]:
                    if g in part and g not in seen:
                        seen.add(g)
                        stack.append(g)
        return seen == part

    def _child_positions(self, c: int, a: set[int], b: set[int]) -> tuple[Pos, Pos]:
        cell_edges = {e for f in self.cells[c] for e in self._face_edge_ids(f)}
        off = lift_offsets(self.edges, cell_edges)

        def centroid(part):
            verts = {self.edges[e].u for f in part for e in self._face_edge_ids(f)}
            verts |= {self.edges[e].v for f in part for e in self._face_edge_ids(f)}
            tot = (Fraction(0),) * 3
            for x in verts:
                tot = vadd(tot, vadd(self.vertices[x], vscale(self.L, off[x])))
            return vscale(Fraction(1, len(verts)), tot)

        d = vsub(centroid(a), centroid(b))
        delta = tuple(SPLIT_OFFSET * ((x > 0) - (x < 0)) for x in d)
        p = self.cell_positions[c]
        return reduce_pos(vadd(p, delta), self.L)[0], reduce_pos(vsub(p, delta), self.L)[0]

    # -- subdivision and duplication ------------------------------------------

    def subdivide_edge(self, sub: Subdivision) -> list[int]:
        """Insert ``segments - 1`` vertices along an edge; returns the new vertex ids."""
        e = sub.edge
        if not 0 <= e < len(self.edges):
            raise IndexError(f"unknown edge {e}")
        n = sub.segments
        u, v, w = self.edges[e]
        start = self.vertices[u]
        d = vsub(vadd(self.vertices[v], vscale(self.L, w)), start)
        chain = [u]
        shifts = [(0, 0, 0)]
        for k in range(1, n):
            lifted = vadd(start, vscale(Fraction(k, n), d))
            red, shift = reduce_pos(lifted, self.L)
            self.vertices.append(red)
            chain.append(len(self.vertices) - 1)
            shifts.append(shift)
        chain.append(v)
        shifts.append(w)
        segs: list[tuple[int, int]] = []
        for k in range(n):
            a, b = chain[k], chain[k + 1]
            wrap = vsub(shifts[k + 1], shifts[k])
            if k == 0:
                edge, sign = canonical_edge(a, b, wrap)
                self.edges[e] = edge
                segs.append((e, sign))
            else:
                segs.append(self._add_edge(a, b, wrap))
        for f in sorted(self.edge_faces[e]):
            walk = self.faces[f]
            i = next(j for j, (x, _) in enumerate(walk) if x == e)
            s = walk[i][1]
            rep = segs if s > 0 else [(x, -t) for x, t in reversed(segs)]
            self.faces[f] = walk[:i] + rep + walk[i + 1:]
            for x, _ in segs[1:]:
                self.edge_faces[x].add(f)
        return chain[1:-1]

    def duplicate_face(self, dup: FaceDuplication) -> list[int]:
        """Stack ``copies - 1`` parallel copies on a face; returns the new bubble cells."""
        f = dup.face
        if not 0 <= f < len(self.faces):
            raise IndexError(f"unknown face {f}")
        cs = sorted(self.face_cells[f])
        if len(cs) != 2:
            raise InvalidSplitError(f"face {f} is not shared by two cells")
        far = cs[1]
        walk = list(self.faces[f])
        edge_ids = [e for e, _ in walk]
        off = lift_offsets(self.edges, edge_ids)
        tot = (Fraction(0),) * 3
        for x, o in off.items():
            tot = vadd(tot, vadd(self.vertices[x], vscale(self.L, o)))
        centre = reduce_pos(vscale(Fraction(1, len(off)), tot), self.L)[0]
        prev = f
        bubbles = []
        for _ in range(dup.copies - 1):
            g = self._add_face(walk)
            bubbles.append(self._add_cell({prev, g}, centre))
            prev = g
        self._set_cell_faces(far, (self.cells[far] - {f}) | {prev})
        return bubbles


def _apply(cx: CellComplex3, instrs: Iterable[Instruction], validate: bool) -> CellComplex3:
    instrs = list(instrs)
    if any(isinstance(i, VertexSplit) for i in instrs):
        raise TypeError("vertex splits must go through split_vertex/apply_pipeline")
    b = ComplexBuilder(cx)
    for instr in instrs:
        if isinstance(instr, SplitInstruction):
            b.split_cell(instr)
        elif isinstance(instr, Subdivision):
            b.subdivide_edge(instr)
        elif isinstance(instr, FaceDuplication):
            b.duplicate_face(instr)
        else:
            raise TypeError(f"not an instruction: {instr!r}")
    return b.freeze(validate=validate)


def split_cell(cx: CellComplex3, instr: SplitInstruction) -> CellComplex3:
    """Two-part cell split: insert one face along the interface of the parts.

    The 1-skeleton and all existing faces are unchanged.  The first part keeps
    the cell id; the second part becomes a new cell appended at the end.
    """
    if instr.arity != 2:
        raise InvalidSplitError(f"split_cell takes a two-part instruction, got {instr.arity} parts")
    return _apply(cx, [instr], validate=True)


def n_split(cx: CellComplex3, instr: SplitInstruction) -> CellComplex3:
    """Cell split with any number of parts.

    For ``n >= 3`` the parts are peeled off in order, each by a simple split,
    leaving a central cell made of the ``n`` new faces.  Two-part instructions
    are a plain :func:`split_cell`.
    """
    return _apply(cx, [instr], validate=True)


def subdivide_edge(cx: CellComplex3, sub: Subdivision) -> CellComplex3:
    return _apply(cx, [sub], validate=True)


def duplicate_face(cx: CellComplex3, dup: FaceDuplication) -> CellComplex3:
    return _apply(cx, [dup], validate=True)


def split_cells(cx: CellComplex3, instrs: Iterable[SplitInstruction], validate: bool = True) -> CellComplex3:
    """Apply several cell splits in sequence on one working copy."""
    return _apply(cx, instrs, validate)


def split_vertices(cx: CellComplex3, instrs: Iterable[VertexSplit], validate: bool = True) -> CellComplex3:
    """Apply vertex splits by splitting the corresponding cells of the dual."""
    d = dual_complex(cx, validate=validate)
    d = _apply(d, [i.as_cell_split() for i in instrs], validate=validate)
    return dual_complex(d, validate=validate)


def split_vertex(cx: CellComplex3, instr: VertexSplit) -> CellComplex3:
    """Split a vertex along a bipartition of its incident edges.

    The first part stays on the original vertex; the second moves to a new
    vertex joined to it by a new edge.  Faces and cells keep their ids.
    """
    return split_vertices(cx, [instr])


def apply_pipeline(cx: CellComplex3, instrs: Iterable[Instruction], validate: bool = True) -> CellComplex3:
    """Apply a mixed instruction list, grouping consecutive vertex splits."""
    batch: list[Instruction] = []
    vbatch: list[VertexSplit] = []
    for instr in instrs:
        if isinstance(instr, VertexSplit):
            if batch:
                cx = _apply(cx, batch, validate)
                batch = []
            vbatch.append(instr)
        else:
            if vbatch:
                cx = split_vertices(cx, vbatch, validate)
                vbatch = []
            batch.append(instr)
    if batch:
        cx = _apply(cx, batch, validate)
    if vbatch:
        cx = split_vertices(cx, vbatch, validate)
    return cx


def commute_check(cx: CellComplex3, primal_instr: VertexSplit | None, dual_instr: SplitInstruction | None) -> bool:
    """Whether a vertex split and a cell split give isomorphic results in either order.

    ``None`` stands for the identity transform.
    """
    from .iso import complexes_isomorphic

    def do_v(x):
        return x if primal_instr is None else split_vertex(x, primal_instr)

    def do_c(x):
        return x if dual_instr is None else n_split(x, dual_instr)

    try:
        first = do_v(do_c(cx))
        second = do_c(do_v(cx))
    except InvalidSplitError:
        return False
    return complexes_isomorphic(first, second)


def graph_split_vertex(g: SyndromeGraph, instr: VertexSplit, new_valence: int = 0) -> SyndromeGraph:
    """Vertex split applied directly to a syndrome graph (ids as in :func:`split_vertex`).

    Only two-part splits are supported.  Crossings of the moved edges are kept;
    the new edge gets zero crossing and valence ``new_valence`` (the number of
    faces through it is not recoverable from the graph alone).
    """
    import numpy as np

    if len(instr.parts) != 2:
        raise InvalidSplitError("graph-level split supports two parts")
    v = instr.vertex
    new = g.num_vertices
    edges = g.edges.copy()
    for e in instr.parts[1]:
        a, b = edges[e]
        if a == v:
            edges[e, 0] = new
        if b == v:
            edges[e, 1] = new
    edges = np.vstack([edges, [[v, new]]])
    swap = edges[:, 0] > edges[:, 1]
    crossings = np.vstack([g.crossings, np.zeros((1, 3), dtype=g.crossings.dtype)])
    crossings[swap] *= -1
    edges[swap] = edges[swap][:, ::-1]
    valence = np.append(g.valence, new_valence)
    return SyndromeGraph(new + 1, edges, crossings, valence, g.L, g.label)


# -- random instruction sampling (testing oracle support) ---------------------


def random_cell_split(cx: CellComplex3, rng: random.Random, cell: int | None = None, tries: int = 200) -> SplitInstruction:
    """Sample a valid two-part split of a (random) cell by growing a connected part."""
    for _ in range(tries):
        c = rng.randrange(len(cx.cells)) if cell is None else cell
        faces = list(cx.cells[c])
        if len(faces) < 2:
            continue
        k = rng.randint(1, len(faces) - 1)
        part = {rng.choice(faces)}
        while len(part) < k:
            frontier = sorted({
                g for f in part for e in cx.face_edges[f] for g in cx.edge_faces[e]
                if g in cx.cells[c] and g not in part
            })
            if not frontier:
                break
            part.add(rng.choice(frontier))
        instr = SplitInstruction(c, (frozenset(part), frozenset(set(faces) - part)))
        if is_valid_split(cx, instr):
            return instr
    raise InvalidSplitError("could not sample a valid split")


def random_vertex_split(cx: CellComplex3, rng: random.Random, vertex: int | None = None, tries: int = 200) -> VertexSplit:
    d = dual_complex(cx)
    instr = random_cell_split(d, rng, cell=vertex, tries=tries)
    return VertexSplit(instr.cell, instr.parts)


def is_valid_split(cx: CellComplex3, instr: SplitInstruction) -> bool:
    try:
        ComplexBuilder(cx).split_cell(instr)
    except InvalidSplitError:
        return False
    return True
