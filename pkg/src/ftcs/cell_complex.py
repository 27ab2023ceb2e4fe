"""Periodic 3-d cell complexes and the cluster states built from them.

A :class:`CellComplex3` lives on an ``L x L x L`` torus.  Vertices carry a
position label (exact rationals in ``[0, L)``), edges are vertex pairs plus an
integer *wrap vector* saying how many times the edge crosses each seam of the
torus, faces are closed oriented edge walks and cells are sets of faces.

The combinatorial data is the source of truth.  Positions only pick a
canonical copy of each element inside the fundamental domain, which in turn
fixes wrap vectors (and therefore logical cut crossings) of derived complexes.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Literal, NamedTuple, Sequence

import numpy as np

Vec3 = tuple[int, int, int]
Pos = tuple[Fraction, Fraction, Fraction]
Walk = tuple[tuple[int, int], ...]

ZERO3: Vec3 = (0, 0, 0)


class ComplexValidationError(ValueError):
    """A cell complex violates one of its structural invariants.

    Attributes
    ----------
    invariant : str
        Short name of the violated invariant (for example ``"face-in-two-cells"``).
    kind : str
        Element kind (``"vertex"``, ``"edge"``, ``"face"``, ``"cell"`` or ``"complex"``).
    element : int or None
        Offending element id.
    """

    def __init__(self, invariant: str, kind: str, element: int | None, detail: str = ""):
        self.invariant = invariant
        self.kind = kind
        self.element = element
        where = kind if element is None else f"{kind} {element}"
        super().__init__(f"{invariant}: {where}" + (f": {detail}" if detail else ""))


class StabilizerClosureError(ComplexValidationError):
    """A cell stabilizer kept a Z component, so the cell is not a closed surface."""


class Edge(NamedTuple):
    u: int
    v: int
    wrap: Vec3


def vadd(a: Sequence, b: Sequence) -> tuple:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vsub(a: Sequence, b: Sequence) -> tuple:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vneg(a: Sequence) -> tuple:
    return (-a[0], -a[1], -a[2])


def vscale(k, a: Sequence) -> tuple:
    return (k * a[0], k * a[1], k * a[2])


def reduce_pos(p: Sequence[Fraction], L: int) -> tuple[Pos, Vec3]:
    """Reduce a lifted position into ``[0, L)``; return it with the lattice shift."""
    shift = tuple(math.floor(c / L) for c in p)
    red = tuple(Fraction(c) - L * s for c, s in zip(p, shift))
    return red, shift  # type: ignore[return-value]


def canonical_edge(u: int, v: int, wrap: Vec3) -> tuple[Edge, int]:
    """Store edges with ``u <= v``; returns the edge and the sign of ``u -> v``."""
    wrap = tuple(int(w) for w in wrap)  # type: ignore[assignment]
    if u < v or (u == v and wrap >= ZERO3):
        return Edge(u, v, wrap), 1
    return Edge(v, u, vneg(wrap)), -1


def canonical_walk(walk: Sequence[tuple[int, int]]) -> Walk:
    """Rotate/reverse a closed walk so it starts at its smallest edge, traversed forwards."""
    walk = [(int(e), int(s)) for e, s in walk]
    k = min(range(len(walk)), key=lambda i: walk[i][0])
    walk = walk[k:] + walk[:k]
    if walk[0][1] < 0:
        walk = [(e, -s) for e, s in reversed(walk)]
        walk = walk[-1:] + walk[:-1]
    return tuple(walk)


def _ends(edge: Edge, sign: int) -> tuple[int, int]:
    return (edge.u, edge.v) if sign > 0 else (edge.v, edge.u)


def walk_vertices(edges: Sequence[Edge], walk: Walk) -> list[int]:
    """Vertices visited by a walk, one per step (start vertex of each edge)."""
    return [_ends(edges[e], s)[0] for e, s in walk]


def walk_from_cycle(edge_ids: Iterable[int], edges: Sequence[Edge]) -> Walk:
    """Order an unordered edge set forming one closed cycle into a walk.

    Raises ``ValueError`` if the set is not a single closed cycle.
    """
    ids = sorted(set(edge_ids))
    if not ids:
        raise ValueError("empty cycle")
    inc: dict[int, list[int]] = defaultdict(list)
    for e in ids:
        inc[edges[e].u].append(e)
        inc[edges[e].v].append(e)
    for vert, es in inc.items():
        if len(es) != 2:
            raise ValueError(f"vertex {vert} has {len(es)} cycle edges")
    start = ids[0]
    walk = [(start, 1)]
    seen = {start}
    cur = edges[start].v
    prev = start
    while True:
        a, b = inc[cur]
        nxt = b if a == prev else a
        if nxt == start:
            break
        if nxt in seen:
            raise ValueError("edge set is not a simple cycle")
        e = edges[nxt]
        sign = 1 if e.u == cur else -1
        walk.append((nxt, sign))
        seen.add(nxt)
        cur = _ends(e, sign)[1]
        prev = nxt
    if len(seen) != len(ids):
        raise ValueError("edge set splits into several cycles")
    return tuple(walk)


def lift_offsets(edges: Sequence[Edge], edge_ids: Iterable[int], root: int | None = None) -> dict[int, Vec3]:
    adj: dict[int, list[tuple[int, int, Vec3]]] = defaultdict(list)
    for e in edge_ids:
        edge = edges[e]
        adj[edge.u].append((e, edge.v, edge.wrap))
        adj[edge.v].append((e, edge.u, vneg(edge.wrap)))
    if not adj:
        return {}
    if root is None:
        root = min(adj)
    off = {root: ZERO3}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for e, y, w in adj[x]:
            oy = vadd(off[x], w)
            if y not in off:
                off[y] = oy
                queue.append(y)
            elif off[y] != oy:
                raise ComplexValidationError(
                    "contractible-cell", "edge", e, "element wraps around the torus")
    return off


@dataclass(frozen=True, eq=True)
class CellComplex3:
    """Combinatorial cell complex on a periodic ``L``-torus.

    Instances are immutable; derived incidence maps are computed lazily.
    Edge endpoints are stored with ``u <= v`` and face walks in the canonical
    form of :func:`canonical_walk`, so structurally equal complexes compare
    equal.
    """

    L: int
    vertices: tuple[Pos, ...]
    edges: tuple[Edge, ...]
    faces: tuple[Walk, ...]
    cells: tuple[tuple[int, ...], ...]
    cell_positions: tuple[Pos, ...]

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return len(self.vertices), len(self.edges), len(self.faces), len(self.cells)

    @property
    def euler_characteristic(self) -> int:
        v, e, f, c = self.counts
        return v - e + f - c

    @cached_property
    def vertex_edges(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in self.vertices]
        for i, e in enumerate(self.edges):
            inc[e.u].append(i)
            if e.v != e.u:
                inc[e.v].append(i)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def face_edges(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(e for e, _ in w) for w in self.faces)

    @cached_property
    def edge_faces(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in self.edges]
        for f, es in enumerate(self.face_edges):
            for e in es:
                inc[e].append(f)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def face_cells(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in self.faces]
        for c, fs in enumerate(self.cells):
            for f in fs:
                inc[f].append(c)
        return tuple(tuple(x) for x in inc)

    def cell_edges(self, c: int) -> list[int]:
        return sorted({e for f in self.cells[c] for e in self.face_edges[f]})

    def face_size(self, f: int) -> int:
        return len(self.faces[f])

    def validate(self) -> None:
        """Raise :class:`ComplexValidationError` on the first violated invariant."""
        for issue in self.check():
            raise issue

    def check(self) -> list[ComplexValidationError]:
        """Return every invariant violation (empty list for a valid complex)."""
        issues: list[ComplexValidationError] = []
        nv, ne, nf, nc = self.counts
        if self.L < 1:
            issues.append(ComplexValidationError("torus-size", "complex", None, f"L={self.L}"))
        if len(self.cell_positions) != nc:
            issues.append(ComplexValidationError("cell-positions", "complex", None, "one position per cell"))
        for i, p in enumerate(self.vertices):
            if any(not (0 <= c < self.L) for c in p):
                issues.append(ComplexValidationError("position-range", "vertex", i, str(p)))
        for i, e in enumerate(self.edges):
            if not (0 <= e.u < nv and 0 <= e.v < nv):
                issues.append(ComplexValidationError("edge-endpoints", "edge", i, "unknown vertex"))
            elif any(abs(w) > 1 for w in e.wrap):
                issues.append(ComplexValidationError("edge-wrap-range", "edge", i, str(e.wrap)))
        if issues:
            return issues
        for f, walk in enumerate(self.faces):
            err = self._walk_error(walk)
            if err:
                issues.append(ComplexValidationError("face-closed-walk", "face", f, err))
        for c, fs in enumerate(self.cells):
            if not fs or any(not 0 <= f < nf for f in fs):
                issues.append(ComplexValidationError("cell-faces", "cell", c, "unknown or missing faces"))
                continue
            count: dict[int, int] = defaultdict(int)
            for f in fs:
                for e in self.face_edges[f]:
                    count[e] += 1
            bad = sorted(e for e, k in count.items() if k != 2)
            if bad:
                issues.append(ComplexValidationError(
                    "cell-closed-surface", "cell", c,
                    f"edge {bad[0]} lies on {count[bad[0]]} of the cell's faces"))
        owners: list[list[int]] = [[] for _ in self.faces]
        for c, fs in enumerate(self.cells):
            for f in fs:
                if 0 <= f < nf:
                    owners[f].append(c)
        for f, cs in enumerate(owners):
            if len(cs) != 2 or cs[0] == cs[1]:
                issues.append(ComplexValidationError(
                    "face-in-two-cells", "face", f, f"face belongs to {len(cs)} cell(s) {list(cs)}"))
        if self.euler_characteristic != 0:
            issues.append(ComplexValidationError(
                "euler-characteristic", "complex", None, f"V-E+F-C = {self.euler_characteristic}"))
        return issues

    def _walk_error(self, walk: Walk) -> str:
        if len(walk) < 2:
            return "walk shorter than 2"
        es = [e for e, _ in walk]
        if any(not 0 <= e < len(self.edges) for e in es):
            return "unknown edge"
        if len(set(es)) != len(es):
            return "edge repeated in walk"
        total = ZERO3
        for i, (e, s) in enumerate(walk):
            edge = self.edges[e]
            end = _ends(edge, s)[1]
            nxt_e, nxt_s = walk[(i + 1) % len(walk)]
            start = _ends(self.edges[nxt_e], nxt_s)[0]
            if end != start:
                return f"edges {e} and {nxt_e} do not meet"
            total = vadd(total, vscale(s, edge.wrap))
        if total != ZERO3:
            return f"wrap vectors sum to {total}, walk is not contractible"
        return ""

    # -- geometry helpers -------------------------------------------------

    def lift(self, edge_ids: Iterable[int], root: int | None = None) -> dict[int, Vec3]:
        """Lattice offsets of the vertices of a connected, contractible edge set.

        The copy of vertex ``x`` used by the lift sits at
        ``vertices[x] + L * offset[x]``; the root gets offset ``(0, 0, 0)``.
        """
        return lift_offsets(self.edges, edge_ids, root)

    def lifted(self, x: int, offset: Vec3) -> tuple[Fraction, ...]:
        return vadd(self.vertices[x], vscale(self.L, offset))

    def barycenter(self, edge_ids: Iterable[int]) -> tuple[Fraction, ...]:
        off = self.lift(edge_ids)
        n = len(off)
        tot = (Fraction(0), Fraction(0), Fraction(0))
        for x, o in off.items():
            tot = vadd(tot, self.lifted(x, o))
        return vscale(Fraction(1, n), tot)

    def face_wrap_sum(self, f: int) -> Vec3:
        total = ZERO3
        for e, s in self.faces[f]:
            total = vadd(total, vscale(s, self.edges[e].wrap))
        return total


def barycenter_positions(
    L: int, vertices: Sequence[Pos], edges: Sequence[Edge], faces: Sequence[Walk],
    cells: Sequence[Sequence[int]],
) -> tuple[Pos, ...]:
    """Reduced barycenters of cells, for complexes built without cell positions."""
    tmp = CellComplex3(L, tuple(vertices), tuple(edges), tuple(faces), tuple(tuple(c) for c in cells), ())
    out = []
    for c in range(len(cells)):
        b = tmp.barycenter(tmp.cell_edges(c))
        out.append(reduce_pos(b, L)[0])
    return tuple(out)


def make_complex(
    L: int,
    vertices: Sequence[Sequence],
    edges: Sequence[tuple[int, int, Sequence[int]]],
    faces: Sequence[Sequence[tuple[int, int]]],
    cells: Sequence[Iterable[int]],
    cell_positions: Sequence[Sequence] | None = None,
) -> CellComplex3:
    """Build a complex from loose data, canonicalising edges and walks.

    Edges given with ``u > v`` are flipped and every walk step through them
    has its sign flipped accordingly.
    """
    verts = tuple(tuple(Fraction(c) for c in p) for p in vertices)
    canon: list[Edge] = []
    flip: list[int] = []
    for u, v, w in edges:
        e, s = canonical_edge(int(u), int(v), tuple(w))
        canon.append(e)
        flip.append(s)
    walks = tuple(canonical_walk([(e, s * flip[e]) for e, s in walk]) for walk in faces)
    cs = tuple(tuple(sorted(set(int(f) for f in c))) for c in cells)
    if cell_positions is None:
        cpos = barycenter_positions(L, verts, canon, walks, cs)
    else:
        cpos = tuple(tuple(Fraction(c) for c in p) for p in cell_positions)
    return CellComplex3(int(L), verts, tuple(canon), walks, cs, cpos)  # type: ignore[arg-type]


# -- cluster state -------------------------------------------------------


@dataclass(frozen=True)
class ClusterGraph:
    """Graph state of Construction-1 type: one qubit per edge and per face.

    Qubits ``0 .. E-1`` are edge qubits, ``E .. E+F-1`` face qubits.
    """

    num_edge_qubits: int
    num_face_qubits: int
    bonds: tuple[tuple[int, int], ...]

    @property
    def num_qubits(self) -> int:
        return self.num_edge_qubits + self.num_face_qubits

    def qubit_kind(self, q: int) -> tuple[str, int]:
        if q < self.num_edge_qubits:
            return ("edge", q)
        return ("face", q - self.num_edge_qubits)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_qubits, dtype=np.int64)
        for a, b in self.bonds:
            deg[a] += 1
            deg[b] += 1
        return deg

    @cached_property
    def neighbours(self) -> tuple[frozenset[int], ...]:
        nb: list[set[int]] = [set() for _ in range(self.num_qubits)]
        for a, b in self.bonds:
            nb[a].add(b)
            nb[b].add(a)
        return tuple(frozenset(s) for s in nb)


def build_cluster_graph(cx: CellComplex3, validate: bool = True) -> ClusterGraph:
    if validate:
        cx.validate()
    ne = len(cx.edges)
    bonds = tuple((e, ne + f) for f, es in enumerate(cx.face_edges) for e in es)
    return ClusterGraph(ne, len(cx.faces), bonds)


@dataclass(frozen=True)
class PauliOperator:
    """Pauli operator up to phase, as X and Z supports over qubit ids."""

    x_support: frozenset[int] = frozenset()
    z_support: frozenset[int] = frozenset()

    def __mul__(self, other: PauliOperator) -> PauliOperator:
        return PauliOperator(self.x_support ^ other.x_support, self.z_support ^ other.z_support)

    def commutes_with(self, other: PauliOperator) -> bool:
        n = len(self.x_support & other.z_support) + len(self.z_support & other.x_support)
        return n % 2 == 0

    @property
    def weight(self) -> int:
        return len(self.x_support | self.z_support)


def face_stabilizer(cx: CellComplex3, face_id: int) -> PauliOperator:
    """Graph-state stabilizer of a face qubit: ``X`` on the face, ``Z`` on its boundary."""
    if not 0 <= face_id < len(cx.faces):
        raise IndexError(f"unknown face {face_id}")
    ne = len(cx.edges)
    return PauliOperator(frozenset({ne + face_id}), frozenset(cx.face_edges[face_id]))


def edge_stabilizer(cx: CellComplex3, edge_id: int) -> PauliOperator:
    """Graph-state stabilizer of an edge qubit: ``X`` on the edge, ``Z`` on its faces."""
    if not 0 <= edge_id < len(cx.edges):
        raise IndexError(f"unknown edge {edge_id}")
    ne = len(cx.edges)
    return PauliOperator(frozenset({edge_id}), frozenset(ne + f for f in cx.edge_faces[edge_id]))


def cell_stabilizer(cx: CellComplex3, cell_id: int) -> PauliOperator:
    """Closed stabilizer of a cell: the product of its face stabilizers.

    Raises :class:`StabilizerClosureError` if any Z survives the product.
    """
    if not 0 <= cell_id < len(cx.cells):
        raise IndexError(f"unknown cell {cell_id}")
    op = PauliOperator()
    for f in cx.cells[cell_id]:
        op = op * face_stabilizer(cx, f)
    if op.z_support:
        raise StabilizerClosureError(
            "cell-closed-surface", "cell", cell_id,
            f"stabilizer keeps Z on edge qubits {sorted(op.z_support)}")
    return op


# -- duality ---------------------------------------------------------------


def _cell_frames(cx: CellComplex3) -> tuple[list[dict[int, Vec3]], list[Pos]]:
    """Per-cell vertex offsets relative to the canonical copy of the cell."""
    L = cx.L
    frames: list[dict[int, Vec3]] = []
    for c in range(len(cx.cells)):
        off = cx.lift(cx.cell_edges(c))
        n = len(off)
        tot = (Fraction(0), Fraction(0), Fraction(0))
        for x, o in off.items():
            tot = vadd(tot, cx.lifted(x, o))
        bary = vscale(Fraction(1, n), tot)
        pos = cx.cell_positions[c]
        shift = tuple(math.floor((b - p) / L + Fraction(1, 2)) for b, p in zip(bary, pos))
        frames.append({x: vsub(o, shift) for x, o in off.items()})
    return frames, list(cx.cell_positions)


def dual_complex(cx: CellComplex3, validate: bool = True) -> CellComplex3:
    """Combinatorial dual: cells become vertices, faces edges, edges faces, vertices cells.

    Element ids carry over one to one, so ``dual_complex(dual_complex(X)) == X``
    for complexes whose cell positions are consistent with their geometry.
    """
    if validate:
        cx.validate()
    frames, cpos = _cell_frames(cx)

    dual_edges: list[Edge] = []
    for f, (c1, c2) in enumerate(cx.face_cells):
        u = _ends(cx.edges[cx.faces[f][0][0]], cx.faces[f][0][1])[0]
        wrap = vsub(frames[c1][u], frames[c2][u])
        dual_edges.append(Edge(c1, c2, wrap))

    dual_faces: list[Walk] = []
    face_sets = [set(fs) for fs in cx.cells]
    for e in range(len(cx.edges)):
        around = cx.edge_faces[e]
        f0 = min(around)
        prev_cell, cell = cx.face_cells[f0]
        walk = [(f0, 1)]
        cur = f0
        while True:
            others = [g for g in around if g != cur and g in face_sets[cell]]
            if len(others) != 1:
                raise ComplexValidationError("edge-link", "edge", e, "faces around edge do not close up")
            nxt = others[0]
            if nxt == f0:
                break
            a, b = cx.face_cells[nxt]
            sign = 1 if a == cell else -1
            walk.append((nxt, sign))
            cell = b if a == cell else a
            cur = nxt
            if len(walk) > len(around):
                raise ComplexValidationError("edge-link", "edge", e, "faces around edge do not close up")
        if len(walk) != len(around):
            raise ComplexValidationError(
                "edge-link", "edge", e, "faces around edge form more than one ring")
        dual_faces.append(canonical_walk(walk))

    dual_cells = tuple(tuple(sorted(es)) for es in cx.vertex_edges)
    return CellComplex3(
        cx.L, tuple(cpos), tuple(dual_edges), tuple(dual_faces), dual_cells, tuple(cx.vertices))


# -- syndrome graph ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SyndromeGraph:
    """1-skeleton of a complex, arranged for decoding.

    Attributes
    ----------
    num_vertices : int
        Number of closed stabilizers.
    edges : ndarray, shape (E, 2)
        Endpoints of each qubit edge.
    crossings : ndarray, shape (E, 3)
        Signed seam crossings of each edge (its wrap vector).
    valence : ndarray, shape (E,)
        Cluster-state degree ``z_q`` of the edge's qubit.
    L : int
        Torus size.
    """

    num_vertices: int
    edges: np.ndarray
    crossings: np.ndarray
    valence: np.ndarray
    L: int
    label: str = ""

    def __post_init__(self):
        for name in ("edges", "crossings", "valence"):
            getattr(self, name).setflags(write=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.num_vertices)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Incidence in CSR form: ``(indptr, neighbour, edge)``, edges ascending per vertex.

        Self-loops are listed twice at their vertex.
        """
        ne = self.num_edges
        ends = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        other = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(ne), np.arange(ne)])
        order = np.lexsort((eid, ends))
        indptr = np.zeros(self.num_vertices + 1, dtype=np.int64)
        np.cumsum(np.bincount(ends, minlength=self.num_vertices), out=indptr[1:])
        return indptr, other[order].astype(np.int32), eid[order].astype(np.int32)

    @cached_property
    def csr_lists(self) -> tuple[list[int], list[int], list[int]]:
        """:attr:`csr` as Python lists, for the pure-Python decoder."""
        return tuple(a.tolist() for a in self.csr)  # type: ignore[return-value]

    @cached_property
    def edge_list(self) -> list[tuple[int, int]]:
        return [(int(a), int(b)) for a, b in self.edges]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SyndromeGraph):
            return NotImplemented
        return (
            self.num_vertices == other.num_vertices
            and self.L == other.L
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.crossings, other.crossings)
            and np.array_equal(self.valence, other.valence)
        )

    __hash__ = None  # type: ignore[assignment]


def extract_syndrome_graph(
    cx: CellComplex3, which: Literal["primal", "dual"] = "primal", label: str = "",
    validate: bool = True,
) -> SyndromeGraph:
    """1-skeleton of the complex (or of its dual), with per-edge valence and crossings."""
    if validate:
        cx.validate()
    if which == "dual":
        cx = dual_complex(cx, validate=False)
    elif which != "primal":
        raise ValueError(f"which must be 'primal' or 'dual', got {which!r}")
    edges = np.array([(e.u, e.v) for e in cx.edges], dtype=np.int64).reshape(-1, 2)
    crossings = np.array([e.wrap for e in cx.edges], dtype=np.int8).reshape(-1, 3)
    valence = np.array([len(fs) for fs in cx.edge_faces], dtype=np.int64)
    return SyndromeGraph(len(cx.vertices), edges, crossings, valence, cx.L, label)
