"""The four bundled lattices on ``L x L x L`` tori and their logical cuts.

Only the cubic complex is written down directly.  Diamond, triamond and the
doubled-edge cubic complex are produced from it by :mod:`ftcs.splitting`, so
every bundled non-cubic lattice is a replay of a split pipeline.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import numpy as np

from .cell_complex import CellComplex3, SyndromeGraph, extract_syndrome_graph, make_complex
from .splitting import (
    FaceDuplication,
    Instruction,
    SplitInstruction,
    Subdivision,
    VertexSplit,
    apply_pipeline,
)

KINDS = ("cubic", "diamond", "triamond", "doubled_edge_cubic")
CLI_NAMES = {
    "cubic": "cubic",
    "diamond": "diamond",
    "triamond": "triamond",
    "doubled-edge": "doubled_edge_cubic",
    "doubled_edge": "doubled_edge_cubic",
    "doubled_edge_cubic": "doubled_edge_cubic",
}
AXES = {"x": 0, "y": 1, "z": 2}

# Split partitions as (axis, sign) directions: faces of a cube for the cell
# splits, edges at a vertex for the vertex splits.  Diamond: three "positive"
# directions against three "negative" ones.  Triamond: three adjacent pairs
# using each axis pair once; the vertex pairing is the point reflection of
# the cell pairing (any other sign choice leaves 16- or 18-gons behind).
SPLIT_PARTS = {
    "diamond": (
        (((0, 1), (1, 1), (2, 1)), ((0, -1), (1, -1), (2, -1))),
        (((0, 1), (1, 1), (2, 1)), ((0, -1), (1, -1), (2, -1))),
    ),
    "triamond": (
        (((0, 1), (1, 1)), ((1, -1), (2, 1)), ((2, -1), (0, -1))),
        (((0, -1), (1, -1)), ((1, 1), (2, -1)), ((2, 1), (0, 1))),
    ),
}


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    kind: str
    L: int

    def __post_init__(self):
        kind = CLI_NAMES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise LatticeError(f"unknown lattice {self.kind!r}; expected one of {sorted(CLI_NAMES)}")
        object.__setattr__(self, "kind", kind)
        if int(self.L) < 2:
            raise LatticeError("L must be ≥ 2")
        object.__setattr__(self, "L", int(self.L))


def _idx(L: int, r) -> int:
    x, y, z = (c % L for c in r)
    return x + L * (y + L * z)


def cubic_edge_id(L: int, r, axis: int) -> int:
    """Edge from ``r`` to ``r + e_axis``."""
    return 3 * _idx(L, r) + axis


def cubic_face_id(L: int, r, normal: int) -> int:
    """Square with corner ``r`` spanned by the two axes other than ``normal``."""
    return 3 * _idx(L, r) + normal


def cubic(L: int) -> CellComplex3:
    """Cubic complex; vertex ``r`` sits at integer point ``r``, cell ``r`` at ``r + 1/2``."""
    if L < 2:
        raise LatticeError("L must be ≥ 2")
    half = Fraction(1, 2)
    pts = _points(L)
    edges = []
    for r in pts:
        for a in range(3):
            s = list(r)
            s[a] += 1
            wrap = tuple(c // L for c in s)
            edges.append((_idx(L, r), _idx(L, s), wrap))

    def step(x, a, s):
        # walk step along axis a from lattice point x, direction s
        if s > 0:
            return (cubic_edge_id(L, x, a), 1)
        y = list(x)
        y[a] -= 1
        return (cubic_edge_id(L, tuple(y), a), -1)

    faces = []
    for r in pts:
        for n in range(3):
            b, c = (n + 1) % 3, (n + 2) % 3
            p0 = r
            p1 = tuple(r[i] + (i == b) for i in range(3))
            p2 = tuple(p1[i] + (i == c) for i in range(3))
            p3 = tuple(r[i] + (i == c) for i in range(3))
            faces.append([step(p0, b, 1), step(p1, c, 1), step(p2, b, -1), step(p3, c, -1)])
    cells = []
    for r in pts:
        fs = []
        for a in range(3):
            fs.append(cubic_face_id(L, r, a))
            fs.append(cubic_face_id(L, tuple(r[i] + (i == a) for i in range(3)), a))
        cells.append(fs)
    cpos = [tuple(c + half for c in r) for r in pts]
    # walk signs above are relative to r -> r + e_a; make_complex canonicalises
    return make_complex(L, pts, edges, faces, cells, cpos)


def cube_face(L: int, r, axis: int, sign: int) -> int:
    """Face of cubic cell ``r`` on its ``sign`` side along ``axis``."""
    if sign > 0:
        r = tuple(r[i] + (i == axis) for i in range(3))
    return cubic_face_id(L, r, axis)


def vertex_edge(L: int, r, axis: int, sign: int) -> int:
    """Edge leaving cubic vertex ``r`` in direction ``sign * e_axis``."""
    if sign < 0:
        r = tuple(r[i] - (i == axis) for i in range(3))
    return cubic_edge_id(L, r, axis)


def _points(L: int):
    return [(x, y, z) for z in range(L) for y in range(L) for x in range(L)]


def pipeline(kind: str, L: int) -> list[Instruction]:
    """Instruction list turning ``cubic(L)`` into the named lattice."""
    kind = LatticeSpec(kind, L).kind
    pts = _points(L)
    if kind == "cubic":
        return []
    if kind in ("diamond", "triamond"):
        cell_table, vertex_table = SPLIT_PARTS[kind]
        cell_splits = [
            SplitInstruction(_idx(L, r), tuple(frozenset(cube_face(L, r, a, s) for a, s in part) for part in cell_table))
            for r in pts
        ]
        vertex_splits = [
            VertexSplit(_idx(L, r), tuple(frozenset(vertex_edge(L, r, a, s) for a, s in part) for part in vertex_table))
            for r in pts
        ]
        return [*cell_splits, *vertex_splits]
    n = 3 * L**3
    return [*(FaceDuplication(f) for f in range(n)), *(Subdivision(e) for e in range(n))]


def generate(spec: LatticeSpec | tuple[str, int], validate: bool = True) -> CellComplex3:
    """Build the complex for a lattice spec (cubic directly, the rest by splitting)."""
    if not isinstance(spec, LatticeSpec):
        spec = LatticeSpec(*spec)
    return _generate(spec.kind, spec.L, validate)


@lru_cache(maxsize=32)
def _generate(kind: str, L: int, validate: bool) -> CellComplex3:
    base = cubic(L)
    if kind == "cubic":
        return base
    return apply_pipeline(base, pipeline(kind, L), validate=validate)


@lru_cache(maxsize=64)
def syndrome_graph(kind: str, L: int, which: Literal["primal", "dual"] = "primal") -> SyndromeGraph:
    """Cached syndrome graph of a bundled lattice."""
    spec = LatticeSpec(kind, L)
    cx = generate(spec)
    return extract_syndrome_graph(cx, which, label=spec.kind, validate=False)


@dataclass(frozen=True)
class LogicalCut:
    axis: int
    edges: np.ndarray  # sorted edge ids

    def mask_for(self, graph: SyndromeGraph) -> np.ndarray:
        m = np.zeros(graph.num_edges, dtype=np.uint8)
        m[self.edges] = 1
        return m

    def __len__(self) -> int:
        return len(self.edges)


def logical_cut(graph: SyndromeGraph, axis: int | str = "x") -> LogicalCut:
    """Edges with an odd seam crossing along ``axis``.

    Every contractible closed walk crosses the seam an even number of times,
    so the parity of a cycle on this set is its winding number mod 2.
    """
    a = AXES[axis] if isinstance(axis, str) else int(axis)
    edges = np.flatnonzero(graph.crossings[:, a] % 2 != 0)
    if len(edges) == 0:
        raise LatticeError(f"logical cut along axis {a} is empty: the graph does not wrap")
    return LogicalCut(a, edges)


@dataclass(frozen=True)
class DegreeReport:
    histogram: dict[int, int]
    mean_degree: float

    def __str__(self) -> str:
        body = ", ".join(f"{k}: {v}" for k, v in sorted(self.histogram.items(), reverse=True))
        return "{" + body + "}"


def degree_report(graph: SyndromeGraph) -> DegreeReport:
    hist = Counter(int(d) for d in graph.degrees)
    zbar = 2 * graph.num_edges / graph.num_vertices if graph.num_vertices else 0.0
    return DegreeReport(dict(sorted(hist.items())), zbar)


def face_size_histogram(cx: CellComplex3) -> dict[int, int]:
    return dict(sorted(Counter(len(w) for w in cx.faces).items()))


def cell_size_histogram(cx: CellComplex3) -> dict[int, int]:
    return dict(sorted(Counter(len(c) for c in cx.cells).items()))
