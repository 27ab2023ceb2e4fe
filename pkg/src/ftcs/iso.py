"""Isomorphism tests for syndrome graphs and cell complexes.

Complexes are compared through their incidence (Hasse) diagram: one node per
vertex, edge, face and cell, coloured by dimension, with a link for every
incidence.  Two complexes are isomorphic iff these coloured multigraphs are.

Multigraphs are made simple by subdividing every link with a node of its own
colour (a self-loop becomes a pendant link node, which no ordinary link can
be), and isomorphism is decided by comparing nauty canonical certificates.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import pynauty

from .cell_complex import CellComplex3, SyndromeGraph


def certificate(colour_sizes: Sequence[int], links: Iterable[tuple[int, int]]) -> tuple[tuple[int, ...], bytes]:
    """Canonical form of a vertex-coloured multigraph.

    Nodes ``0..sum(colour_sizes)-1`` are numbered colour class by colour class.
    Equal return values mean isomorphic graphs (colour-preserving).
    """
    n = sum(colour_sizes)
    adj: dict[int, list[int]] = {}
    k = n
    for a, b in links:
        adj.setdefault(a, []).append(k)
        if b != a:
            adj.setdefault(b, []).append(k)
        k += 1
    classes, start = [], 0
    for size in colour_sizes:
        classes.append(set(range(start, start + size)))
        start += size
    classes.append(set(range(n, k)))
    classes = [c for c in classes if c]
    g = pynauty.Graph(max(k, 1), directed=False, adjacency_dict=adj, vertex_coloring=classes)
    return (*colour_sizes, k - n), pynauty.certificate(g)


def syndrome_certificate(g: SyndromeGraph):
    return certificate([g.num_vertices], ((int(a), int(b)) for a, b in g.edges))


def complex_certificate(cx: CellComplex3):
    V, E, F, _ = cx.counts

    def links():
        for i, e in enumerate(cx.edges):
            yield e.u, V + i
            yield e.v, V + i
        for f, es in enumerate(cx.face_edges):
            for e in es:
                yield V + e, V + E + f
        for c, fs in enumerate(cx.cells):
            for f in fs:
                yield V + E + f, V + E + F + c

    return certificate(cx.counts, links())


def graphs_isomorphic(a: SyndromeGraph, b: SyndromeGraph) -> bool:
    """Multigraph isomorphism of two syndrome graphs (crossings ignored)."""
    if a.num_vertices != b.num_vertices or a.num_edges != b.num_edges:
        return False
    return syndrome_certificate(a) == syndrome_certificate(b)


def complexes_isomorphic(a: CellComplex3, b: CellComplex3) -> bool:
    """Combinatorial isomorphism of two complexes (positions and wraps ignored)."""
    if a.counts != b.counts:
        return False
    return complex_certificate(a) == complex_certificate(b)
