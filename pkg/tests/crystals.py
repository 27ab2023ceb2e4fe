"""Independent crystallographic constructions of the bundled syndrome graphs.

Each builder places atoms of a textbook crystal on the torus ``R^3 / L*Lambda``
(``Lambda`` the primitive lattice of the crystal) and bonds every pair at the
nearest-neighbour distance.  None of this uses the splitting machinery, so
the graphs serve as oracles for the split pipelines.

Run as a script to regenerate the committed fixture files::

    python tests/crystals.py
"""

from __future__ import annotations

import itertools
from fractions import Fraction as Q
from pathlib import Path

import numpy as np

from ftcs.cell_complex import SyndromeGraph

FIXTURES = Path(__file__).parent / "fixtures"

h, q, e = Q(1, 2), Q(1, 4), Q(1, 8)

# diamond: FCC positions plus the (1/4,1/4,1/4) basis atom; bond^2 = 3/16
DIAMOND_BASIS = [(0, 0, 0), (0, h, h), (h, 0, h), (h, h, 0)]
DIAMOND = DIAMOND_BASIS + [tuple(c + q for c in p) for p in DIAMOND_BASIS]
FCC = [(0, h, h), (h, 0, h), (h, h, 0)]

# srs (K4 crystal): Wyckoff 8a of I4_132 with x = 1/8, body-centred; bond^2 = 1/8
_SRS_HALF = [(e, e, e), (3 * e, 7 * e, 5 * e), (7 * e, 5 * e, 3 * e), (5 * e, 3 * e, 7 * e)]
SRS = _SRS_HALF + [tuple((c + h) % 1 for c in p) for p in _SRS_HALF]
BCC = [(-h, h, h), (h, -h, h), (h, h, -h)]

SC = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def _crystal_graph(label: str, atoms, prim, L: int, bond2: Q) -> SyndromeGraph:
    # exact integer arithmetic in units of 1/8
    S = 8
    atoms8 = np.array([[int(Q(c) * S) for c in a] for a in atoms], dtype=np.int64)
    B = np.array([[int(Q(c) * S) for c in v] for v in prim], dtype=np.int64).T * L  # columns
    det = round(np.linalg.det(B))
    adj = np.round(np.linalg.inv(B) * det).astype(np.int64)  # B^-1 * det, integral

    n = np.array(list(itertools.product(range(-2 * L, 2 * L + 1), repeat=3)), dtype=np.int64) * S
    cand = (atoms8[None, :, :] + n[:, None, :]).reshape(-1, 3)
    frac = np.unique(np.mod(cand @ adj.T, det), axis=0)  # fractional coordinates times det
    pos = frac @ B.T // det
    images = np.array(list(itertools.product((-1, 0, 1), repeat=3)), dtype=np.int64)
    shifts = images @ B.T
    target = int(bond2 * S * S)
    edges = []
    for i in range(len(pos)):
        d = pos[None, :, :] - pos[i] + shifts[:, None, :]
        for k, j in np.argwhere((d**2).sum(-1) == target).tolist():
            if (i, tuple(images[k])) < (j, tuple(-images[k])):
                edges.append((min(i, j), max(i, j)))
    edges.sort()
    ne = len(edges)
    return SyndromeGraph(len(pos), np.array(edges, np.int64).reshape(-1, 2), np.zeros((ne, 3), np.int8),
                         np.zeros(ne, np.int64), L, label)


def diamond_graph(L: int) -> SyndromeGraph:
    return _crystal_graph("diamond-fcc", DIAMOND, FCC, L, Q(3, 16))


def srs_graph(L: int) -> SyndromeGraph:
    return _crystal_graph("srs-bcc", SRS, BCC, L, Q(1, 8))


def doubled_edge_graph(L: int) -> SyndromeGraph:
    """Simple cubic lattice with a midpoint vertex on every bond."""
    atoms = [(0, 0, 0), (h, 0, 0), (0, h, 0), (0, 0, h)]
    return _crystal_graph("doubled-edge-sc", atoms, SC, L, Q(1, 4))


BUILDERS = {"diamond": diamond_graph, "triamond": srs_graph, "doubled_edge_cubic": doubled_edge_graph}


def fixture_path(kind: str, L: int) -> Path:
    return FIXTURES / f"{kind}_L{L}.crystal.graph.txt"


if __name__ == "__main__":
    from ftcs.serialize import dump

    FIXTURES.mkdir(exist_ok=True)
    for kind, build in BUILDERS.items():
        g = build(2)
        dump(g, fixture_path(kind, 2))
        print(kind, g.num_vertices, g.num_edges, np.bincount(g.degrees).nonzero()[0])
