import dataclasses
import itertools

import numpy as np
import pytest

from ftcs.cell_complex import (
    CellComplex3,
    ComplexValidationError,
    StabilizerClosureError,
    build_cluster_graph,
    cell_stabilizer,
    dual_complex,
    edge_stabilizer,
    extract_syndrome_graph,
    face_stabilizer,
    make_complex,
)
from ftcs.iso import complexes_isomorphic, graphs_isomorphic
from ftcs.lattices import AXES, KINDS, cube_face, cubic, generate, logical_cut, syndrome_graph


@pytest.fixture(scope="module")
def hexagon() -> CellComplex3:
    """One open hexagonal face and its boundary, no cells."""
    pts = [(0, 0, 0), (1, 0, 0), (2, 1, 0), (2, 2, 0), (1, 2, 0), (0, 1, 0)]
    edges = [(i, (i + 1) % 6, (0, 0, 0)) for i in range(6)]
    return make_complex(4, pts, edges, [[(i, 1) for i in range(6)]], [], cell_positions=())


@pytest.fixture(scope="module", params=KINDS)
def complex2(request) -> CellComplex3:
    return generate((request.param, 2))


def test_cubic_l2_counts(cubic2):
    assert cubic2.counts == (8, 24, 24, 8)
    assert cubic2.euler_characteristic == 0


def test_cubic_l3_counts():
    assert cubic(3).counts == (27, 81, 81, 27)


def test_cluster_graph_cubic(cubic2):
    cg = build_cluster_graph(cubic2)
    assert cg.num_qubits == 48
    assert set(cg.degrees.tolist()) == {4}
    # bipartite: every bond joins an edge qubit to a face qubit
    assert all(a < cg.num_edge_qubits <= b for a, b in cg.bonds)


def test_cluster_graph_bonds_follow_incidence(cubic2):
    cg = build_cluster_graph(cubic2)
    ne = cg.num_edge_qubits
    for f, es in enumerate(cubic2.face_edges):
        assert cg.neighbours[ne + f] == frozenset(es)
    assert cg.qubit_kind(ne) == ("face", 0)
    assert cg.qubit_kind(3) == ("edge", 3)


def test_cluster_graph_hexagon(hexagon):
    cg = build_cluster_graph(hexagon, validate=False)
    assert cg.num_qubits == 7
    assert cg.degrees[6] == 6
    assert set(cg.degrees[:6].tolist()) == {1}


def test_cluster_graph_rejects_open_complex(hexagon):
    with pytest.raises(ComplexValidationError):
        build_cluster_graph(hexagon)


def test_cluster_graph_diamond():
    cg = build_cluster_graph(generate(("diamond", 2)))
    assert set(cg.degrees.tolist()) == {6}


@pytest.mark.parametrize("kind, size", [("cubic", 4), ("diamond", 6), ("triamond", 10), ("doubled_edge_cubic", 8)])
def test_face_stabilizer_sizes(kind, size):
    cx = generate((kind, 2))
    for f in range(len(cx.faces)):
        s = face_stabilizer(cx, f)
        assert s.x_support == {len(cx.edges) + f}
        assert len(s.z_support) == size


@pytest.mark.parametrize("kind, sizes", [
    ("cubic", {6}), ("diamond", {4}), ("triamond", {3}), ("doubled_edge_cubic", {2, 6}),
])
def test_cell_stabilizer_sizes(kind, sizes):
    cx = generate((kind, 2))
    seen = {len(cell_stabilizer(cx, c).x_support) for c in range(len(cx.cells))}
    assert seen == sizes


@pytest.mark.parametrize("L", [2, 3, 4])
def test_stabilizer_closure(kind, L):
    cx = generate((kind, L))
    ne = len(cx.edges)
    for c, faces in enumerate(cx.cells):
        s = cell_stabilizer(cx, c)
        assert not s.z_support
        assert s.x_support == {ne + f for f in faces}


def test_unknown_ids_raise(cubic2):
    with pytest.raises(IndexError):
        face_stabilizer(cubic2, 24)
    with pytest.raises(IndexError):
        cell_stabilizer(cubic2, -1)
    with pytest.raises(IndexError):
        edge_stabilizer(cubic2, 99)


def test_open_cell_stabilizer_keeps_z(cubic2):
    broken = dataclasses.replace(cubic2, cells=(cubic2.cells[0][1:],) + cubic2.cells[1:])
    with pytest.raises(StabilizerClosureError) as info:
        cell_stabilizer(broken, 0)
    assert info.value.element == 0


def test_stabilizers_commute(complex2):
    faces = [face_stabilizer(complex2, f) for f in range(len(complex2.faces))]
    edges = [edge_stabilizer(complex2, e) for e in range(len(complex2.edges))]
    for a, b in itertools.combinations(faces, 2):
        assert a.commutes_with(b)
    for a in faces:
        assert all(a.commutes_with(b) for b in edges)


def test_anticommuting_pair_detected(cubic2):
    s = face_stabilizer(cubic2, 0)
    e = next(iter(s.z_support))
    from ftcs.cell_complex import PauliOperator

    assert not s.commutes_with(PauliOperator(frozenset({e})))


@pytest.mark.parametrize("L", [2, 3])
def test_euler_characteristic(kind, L):
    assert generate((kind, L)).euler_characteristic == 0


class TestValidation:
    def test_missing_face_named(self, cubic2):
        face = cube_face(2, (0, 0, 0), 2, 1)
        cells = tuple(tuple(f for f in fs if f != face) if c == 0 else fs for c, fs in enumerate(cubic2.cells))
        issues = dataclasses.replace(cubic2, cells=cells).check()
        names = {(i.invariant, i.kind, i.element) for i in issues}
        assert ("face-in-two-cells", "face", face) in names
        assert ("cell-closed-surface", "cell", 0) in names

    def test_validate_raises_first(self, cubic2):
        bad = dataclasses.replace(cubic2, cells=cubic2.cells[1:], cell_positions=cubic2.cell_positions[1:])
        with pytest.raises(ComplexValidationError, match="face-in-two-cells"):
            bad.validate()

    def test_walk_not_closed(self, cubic2):
        walk = cubic2.faces[0]
        faces = (walk[:-1] + ((walk[-1][0], -walk[-1][1]),),) + cubic2.faces[1:]
        issues = dataclasses.replace(cubic2, faces=faces).check()
        assert any(i.invariant == "face-closed-walk" and i.element == 0 for i in issues)

    def test_unknown_vertex(self, cubic2):
        from ftcs.cell_complex import Edge

        edges = (Edge(0, 99, (0, 0, 0)),) + cubic2.edges[1:]
        issues = dataclasses.replace(cubic2, edges=edges).check()
        assert [(i.invariant, i.element) for i in issues] == [("edge-endpoints", 0)]

    def test_unknown_face_in_cell(self, cubic2):
        cells = ((0, 1, 2, 3, 4, 999),) + cubic2.cells[1:]
        issues = dataclasses.replace(cubic2, cells=cells).check()
        assert any(i.invariant == "cell-faces" and i.element == 0 for i in issues)

    def test_valid_complexes_have_no_issues(self, complex2):
        assert complex2.check() == []


class TestDual:
    def test_double_dual_exact(self, complex2):
        assert dual_complex(dual_complex(complex2)) == complex2

    def test_dual_valid(self, complex2):
        d = dual_complex(complex2)
        assert d.check() == []
        assert d.counts == tuple(reversed(complex2.counts))

    def test_self_dual(self, complex2):
        assert complexes_isomorphic(dual_complex(complex2), complex2)

    def test_dual_incidence(self, cubic2):
        d = dual_complex(cubic2)
        for f, (c1, c2) in enumerate(cubic2.face_cells):
            assert {d.edges[f].u, d.edges[f].v} == {c1, c2}
        for e in range(len(cubic2.edges)):
            assert set(d.face_edges[e]) == set(cubic2.edge_faces[e])

    def test_non_space_filling(self, cubic2):
        bad = dataclasses.replace(cubic2, cells=cubic2.cells[1:], cell_positions=cubic2.cell_positions[1:])
        with pytest.raises(ComplexValidationError):
            dual_complex(bad)

    def test_double_dual_l3(self):
        cx = generate(("triamond", 3))
        assert dual_complex(dual_complex(cx)) == cx


class TestSyndromeGraph:
    @pytest.mark.parametrize("kind, nv, ne, deg", [
        ("cubic", 64, 192, 6), ("diamond", 128, 256, 4), ("triamond", 256, 384, 3),
    ])
    def test_counts_l4(self, kind, nv, ne, deg):
        g = extract_syndrome_graph(generate((kind, 4)))
        assert (g.num_vertices, g.num_edges) == (nv, ne)
        assert set(g.degrees.tolist()) == {deg}

    def test_dual_extraction(self, complex2):
        d = extract_syndrome_graph(complex2, "dual")
        assert d.num_vertices == len(complex2.cells)
        assert d.num_edges == len(complex2.faces)
        assert graphs_isomorphic(d, extract_syndrome_graph(complex2))

    def test_valence(self):
        for kind, z in [("cubic", 4), ("diamond", 6), ("triamond", 10), ("doubled_edge_cubic", 8)]:
            assert set(syndrome_graph(kind, 2).valence.tolist()) == {z}

    def test_bad_which(self, cubic2):
        with pytest.raises(ValueError):
            extract_syndrome_graph(cubic2, "both")

    def test_read_only(self, cubic2_graph):
        with pytest.raises(ValueError):
            cubic2_graph.edges[0, 0] = 1

    def test_csr_lists_incidence(self, cubic2_graph):
        indptr, nbr, inc = cubic2_graph.csr
        for v in range(cubic2_graph.num_vertices):
            es = inc[indptr[v]:indptr[v + 1]]
            assert list(es) == sorted(es)
            for e, w in zip(es, nbr[indptr[v]:indptr[v + 1]]):
                assert {v, w} == set(cubic2_graph.edges[e].tolist())


@pytest.mark.parametrize("axis", list(AXES))
def test_face_boundaries_are_cocycle_even(complex2, axis):
    g = extract_syndrome_graph(complex2)
    cut = logical_cut(g, axis).mask_for(g).astype(bool)
    for es in complex2.face_edges:
        assert int(cut[list(es)].sum()) % 2 == 0


def test_face_wrap_sums_vanish(complex2):
    assert all(complex2.face_wrap_sum(f) == (0, 0, 0) for f in range(len(complex2.faces)))
    assert np.all(np.abs([e.wrap for e in complex2.edges]) <= 1)
