"""Reference (pure Python) union-find decoder.

Growth works in half-edge units.  Each edge has a support counter in
``{0, 1, 2}``; 2 means fully grown.  Erased edges start at 2.  In one round
every vertex of every odd cluster pushes each incident non-full edge up by
one (an edge between two odd clusters therefore grows fully in one round),
then every edge that reached 2 in that round is fused.  The set of fully
grown edges after a round does not depend on the order in which clusters or
vertices are visited, so the correction is a function of the input alone.

Peeling runs a breadth-first search over the fully grown edges from the
smallest vertex of each component, visiting neighbours in ascending edge-id
order, and then walks the search order backwards: a vertex that is still odd
takes its tree edge into the correction and passes its parity to its parent.

The compiled core in :mod:`ftcs._core` implements the same procedure.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..cell_complex import SyndromeGraph

FULL = 2


class DecoderError(RuntimeError):
    """The decoder hit an internal inconsistency (a bug, or an input outside its contract)."""


class OddSyndromeError(ValueError):
    """The syndrome has odd weight, so no correction can annihilate it."""


Tracer = Callable[[dict], None]


@dataclass
class ClusterState:
    """Disjoint-set clusters over syndrome-graph vertices plus edge growth levels.

    Attributes
    ----------
    parent, size : list of int
        Union-by-size forest with path compression.
    parity : list of int
        Syndrome parity of each root's cluster.
    support : list of int
        Growth level per edge: 0, 1 (half grown) or 2 (full).
    rounds : int
        Number of growth rounds performed so far.
    """

    graph: SyndromeGraph
    parent: list[int]
    size: list[int]
    parity: list[int]
    support: list[int]
    odd_roots: list[int] = field(default_factory=list)
    members: dict[int, list[int]] = field(default_factory=dict)
    rounds: int = 0
    trace: Tracer | None = None

    @classmethod
    def initial(
        cls, graph: SyndromeGraph, syndrome: np.ndarray, erased: np.ndarray | None = None,
        trace: Tracer | None = None,
    ) -> ClusterState:
        n = graph.num_vertices
        syn = np.asarray(syndrome, dtype=bool)
        st = cls(graph, list(range(n)), [1] * n, syn.astype(int).tolist(), [0] * graph.num_edges, trace=trace)
        st.members = {v: [v] for v in range(n)}
        er = [] if erased is None else np.flatnonzero(np.asarray(erased, dtype=bool)).tolist()
        st._emit(event="init", syndrome=np.flatnonzero(syn).tolist(), erased=er)
        for e in er:
            st.support[e] = FULL
            st.union(e)
        st.odd_roots = sorted({st.find(v) for v in np.flatnonzero(syn).tolist() if st.parity[st.find(v)]})
        return st

    def _emit(self, **event) -> None:
        if self.trace is not None:
            self.trace(event)

    def find(self, v: int) -> int:
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def union(self, e: int) -> int:
        u, v = self.graph.edge_list[e]
        a, b = self.find(u), self.find(v)
        if a == b:
            return a
        if self.size[a] < self.size[b] or (self.size[a] == self.size[b] and b < a):
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]
        self.parity[a] ^= self.parity[b]
        self.members[a].extend(self.members.pop(b))
        self._emit(event="merge", edge=e, root=a, absorbed=b, parity=self.parity[a])
        return a

    @property
    def done(self) -> bool:
        return not self.odd_roots

    def cluster_of(self, v: int) -> list[int]:
        return sorted(self.members[self.find(v)])

    def grown_edges(self) -> np.ndarray:
        return np.array(self.support) == FULL


def grow_step(state: ClusterState) -> ClusterState:
    """One round of uniform growth of all odd clusters, then fusion (in place)."""
    if state.done:
        return state
    indptr, _, inc_edge = state.graph.csr_lists
    support = state.support
    odd = list(state.odd_roots)
    newly_full: list[int] = []
    changed = False
    for v in (v for r in odd for v in state.members[r]):
        for k in range(indptr[v], indptr[v + 1]):
            e = inc_edge[k]
            if support[e] < FULL:
                support[e] += 1
                changed = True
                if support[e] == FULL:
                    newly_full.append(e)
    state.rounds += 1
    state._emit(event="grow", round=state.rounds, odd_clusters=len(odd), full=sorted(newly_full))
    if not changed:
        raise DecoderError("an odd cluster cannot grow: its component has odd syndrome parity")
    for e in sorted(newly_full):
        state.union(e)
    state.odd_roots = sorted({state.find(r) for r in odd if state.parity[state.find(r)]})
    return state


def peel(
    graph: SyndromeGraph, region: np.ndarray, syndrome: np.ndarray, trace: Tracer | None = None,
) -> np.ndarray:
    """Correction inside ``region`` (edge mask) annihilating ``syndrome`` (vertex mask).

    Raises
    ------
    DecoderError
        If some component of the region holds an odd number of syndrome
        vertices (this includes a syndrome vertex touching no region edge).
    """
    region = np.asarray(region, dtype=bool).tolist()
    odd = np.asarray(syndrome, dtype=bool).tolist()
    indptr, nbr, inc_edge = graph.csr_lists
    n = graph.num_vertices
    seen = [False] * n
    tree_edge = [-1] * n
    tree_parent = [-1] * n
    correction = np.zeros(graph.num_edges, bool)
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        order = [root]
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for k in range(indptr[v], indptr[v + 1]):
                e = inc_edge[k]
                w = nbr[k]
                if region[e] and not seen[w]:
                    seen[w] = True
                    tree_edge[w] = e
                    tree_parent[w] = v
                    order.append(w)
                    queue.append(w)
        for v in reversed(order[1:]):
            if odd[v]:
                e = tree_edge[v]
                correction[e] = True
                odd[v] = False
                odd[tree_parent[v]] ^= True
                if trace is not None:
                    trace({"event": "peel", "edge": e, "from": v, "to": tree_parent[v]})
        if odd[root]:
            raise DecoderError(f"region component of vertex {root} has odd syndrome parity")
    return correction


def decode_python(
    graph: SyndromeGraph, syndrome: np.ndarray, erased: np.ndarray | None = None,
    trace: Tracer | None = None,
) -> tuple[np.ndarray, int]:
    """Correction mask and number of growth rounds."""
    syn = np.asarray(syndrome, dtype=bool)
    if len(syn) != graph.num_vertices:
        raise ValueError(f"syndrome has {len(syn)} vertices, graph has {graph.num_vertices}")
    if int(syn.sum()) % 2:
        raise OddSyndromeError(f"syndrome weight {int(syn.sum())} is odd")
    if erased is not None and len(erased) != graph.num_edges:
        raise ValueError(f"erasure mask has {len(erased)} edges, graph has {graph.num_edges}")
    state = ClusterState.initial(graph, syn, erased, trace)
    while not state.done:
        grow_step(state)
    correction = peel(graph, state.grown_edges(), syn, trace)
    if trace is not None:
        trace({"event": "done", "rounds": state.rounds, "correction": np.flatnonzero(correction).tolist()})
    return correction, state.rounds
