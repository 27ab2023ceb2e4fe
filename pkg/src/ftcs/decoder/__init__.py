"""Union-find decoding with erasure support.

``decode`` is the main entry point.  The compiled core is used when
available (see :mod:`ftcs.decoder.backend`); tracing always runs the
pure-Python reference implementation, which gives the same corrections.
"""

from __future__ import annotations

import json
import weakref
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from ..cell_complex import SyndromeGraph
from ..noise import Syndrome, TrialStream, parity_of, sample_words
from .backend import BACKEND, available_backends, core, resolve
from .union_find import (
    ClusterState,
    DecoderError,
    OddSyndromeError,
    Tracer,
    decode_python,
    grow_step,
)
from .union_find import peel as _peel

__all__ = [
    "BACKEND",
    "ClusterState",
    "Correction",
    "DecodeOutcome",
    "DecoderError",
    "OddSyndromeError",
    "available_backends",
    "decode",
    "decode_outcome",
    "grow_step",
    "jsonl_tracer",
    "peel",
    "run_trials",
]


@dataclass(frozen=True, eq=False)
class Correction:
    """Edge mask of a correction."""

    edges: np.ndarray
    rounds: int = 0

    @property
    def edge_ids(self) -> list[int]:
        return np.flatnonzero(self.edges).tolist()

    @property
    def weight(self) -> int:
        return int(self.edges.sum())

    def __contains__(self, e: int) -> bool:
        return bool(self.edges[e])


@dataclass(frozen=True, eq=False)
class DecodeOutcome:
    """A correction plus its diagnosis against a known error."""

    correction: Correction
    residual: np.ndarray  # error ^ correction
    residual_syndrome_empty: bool
    logical_failure: bool | None


def _vertex_mask(graph: SyndromeGraph, syndrome) -> np.ndarray:
    if isinstance(syndrome, Syndrome):
        m = syndrome.odd
    else:
        a = np.asarray(syndrome)
        if a.dtype == bool and len(a) == graph.num_vertices:
            m = a
        else:
            m = Syndrome.from_ids(graph.num_vertices, (int(v) for v in a.ravel())).odd
    if len(m) != graph.num_vertices:
        raise ValueError(f"syndrome has {len(m)} vertices, graph has {graph.num_vertices}")
    return np.asarray(m, dtype=bool)


def _edge_mask(graph: SyndromeGraph, edges) -> np.ndarray:
    if edges is None:
        return np.zeros(graph.num_edges, bool)
    a = np.asarray(edges)
    if a.dtype == bool:
        if len(a) != graph.num_edges:
            raise ValueError(f"edge mask has {len(a)} entries, graph has {graph.num_edges}")
        return a
    m = np.zeros(graph.num_edges, bool)
    ids = a.astype(np.int64).ravel()
    if len(ids) and (ids.min() < 0 or ids.max() >= graph.num_edges):
        raise ValueError("edge id out of range")
    m[ids] = True
    return m


_decoders: dict[int, object] = {}


def _compiled_decoder(graph: SyndromeGraph):
    key = id(graph)
    dec = _decoders.get(key)
    if dec is None:
        indptr, nbr, inc = graph.csr
        dec = core().Decoder(indptr, nbr, inc, graph.edges)
        _decoders[key] = dec
        weakref.finalize(graph, _decoders.pop, key, None)
    return dec


def decode(
    graph: SyndromeGraph,
    syndrome: Syndrome | np.ndarray | Iterable[int],
    erased: np.ndarray | Iterable[int] | None = None,
    *,
    trace: Tracer | None = None,
    backend: str | None = None,
) -> Correction:
    """Union-find correction for a syndrome, given the erased edges.

    Parameters
    ----------
    syndrome
        A :class:`~ftcs.noise.Syndrome`, a boolean vertex mask or vertex ids.
    erased
        Boolean edge mask or edge ids (``None`` for no erasure).
    trace
        Callback receiving one dict per grow/merge/peel event; forces the
        Python backend.

    Raises
    ------
    OddSyndromeError
        If the syndrome has odd weight.
    """
    syn = _vertex_mask(graph, syndrome)
    er = _edge_mask(graph, erased)
    if int(syn.sum()) % 2:
        raise OddSyndromeError(f"syndrome weight {int(syn.sum())} is odd")
    use = "python" if trace is not None else resolve(backend)
    if use == "compiled":
        dec = _compiled_decoder(graph)
        try:
            corr = dec.decode(syn, er)
        except RuntimeError as exc:
            raise DecoderError(str(exc)) from None
        rounds = int(dec.last_rounds)
    else:
        corr, rounds = decode_python(graph, syn, er, trace)
    out = Correction(corr, rounds)
    if not np.array_equal(parity_of(graph, corr), syn):
        raise DecoderError("correction does not annihilate the syndrome")
    return out


def decode_outcome(
    graph: SyndromeGraph, flipped: np.ndarray, erased: np.ndarray | None = None,
    cut_mask: np.ndarray | None = None, **kw,
) -> DecodeOutcome:
    """Decode the syndrome of ``flipped`` and diagnose the residual."""
    flipped = _edge_mask(graph, flipped)
    corr = decode(graph, parity_of(graph, flipped), erased, **kw)
    residual = flipped ^ corr.edges
    empty = not parity_of(graph, residual).any()
    fail = None if cut_mask is None else bool(np.count_nonzero(residual & np.asarray(cut_mask, bool)) % 2)
    return DecodeOutcome(corr, residual, empty, fail)


def peel(graph: SyndromeGraph, region, syndrome, trace: Tracer | None = None) -> Correction:
    """Peeling decoder restricted to ``region`` (see :func:`union_find.peel`)."""
    return Correction(_peel(graph, _edge_mask(graph, region), _vertex_mask(graph, syndrome), trace))


def jsonl_tracer(fh: IO[str]) -> Tracer:
    """Tracer writing one JSON object per line to ``fh``."""

    def emit(event: dict) -> None:
        fh.write(json.dumps(event, separators=(",", ":")) + "\n")

    return emit


def run_trials(
    graph: SyndromeGraph,
    cut_mask: np.ndarray,
    key: tuple[int, int],
    start: int,
    stop: int,
    flip_thresholds: np.ndarray | None = None,
    erase_threshold: int | None = None,
    *,
    backend: str | None = None,
    per_trial: bool = False,
) -> int | np.ndarray:
    """Failure count (or per-trial failure flags) for trials ``start..stop-1``.

    Each trial samples from :class:`~ftcs.noise.TrialStream` ``(key, t)``,
    decodes, asserts that the residual has empty syndrome and reports whether
    it crosses the cut an odd number of times.
    """
    cut = np.ascontiguousarray(cut_mask, dtype=np.uint8)
    ft = None if flip_thresholds is None else np.ascontiguousarray(flip_thresholds, dtype=np.uint64)
    if resolve(backend) == "compiled":
        dec = _compiled_decoder(graph)
        out = np.zeros(stop - start, np.uint8) if per_trial else None
        try:
            n = dec.run_trials(cut, key[0], key[1], start, stop, ft, erase_threshold, out)
        except RuntimeError as exc:
            raise DecoderError(str(exc)) from None
        return out.astype(bool) if per_trial else int(n)
    flags = np.zeros(stop - start, bool)
    cutb = cut.astype(bool)
    for t in range(start, stop):
        pat = sample_words(graph.num_edges, TrialStream(tuple(key), t), ft, erase_threshold)
        syn = parity_of(graph, pat.flipped)
        if int(syn.sum()) % 2:
            raise DecoderError(f"trial {t}: sampled syndrome has odd weight")
        corr, _ = decode_python(graph, syn, pat.erased)
        residual = pat.flipped ^ corr
        if parity_of(graph, residual).any():
            raise DecoderError(f"trial {t}: correction does not annihilate the syndrome")
        flags[t - start] = bool(np.count_nonzero(residual & cutb) % 2)
    return flags if per_trial else int(flags.sum())
