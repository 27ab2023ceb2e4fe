"""Error models and syndromes.

Random numbers
--------------
Every trial owns an independent Philox4x64-10 stream.  The 128-bit key comes
from ``SeedSequence(master_seed, spawn_key=cell_key).generate_state(2,
uint64)``, where ``cell_key`` identifies the sweep cell (see
:func:`cell_key`), and the 256-bit counter starts at ``trial << 192``.  Words
are drawn exactly as ``numpy.random.Philox(key=..., counter=...).random_raw``
produces them, so the compiled core and this module agree bit for bit.

A word ``w`` turns into the uniform ``u = (w >> 11) / 2**53`` and an event with
probability ``p`` happens iff ``u < p``, i.e. ``(w >> 11) < ceil(p * 2**53)``.

Word order for one trial on a graph with ``E`` edges:

* Pauli and weighted models use words ``0..E-1``, one per edge.
* The erasure model uses words ``0..E-1``; the low bit of an erased edge's
  word is its random replacement outcome.
* The mixed model uses ``E`` Pauli words followed by ``E`` erasure words.  An
  erased edge reports its random bit, any other edge its Pauli flip.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .cell_complex import SyndromeGraph

TWO53 = 1 << 53


class RateError(ValueError):
    """A probability outside ``[0, 1]`` (or a weighted rate ``z_q p > 1``)."""


def threshold_word(p: float) -> int:
    """Integer cutoff ``T`` with ``(w >> 11) < T`` iff ``u < p``."""
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise RateError(f"probability {p} outside [0, 1]")
    return math.ceil(p * TWO53)  # p * 2**53 is exact in binary floating point


def cell_key(*parts: Any) -> tuple[int, ...]:
    """Stable spawn key for a sweep cell, from its identifying parameters."""
    text = json.dumps([repr(p) if isinstance(p, float) else p for p in parts], separators=(",", ":"))
    digest = hashlib.sha256(text.encode()).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


def philox_key(master_seed: int, spawn_key: Sequence[int] = ()) -> tuple[int, int]:
    words = np.random.SeedSequence(int(master_seed), spawn_key=tuple(spawn_key)).generate_state(2, np.uint64)
    return int(words[0]), int(words[1])


@dataclass(frozen=True)
class TrialStream:
    """The random stream of one trial: a Philox key plus the trial index."""

    key: tuple[int, int]
    trial: int = 0

    @classmethod
    def from_seed(cls, seed: int, trial: int = 0, spawn_key: Sequence[int] = ()) -> TrialStream:
        return cls(philox_key(seed, spawn_key), int(trial))

    def bit_generator(self) -> np.random.Philox:
        return np.random.Philox(key=np.array(self.key, dtype=np.uint64), counter=self.trial << 192)

    def words(self, n: int) -> np.ndarray:
        return self.bit_generator().random_raw(n)


def _stream(seed: int | TrialStream) -> TrialStream:
    if isinstance(seed, TrialStream):
        return seed
    return TrialStream.from_seed(int(seed))


# -- error patterns --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ErrorPattern:
    """Flip and erasure masks over the edges of one syndrome graph."""

    flipped: np.ndarray
    erased: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.flipped, dtype=bool)
        e = np.asarray(self.erased, dtype=bool)
        if f.shape != e.shape or f.ndim != 1:
            raise ValueError("flipped and erased masks must be 1-d and of equal length")
        f.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "flipped", f)
        object.__setattr__(self, "erased", e)

    @classmethod
    def empty(cls, num_edges: int) -> ErrorPattern:
        return cls(np.zeros(num_edges, bool), np.zeros(num_edges, bool))

    @classmethod
    def from_ids(cls, num_edges: int, flipped: Iterable[int] = (), erased: Iterable[int] = ()) -> ErrorPattern:
        f = np.zeros(num_edges, bool)
        e = np.zeros(num_edges, bool)
        f[list(flipped)] = True
        e[list(erased)] = True
        return cls(f, e)

    @property
    def num_edges(self) -> int:
        return len(self.flipped)

    @property
    def flipped_ids(self) -> list[int]:
        return np.flatnonzero(self.flipped).tolist()

    @property
    def erased_ids(self) -> list[int]:
        return np.flatnonzero(self.erased).tolist()

    def __xor__(self, other: ErrorPattern) -> ErrorPattern:
        return ErrorPattern(self.flipped ^ other.flipped, self.erased | other.erased)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ErrorPattern):
            return NotImplemented
        return np.array_equal(self.flipped, other.flipped) and np.array_equal(self.erased, other.erased)

    __hash__ = None  # type: ignore[assignment]

    def to_json(self) -> dict[str, Any]:
        return {
            "format": "ftcs-error-pattern",
            "version": 1,
            "num_edges": self.num_edges,
            "flipped": self.flipped_ids,
            "erased": self.erased_ids,
        }

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> ErrorPattern:
        if d.get("format") != "ftcs-error-pattern":
            raise ValueError("not an ftcs-error-pattern document")
        n = int(d["num_edges"])
        ids = [int(x) for x in (*d.get("flipped", ()), *d.get("erased", ()))]
        if any(not 0 <= x < n for x in ids):
            raise ValueError("edge id out of range in error pattern")
        return cls.from_ids(n, d.get("flipped", ()), d.get("erased", ()))


@dataclass(frozen=True, eq=False)
class Syndrome:
    """Odd-parity vertices, as a boolean mask."""

    odd: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.odd, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "odd", m)

    @classmethod
    def from_ids(cls, num_vertices: int, ids: Iterable[int]) -> Syndrome:
        m = np.zeros(num_vertices, bool)
        for v in ids:
            m[v] ^= True
        return cls(m)

    @property
    def vertices(self) -> list[int]:
        return np.flatnonzero(self.odd).tolist()

    @property
    def weight(self) -> int:
        return int(self.odd.sum())

    def __xor__(self, other: Syndrome) -> Syndrome:
        return Syndrome(self.odd ^ other.odd)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Syndrome):
            return NotImplemented
        return np.array_equal(self.odd, other.odd)

    __hash__ = None  # type: ignore[assignment]

    def __len__(self) -> int:
        return self.weight


def parity_of(graph: SyndromeGraph, edge_mask: np.ndarray) -> np.ndarray:
    """Vertex parities of an edge set (self-loops cancel)."""
    odd = np.zeros(graph.num_vertices, dtype=np.uint8)
    ends = graph.edges[np.asarray(edge_mask, dtype=bool)]
    np.bitwise_xor.at(odd, ends[:, 0], 1)
    np.bitwise_xor.at(odd, ends[:, 1], 1)
    return odd.astype(bool)


def syndrome_of(graph: SyndromeGraph, pattern: ErrorPattern | np.ndarray) -> Syndrome:
    """Vertices touching an odd number of flipped edges."""
    mask = pattern.flipped if isinstance(pattern, ErrorPattern) else pattern
    if len(mask) != graph.num_edges:
        raise ValueError(f"pattern has {len(mask)} edges, graph has {graph.num_edges}")
    return Syndrome(parity_of(graph, mask))


# -- samplers ----------------------------------------------------------------


def _events(words: np.ndarray, threshold: int | np.ndarray) -> np.ndarray:
    return (words >> np.uint64(11)) < np.asarray(threshold, dtype=np.uint64)


def weighted_thresholds(graph: SyndromeGraph, p: float) -> np.ndarray:
    """Per-edge cutoffs for flip probability ``z_q * p``."""
    if p < 0:
        raise RateError(f"rate {p} is negative")
    rates = graph.valence.astype(float) * float(p)
    worst = float(rates.max(initial=0.0))
    if worst > 1.0:
        e = int(np.argmax(rates))
        raise RateError(f"z_q * p = {worst} > 1 on edge {e} (z_q = {int(graph.valence[e])})")
    return np.array([threshold_word(r) for r in rates], dtype=np.uint64)


def sample_words(
    num_edges: int,
    stream: TrialStream,
    flip_threshold: int | np.ndarray | None,
    erase_threshold: int | None,
) -> ErrorPattern:
    """Core sampler shared by all models (see the module docstring for word order)."""
    n_words = num_edges * ((flip_threshold is not None) + (erase_threshold is not None))
    w = stream.words(n_words) if n_words else np.zeros(0, np.uint64)
    flipped = np.zeros(num_edges, bool)
    erased = np.zeros(num_edges, bool)
    off = 0
    if flip_threshold is not None:
        flipped = _events(w[:num_edges], flip_threshold)
        off = num_edges
    if erase_threshold is not None:
        ew = w[off:off + num_edges]
        erased = _events(ew, erase_threshold)
        coin = (ew & np.uint64(1)).astype(bool)
        flipped = np.where(erased, coin, flipped)
    return ErrorPattern(flipped, erased)


def sample_pauli(graph: SyndromeGraph, p: float, rng_seed: int | TrialStream) -> ErrorPattern:
    """Flip every edge independently with probability ``p``."""
    return sample_words(graph.num_edges, _stream(rng_seed), threshold_word(p), None)


def sample_erasure(graph: SyndromeGraph, p_erase: float, rng_seed: int | TrialStream) -> ErrorPattern:
    """Erase every edge with probability ``p_erase``; erased outcomes are fair coins."""
    return sample_words(graph.num_edges, _stream(rng_seed), None, threshold_word(p_erase))


def sample_weighted(graph: SyndromeGraph, p: float, rng_seed: int | TrialStream) -> ErrorPattern:
    """Flip edge ``e`` with probability ``valence[e] * p``."""
    return sample_words(graph.num_edges, _stream(rng_seed), weighted_thresholds(graph, p), None)


def sample_mixed(graph: SyndromeGraph, p: float, p_erase: float, rng_seed: int | TrialStream) -> ErrorPattern:
    """Pauli flips at rate ``p`` plus erasures at rate ``p_erase``."""
    return sample_words(graph.num_edges, _stream(rng_seed), threshold_word(p), threshold_word(p_erase))
