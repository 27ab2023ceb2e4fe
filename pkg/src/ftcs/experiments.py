"""Monte Carlo trials, sweeps over (size, rate) grids and threshold crossings.

Determinism
-----------
A sweep cell is identified by ``(lattice, L, model, p, p_erase)``.  Its trials
draw from Philox streams keyed by ``SeedSequence(seed, spawn_key=cell_key(...))``
with the trial index as counter (see :mod:`ftcs.noise`), so a cell's result
depends only on its parameters, the master seed and the trial count, not on
chunking, worker count or execution order.

CSV schema (version 1)
----------------------
``lattice,L,model,p,p_erase,trials,failures,rate,ci_lo,ci_hi,seed``, one row
per cell in grid order (sizes outer, rates inner).  ``p`` is the Pauli rate
(the rate unit for ``weighted``) and ``p_erase`` the erasure rate; the unused
one is 0.  ``ci_lo``/``ci_hi`` bound a Wilson 95% interval.  Floats are
written with ``repr`` so they read back exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np
from scipy.stats import binomtest

from . import __version__
from .cell_complex import SyndromeGraph
from .decoder import DecoderError, run_trials as _run_trials
from .lattices import AXES, LatticeSpec, logical_cut, syndrome_graph
from .noise import (
    RateError,
    TrialStream,
    cell_key,
    philox_key,
    sample_words,
    threshold_word,
    weighted_thresholds,
)

MODELS = ("pauli", "erasure", "weighted", "mixed")
CSV_FIELDS = ("lattice", "L", "model", "p", "p_erase", "trials", "failures", "rate", "ci_lo", "ci_hi", "seed")
CSV_VERSION = 1
DEFAULT_CHUNK = 2000


class ExperimentError(RuntimeError):
    """A trial failed inside a sweep; ``cell`` names the offending grid cell."""

    def __init__(self, cell: dict, cause: Exception):
        self.cell = cell
        self.cause = cause
        super().__init__(f"cell {cell}: {cause}")


class NoCrossingError(ValueError):
    """The curves do not bracket a crossing inside the swept grid."""


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class TrialConfig:
    """Everything that determines the outcome of one sweep cell."""

    lattice: LatticeSpec
    model: str
    p: float = 0.0
    p_erase: float = 0.0
    trials: int = 1000
    seed: int = 0
    axis: str = "x"

    def __post_init__(self):
        if not isinstance(self.lattice, LatticeSpec):
            object.__setattr__(self, "lattice", LatticeSpec(*self.lattice))
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if int(self.trials) < 1:
            raise ValueError("trials must be ≥ 1")
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {sorted(AXES)}")
        p, pe = float(self.p), float(self.p_erase)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p_erase", pe)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))
        if self.model in ("pauli", "mixed"):
            threshold_word(p)
        if self.model in ("erasure", "mixed"):
            threshold_word(pe)
        if self.model == "weighted" and p < 0:
            raise RateError(f"rate {p} is negative")
        if self.model == "pauli" and pe:
            raise ValueError("pauli model takes no erasure rate")
        if self.model == "erasure" and p:
            raise ValueError("erasure model takes no Pauli rate")

    @property
    def rate(self) -> float:
        """The swept rate of this model."""
        return self.p_erase if self.model == "erasure" else self.p

    @property
    def key(self) -> tuple[int, int]:
        ck = cell_key(self.lattice.kind, self.lattice.L, self.model, self.p, self.p_erase)
        return philox_key(self.seed, ck)

    def thresholds(self, graph: SyndromeGraph) -> tuple[np.ndarray | None, int | None]:
        """Per-edge flip cutoffs and the erasure cutoff for the sampler."""
        flip = erase = None
        if self.model in ("pauli", "mixed"):
            flip = np.full(graph.num_edges, threshold_word(self.p), dtype=np.uint64)
        elif self.model == "weighted":
            flip = weighted_thresholds(graph, self.p)
        if self.model in ("erasure", "mixed"):
            erase = threshold_word(self.p_erase)
        return flip, erase


def model_rates(model: str, rate: float, p_erase: float = 0.0) -> tuple[float, float]:
    """``(p, p_erase)`` for a model swept at ``rate``."""
    if model == "erasure":
        return 0.0, float(rate)
    if model == "mixed":
        return float(rate), float(p_erase)
    return float(rate), 0.0


# -- single trials -------------------------------------------------------------


def run_trial(graph: SyndromeGraph, cut, config: TrialConfig, trial: int, backend: str | None = None) -> bool:
    """Whether trial ``trial`` of ``config`` ends in a logical failure."""
    mask = cut.mask_for(graph) if hasattr(cut, "mask_for") else np.asarray(cut, dtype=np.uint8)
    flip, erase = config.thresholds(graph)
    return bool(_run_trials(graph, mask, config.key, trial, trial + 1, flip, erase, backend=backend, per_trial=True)[0])


def sample_trial(graph: SyndromeGraph, config: TrialConfig, trial: int):
    """The error pattern trial ``trial`` of ``config`` decodes."""
    flip, erase = config.thresholds(graph)
    return sample_words(graph.num_edges, TrialStream(config.key, trial), flip, erase)


def count_failures(config: TrialConfig, start: int = 0, stop: int | None = None, backend: str | None = None) -> int:
    """Failures among trials ``start..stop-1`` of a cell."""
    stop = config.trials if stop is None else stop
    g = syndrome_graph(config.lattice.kind, config.lattice.L)
    cut = logical_cut(g, config.axis).mask_for(g)
    flip, erase = config.thresholds(g)
    return int(_run_trials(g, cut, config.key, start, stop, flip, erase, backend=backend))


def wilson_interval(failures: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(failures), int(trials)).proportion_ci(confidence, method="wilson")
    return max(0.0, float(ci.low)), min(1.0, float(ci.high))


# -- sweeps ------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    lattice: str
    L: int
    model: str
    p: float
    p_erase: float
    trials: int
    failures: int
    rate: float
    ci_lo: float
    ci_hi: float
    seed: int

    @classmethod
    def from_counts(cls, cfg: TrialConfig, failures: int) -> SweepRow:
        if not 0 <= failures <= cfg.trials:
            raise ValueError("failures must lie in [0, trials]")
        lo, hi = wilson_interval(failures, cfg.trials)
        return cls(cfg.lattice.kind, cfg.lattice.L, cfg.model, cfg.p, cfg.p_erase, cfg.trials,
                   int(failures), failures / cfg.trials, lo, hi, cfg.seed)

    @property
    def swept_rate(self) -> float:
        return self.p_erase if self.model == "erasure" else self.p

    def cell(self) -> tuple:
        return (self.lattice, self.L, self.model, self.p, self.p_erase, self.trials, self.seed)

    def csv_values(self) -> list[str]:
        return [self.lattice, str(self.L), self.model, repr(self.p), repr(self.p_erase), str(self.trials),
                str(self.failures), repr(self.rate), repr(self.ci_lo), repr(self.ci_hi), str(self.seed)]


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian grid of sizes and rates for one lattice and error model."""

    lattice: str
    sizes: tuple[int, ...]
    model: str
    rates: tuple[float, ...]
    trials: int
    seed: int
    p_erase: float = 0.0  # fixed erasure rate of the mixed model
    axis: str = "x"

    def __post_init__(self):
        object.__setattr__(self, "lattice", LatticeSpec(self.lattice, 2).kind)
        object.__setattr__(self, "sizes", tuple(int(x) for x in self.sizes))
        object.__setattr__(self, "rates", tuple(float(x) for x in self.rates))
        if not self.sizes or not self.rates:
            raise ValueError("grid needs at least one size and one rate")
        list(self.configs())  # validates every cell

    def configs(self) -> Iterator[TrialConfig]:
        for L in self.sizes:
            for r in self.rates:
                p, pe = model_rates(self.model, r, self.p_erase)
                yield TrialConfig(LatticeSpec(self.lattice, L), self.model, p, pe, self.trials, self.seed, self.axis)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        d["rates"] = list(self.rates)
        return d


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in self.rows:
            w.writerow(r.csv_values())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> SweepResult:
        rd = csv.DictReader(io.StringIO(text))
        if tuple(rd.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"CSV header must be {','.join(CSV_FIELDS)}")
        rows = []
        for n, d in enumerate(rd, 2):
            try:
                rows.append(SweepRow(
                    d["lattice"], int(d["L"]), d["model"], float(d["p"]), float(d["p_erase"]), int(d["trials"]),
                    int(d["failures"]), float(d["rate"]), float(d["ci_lo"]), float(d["ci_hi"]), int(d["seed"])))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"line {n}: {exc}") from None
        return cls(rows)

    def sizes(self) -> list[int]:
        return sorted({r.L for r in self.rows})

    def curve(self, L: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(rates, failures, trials)`` of size ``L``, sorted by rate (cells pooled by rate)."""
        pooled: dict[float, list[int]] = {}
        for r in self.rows:
            if r.L == L:
                acc = pooled.setdefault(r.swept_rate, [0, 0])
                acc[0] += r.failures
                acc[1] += r.trials
        xs = sorted(pooled)
        return (np.array(xs), np.array([pooled[x][0] for x in xs], float), np.array([pooled[x][1] for x in xs], float))


def _chunk_task(args):
    cfg, start, stop, backend = args
    return count_failures(cfg, start, stop, backend)


def sweep(
    grid: SweepGrid,
    *,
    workers: int = 1,
    chunk: int = DEFAULT_CHUNK,
    on_row: Callable[[SweepRow], None] | None = None,
    done: Iterable[SweepRow] = (),
    backend: str | None = None,
) -> SweepResult:
    """Run every cell of ``grid``; rows are emitted in grid order as they complete.

    ``done`` holds rows from an earlier, interrupted run; cells found there
    are not recomputed.  Results are identical for any ``workers``/``chunk``.
    """
    previous = {r.cell(): r for r in done}
    cfgs = list(grid.configs())
    rows: list[SweepRow | None] = [None] * len(cfgs)
    todo = []
    for i, c in enumerate(cfgs):
        key = (c.lattice.kind, c.lattice.L, c.model, c.p, c.p_erase, c.trials, c.seed)
        if key in previous:
            rows[i] = previous[key]
        else:
            todo.append(i)
    tasks = [(i, s, min(s + chunk, cfgs[i].trials)) for i in todo for s in range(0, cfgs[i].trials, chunk)]
    counts = {i: 0 for i in todo}
    pending = {i: math.ceil(cfgs[i].trials / chunk) for i in todo}
    emitted = 0

    def flush():
        nonlocal emitted
        while emitted < len(rows) and rows[emitted] is not None:
            if on_row is not None:
                on_row(rows[emitted])  # type: ignore[arg-type]
            emitted += 1

    def finish(i, n):
        counts[i] += n
        pending[i] -= 1
        if pending[i] == 0:
            rows[i] = SweepRow.from_counts(cfgs[i], counts[i])
            flush()

    def describe(i):
        c = cfgs[i]
        return {"lattice": c.lattice.kind, "L": c.lattice.L, "model": c.model, "p": c.p, "p_erase": c.p_erase}

    flush()
    if workers <= 1 or len(tasks) <= 1:
        for i, s, e in tasks:
            try:
                n = count_failures(cfgs[i], s, e, backend)
            except (DecoderError, RuntimeError, ValueError) as exc:
                raise ExperimentError(describe(i), exc) from exc
            finish(i, n)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [(i, pool.submit(_chunk_task, (cfgs[i], s, e, backend))) for i, s, e in tasks]
            for i, f in futs:  # collected in submission order, so rows stream in grid order
                try:
                    n = f.result()
                except (DecoderError, RuntimeError, ValueError) as exc:
                    raise ExperimentError(describe(i), exc) from exc
                finish(i, n)
    return SweepResult([r for r in rows if r is not None])


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


# -- threshold estimation ----------------------------------------------------


@dataclass(frozen=True)
class ThresholdEstimate:
    crossing: float
    uncertainty: float
    method: str
    sizes: tuple[int, ...]
    bootstrap: int
    bootstrap_seed: int
    window: tuple[float, float]
    bootstrap_failures: int = 0
    lattice: str = ""
    model: str = ""

    def to_json(self) -> dict:
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        d["window"] = list(self.window)
        d["format"] = "ftcs-threshold"
        d["version"] = 1
        d["tool_version"] = __version__
        return d

    @classmethod
    def from_json(cls, d: dict) -> ThresholdEstimate:
        keys = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        keys["sizes"] = tuple(keys["sizes"])
        keys["window"] = tuple(keys["window"])
        return cls(**keys)

    def __str__(self) -> str:
        return f"{self.crossing:.4f} ± {self.uncertainty:.4f}"


METHOD = "two-largest-L local quadratic intersection; binomial bootstrap"
_FLOOR = 1e-12


def _poly_crossing(x: np.ndarray, ya: np.ndarray, yb: np.ndarray, guess: float) -> float | None:
    deg = min(2, len(x) - 1)
    diff = np.polyfit(x, yb, deg) - np.polyfit(x, ya, deg)
    roots = np.roots(diff) if np.any(diff[:-1]) else np.array([])
    lo, hi = x.min(), x.max()
    real = [float(r.real) for r in np.atleast_1d(roots) if abs(r.imag) < 1e-12 and lo <= r.real <= hi]
    if not real:
        return None
    return min(real, key=lambda r: abs(r - guess))


def _crude_crossing(x: np.ndarray, ya: np.ndarray, yb: np.ndarray) -> float | None:
    d = yb - ya
    for i in range(len(x) - 1):
        if d[i] <= 0 < d[i + 1] or d[i] < 0 <= d[i + 1]:
            t = -d[i] / (d[i + 1] - d[i])
            return float(x[i] + t * (x[i + 1] - x[i]))
    return None


def crossing_from_curves(
    curves: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray | None]],
    *,
    bootstrap: int = 500,
    seed: int = 0,
    window_points: int = 5,
    lattice: str = "",
    model: str = "",
) -> ThresholdEstimate:
    """Crossing of the two largest sizes from ``{L: (rates, logical_rates, trials)}``.

    ``trials`` may be ``None`` for exact curves, in which case no bootstrap is
    possible and the uncertainty is a numerical floor.
    """
    sizes = sorted(curves)
    if len(sizes) < 2:
        raise NoCrossingError("need at least two sizes")
    small, (la, lb) = sizes[0], sizes[-2:]
    xa, ya, na = (np.asarray(v, float) if v is not None else None for v in curves[la])
    xb, yb, nb = (np.asarray(v, float) if v is not None else None for v in curves[lb])
    xs, ys, _ = (np.asarray(v, float) if v is not None else None for v in curves[small])
    if not (np.array_equal(xa, xb) and np.array_equal(xa, xs)):
        raise NoCrossingError("all sizes must share the same rate grid")
    if len(xa) < 3:
        raise NoCrossingError("need at least three rates")
    order = " ".join(
        f"p={x:g}: " + " ".join(f"L{L}={curves[L][1][i]:.4g}" for L in sizes) for i, x in enumerate(xa))
    if not (yb[0] < ys[0] and yb[-1] > ys[-1]) and not (yb[0] < ya[0] and yb[-1] > ya[-1]):
        raise NoCrossingError(
            f"largest size L={lb} is not below the smaller sizes at the lowest rate and above them at the "
            f"highest rate; observed {order}. Widen the rate grid around the expected threshold.")
    guess = _crude_crossing(xa, ya, yb)
    if guess is None:
        raise NoCrossingError(f"curves L={la} and L={lb} do not cross; observed {order}")
    k = min(max(3, window_points), len(xa))
    idx = np.sort(np.argsort(np.abs(xa - guess), kind="stable")[:k])
    x = xa[idx]
    est = _poly_crossing(x, ya[idx], yb[idx], guess)
    if est is None:
        raise NoCrossingError(f"local fits of L={la} and L={lb} do not intersect inside [{x.min()}, {x.max()}]")
    samples: list[float] = []
    misses = 0
    if na is not None and nb is not None and bootstrap > 0:
        rng = np.random.default_rng(seed)
        for _ in range(bootstrap):
            ra = rng.binomial(na[idx].astype(np.int64), np.clip(ya[idx], 0, 1)) / na[idx]
            rb = rng.binomial(nb[idx].astype(np.int64), np.clip(yb[idx], 0, 1)) / nb[idx]
            c = _poly_crossing(x, ra, rb, est)
            if c is None:
                misses += 1
            else:
                samples.append(c)
    unc = float(np.std(samples, ddof=1)) if len(samples) > 1 else 0.0
    return ThresholdEstimate(
        float(est), max(unc, _FLOOR), METHOD, (la, lb), int(bootstrap) if na is not None else 0, int(seed),
        (float(x.min()), float(x.max())), misses, lattice, model)


def find_threshold(
    result: SweepResult, *, bootstrap: int = 500, seed: int = 0, window_points: int = 5,
) -> ThresholdEstimate:
    """Threshold crossing of a sweep (two largest sizes, local quadratic, bootstrap)."""
    if not result.rows:
        raise NoCrossingError("empty sweep")
    kinds = {(r.lattice, r.model) for r in result.rows}
    if len(kinds) != 1:
        raise NoCrossingError(f"sweep mixes lattices/models {sorted(kinds)}")
    curves = {}
    for L in result.sizes():
        x, f, n = result.curve(L)
        curves[L] = (x, f / n, n)
    lattice, model = kinds.pop()
    return crossing_from_curves(curves, bootstrap=bootstrap, seed=seed, window_points=window_points,
                                lattice=lattice, model=model)


def threshold_json(est: ThresholdEstimate) -> str:
    return json.dumps(est.to_json(), indent=2, sort_keys=True) + "\n"
