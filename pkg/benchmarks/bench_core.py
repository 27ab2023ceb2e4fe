"""Throughput of the compiled core against the pure-Python decoder.

Runs the same Monte Carlo trials (sample, decode, check the cut) on both
backends, confirms they agree trial by trial and prints trials per second.

    python benchmarks/bench_core.py --lattice cubic --L 8 --model pauli --rate 0.026
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ftcs.decoder import run_trials
from ftcs.decoder.backend import available_backends
from ftcs.lattices import logical_cut, syndrome_graph
from ftcs.noise import cell_key, philox_key, threshold_word, weighted_thresholds


def thresholds(graph, model: str, rate: float):
    if model == "pauli":
        return np.full(graph.num_edges, threshold_word(rate), np.uint64), None
    if model == "erasure":
        return None, threshold_word(rate)
    if model == "weighted":
        return weighted_thresholds(graph, rate), None
    raise SystemExit(f"unknown model {model!r}")


def timed(graph, cut, key, trials, ft, et, backend):
    t0 = time.perf_counter()
    flags = run_trials(graph, cut, key, 0, trials, ft, et, backend=backend, per_trial=True)
    return flags, time.perf_counter() - t0


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lattice", default="cubic")
    ap.add_argument("--L", type=int, default=8)
    ap.add_argument("--model", default="pauli", choices=("pauli", "erasure", "weighted"))
    ap.add_argument("--rate", type=float, default=0.026)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--python-trials", type=int, default=200, help="the Python backend is slow; use fewer trials")
    args = ap.parse_args(argv)

    g = syndrome_graph(args.lattice, args.L)
    cut = logical_cut(g).mask_for(g)
    key = philox_key(1, cell_key("bench", args.lattice, args.L, args.model, args.rate))
    ft, et = thresholds(g, args.model, args.rate)
    print(f"{args.lattice} L={args.L} ({g.num_vertices} vertices, {g.num_edges} edges) {args.model} rate={args.rate}")

    py, py_s = timed(g, cut, key, args.python_trials, ft, et, "python")
    print(f"  python   {args.python_trials / py_s:10.1f} trials/s  ({args.python_trials} trials, {py_s:.2f}s)")
    if "compiled" not in available_backends():
        print("  compiled core not available; build it with `pip install -e . --no-build-isolation`")
        return
    cc, cc_s = timed(g, cut, key, args.trials, ft, et, "compiled")
    print(f"  compiled {args.trials / cc_s:10.1f} trials/s  ({args.trials} trials, {cc_s:.2f}s)")
    n = min(args.trials, args.python_trials)
    agree = np.array_equal(cc[:n], py[:n])
    print(f"  speed-up {(args.trials / cc_s) / (args.python_trials / py_s):.1f}x; outcomes agree on {n} trials: {agree}")
    if not agree:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
