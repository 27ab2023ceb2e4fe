"""The ``ftcs`` command line.

Exit codes: 0 success, 2 validation failure (bad input, failed check, bad
config), 3 no threshold crossing, 4 I/O error.  Outputs go to ``--out`` or
to ``$FTCS_OUTPUT_DIR`` (default ``./ftcs-out``).
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__

EXIT_OK, EXIT_VALIDATION, EXIT_NO_CROSSING, EXIT_IO = 0, 2, 3, 4
OUTPUT_ENV = "FTCS_OUTPUT_DIR"


class CLIError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        self.code = code
        super().__init__(message)


def _out_dir(arg: str | None) -> Path:
    d = Path(arg or os.environ.get(OUTPUT_ENV) or "ftcs-out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def sha256_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


@dataclass
class RunManifest:
    command: str
    config: dict[str, Any]
    seed: int | None
    started: str
    finished: str | None = None
    outputs: dict[str, dict[str, str]] | None = None
    status: str = "running"

    def to_json(self) -> dict[str, Any]:
        return {
            "format": "ftcs-manifest",
            "version": 1,
            "tool_version": __version__,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "started": self.started,
            "finished": self.finished,
            "status": self.status,
            "outputs": self.outputs or {},
        }

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> RunManifest:
        d = json.loads(Path(path).read_text())
        if d.get("format") != "ftcs-manifest":
            raise CLIError(f"{path} is not an ftcs manifest")
        return cls(d["command"], d["config"], d.get("seed"), d["started"], d.get("finished"),
                   d.get("outputs"), d.get("status", "running"))

    def record(self, name: str, path: Path, base: Path) -> None:
        self.outputs = self.outputs or {}
        try:
            rel = str(path.relative_to(base))
        except ValueError:
            rel = str(path)
        self.outputs[name] = {"path": rel, "sha256": sha256_file(path)}


# -- generate ------------------------------------------------------------------


def cmd_generate(args) -> int:
    from .cell_complex import extract_syndrome_graph
    from .lattices import LatticeSpec, degree_report, generate
    from .serialize import dump

    spec = LatticeSpec(args.lattice, args.L)
    cx = generate(spec)
    g = extract_syndrome_graph(cx, args.which, label=spec.kind, validate=False)
    out = _out_dir(args.out)
    ext = "json" if args.format == "json" else "txt"
    stem = f"{spec.kind}_L{spec.L}"
    cpath, gpath = out / f"{stem}.complex.{ext}", out / f"{stem}.{args.which}-graph.{ext}"
    dump(cx, cpath, args.format)
    dump(g, gpath, args.format)
    rep = degree_report(g)
    rpath = out / f"{stem}.degrees.json"
    rpath.write_text(json.dumps({"histogram": {str(k): v for k, v in rep.histogram.items()},
                                 "mean_degree": rep.mean_degree}, sort_keys=True) + "\n")
    man = RunManifest("generate", {"lattice": spec.kind, "L": spec.L, "format": args.format, "which": args.which},
                      None, _now())
    for name, p in (("complex", cpath), ("graph", gpath), ("degrees", rpath)):
        man.record(name, p, out)
    man.finished, man.status = _now(), "complete"
    man.write(out / f"{stem}.manifest.json")
    print(rep)
    print(f"mean degree {rep.mean_degree:g}; wrote {cpath} and {gpath}", file=sys.stderr)
    return EXIT_OK


# -- verify ------------------------------------------------------------------


def verify_report(cx) -> list[tuple[str, str, str]]:
    """``(check, status, detail)`` rows; status is PASS, FAIL or SKIP."""
    from .cell_complex import StabilizerClosureError, cell_stabilizer, dual_complex
    from .iso import complexes_isomorphic, graphs_isomorphic
    from .cell_complex import extract_syndrome_graph

    rows = []
    issues = cx.check()
    names = [
        ("position-range", "vertex positions lie in [0, L)"),
        ("edge-endpoints", "edge endpoints exist"),
        ("edge-wrap-range", "edge wrap vectors in {-1,0,1}"),
        ("face-closed-walk", "every face is a closed walk"),
        ("cell-faces", "cells reference existing faces"),
        ("cell-closed-surface", "every cell is a closed surface"),
        ("face-in-two-cells", "face belongs to exactly two cells"),
        ("euler-characteristic", "Euler characteristic is 0"),
    ]
    by = {}
    for i in issues:
        by.setdefault(i.invariant, []).append(i)
    for key, title in names:
        found = by.pop(key, [])
        rows.append((title, "FAIL" if found else "PASS", "; ".join(str(i) for i in found[:5])
                     + (f" (+{len(found) - 5} more)" if len(found) > 5 else "")))
    for key, found in by.items():
        rows.append((key, "FAIL", "; ".join(str(i) for i in found[:5])))
    structural = not issues
    bad = []
    if all(0 <= f < len(cx.faces) for fs in cx.cells for f in fs) and not any(
            i.invariant in ("edge-endpoints", "face-closed-walk") for i in issues):
        for c in range(len(cx.cells)):
            try:
                cell_stabilizer(cx, c)
            except StabilizerClosureError as exc:
                bad.append(str(exc))
        rows.append(("cell stabilizers have empty Z support", "FAIL" if bad else "PASS", "; ".join(bad[:5])))
    else:
        rows.append(("cell stabilizers have empty Z support", "SKIP", "structure invalid"))
    if not structural:
        rows.append(("dual complex is valid", "SKIP", "structure invalid"))
        rows.append(("double dual is isomorphic", "SKIP", "structure invalid"))
        rows.append(("self-dual (L=2)", "SKIP", "structure invalid"))
        return rows
    try:
        d = dual_complex(cx)
        dd = dual_complex(d)
        rows.append(("dual complex is valid", "PASS", ""))
    except Exception as exc:  # noqa: BLE001 - reported as a failed check
        rows.append(("dual complex is valid", "FAIL", str(exc)))
        return rows
    rows.append(("double dual is isomorphic", "PASS" if complexes_isomorphic(cx, dd) else "FAIL", ""))
    if cx.L == 2:
        ok = graphs_isomorphic(extract_syndrome_graph(cx, validate=False), extract_syndrome_graph(d, validate=False))
        rows.append(("self-dual (L=2)", "PASS" if ok else "FAIL", "primal and dual syndrome graphs"))
    else:
        rows.append(("self-dual (L=2)", "SKIP", f"L={cx.L}"))
    return rows


def cmd_verify(args) -> int:
    from .lattices import generate
    from .serialize import load_complex

    if args.lattice:
        cx = generate((args.lattice, args.L or 2))
    elif args.path:
        cx = load_complex(args.path)
    else:
        raise CLIError("give a complex file or --lattice")
    rows = verify_report(cx)
    for check, status, detail in rows:
        print(f"{status} {check}" + (f": {detail}" if detail else ""))
    return EXIT_VALIDATION if any(s == "FAIL" for _, s, _ in rows) else EXIT_OK


# -- split -------------------------------------------------------------------


def cmd_split(args) -> int:
    from .lattices import generate
    from .serialize import dump, load_complex
    from .splitting import apply_pipeline, instruction_from_json

    cx = generate((args.lattice, args.L)) if args.lattice else load_complex(args.complex)
    doc = json.loads(Path(args.instructions).read_text())
    items = doc["instructions"] if isinstance(doc, dict) else doc
    instrs = [instruction_from_json(d) for d in items]
    out = apply_pipeline(cx, instrs)
    path = Path(args.out) if args.out else _out_dir(None) / f"split.complex.{'json' if args.format == 'json' else 'txt'}"
    path.parent.mkdir(parents=True, exist_ok=True)
    dump(out, path, args.format)
    v, e, f, c = out.counts
    print(f"applied {len(instrs)} instruction(s): V={v} E={e} F={f} C={c}; wrote {path}")
    return EXIT_OK


# -- decode ------------------------------------------------------------------


def cmd_decode(args) -> int:
    from .cell_complex import CellComplex3, extract_syndrome_graph
    from .decoder import decode, jsonl_tracer
    from .lattices import logical_cut
    from .noise import ErrorPattern, Syndrome, parity_of
    from .serialize import load

    obj = load(args.graph)
    g = extract_syndrome_graph(obj) if isinstance(obj, CellComplex3) else obj
    doc = json.loads(Path(args.pattern).read_text())
    if doc.get("format") == "ftcs-error-pattern":
        pat = ErrorPattern.from_json(doc)
        if pat.num_edges != g.num_edges:
            raise CLIError(f"pattern has {pat.num_edges} edges, graph has {g.num_edges}")
        syn = parity_of(g, pat.flipped)
        flipped = pat.flipped
        erased = pat.erased
    elif "syndrome" in doc:
        syn = Syndrome.from_ids(g.num_vertices, doc["syndrome"]).odd
        erased = np.zeros(g.num_edges, bool)
        erased[list(doc.get("erased", []))] = True
        flipped = None
    else:
        raise CLIError("pattern file must be an ftcs-error-pattern or hold a 'syndrome' list")
    fh = None
    tracer = None
    if args.trace:
        fh = sys.stderr if args.trace == "-" else open(args.trace, "w")
        tracer = jsonl_tracer(fh)
    try:
        corr = decode(g, syn, erased, trace=tracer)
    finally:
        if fh not in (None, sys.stderr):
            fh.close()
    result: dict[str, Any] = {
        "correction": corr.edge_ids,
        "weight": corr.weight,
        "rounds": corr.rounds,
        "annihilates": bool(np.array_equal(parity_of(g, corr.edges), syn)),
    }
    if flipped is not None:
        residual = flipped ^ corr.edges
        cut = logical_cut(g, args.axis).mask_for(g).astype(bool)
        result["residual_syndrome_empty"] = not parity_of(g, residual).any()
        result["logical_failure"] = bool(np.count_nonzero(residual & cut) % 2)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


# -- sweep ---------------------------------------------------------------------


def parse_rates(text: str) -> tuple[float, ...]:
    """``"0.1, 0.2"`` or ``"start:stop:step"`` (inclusive, computed in decimal)."""
    text = text.strip()
    try:
        if ":" in text:
            a, b, s = (Decimal(t.strip()) for t in text.split(":"))
            if s <= 0 or b < a:
                raise CLIError(f"bad rate range {text!r}")
            out, x = [], a
            while x <= b:
                out.append(float(x))
                x += s
            return tuple(out)
        return tuple(float(Decimal(t.strip())) for t in text.replace(";", ",").split(",") if t.strip())
    except InvalidOperation:
        raise CLIError(f"bad rate list {text!r}") from None


def parse_sizes(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.replace(";", ",").split(",") if t.strip())
    except ValueError:
        raise CLIError(f"bad size list {text!r}") from None


SWEEP_KEYS = ("lattice", "sizes", "model", "rates", "trials", "seed", "p_erase", "axis", "chunk")
THRESHOLD_KEYS = ("bootstrap", "bootstrap_seed", "window_points")


def read_config(path: str | Path) -> dict[str, str]:
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise CLIError(f"{path}: {exc}") from None
    if not cp.has_section("sweep"):
        raise CLIError(f"{path}: missing [sweep] section")
    raw = {k: v for k, v in cp.items("sweep")}
    unknown = set(raw) - set(SWEEP_KEYS)
    if unknown:
        raise CLIError(f"{path}: unknown [sweep] keys {sorted(unknown)}")
    if cp.has_section("threshold"):
        t = dict(cp.items("threshold"))
        unknown = set(t) - set(THRESHOLD_KEYS)
        if unknown:
            raise CLIError(f"{path}: unknown [threshold] keys {sorted(unknown)}")
        raw.update({f"threshold.{k}": v for k, v in t.items()})
    return raw


def resolve_sweep(raw: dict[str, str], args) -> dict[str, Any]:
    """Merge config values with command-line overrides into a canonical config."""
    vals = dict(raw)
    for k in SWEEP_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            vals[k] = str(v)
    missing = [k for k in ("lattice", "sizes", "model", "rates", "trials") if k not in vals]
    if missing:
        raise CLIError(f"sweep config lacks {missing}")
    from .lattices import LatticeSpec

    try:
        cfg = {
            "lattice": LatticeSpec(vals["lattice"], 2).kind,
            "sizes": list(parse_sizes(vals["sizes"])),
            "model": vals["model"].strip(),
            "rates": list(parse_rates(vals["rates"])),
            "trials": int(vals["trials"]),
            "seed": int(vals["seed"]) if vals.get("seed") not in (None, "") else None,
            "p_erase": float(vals.get("p_erase", 0) or 0),
            "axis": vals.get("axis", "x").strip(),
            "chunk": int(vals.get("chunk", 2000)),
            "threshold": {
                "bootstrap": int(vals.get("threshold.bootstrap", 500)),
                "bootstrap_seed": int(vals.get("threshold.bootstrap_seed", 0)),
                "window_points": int(vals.get("threshold.window_points", 5)),
            },
        }
    except ValueError as exc:
        raise CLIError(f"bad sweep config: {exc}") from None
    if cfg["seed"] is None:
        cfg["seed"] = int(np.random.SeedSequence().entropy % (1 << 63))
        cfg["seed_drawn"] = True
    return cfg


def _grid(cfg: dict[str, Any]):
    from .experiments import SweepGrid

    return SweepGrid(cfg["lattice"], tuple(cfg["sizes"]), cfg["model"], tuple(cfg["rates"]), cfg["trials"],
                     cfg["seed"], cfg["p_erase"], cfg["axis"])


def run_sweep(cfg: dict[str, Any], out: Path, name: str, workers: int, done=(), progress: bool = True) -> Path:
    """Run a resolved sweep config; writes ``<name>.csv`` and ``<name>.manifest.json`` under ``out``."""
    from .experiments import CSV_FIELDS, sweep

    grid = _grid(cfg)
    csv_path = out / f"{name}.csv"
    man_path = out / f"{name}.manifest.json"
    man = RunManifest("sweep", {k: v for k, v in cfg.items() if k != "seed_drawn"}, cfg["seed"], _now())
    man.outputs = {"csv": {"path": csv_path.name, "sha256": ""}}
    man.write(man_path)
    total = len(grid.sizes) * len(grid.rates)
    t0 = time.time()
    with open(csv_path, "w", newline="") as fh:
        fh.write(",".join(CSV_FIELDS) + "\n")
        fh.flush()
        count = 0

        def on_row(row):
            nonlocal count
            fh.write(",".join(row.csv_values()) + "\n")
            fh.flush()
            count += 1
            if progress:
                print(f"[{count}/{total}] L={row.L} rate={row.swept_rate:g} failures={row.failures}/{row.trials}"
                      f" ({time.time() - t0:.1f}s)", file=sys.stderr)

        sweep(grid, workers=workers, chunk=cfg["chunk"], on_row=on_row, done=done)
    man.record("csv", csv_path, out)
    man.finished, man.status = _now(), "complete"
    man.write(man_path)
    return csv_path


def cmd_sweep(args) -> int:
    from .experiments import SweepResult, default_workers

    done: list = []
    if args.resume or args.replay:
        mpath = Path(args.resume or args.replay)
        man = RunManifest.read(mpath)
        if man.command != "sweep":
            raise CLIError(f"{mpath} is a {man.command} manifest, not a sweep")
        cfg = dict(man.config)
        out = Path(args.out) if args.out else mpath.parent
        out.mkdir(parents=True, exist_ok=True)
        name = args.name or mpath.name.removesuffix(".manifest.json")
        if args.resume:
            old = mpath.parent / man.outputs["csv"]["path"] if man.outputs else None
            if old is not None and old.exists():
                text = old.read_text()
                # keep only complete lines of an interrupted run
                text = text[: text.rfind("\n") + 1]
                done = SweepResult.from_csv(text).rows if text.count("\n") > 1 else []
    else:
        if not args.config and not args.lattice:
            raise CLIError("give a config file or --lattice/--sizes/--model/--rates/--trials")
        raw = read_config(args.config) if args.config else {}
        cfg = resolve_sweep(raw, args)
        out = _out_dir(args.out)
        name = args.name or (Path(args.config).stem if args.config else f"{cfg['lattice']}_{cfg['model']}")
    if cfg.pop("seed_drawn", False):
        print(f"no seed given; drew seed {cfg['seed']}", file=sys.stderr)
    workers = args.workers or default_workers()
    path = run_sweep(cfg, out, name, workers, done, progress=not args.quiet)
    print(path)
    return EXIT_OK


# -- threshold / report ------------------------------------------------------------


def cmd_threshold(args) -> int:
    from .experiments import NoCrossingError, SweepResult, find_threshold, threshold_json

    res = SweepResult.from_csv(Path(args.csv).read_text())
    try:
        est = find_threshold(res, bootstrap=args.bootstrap, seed=args.bootstrap_seed, window_points=args.window)
    except NoCrossingError as exc:
        print(f"error: no threshold crossing: {exc}", file=sys.stderr)
        return EXIT_NO_CROSSING
    text = threshold_json(est)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def report_rows(res) -> list[dict[str, Any]]:
    rows = sorted(res.rows, key=lambda r: (r.lattice, r.model, r.L, r.swept_rate))
    return [{"lattice": r.lattice, "model": r.model, "L": r.L, "rate": r.swept_rate, "p": r.p,
             "p_erase": r.p_erase, "logical_rate": r.rate, "ci_lo": r.ci_lo, "ci_hi": r.ci_hi,
             "trials": r.trials, "failures": r.failures} for r in rows]


def cmd_report(args) -> int:
    import csv

    from .experiments import SweepResult

    rows = []
    for p in args.csv:
        rows += report_rows(SweepResult.from_csv(Path(p).read_text()))
    fields = ["lattice", "model", "L", "rate", "p", "p_erase", "logical_rate", "ci_lo", "ci_hi", "trials", "failures"]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ftcs", description="Fault-tolerant cluster state toolkit")
    ap.add_argument("--version", action="version", version=f"ftcs {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a lattice and write complex, syndrome graph and degree report")
    p.add_argument("lattice", help="cubic, diamond, triamond or doubled-edge")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--which", choices=("primal", "dual"), default="primal")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="check the invariants of a complex")
    p.add_argument("path", nargs="?")
    p.add_argument("--lattice")
    p.add_argument("--L", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("split", help="apply a JSON instruction list to a complex")
    p.add_argument("instructions")
    p.add_argument("complex", nargs="?")
    p.add_argument("--lattice")
    p.add_argument("--L", type=int, default=2)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("decode", help="decode one error pattern or syndrome")
    p.add_argument("graph", help="syndrome graph or complex file")
    p.add_argument("pattern", help="error-pattern JSON, or JSON with 'syndrome' (and 'erased') lists")
    p.add_argument("--trace", help="write a JSON-lines trace to this file ('-' for stderr)")
    p.add_argument("--axis", default="x")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over sizes and rates")
    p.add_argument("config", nargs="?")
    p.add_argument("--out")
    p.add_argument("--name")
    p.add_argument("--workers", type=int)
    p.add_argument("--resume", metavar="MANIFEST", help="continue an interrupted sweep")
    p.add_argument("--replay", metavar="MANIFEST", help="recompute a sweep from its manifest")
    p.add_argument("--quiet", action="store_true")
    for k in SWEEP_KEYS:
        p.add_argument(f"--{k.replace('_', '-')}", dest=k)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("threshold", help="estimate the threshold crossing of a sweep CSV")
    p.add_argument("csv")
    p.add_argument("--bootstrap", type=int, default=500)
    p.add_argument("--bootstrap-seed", type=int, default=0)
    p.add_argument("--window", type=int, default=5, help="rates used by the local fits")
    p.add_argument("--out")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("report", help="long-format table from sweep CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    from .cell_complex import ComplexValidationError
    from .experiments import ExperimentError, NoCrossingError
    from .lattices import LatticeError
    from .serialize import ParseError
    from .splitting import InvalidSplitError

    args = build_parser().parse_args(argv)
    handlers: list[tuple[type, Callable[[Exception], int]]] = [
        (CLIError, lambda e: e.code),  # type: ignore[attr-defined]
        (NoCrossingError, lambda e: EXIT_NO_CROSSING),
        ((ParseError, LatticeError, ComplexValidationError, InvalidSplitError, ExperimentError,
          ValueError, KeyError, json.JSONDecodeError), lambda e: EXIT_VALIDATION),  # type: ignore[arg-type]
        (OSError, lambda e: EXIT_IO),
    ]
    try:
        return int(args.func(args))
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        for kind, code in handlers:
            if isinstance(exc, kind):
                print(f"error: {exc}", file=sys.stderr)
                return code(exc)
        raise


if __name__ == "__main__":
    sys.exit(main())
