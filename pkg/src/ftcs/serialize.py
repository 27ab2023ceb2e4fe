"""Line-oriented text and JSON formats for complexes and syndrome graphs.

Text format
-----------
A header line names the object and format version, ``#`` starts a comment and
blank lines are ignored.  Every other line is ``<keyword> <id> <fields...>``,
with ids listed in order starting from 0.  Rationals are written ``p/q`` (or
as integers).

Complex (``ftcs-complex 1``)::

    L <int>
    vertex <id> <x> <y> <z>
    edge <id> <u> <v> <wx> <wy> <wz>
    face <id> <+e|-e> ...          # closed oriented edge walk
    cell <id> <face> ...
    cellpos <id> <x> <y> <z>

Syndrome graph (``ftcs-syndrome-graph 1``)::

    L <int>
    label <text>                   # optional
    vertices <count>
    edge <id> <u> <v> <cx> <cy> <cz> <valence>

JSON mirror
-----------
An object with ``"format"`` (``"ftcs-complex"`` or ``"ftcs-syndrome-graph"``),
``"version"`` and the same fields: vertex and cell positions are lists of
rational strings, edges are ``[u, v, [wx, wy, wz]]``, faces are lists of
``[edge, sign]`` pairs.

Both formats round-trip exactly, and readers do not validate the complex, so
broken fixtures can be loaded and diagnosed.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal

import numpy as np

from .cell_complex import CellComplex3, Edge, SyndromeGraph

FORMAT_VERSION = 1
COMPLEX_TAG = "ftcs-complex"
GRAPH_TAG = "ftcs-syndrome-graph"
Format = Literal["text", "json"]


class ParseError(ValueError):
    """Malformed input; ``line`` is 1-based (``None`` for JSON structure errors)."""

    def __init__(self, message: str, line: int | None = None, source: str = ""):
        self.line = line
        self.source = source
        where = f"{source}:" if source else ""
        where += f"{line}: " if line is not None else (" " if source else "")
        super().__init__(f"{where}{message}")


def _q(x: Fraction) -> str:
    return str(Fraction(x))


# -- writers -------------------------------------------------------------


def complex_to_text(cx: CellComplex3) -> str:
    out = [f"{COMPLEX_TAG} {FORMAT_VERSION}", f"L {cx.L}"]
    out += [f"vertex {i} " + " ".join(map(_q, p)) for i, p in enumerate(cx.vertices)]
    out += [f"edge {i} {e.u} {e.v} " + " ".join(map(str, e.wrap)) for i, e in enumerate(cx.edges)]
    out += [
        f"face {i} " + " ".join(f"{'+' if s > 0 else '-'}{e}" for e, s in w)
        for i, w in enumerate(cx.faces)
    ]
    out += [f"cell {i} " + " ".join(map(str, fs)) for i, fs in enumerate(cx.cells)]
    out += [f"cellpos {i} " + " ".join(map(_q, p)) for i, p in enumerate(cx.cell_positions)]
    return "\n".join(out) + "\n"


def complex_to_dict(cx: CellComplex3) -> dict[str, Any]:
    return {
        "format": COMPLEX_TAG,
        "version": FORMAT_VERSION,
        "L": cx.L,
        "vertices": [[_q(c) for c in p] for p in cx.vertices],
        "edges": [[e.u, e.v, list(e.wrap)] for e in cx.edges],
        "faces": [[[e, s] for e, s in w] for w in cx.faces],
        "cells": [list(fs) for fs in cx.cells],
        "cell_positions": [[_q(c) for c in p] for p in cx.cell_positions],
    }


def graph_to_text(g: SyndromeGraph) -> str:
    out = [f"{GRAPH_TAG} {FORMAT_VERSION}", f"L {g.L}"]
    if g.label:
        out.append(f"label {g.label}")
    out.append(f"vertices {g.num_vertices}")
    for i in range(g.num_edges):
        u, v = g.edges[i]
        c = " ".join(str(int(x)) for x in g.crossings[i])
        out.append(f"edge {i} {int(u)} {int(v)} {c} {int(g.valence[i])}")
    return "\n".join(out) + "\n"


def graph_to_dict(g: SyndromeGraph) -> dict[str, Any]:
    return {
        "format": GRAPH_TAG,
        "version": FORMAT_VERSION,
        "L": g.L,
        "label": g.label,
        "num_vertices": g.num_vertices,
        "edges": g.edges.tolist(),
        "crossings": g.crossings.tolist(),
        "valence": g.valence.tolist(),
    }


def _json(d: dict) -> str:
    return json.dumps(d, separators=(",", ":")) + "\n"


def dumps(obj: CellComplex3 | SyndromeGraph, fmt: Format = "text") -> str:
    if isinstance(obj, CellComplex3):
        return complex_to_text(obj) if fmt == "text" else _json(complex_to_dict(obj))
    if isinstance(obj, SyndromeGraph):
        return graph_to_text(obj) if fmt == "text" else _json(graph_to_dict(obj))
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dump(obj: CellComplex3 | SyndromeGraph, path: str | Path, fmt: Format = "text") -> None:
    Path(path).write_text(dumps(obj, fmt))


# -- readers -------------------------------------------------------------


def _frac(tok: str, line: int, source: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad rational {tok!r}", line, source) from None


def _int(tok: str, line: int, source: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"bad integer {tok!r}", line, source) from None


def _lines(text: str):
    for n, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield n, body.split()


def _header(text: str, source: str) -> tuple[str, int]:
    for n, toks in _lines(text):
        if len(toks) != 2 or toks[0] not in (COMPLEX_TAG, GRAPH_TAG):
            raise ParseError(f"expected '{COMPLEX_TAG} 1' or '{GRAPH_TAG} 1' header", n, source)
        if _int(toks[1], n, source) != FORMAT_VERSION:
            raise ParseError(f"unsupported format version {toks[1]}", n, source)
        return toks[0], n
    raise ParseError("empty input", None, source)


def complex_from_text(text: str, source: str = "") -> CellComplex3:
    tag, hdr = _header(text, source)
    if tag != COMPLEX_TAG:
        raise ParseError(f"expected a complex, found {tag}", hdr, source)
    L = None
    tables: dict[str, list] = {k: [] for k in ("vertex", "edge", "face", "cell", "cellpos")}
    for n, toks in _lines(text):
        if n == hdr:
            continue
        key = toks[0]
        if key == "L":
            if len(toks) != 2:
                raise ParseError("expected 'L <int>'", n, source)
            L = _int(toks[1], n, source)
            continue
        if key not in tables:
            raise ParseError(f"unknown keyword {key!r}", n, source)
        if len(toks) < 2:
            raise ParseError(f"{key} line without an id", n, source)
        idx = _int(toks[1], n, source)
        if idx != len(tables[key]):
            raise ParseError(f"{key} id {idx} out of order (expected {len(tables[key])})", n, source)
        rest = toks[2:]
        if key in ("vertex", "cellpos"):
            if len(rest) != 3:
                raise ParseError(f"{key} needs 3 coordinates", n, source)
            tables[key].append(tuple(_frac(t, n, source) for t in rest))
        elif key == "edge":
            if len(rest) != 5:
                raise ParseError("edge needs u v wx wy wz", n, source)
            u, v, *w = (_int(t, n, source) for t in rest)
            tables[key].append(Edge(u, v, tuple(w)))
        elif key == "face":
            walk = []
            for t in rest:
                if t[:1] not in "+-" or len(t) < 2:
                    raise ParseError(f"face step {t!r} must look like +e or -e", n, source)
                walk.append((_int(t[1:], n, source), 1 if t[0] == "+" else -1))
            tables[key].append(tuple(walk))
        else:
            tables[key].append(tuple(_int(t, n, source) for t in rest))
    if L is None:
        raise ParseError("missing 'L' line", None, source)
    return CellComplex3(
        L, tuple(tables["vertex"]), tuple(tables["edge"]), tuple(tables["face"]),
        tuple(tables["cell"]), tuple(tables["cellpos"]),
    )


def complex_from_dict(d: dict[str, Any], source: str = "") -> CellComplex3:
    try:
        if d.get("format") != COMPLEX_TAG or d.get("version") != FORMAT_VERSION:
            raise ParseError(f"not a {COMPLEX_TAG} v{FORMAT_VERSION} document", None, source)
        return CellComplex3(
            int(d["L"]),
            tuple(tuple(Fraction(c) for c in p) for p in d["vertices"]),
            tuple(Edge(int(u), int(v), tuple(int(x) for x in w)) for u, v, w in d["edges"]),
            tuple(tuple((int(e), int(s)) for e, s in w) for w in d["faces"]),
            tuple(tuple(int(f) for f in fs) for fs in d["cells"]),
            tuple(tuple(Fraction(c) for c in p) for p in d["cell_positions"]),
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed complex document: {exc!r}", None, source) from None


def graph_from_text(text: str, source: str = "") -> SyndromeGraph:
    tag, hdr = _header(text, source)
    if tag != GRAPH_TAG:
        raise ParseError(f"expected a syndrome graph, found {tag}", hdr, source)
    L, label, nv = None, "", None
    rows: list[list[int]] = []
    for n, toks in _lines(text):
        if n == hdr:
            continue
        key = toks[0]
        if key == "L" and len(toks) == 2:
            L = _int(toks[1], n, source)
        elif key == "label":
            label = " ".join(toks[1:])
        elif key == "vertices" and len(toks) == 2:
            nv = _int(toks[1], n, source)
        elif key == "edge":
            if len(toks) != 8:
                raise ParseError("edge needs id u v cx cy cz valence", n, source)
            vals = [_int(t, n, source) for t in toks[1:]]
            if vals[0] != len(rows):
                raise ParseError(f"edge id {vals[0]} out of order (expected {len(rows)})", n, source)
            if nv is None or not (0 <= vals[1] < nv and 0 <= vals[2] < nv):
                raise ParseError("edge endpoint outside the declared vertex range", n, source)
            rows.append(vals[1:])
        else:
            raise ParseError(f"unrecognised line {' '.join(toks)!r}", n, source)
    if L is None or nv is None:
        raise ParseError("missing 'L' or 'vertices' line", None, source)
    a = np.array(rows, dtype=np.int64).reshape(-1, 6)
    return SyndromeGraph(nv, a[:, :2].copy(), a[:, 2:5].astype(np.int8), a[:, 5].copy(), L, label)


def graph_from_dict(d: dict[str, Any], source: str = "") -> SyndromeGraph:
    try:
        if d.get("format") != GRAPH_TAG or d.get("version") != FORMAT_VERSION:
            raise ParseError(f"not a {GRAPH_TAG} v{FORMAT_VERSION} document", None, source)
        return SyndromeGraph(
            int(d["num_vertices"]),
            np.array(d["edges"], dtype=np.int64).reshape(-1, 2),
            np.array(d["crossings"], dtype=np.int8).reshape(-1, 3),
            np.array(d["valence"], dtype=np.int64).reshape(-1),
            int(d["L"]),
            str(d.get("label", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed syndrome-graph document: {exc!r}", None, source) from None


def loads(text: str, source: str = "") -> CellComplex3 | SyndromeGraph:
    """Parse either object from either format (JSON is detected by a leading ``{``)."""
    if text.lstrip().startswith("{"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, source) from None
        if not isinstance(d, dict):
            raise ParseError("JSON document must be an object", None, source)
        if d.get("format") == GRAPH_TAG:
            return graph_from_dict(d, source)
        return complex_from_dict(d, source)
    tag, _ = _header(text, source)
    return complex_from_text(text, source) if tag == COMPLEX_TAG else graph_from_text(text, source)


def load(path: str | Path) -> CellComplex3 | SyndromeGraph:
    return loads(Path(path).read_text(), source=str(path))


def load_complex(path: str | Path) -> CellComplex3:
    obj = load(path)
    if not isinstance(obj, CellComplex3):
        raise ParseError("expected a cell complex", None, str(path))
    return obj


def load_graph(path: str | Path) -> SyndromeGraph:
    obj = load(path)
    if not isinstance(obj, SyndromeGraph):
        raise ParseError("expected a syndrome graph", None, str(path))
    return obj
