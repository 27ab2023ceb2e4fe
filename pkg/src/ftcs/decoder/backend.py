"""Choice between the compiled core and the pure-Python decoder.

The compiled extension :mod:`ftcs._core` is used when it imports, unless the
environment variable ``FTCS_PURE_PYTHON`` is set to ``1``.  Both produce
identical corrections and trial outcomes.
"""

from __future__ import annotations

import os
from types import ModuleType

_core: ModuleType | None = None
if os.environ.get("FTCS_PURE_PYTHON", "") != "1":
    try:
        from .. import _core  # type: ignore[no-redef]
    except ImportError:
        _core = None

BACKEND = "compiled" if _core is not None else "python"


def available_backends() -> list[str]:
    return ["compiled", "python"] if _core is not None else ["python"]


def resolve(backend: str | None) -> str:
    if backend is None:
        return BACKEND
    if backend not in ("compiled", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "compiled" and _core is None:
        raise RuntimeError("compiled core is not available (extension not built or disabled)")
    return backend


def core() -> ModuleType:
    if _core is None:
        raise RuntimeError("compiled core is not available")
    return _core
