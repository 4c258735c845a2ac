"""Backend selection for the hot path-walk kernel.

The compiled extension is used when it imported successfully; set
``HULLPROJ_PURE=1`` to force the numpy fallback, or switch at runtime with
:func:`set_backend` (the bench harness does this to compare the two).
"""

from __future__ import annotations

import os

from . import _cauchy_py

try:
    from . import _cauchy as _compiled
except ImportError:  # extension not built; numpy fallback only
    _compiled = None

_BACKENDS = {"pure": _cauchy_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

if os.environ.get("HULLPROJ_PURE", "").strip().lower() in ("1", "true", "yes"):
    _active = "pure"
else:
    _active = "compiled" if _compiled is not None else "pure"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = name


def cauchy_walk(alpha, grad, data, resid, col_sums, grad_cols):
    """Dispatch to the active backend; see _cauchy_py.cauchy_walk."""
    return _BACKENDS[_active].cauchy_walk(alpha, grad, data, resid, col_sums, grad_cols)
