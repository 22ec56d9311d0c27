"""Kernel backend selection.

Two interchangeable backends implement the elementwise training ops:
a compiled Cython extension (fused loops) and a pure-numpy fallback.
The compiled one is preferred when importable; ``FSI_BACKEND`` forces
the choice (``compiled`` | ``python`` | ``auto``). Results are bitwise
deterministic within a backend for a fixed seed; across backends they
agree to float rounding, not bitwise.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _numpy_backend

_COMPILED: ModuleType | None
try:
    from . import _cykernels as _COMPILED  # type: ignore[no-redef]
except ImportError:
    _COMPILED = None


def available_backends() -> dict[str, ModuleType]:
    backends: dict[str, ModuleType] = {"python": _numpy_backend}
    if _COMPILED is not None:
        backends["compiled"] = _COMPILED
    return backends


def get_backend(name: str | None = None) -> ModuleType:
    """Resolve a backend by name; None consults FSI_BACKEND, then prefers compiled."""
    if name is None:
        name = os.environ.get("FSI_BACKEND", "auto")
    if name == "auto":
        return _COMPILED if _COMPILED is not None else _numpy_backend
    backends = available_backends()
    if name not in backends:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {sorted(backends)}"
        )
    return backends[name]


def active_backend_name() -> str:
    return get_backend().NAME
