"""Selects the numeric kernel backend at import time.

The compiled Cython kernels are preferred when the extension built;
otherwise the NumPy implementation takes over transparently. Set
FLOWSENTRY_KERNELS=numpy|compiled|auto to force a choice (``compiled``
raises if the extension is unavailable).

`activate()` rebinds the module-level functions; it exists for the
benchmark and for tests that compare backends, and must not be called
while a training run is in flight.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_np

try:
    from . import _kernels_cy
except ImportError:
    _kernels_cy = None

_EXPORTED = (
    "affine",
    "relu",
    "relu_backward_inplace",
    "softmax",
    "affine_grads",
    "adam_update_inplace",
)

BACKEND = "unset"


def available_backends() -> dict[str, ModuleType]:
    backends = {"numpy": _kernels_np}
    if _kernels_cy is not None:
        backends["cython"] = _kernels_cy
    return backends


def _resolve(name: str) -> ModuleType:
    name = name.strip().lower()
    if name in ("", "auto"):
        return _kernels_cy if _kernels_cy is not None else _kernels_np
    if name in ("compiled", "cython"):
        if _kernels_cy is None:
            raise ImportError(
                "FLOWSENTRY_KERNELS asked for the compiled kernels but the "
                "extension is not built; reinstall the package or use 'numpy'"
            )
        return _kernels_cy
    if name in ("numpy", "python"):
        return _kernels_np
    raise ValueError(f"unknown kernel backend {name!r}; use auto, compiled, or numpy")


def activate(name: str = "auto") -> str:
    """Rebind the exported kernel functions to the named backend."""
    impl = _resolve(name)
    g = globals()
    for fn in _EXPORTED:
        g[fn] = getattr(impl, fn)
    g["BACKEND"] = impl.BACKEND
    return impl.BACKEND


activate(os.environ.get("FLOWSENTRY_KERNELS", "auto"))
