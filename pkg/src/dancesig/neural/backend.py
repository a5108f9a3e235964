"""Select the LSTM gate-kernel backend at import time.

The compiled Cython extension is used when it imported cleanly; setting
DANCESIG_PURE_PY=1 in the environment forces the NumPy fallback.  Both
backends implement the identical cell_forward / cell_backward contract.
"""

from __future__ import annotations

import os

from . import gates_ref

_FORCE_PURE = os.environ.get("DANCESIG_PURE_PY", "") not in ("", "0")

if not _FORCE_PURE:
    try:
        from . import _gatekernels as _compiled
    except ImportError:
        _compiled = None
else:
    _compiled = None

_ACTIVE = _compiled if _compiled is not None else gates_ref


def active_backend() -> str:
    """Name of the kernel backend in use: 'compiled' or 'numpy'."""
    return _ACTIVE.BACKEND_NAME


def compiled_available() -> bool:
    return _compiled is not None


def get_kernels(name: str | None = None):
    """The kernel module; pass 'compiled' or 'numpy' to pick explicitly."""
    if name is None:
        return _ACTIVE
    if name == "numpy":
        return gates_ref
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled gate kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
