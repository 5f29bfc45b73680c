"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise
the numpy reference implementation is used. ``KOSPRED_BACKEND`` forces
the choice: ``auto`` (default), ``cython``, or ``python``.
"""

from __future__ import annotations

import os

from . import pyref

_requested = os.environ.get("KOSPRED_BACKEND", "auto").lower()
if _requested not in ("auto", "cython", "python"):
    raise ValueError(
        f"KOSPRED_BACKEND must be auto, cython, or python; got {_requested!r}"
    )

if _requested == "python":
    _impl = pyref
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "cython":
            raise
        _impl = pyref

BACKEND = _impl.BACKEND_NAME
forward = _impl.forward
forward_backward_mae = _impl.forward_backward_mae
mae_loss_grad = _impl.mae_loss_grad
adam_update = _impl.adam_update

__all__ = [
    "BACKEND",
    "adam_update",
    "forward",
    "forward_backward_mae",
    "mae_loss_grad",
    "pyref",
]
