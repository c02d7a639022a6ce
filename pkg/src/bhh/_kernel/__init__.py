"""Backend selection for the network kernels.

Imports the compiled extension when available, otherwise the NumPy
reference. Set ``BHH_PURE_PYTHON=1`` to force the NumPy backend (used by
the parity tests and the backend benchmark).
"""

from __future__ import annotations

import os

from ._ref import (  # noqa: F401  (codes are part of the backend contract)
    LOSS_BINXE,
    LOSS_MSE,
    LOSS_SPARSE_CAT_XE,
    OUT_SIGMOID,
    OUT_SOFTMAX,
    PROB_EPS,
)
from . import _ref


def _select():
    if os.environ.get("BHH_PURE_PYTHON", "").strip().lower() in {"1", "true", "yes"}:
        return _ref, "numpy"
    try:
        from . import _fastcore

        return _fastcore, "compiled"
    except ImportError:
        return _ref, "numpy"


_impl, BACKEND = _select()

forward = _impl.forward
loss_value = _impl.loss_value
loss_and_grad = _impl.loss_and_grad
