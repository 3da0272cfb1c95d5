"""Kernel backend selection.

The hot inner loops (fused LSTM gate math, Adam's elementwise update)
exist twice: a compiled Cython extension and a pure numpy fallback with
identical signatures and semantics.  The compiled one is preferred when
importable; ``FINET_BACKEND=numpy|cython`` forces a choice at import
time, and ``set_backend`` switches at runtime (used by the benchmark
and parity tests).
"""

import os

from . import numpy_kernels

_BACKENDS = {"numpy": numpy_kernels}

try:
    from . import _ckernels

    _BACKENDS["cython"] = _ckernels
except ImportError:
    _ckernels = None

_active = None


def available_backends():
    return tuple(sorted(_BACKENDS))


def get_backend(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} not available; have {available_backends()}"
        ) from None


def set_backend(name):
    """Select the active kernel backend by name."""
    global _active
    _active = get_backend(name)


def active_backend():
    return _active.NAME


def _resolve_initial():
    requested = os.environ.get("FINET_BACKEND", "auto").lower()
    if requested in ("", "auto"):
        return "cython" if "cython" in _BACKENDS else "numpy"
    return requested


set_backend(_resolve_initial())


def lstm_cell_forward(pre, s_prev):
    return _active.lstm_cell_forward(pre, s_prev)


def lstm_cell_backward(dh, ds, gates, s_prev, s):
    return _active.lstm_cell_backward(dh, ds, gates, s_prev, s)


def adam_update(param, grad, m, v, step, alpha, beta1, beta2, eps):
    return _active.adam_update(param, grad, m, v, step, alpha, beta1, beta2, eps)
