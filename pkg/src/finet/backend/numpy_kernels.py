"""Pure numpy implementations of the hot kernels.

Shared fallback and reference semantics for the compiled extension in
``_ckernels.pyx``; both backends must agree to floating-point noise.
All arrays are float64 and C-contiguous; gate blocks are ordered
[input | forget | output | candidate] along the last axis.
"""

import numpy as np

NAME = "numpy"


def _sigmoid(x):
    # tanh formulation saturates cleanly instead of overflowing exp
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def lstm_cell_forward(pre, s_prev):
    """One gated cell update for a batch.

    pre:    (B, 4H) preactivations [i|f|o|g]
    s_prev: (B, H) previous cell state
    Returns (h, s, gates) with gates post-activation, shape (B, 4H).
    """
    hdim = s_prev.shape[1]
    gates = np.empty_like(pre)
    gates[:, : 3 * hdim] = _sigmoid(pre[:, : 3 * hdim])
    gates[:, 3 * hdim :] = np.tanh(pre[:, 3 * hdim :])
    i = gates[:, :hdim]
    f = gates[:, hdim : 2 * hdim]
    o = gates[:, 2 * hdim : 3 * hdim]
    g = gates[:, 3 * hdim :]
    s = f * s_prev + i * g
    h = o * np.tanh(s)
    return h, s, gates


def lstm_cell_backward(dh, ds, gates, s_prev, s):
    """Backward pass of one cell update.

    dh: (B, H) gradient w.r.t. h;  ds: (B, H) incoming gradient w.r.t. s
    (from the following timestep).  gates/s_prev/s are the forward values.
    Returns (dpre, ds_prev) with dpre shaped (B, 4H).
    """
    hdim = s.shape[1]
    i = gates[:, :hdim]
    f = gates[:, hdim : 2 * hdim]
    o = gates[:, 2 * hdim : 3 * hdim]
    g = gates[:, 3 * hdim :]
    ts = np.tanh(s)
    do = dh * ts
    ds_total = ds + dh * o * (1.0 - ts * ts)
    dpre = np.empty_like(gates)
    dpre[:, :hdim] = ds_total * g * i * (1.0 - i)
    dpre[:, hdim : 2 * hdim] = ds_total * s_prev * f * (1.0 - f)
    dpre[:, 2 * hdim : 3 * hdim] = do * o * (1.0 - o)
    dpre[:, 3 * hdim :] = ds_total * i * (1.0 - g * g)
    ds_prev = ds_total * f
    return dpre, ds_prev


def adam_update(param, grad, m, v, step, alpha, beta1, beta2, eps):
    """Bias-corrected Adam update, in place, on flat float64 arrays.

    step is the 1-based update count (already incremented).
    """
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**step)
    v_hat = v / (1.0 - beta2**step)
    param -= alpha * m_hat / (np.sqrt(v_hat) + eps)
