"""Mention and context encoders with full forward traces and gradients.

Three context encoders are provided: averaging, LSTM (final states of a
forward read over the left context and a backward read over the right
context), and an attentive encoder (bi-directional LSTMs over both
contexts with a two-layer attention head normalized jointly across all
2C positions).  The mention encoder is a plain embedding average.

All batched functions take row-major float64 arrays with a leading
batch axis; single-instance wrappers matching the operation contracts
delegate to the batched core with B=1.  Backward passes are
hand-derived and gated by ``numeric.finite_diff_check``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .numeric import init_uniform

GATE_ORDER = ("input", "forget", "output", "candidate")


@dataclass
class LstmDirParams:
    """One LSTM direction: fused gate weights, rows ordered [i|f|o|g]."""

    Wx: np.ndarray  # (4H, Dm)
    Wh: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    @property
    def hidden(self):
        return self.Wh.shape[1]


@dataclass
class AttentionParams:
    """Two-layer attention head, shared between left and right contexts."""

    W_e: np.ndarray  # (Da, 2H)
    W_a: np.ndarray  # (1, Da)


def init_lstm_dir(dim_in, dim_hidden, rng):
    """Glorot-uniform gate weights (drawn per gate), forget bias 1."""
    wx = np.vstack([init_uniform((dim_hidden, dim_in), dim_in, rng) for _ in GATE_ORDER])
    wh = np.vstack(
        [init_uniform((dim_hidden, dim_hidden), dim_hidden, rng) for _ in GATE_ORDER]
    )
    b = np.zeros(4 * dim_hidden, dtype=np.float64)
    b[dim_hidden : 2 * dim_hidden] = 1.0
    return LstmDirParams(Wx=wx, Wh=wh, b=b)


def init_attention(dim_hidden, dim_att, rng):
    return AttentionParams(
        W_e=init_uniform((dim_att, 2 * dim_hidden), 2 * dim_hidden, rng),
        W_a=init_uniform((1, dim_att), dim_att, rng),
    )


@dataclass
class LstmRunCache:
    """Forward activations of one LSTM read, in read-step order."""

    x: np.ndarray  # (B, T, Dm) inputs in read order
    h_steps: list  # T arrays (B, H)
    s_steps: list  # T arrays (B, H)
    gate_steps: list  # T arrays (B, 4H), post-activation

    @property
    def final_h(self):
        return self.h_steps[-1]

    def stacked_h(self):
        return np.stack(self.h_steps, axis=1)

    def stacked_s(self):
        return np.stack(self.s_steps, axis=1)


@dataclass
class ForwardTrace:
    """Intermediate activations of one context-encoder forward pass.

    ``runs`` holds per-read LSTM activations keyed by run name
    ('left'/'right' for the LSTM encoder; 'left_fwd', 'left_bwd',
    'right_fwd', 'right_bwd' for the attentive one).  Attention fields
    are position-ordered (B, C) arrays per side; ``att_logits`` are the
    pre-normalization scores W_a.e (attention is softmax of these,
    jointly over both sides, computed with max-logit subtraction).
    """

    v_c: np.ndarray
    runs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)  # side -> (B, C, 2H)
    att_e: dict = field(default_factory=dict)  # side -> (B, C, Da)
    att_logits: dict = field(default_factory=dict)  # side -> (B, C)
    attention: dict = field(default_factory=dict)  # side -> (B, C)
    v_m: np.ndarray | None = None


def mention_encode_batch(mention_emb):
    """Average the M mention embeddings (pads contribute zero vectors)."""
    return mention_emb.mean(axis=1)


def ctx_average_batch(left_emb, right_emb):
    """Concatenate the left and right context averages."""
    return np.concatenate([left_emb.mean(axis=1), right_emb.mean(axis=1)], axis=1)


def lstm_run(x, p):
    """Run one LSTM direction over (B, T, Dm) inputs in read order."""
    n, steps = x.shape[0], x.shape[1]
    hdim = p.hidden
    h = np.zeros((n, hdim), dtype=np.float64)
    s = np.zeros((n, hdim), dtype=np.float64)
    h_steps, s_steps, gate_steps = [], [], []
    for t in range(steps):
        pre = x[:, t, :] @ p.Wx.T + h @ p.Wh.T + p.b
        h, s, gates = backend.lstm_cell_forward(pre, s)
        h_steps.append(h)
        s_steps.append(s)
        gate_steps.append(gates)
    return LstmRunCache(x=x, h_steps=h_steps, s_steps=s_steps, gate_steps=gate_steps)


def lstm_run_backward(cache, p, dh_steps):
    """Backpropagate through one LSTM read.

    dh_steps: (B, T, H) gradients w.r.t. the per-step outputs, in read
    order.  Input gradients are not computed (embeddings are frozen).
    Returns (dWx, dWh, db).
    """
    n = cache.x.shape[0]
    steps = len(cache.h_steps)
    hdim = p.hidden
    dwx = np.zeros_like(p.Wx)
    dwh = np.zeros_like(p.Wh)
    db = np.zeros_like(p.b)
    dh_next = np.zeros((n, hdim), dtype=np.float64)
    ds_next = np.zeros((n, hdim), dtype=np.float64)
    zeros = np.zeros((n, hdim), dtype=np.float64)
    for t in range(steps - 1, -1, -1):
        dh = dh_steps[:, t, :] + dh_next
        h_prev = cache.h_steps[t - 1] if t > 0 else zeros
        s_prev = cache.s_steps[t - 1] if t > 0 else zeros
        dpre, ds_next = backend.lstm_cell_backward(
            dh, ds_next, cache.gate_steps[t], s_prev, cache.s_steps[t]
        )
        dwx += dpre.T @ cache.x[:, t, :]
        dwh += dpre.T @ h_prev
        db += dpre.sum(axis=0)
        dh_next = dpre @ p.Wh
    return dwx, dwh, db


def ctx_lstm_batch(left_emb, right_emb, p_left, p_right):
    """LSTM context encoder: final forward state over the left context
    concatenated with the final backward-read state over the right."""
    left = lstm_run(left_emb, p_left)
    right = lstm_run(np.ascontiguousarray(right_emb[:, ::-1, :]), p_right)
    v_c = np.concatenate([left.final_h, right.final_h], axis=1)
    return v_c, ForwardTrace(v_c=v_c, runs={"left": left, "right": right})


def ctx_lstm_backward(dv_c, trace, p_left, p_right):
    """Gradients of both LSTM parameter sets given dL/dv_c."""
    hdim = p_left.hidden
    grads = {}
    for name, p, sl in (("left", p_left, slice(0, hdim)),
                        ("right", p_right, slice(hdim, 2 * hdim))):
        cache = trace.runs[name]
        steps = len(cache.h_steps)
        dh_steps = np.zeros((cache.x.shape[0], steps, hdim), dtype=np.float64)
        dh_steps[:, -1, :] = dv_c[:, sl]
        grads[name] = lstm_run_backward(cache, p, dh_steps)
    return grads


def bi_lstm_outputs(x, p_fwd, p_bwd):
    """Per-position concatenated bi-LSTM outputs over one context side.

    Returns (outputs (B, C, 2H), fwd_cache, bwd_cache); outputs are
    position-ordered (position i pairs the forward state after reading
    token i with the backward state after reading down to token i).
    """
    fwd = lstm_run(x, p_fwd)
    bwd = lstm_run(np.ascontiguousarray(x[:, ::-1, :]), p_bwd)
    outputs = np.concatenate(
        [fwd.stacked_h(), bwd.stacked_h()[:, ::-1, :]], axis=2
    )
    return outputs, fwd, bwd


def normalize_attention(logits):
    """Softmax over the last axis with max-logit subtraction.

    Mathematically identical to exp/sum (softmax is shift-invariant) but
    safe against overflow for large logits.
    """
    shifted = logits - logits.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


def attention_scores_batch(out_left, out_right, att):
    """Two-layer attention over the 2C bi-LSTM outputs of both sides.

    e_i = tanh(W_e.H_i), score = W_a.e_i, then a single softmax over all
    2C positions.  Returns (a_left, a_right, e_left, e_right,
    logits_left, logits_right), attention arrays shaped (B, C).
    """
    width = out_left.shape[1]
    e_left = np.tanh(out_left @ att.W_e.T)
    e_right = np.tanh(out_right @ att.W_e.T)
    logits_left = e_left @ att.W_a[0]
    logits_right = e_right @ att.W_a[0]
    joint = normalize_attention(np.concatenate([logits_left, logits_right], axis=1))
    return (joint[:, :width], joint[:, width:], e_left, e_right,
            logits_left, logits_right)


def ctx_attentive_batch(left_emb, right_emb, run_params, att):
    """Attentive encoder: attention-weighted sum of bi-LSTM outputs.

    run_params maps 'left_fwd', 'left_bwd', 'right_fwd', 'right_bwd' to
    LstmDirParams (separate parameters per side and direction; the
    attention head is shared).
    """
    out_l, lf, lb = bi_lstm_outputs(left_emb, run_params["left_fwd"],
                                    run_params["left_bwd"])
    out_r, rf, rb = bi_lstm_outputs(right_emb, run_params["right_fwd"],
                                    run_params["right_bwd"])
    a_l, a_r, e_l, e_r, logit_l, logit_r = attention_scores_batch(out_l, out_r, att)
    v_c = np.einsum("bc,bch->bh", a_l, out_l) + np.einsum("bc,bch->bh", a_r, out_r)
    trace = ForwardTrace(
        v_c=v_c,
        runs={"left_fwd": lf, "left_bwd": lb, "right_fwd": rf, "right_bwd": rb},
        outputs={"left": out_l, "right": out_r},
        att_e={"left": e_l, "right": e_r},
        att_logits={"left": logit_l, "right": logit_r},
        attention={"left": a_l, "right": a_r},
    )
    return v_c, trace


def ctx_attentive_backward(dv_c, trace, run_params, att):
    """Gradients of the four LSTM runs and the attention head.

    Returns (run_grads, dW_e, dW_a) where run_grads maps run name to
    (dWx, dWh, db).
    """
    hdim = run_params["left_fwd"].hidden
    width = trace.outputs["left"].shape[1]
    a_all = np.concatenate([trace.attention["left"], trace.attention["right"]], axis=1)
    da_sides = {}
    dout = {}
    for side in ("left", "right"):
        outs = trace.outputs[side]
        da_sides[side] = np.einsum("bh,bch->bc", dv_c, outs)
        dout[side] = trace.attention[side][:, :, None] * dv_c[:, None, :]

    # softmax backward, jointly over both sides
    da_all = np.concatenate([da_sides["left"], da_sides["right"]], axis=1)
    dot = (a_all * da_all).sum(axis=1, keepdims=True)
    dlogit_all = a_all * (da_all - dot)
    dlogits = {"left": dlogit_all[:, :width], "right": dlogit_all[:, width:]}

    dw_e = np.zeros_like(att.W_e)
    dw_a = np.zeros_like(att.W_a)
    for side in ("left", "right"):
        e = trace.att_e[side]
        dlogit = dlogits[side]
        dw_a[0] += np.einsum("bc,bcd->d", dlogit, e)
        de = dlogit[:, :, None] * att.W_a[0][None, None, :]
        dpre_e = de * (1.0 - e * e)
        dw_e += np.einsum("bcd,bch->dh", dpre_e, trace.outputs[side])
        dout[side] += dpre_e @ att.W_e

    run_grads = {}
    for side, fwd_name, bwd_name in (("left", "left_fwd", "left_bwd"),
                                     ("right", "right_fwd", "right_bwd")):
        d_total = dout[side]
        dh_fwd = np.ascontiguousarray(d_total[:, :, :hdim])
        dh_bwd = np.ascontiguousarray(d_total[:, ::-1, hdim:])
        run_grads[fwd_name] = lstm_run_backward(
            trace.runs[fwd_name], run_params[fwd_name], dh_fwd
        )
        run_grads[bwd_name] = lstm_run_backward(
            trace.runs[bwd_name], run_params[bwd_name], dh_bwd
        )
    return run_grads, dw_e, dw_a


# --- single-instance views -------------------------------------------------

def _embed(tokens, emb):
    ids = [emb.token_id(t) for t in tokens]
    return emb.matrix[ids]


def mention_encode(win, emb):
    """v_m for one windowed instance: the mean of its M mention embeddings."""
    return mention_encode_batch(_embed(win.mention, emb)[None, :, :])[0]


def ctx_average(win, emb):
    """Averaging context encoder for one instance: (2 Dm,) vector."""
    return ctx_average_batch(
        _embed(win.left, emb)[None, :, :], _embed(win.right, emb)[None, :, :]
    )[0]


def lstm_cell(u, h_prev, s_prev, p):
    """Single gated cell update on vectors; returns (h, s)."""
    pre = (p.Wx @ u + p.Wh @ h_prev + p.b)[None, :]
    h, s, _ = backend.lstm_cell_forward(
        np.ascontiguousarray(pre), np.ascontiguousarray(s_prev[None, :])
    )
    return h[0], s[0]


def ctx_lstm(win, emb, p_left, p_right):
    """LSTM context encoder for one instance: ((2H,), trace)."""
    v_c, trace = ctx_lstm_batch(
        _embed(win.left, emb)[None, :, :], _embed(win.right, emb)[None, :, :],
        p_left, p_right,
    )
    return v_c[0], trace


def attention_scores(out_left, out_right, att):
    """Attentions for one instance's (C, 2H) bi-LSTM outputs per side."""
    a_l, a_r, *_ = attention_scores_batch(
        out_left[None, :, :], out_right[None, :, :], att
    )
    return a_l[0], a_r[0]


def ctx_attentive(win, emb, run_params, att):
    """Attentive context encoder for one instance: ((2H,), trace)."""
    v_c, trace = ctx_attentive_batch(
        _embed(win.left, emb)[None, :, :], _embed(win.right, emb)[None, :, :],
        run_params, att,
    )
    return v_c[0], trace
