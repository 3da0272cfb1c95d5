"""Mention/context encoders: averaging, LSTM directionality, attention."""

import numpy as np
import pytest

from finet.corpus import WindowedInstance
from finet.embeddings import EmbeddingTable
from finet.encoders import (
    AttentionParams,
    LstmDirParams,
    attention_scores,
    attention_scores_batch,
    bi_lstm_outputs,
    ctx_attentive,
    ctx_attentive_batch,
    ctx_average,
    ctx_average_batch,
    ctx_lstm,
    ctx_lstm_batch,
    init_attention,
    init_lstm_dir,
    lstm_cell,
    lstm_run,
    mention_encode,
    mention_encode_batch,
    normalize_attention,
)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def reference_cell(u, h_prev, s_prev, p):
    """Direct gate-equation transcription: pre split as [i|f|o|g]."""
    pre = p.Wx @ u + p.Wh @ h_prev + p.b
    H = p.hidden
    i = sigmoid(pre[0:H])
    f = sigmoid(pre[H:2 * H])
    o = sigmoid(pre[2 * H:3 * H])
    g = np.tanh(pre[3 * H:4 * H])
    s = f * s_prev + i * g
    h = o * np.tanh(s)
    return h, s


def random_dir_params(rng, dim_in, hidden):
    return LstmDirParams(
        Wx=rng.normal(scale=0.3, size=(4 * hidden, dim_in)),
        Wh=rng.normal(scale=0.3, size=(4 * hidden, hidden)),
        b=rng.normal(scale=0.3, size=4 * hidden),
    )


def table_for(rows):
    """Embedding table mapping token f"t{i}" to the i-th row."""
    rows = np.asarray(rows, dtype=np.float64)
    tokens = [f"t{i}" for i in range(rows.shape[0])]
    matrix = np.vstack([np.zeros((2, rows.shape[1])), rows])
    return EmbeddingTable(tokens, matrix), tokens


def window_for(left_rows, mention_rows, right_rows):
    """WindowedInstance plus a table resolving its tokens to the rows."""
    all_rows = np.vstack([left_rows, mention_rows, right_rows])
    table, tokens = table_for(all_rows)
    n_l, n_m = len(left_rows), len(mention_rows)
    win = WindowedInstance(
        left=tuple(tokens[:n_l]),
        mention=tuple(tokens[n_l:n_l + n_m]),
        right=tuple(tokens[n_l + n_m:]),
        gold=np.zeros(1),
    )
    return win, table


class TestMentionEncoder:
    def test_average_of_rows(self):
        rng = np.random.default_rng(0)
        m = rng.normal(size=(4, 6))
        win, table = window_for(m[:0], m, m[:0])
        np.testing.assert_allclose(
            mention_encode(win, table), m.mean(axis=0), rtol=1e-14
        )

    def test_batch_matches_single(self):
        rng = np.random.default_rng(1)
        batch = rng.normal(size=(5, 3, 6))
        out = mention_encode_batch(batch)
        for b in range(5):
            win, table = window_for(batch[b][:0], batch[b], batch[b][:0])
            np.testing.assert_allclose(
                out[b], mention_encode(win, table), rtol=1e-14
            )

    def test_padding_dilutes_average(self):
        """Pad rows are zero vectors; the divisor stays the window size."""
        m = np.array([[2.0, 4.0]])
        win, table = window_for(m[:0], m, m[:0])
        win = WindowedInstance(
            left=win.left, mention=win.mention + ("<pad>",),
            right=win.right, gold=win.gold,
        )
        np.testing.assert_allclose(mention_encode(win, table), [1.0, 2.0])


class TestAveragingContext:
    def test_concat_of_side_means(self):
        rng = np.random.default_rng(2)
        left = rng.normal(size=(3, 4))
        right = rng.normal(size=(3, 4))
        win, table = window_for(left, left[:1], right)
        v = ctx_average(win, table)
        np.testing.assert_allclose(v[:4], left.mean(axis=0), rtol=1e-14)
        np.testing.assert_allclose(v[4:], right.mean(axis=0), rtol=1e-14)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(3)
        L = rng.normal(size=(4, 3, 5))
        R = rng.normal(size=(4, 3, 5))
        out = ctx_average_batch(L, R)
        for b in range(4):
            win, table = window_for(L[b], L[b][:1], R[b])
            np.testing.assert_allclose(out[b], ctx_average(win, table), rtol=1e-14)


class TestLstmCell:
    def test_matches_gate_equations(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            d, H = rng.integers(2, 7, size=2)
            p = random_dir_params(rng, d, H)
            u = rng.normal(size=d)
            h_prev = rng.normal(size=H)
            s_prev = rng.normal(size=H)
            h, s = lstm_cell(u, h_prev, s_prev, p)
            h_ref, s_ref = reference_cell(u, h_prev, s_prev, p)
            np.testing.assert_allclose(h, h_ref, rtol=1e-12, atol=1e-14)
            np.testing.assert_allclose(s, s_ref, rtol=1e-12, atol=1e-14)

    def test_run_chains_cells(self):
        rng = np.random.default_rng(5)
        p = random_dir_params(rng, 3, 4)
        x = rng.normal(size=(1, 6, 3))
        run = lstm_run(x, p)
        h = np.zeros(4)
        s = np.zeros(4)
        for t in range(6):
            h, s = reference_cell(x[0, t], h, s, p)
        np.testing.assert_allclose(run.final_h[0], h, rtol=1e-12, atol=1e-14)


class TestLstmContext:
    def test_reads_left_forward_right_backward(self):
        """v_c = [last state reading l1..lC ; last state reading rC..r1]."""
        rng = np.random.default_rng(6)
        pl = random_dir_params(rng, 3, 4)
        pr = random_dir_params(rng, 3, 4)
        left = rng.normal(size=(5, 3))
        right = rng.normal(size=(5, 3))
        win, table = window_for(left, left[:1], right)
        v, _ = ctx_lstm(win, table, pl, pr)

        h = np.zeros(4)
        s = np.zeros(4)
        for t in range(5):
            h, s = reference_cell(left[t], h, s, pl)
        np.testing.assert_allclose(v[:4], h, rtol=1e-12, atol=1e-14)

        h = np.zeros(4)
        s = np.zeros(4)
        for t in reversed(range(5)):
            h, s = reference_cell(right[t], h, s, pr)
        np.testing.assert_allclose(v[4:], h, rtol=1e-12, atol=1e-14)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(7)
        pl = random_dir_params(rng, 3, 4)
        pr = random_dir_params(rng, 3, 4)
        L = rng.normal(size=(6, 5, 3))
        R = rng.normal(size=(6, 5, 3))
        out, _ = ctx_lstm_batch(L, R, pl, pr)
        for b in range(6):
            win, table = window_for(L[b], L[b][:1], R[b])
            v, _ = ctx_lstm(win, table, pl, pr)
            np.testing.assert_allclose(out[b], v, rtol=1e-12, atol=1e-14)


class TestBiLstmAlignment:
    def test_position_i_concatenates_both_reads_of_token_i(self):
        rng = np.random.default_rng(8)
        pf = random_dir_params(rng, 3, 4)
        pb = random_dir_params(rng, 3, 4)
        x = rng.normal(size=(1, 5, 3))
        out, _, _ = bi_lstm_outputs(x, pf, pb)

        h = np.zeros(4)
        s = np.zeros(4)
        fwd = []
        for t in range(5):
            h, s = reference_cell(x[0, t], h, s, pf)
            fwd.append(h)
        h = np.zeros(4)
        s = np.zeros(4)
        bwd = [None] * 5
        for t in reversed(range(5)):
            h, s = reference_cell(x[0, t], h, s, pb)
            bwd[t] = h
        for t in range(5):
            np.testing.assert_allclose(out[0, t, :4], fwd[t], rtol=1e-12, atol=1e-14)
            np.testing.assert_allclose(out[0, t, 4:], bwd[t], rtol=1e-12, atol=1e-14)


class TestAttention:
    def setup_method(self):
        rng = np.random.default_rng(9)
        self.rng = rng
        self.pf_l = random_dir_params(rng, 3, 4)
        self.pb_l = random_dir_params(rng, 3, 4)
        self.pf_r = random_dir_params(rng, 3, 4)
        self.pb_r = random_dir_params(rng, 3, 4)
        self.att = AttentionParams(
            W_e=rng.normal(scale=0.3, size=(5, 8)),
            W_a=rng.normal(scale=0.3, size=(1, 5)),
        )

    def outputs(self, B=4, C=6):
        L = self.rng.normal(size=(B, C, 3))
        R = self.rng.normal(size=(B, C, 3))
        out_l, _, _ = bi_lstm_outputs(L, self.pf_l, self.pb_l)
        out_r, _, _ = bi_lstm_outputs(R, self.pf_r, self.pb_r)
        return L, R, out_l, out_r

    def test_normalized_jointly_over_both_sides(self):
        _, _, out_l, out_r = self.outputs()
        a_l, a_r, *_ = attention_scores_batch(out_l, out_r, self.att)
        total = a_l.sum(axis=1) + a_r.sum(axis=1)
        np.testing.assert_allclose(total, 1.0, atol=1e-12)
        assert np.all(a_l >= 0) and np.all(a_r >= 0)

    def test_zero_scoring_matrix_gives_uniform(self):
        _, _, out_l, out_r = self.outputs(C=6)
        att0 = AttentionParams(W_e=self.att.W_e, W_a=np.zeros_like(self.att.W_a))
        a_l, a_r, *_ = attention_scores_batch(out_l, out_r, att0)
        np.testing.assert_allclose(a_l, 1.0 / 12, atol=1e-12)
        np.testing.assert_allclose(a_r, 1.0 / 12, atol=1e-12)

    def test_logit_shift_invariance(self):
        rng = np.random.default_rng(10)
        logits = rng.normal(size=(3, 8))
        base = normalize_attention(logits)
        shifted = normalize_attention(logits + 123.456)
        np.testing.assert_allclose(base, shifted, atol=1e-12)

    def test_weighted_sum_of_positions(self):
        """v_c must equal the attention-weighted sum of bi-LSTM outputs."""
        L, R, out_l, out_r = self.outputs(B=2, C=4)
        run_params = {
            "left_fwd": self.pf_l, "left_bwd": self.pb_l,
            "right_fwd": self.pf_r, "right_bwd": self.pb_r,
        }
        v, trace = ctx_attentive_batch(L, R, run_params, self.att)
        a_l = trace.attention["left"]
        a_r = trace.attention["right"]
        manual = (
            np.einsum("bc,bch->bh", a_l, out_l)
            + np.einsum("bc,bch->bh", a_r, out_r)
        )
        np.testing.assert_allclose(v, manual, rtol=1e-12, atol=1e-14)

    def test_single_matches_batch(self):
        L, R, out_l, out_r = self.outputs(B=3, C=4)
        run_params = {
            "left_fwd": self.pf_l, "left_bwd": self.pb_l,
            "right_fwd": self.pf_r, "right_bwd": self.pb_r,
        }
        v_batch, _ = ctx_attentive_batch(L, R, run_params, self.att)
        for b in range(3):
            win, table = window_for(L[b], L[b][:1], R[b])
            v1, _ = ctx_attentive(win, table, run_params, self.att)
            np.testing.assert_allclose(v1, v_batch[b], rtol=1e-12, atol=1e-14)

    def test_single_instance_scores(self):
        _, _, out_l, out_r = self.outputs(B=1, C=5)
        a_l, a_r = attention_scores(out_l[0], out_r[0], self.att)
        np.testing.assert_allclose(a_l.sum() + a_r.sum(), 1.0, atol=1e-12)


class TestInitialization:
    def test_forget_gate_bias_is_one(self):
        rng = np.random.default_rng(11)
        p = init_lstm_dir(6, 4, rng)
        np.testing.assert_array_equal(p.b[4:8], 1.0)   # forget block
        np.testing.assert_array_equal(p.b[:4], 0.0)
        np.testing.assert_array_equal(p.b[8:], 0.0)

    def test_gate_blocks_within_glorot_bound(self):
        rng = np.random.default_rng(12)
        p = init_lstm_dir(6, 4, rng)
        bound_x = np.sqrt(6.0 / (6 + 4))
        bound_h = np.sqrt(6.0 / (4 + 4))
        assert np.max(np.abs(p.Wx)) <= bound_x
        assert np.max(np.abs(p.Wh)) <= bound_h

    def test_attention_shapes(self):
        rng = np.random.default_rng(13)
        att = init_attention(dim_hidden=4, dim_att=3, rng=rng)
        assert att.W_e.shape == (3, 8)
        assert att.W_a.shape == (1, 3)
