"""Bias-free sigmoid output layer, cross-entropy loss, and decision rule.

The output layer deliberately has no bias vector, so probabilities are
driven by the mention/context representation alone rather than the
training-set label distribution.  A type is predicted when its
probability exceeds the threshold, and the argmax type is always
included so every mention gets at least one type.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .numeric import matvec, sigmoid

PROB_CLAMP = 1e-12
DECISION_THRESHOLD = 0.5


@dataclass
class OutputParams:
    """Final layer weights, (K, Dm + Dc).  No bias exists anywhere here."""

    W_y: np.ndarray


class SaturationCounter:
    """Counts probabilities that had to be clamped away from 0/1."""

    def __init__(self):
        self.count = 0

    def add(self, n):
        self.count += int(n)


def predict_proba(v_m, v_c, params):
    """Per-type probabilities for one instance: sigmoid(W_y.[v_m; v_c])."""
    x = np.concatenate([np.asarray(v_m, dtype=np.float64).reshape(-1),
                        np.asarray(v_c, dtype=np.float64).reshape(-1)])
    return sigmoid(matvec(params.W_y, x))


def predict_proba_batch(v_m, v_c, w_y):
    if v_m.shape[1] + v_c.shape[1] != w_y.shape[1]:
        raise DimensionError(
            f"W_y expects {w_y.shape[1]} features, "
            f"got {v_m.shape[1]} + {v_c.shape[1]}"
        )
    return sigmoid(np.concatenate([v_m, v_c], axis=1) @ w_y.T)


def _clamped_log_terms(y, t, counter=None):
    if counter is not None:
        counter.add(np.count_nonzero((y <= PROB_CLAMP) | (y >= 1.0 - PROB_CLAMP)))
    yc = np.clip(y, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return -t * np.log(yc) - (1.0 - t) * np.log(1.0 - yc)


def loss(y, t, counter=None):
    """Cross-entropy of one prediction against its gold bit-vector."""
    y = np.asarray(y, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if y.shape != t.shape:
        raise DimensionError(f"y shape {y.shape} does not match t shape {t.shape}")
    return float(_clamped_log_terms(y, t, counter).sum())


def batch_loss(y, t, counter=None):
    """Mean per-instance cross-entropy over a batch (the training objective)."""
    if y.shape != t.shape:
        raise DimensionError(f"y shape {y.shape} does not match t shape {t.shape}")
    return float(_clamped_log_terms(y, t, counter).sum(axis=1).mean())


def decide(y, threshold=DECISION_THRESHOLD):
    """Predicted type indices: all above threshold, plus the argmax.

    Ties in the argmax resolve to the lowest index; the result is never
    empty and always contains every index with y_k > threshold.
    """
    y = np.asarray(y, dtype=np.float64)
    chosen = set(np.flatnonzero(y > threshold).tolist())
    chosen.add(int(np.argmax(y)))
    return chosen
