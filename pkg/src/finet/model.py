"""Full classifier model: encoder composition, parameters, gradients.

A model owns a flat name -> float64 array parameter dict (the frozen
embedding table is deliberately not part of it) and dispatches on the
configured context encoder.  Backward passes return gradients of the
summed batch loss; callers scale by batch size for the mean objective.
"""

from dataclasses import dataclass

import numpy as np

from . import classifier, encoders
from .errors import DimensionError
from .numeric import init_uniform, new_rng

ENCODER_NAMES = ("average", "lstm", "attentive")

_RUN_PREFIXES = {
    "average": (),
    "lstm": ("ctx_left", "ctx_right"),
    "attentive": ("ctx_left_fwd", "ctx_left_bwd", "ctx_right_fwd", "ctx_right_bwd"),
}
_LSTM_FIELDS = ("Wx", "Wh", "b")


@dataclass(frozen=True)
class ModelDims:
    encoder: str
    dim_word: int  # D_m
    dim_hidden: int  # D_h
    dim_att: int  # D_a
    ctx_size: int  # C
    mention_size: int  # M
    n_types: int  # K

    def __post_init__(self):
        if self.encoder not in ENCODER_NAMES:
            raise DimensionError(f"unknown encoder {self.encoder!r}")

    @property
    def ctx_dim(self):
        if self.encoder == "average":
            return 2 * self.dim_word
        return 2 * self.dim_hidden

    @property
    def feature_dim(self):
        return self.dim_word + self.ctx_dim


def parameter_manifest(dims):
    """Canonical (name, shape) list for an encoder configuration."""
    manifest = []
    for prefix in _RUN_PREFIXES[dims.encoder]:
        manifest.append((f"{prefix}.Wx", (4 * dims.dim_hidden, dims.dim_word)))
        manifest.append((f"{prefix}.Wh", (4 * dims.dim_hidden, dims.dim_hidden)))
        manifest.append((f"{prefix}.b", (4 * dims.dim_hidden,)))
    if dims.encoder == "attentive":
        manifest.append(("attention.W_e", (dims.dim_att, 2 * dims.dim_hidden)))
        manifest.append(("attention.W_a", (1, dims.dim_att)))
    manifest.append(("output.W_y", (dims.n_types, dims.feature_dim)))
    return manifest


@dataclass
class ForwardCache:
    v_m: np.ndarray
    dropout_mask: np.ndarray | None
    trace: encoders.ForwardTrace
    features: np.ndarray
    proba: np.ndarray


class Model:
    """Mention encoder + configured context encoder + sigmoid output."""

    def __init__(self, dims, params):
        self.dims = dims
        expected = parameter_manifest(dims)
        if [(n, tuple(params[n].shape)) for n in params] != expected:
            got = {n: tuple(p.shape) for n, p in params.items()}
            raise DimensionError(
                f"parameter set {got} does not match manifest {expected}"
            )
        self.params = params

    @classmethod
    def init(cls, dims, rng):
        """Seeded Glorot initialization in canonical manifest order."""
        params = {}
        for prefix in _RUN_PREFIXES[dims.encoder]:
            direction = encoders.init_lstm_dir(dims.dim_word, dims.dim_hidden, rng)
            for fieldname in _LSTM_FIELDS:
                params[f"{prefix}.{fieldname}"] = getattr(direction, fieldname)
        if dims.encoder == "attentive":
            att = encoders.init_attention(dims.dim_hidden, dims.dim_att, rng)
            params["attention.W_e"] = att.W_e
            params["attention.W_a"] = att.W_a
        params["output.W_y"] = init_uniform(
            (dims.n_types, dims.feature_dim), dims.feature_dim, rng
        )
        return cls(dims, params)

    def manifest(self):
        return [(name, tuple(p.shape)) for name, p in self.params.items()]

    def _dir_params(self, prefix):
        return encoders.LstmDirParams(
            Wx=self.params[f"{prefix}.Wx"],
            Wh=self.params[f"{prefix}.Wh"],
            b=self.params[f"{prefix}.b"],
        )

    def _att_params(self):
        return encoders.AttentionParams(
            W_e=self.params["attention.W_e"], W_a=self.params["attention.W_a"]
        )

    def forward(self, mention_emb, left_emb, right_emb, dropout_mask=None):
        """Batched forward pass; returns (proba (B, K), cache)."""
        v_m = encoders.mention_encode_batch(mention_emb)
        v_m_used = v_m if dropout_mask is None else v_m * dropout_mask
        enc = self.dims.encoder
        if enc == "average":
            v_c = encoders.ctx_average_batch(left_emb, right_emb)
            trace = encoders.ForwardTrace(v_c=v_c)
        elif enc == "lstm":
            v_c, trace = encoders.ctx_lstm_batch(
                left_emb, right_emb,
                self._dir_params("ctx_left"), self._dir_params("ctx_right"),
            )
        else:
            v_c, trace = encoders.ctx_attentive_batch(
                left_emb, right_emb, self._run_params(), self._att_params()
            )
        trace.v_m = v_m
        features = np.concatenate([v_m_used, v_c], axis=1)
        proba = classifier.predict_proba_batch(v_m_used, v_c, self.params["output.W_y"])
        return proba, ForwardCache(
            v_m=v_m, dropout_mask=dropout_mask, trace=trace,
            features=features, proba=proba,
        )

    def _run_params(self):
        return {p.removeprefix("ctx_"): self._dir_params(p)
                for p in _RUN_PREFIXES["attentive"]}

    def backward(self, cache, gold):
        """Gradients of the summed batch cross-entropy w.r.t. all params.

        Uses dL/dz = y - t (the clamp in the loss value only guards
        log(0); it never activates in the regimes where gradients are
        checked or training is healthy).
        """
        dz = cache.proba - gold
        grads = {"output.W_y": dz.T @ cache.features}
        dfeat = dz @ self.params["output.W_y"]
        dv_c = dfeat[:, self.dims.dim_word :]
        enc = self.dims.encoder
        if enc == "lstm":
            by_side = encoders.ctx_lstm_backward(
                dv_c, cache.trace,
                self._dir_params("ctx_left"), self._dir_params("ctx_right"),
            )
            for side, prefix in (("left", "ctx_left"), ("right", "ctx_right")):
                for fieldname, grad in zip(_LSTM_FIELDS, by_side[side]):
                    grads[f"{prefix}.{fieldname}"] = grad
        elif enc == "attentive":
            run_grads, dw_e, dw_a = encoders.ctx_attentive_backward(
                dv_c, cache.trace, self._run_params(), self._att_params()
            )
            for run, prefix in zip(
                ("left_fwd", "left_bwd", "right_fwd", "right_bwd"),
                _RUN_PREFIXES["attentive"],
            ):
                for fieldname, grad in zip(_LSTM_FIELDS, run_grads[run]):
                    grads[f"{prefix}.{fieldname}"] = grad
            grads["attention.W_e"] = dw_e
            grads["attention.W_a"] = dw_a
        return grads

    def loss_sum_and_grads(self, mention_emb, left_emb, right_emb, gold,
                           dropout_mask=None, counter=None):
        """Summed batch loss and its gradients (callers divide by B)."""
        proba, cache = self.forward(mention_emb, left_emb, right_emb, dropout_mask)
        loss_sum = classifier.batch_loss(proba, gold, counter) * proba.shape[0]
        return loss_sum, self.backward(cache, gold)

    def mean_loss(self, mention_emb, left_emb, right_emb, gold):
        proba, _ = self.forward(mention_emb, left_emb, right_emb)
        return classifier.batch_loss(proba, gold)

    def predict_batch(self, mention_emb, left_emb, right_emb):
        proba, _ = self.forward(mention_emb, left_emb, right_emb)
        return proba


def dims_for(encoder, emb_dim, n_types, ctx_size, mention_size,
             dim_hidden, dim_att):
    return ModelDims(
        encoder=encoder, dim_word=emb_dim, dim_hidden=dim_hidden,
        dim_att=dim_att, ctx_size=ctx_size, mention_size=mention_size,
        n_types=n_types,
    )


@dataclass
class EncodedCorpus:
    """Token rows resolved to embedding-matrix ids once, up front."""

    mention_ids: np.ndarray  # (N, M) int32
    left_ids: np.ndarray  # (N, C) int32
    right_ids: np.ndarray  # (N, C) int32
    gold: np.ndarray  # (N, K) float64

    def __len__(self):
        return self.mention_ids.shape[0]

    def slice(self, idx):
        return EncodedCorpus(
            mention_ids=self.mention_ids[idx],
            left_ids=self.left_ids[idx],
            right_ids=self.right_ids[idx],
            gold=self.gold[idx],
        )


def encode_windows(wins, emb):
    if not wins:
        raise DimensionError("cannot encode an empty window list")
    to_ids = lambda toks: [emb.token_id(t) for t in toks]
    return EncodedCorpus(
        mention_ids=np.array([to_ids(w.mention) for w in wins], dtype=np.int32),
        left_ids=np.array([to_ids(w.left) for w in wins], dtype=np.int32),
        right_ids=np.array([to_ids(w.right) for w in wins], dtype=np.int32),
        gold=np.stack([w.gold for w in wins]).astype(np.float64),
    )


def embedded_batch(encoded, emb):
    """Gather float64 embedding arrays for an EncodedCorpus (or slice)."""
    return (
        emb.matrix[encoded.mention_ids],
        emb.matrix[encoded.left_ids],
        emb.matrix[encoded.right_ids],
    )


def init_model(dims, seed):
    return Model.init(dims, new_rng(seed))
