"""Mini-batch Adam training with dev-set model selection and checkpoints.

Embeddings are frozen inputs; dropout applies to the mention
representation only (inverted dropout, so inference is the identity).
The dev set is scored every ``eval_every`` passes and the checkpoint
with the best loose-micro F1 wins (ties go to the earliest pass).

Gradient reduction over batch chunks always happens in a fixed order,
so runs are bit-reproducible for a given seed and thread count.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .classifier import SaturationCounter, decide
from .corpus import LabelIndex, WindowCounters, build_label_index, window_corpus
from .errors import CheckpointError, CorpusError, TrainingError
from .ioutil import atomic_write_bytes, atomic_write_text
from .metrics import EvalReport, evaluate
from .model import Model, ModelDims, embedded_batch, encode_windows, parameter_manifest
from .numeric import AdamState, adam_step, spawn_rngs

log = logging.getLogger("finet.trainer")

CHECKPOINT_FORMAT = "finet-checkpoint"
CHECKPOINT_VERSION = 1
SELECTION_METRIC = "loose_micro_f1"


@dataclass
class TrainConfig:
    encoder: str
    max_passes: int
    ctx_size: int = 15  # C
    mention_size: int = 5  # M
    dim_hidden: int = 100  # D_h
    dim_att: int = 50  # D_a
    alpha: float = 0.005
    batch_size: int = 1000
    dropout_p: float = 0.5
    eval_every: int = 10
    seed: int = 0
    threshold: float = 0.5
    lenient_labels: bool = False
    clip_norm: float | None = None
    threads: int = 1
    deterministic: bool = False
    selection_metric: str = SELECTION_METRIC

    def __post_init__(self):
        if self.encoder not in ("average", "lstm", "attentive"):
            raise ValueError(f"unknown encoder {self.encoder!r}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.max_passes < 1 or self.batch_size < 1 or self.eval_every < 1:
            raise ValueError("max_passes, batch_size, and eval_every must be >= 1")
        if self.selection_metric != SELECTION_METRIC:
            raise ValueError(f"selection metric is fixed to {SELECTION_METRIC}")

    def dims(self, emb_dim, n_types):
        return ModelDims(
            encoder=self.encoder, dim_word=emb_dim, dim_hidden=self.dim_hidden,
            dim_att=self.dim_att, ctx_size=self.ctx_size,
            mention_size=self.mention_size, n_types=n_types,
        )


def dropout_mask(shape, p, rng):
    """Inverted-dropout mask: zeros w.p. p, survivors scaled by 1/(1-p)."""
    if p == 0.0:
        return np.ones(shape, dtype=np.float64)
    return (rng.random(shape) >= p) / (1.0 - p)


def dropout_mention(v_m, p, rng, training):
    """Apply inverted dropout to a mention representation.

    Identity at inference and for p=0; in expectation the output equals
    the input (survivors are rescaled).
    """
    if not training or p == 0.0:
        return v_m
    return v_m * dropout_mask(v_m.shape, p, rng)


@dataclass
class HistoryRow:
    pass_no: int
    loss: float
    strict: float | None = None
    loose_macro: float | None = None
    loose_micro: float | None = None

    def csv_cells(self):
        fmt = lambda v: "" if v is None else repr(v)
        return [str(self.pass_no), repr(self.loss), fmt(self.strict),
                fmt(self.loose_macro), fmt(self.loose_micro)]


HISTORY_HEADER = "pass,loss,strict,loose_macro,loose_micro"


def history_csv(history):
    lines = [HISTORY_HEADER]
    lines.extend(",".join(row.csv_cells()) for row in history)
    return "\n".join(lines) + "\n"


def write_history(history, path):
    atomic_write_text(path, history_csv(history))


@dataclass
class Checkpoint:
    config: TrainConfig
    label_index: LabelIndex
    dims: ModelDims
    params: dict
    pass_count: int
    history: list

    def model(self):
        return Model(self.dims, self.params)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list
    initial_loss: float
    saturated: int
    window_counters: WindowCounters
    best_pass: int
    best_micro_f1: float | None


def predict_corpus(model, encoded, emb, batch_size=1024):
    """Inference-mode probabilities for a whole encoded corpus."""
    rows = []
    for start in range(0, len(encoded), batch_size):
        part = encoded.slice(slice(start, start + batch_size))
        rows.append(model.predict_batch(*embedded_batch(part, emb)))
    return np.concatenate(rows, axis=0)


def evaluate_encoded(model, encoded, emb, threshold=0.5, batch_size=1024):
    """EvalReport of a model over an encoded corpus (gold from bit-vectors)."""
    proba = predict_corpus(model, encoded, emb, batch_size)
    pairs = [
        (decide(proba[i], threshold), set(np.flatnonzero(encoded.gold[i]).tolist()))
        for i in range(len(encoded))
    ]
    return evaluate(pairs)


# Rows per reduction chunk.  Fixed (never derived from the thread
# count) so the summation tree, and therefore every last bit of the
# result, is identical no matter how many workers run the chunks.
_CHUNK_ROWS = 128


def _chunk_ranges(n):
    return [(a, min(a + _CHUNK_ROWS, n)) for a in range(0, n, _CHUNK_ROWS)]


def _batch_loss_grads(model, arrays, gold, mask, threads):
    """Summed loss + gradients over one batch, optionally fanned out.

    Chunk results are combined in chunk-index order so the reduction
    is deterministic regardless of scheduling.
    """
    mention_emb, left_emb, right_emb = arrays
    n = gold.shape[0]
    ranges = _chunk_ranges(n)
    counters = [SaturationCounter() for _ in ranges]

    def run(i):
        a, b = ranges[i]
        return model.loss_sum_and_grads(
            mention_emb[a:b], left_emb[a:b], right_emb[a:b], gold[a:b],
            None if mask is None else mask[a:b], counters[i],
        )

    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(ranges))))
    else:
        parts = [run(i) for i in range(len(ranges))]

    loss_sum = 0.0
    grads = None
    for part_loss, part_grads in parts:
        loss_sum += part_loss
        if grads is None:
            grads = part_grads
        else:
            for name in grads:
                grads[name] += part_grads[name]
    return loss_sum, grads, sum(c.count for c in counters)


def _clip_grads(grads, clip_norm):
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > clip_norm > 0:
        scale = clip_norm / total
        for g in grads.values():
            g *= scale
    return grads


def _mean_corpus_loss(model, encoded, emb, batch_size):
    total = 0.0
    for start in range(0, len(encoded), batch_size):
        part = encoded.slice(slice(start, start + batch_size))
        n = len(part)
        total += model.mean_loss(*embedded_batch(part, emb), part.gold) * n
    return total / len(encoded)


def train(config, train_instances, dev_instances, emb):
    """Run mini-batch Adam training; returns the best-on-dev checkpoint.

    The label index is built from the training corpus; dev labels
    outside it follow the strict/lenient flag.  Aborts on non-finite
    loss with pass/batch diagnostics.
    """
    if not train_instances:
        raise CorpusError("training corpus is empty")
    if not dev_instances:
        raise CorpusError("dev corpus is empty")

    index = build_label_index(train_instances)
    counters = WindowCounters()
    train_wins = window_corpus(
        train_instances, config.ctx_size, config.mention_size, index,
        lenient=config.lenient_labels, counters=counters,
    )
    dev_wins = window_corpus(
        dev_instances, config.ctx_size, config.mention_size, index,
        lenient=config.lenient_labels, counters=counters,
    )
    if not train_wins or not dev_wins:
        raise CorpusError("no usable instances after label filtering")

    dims = config.dims(emb.dim, len(index))
    init_rng, shuffle_rng, drop_rng = spawn_rngs(config.seed, 3)
    model = Model.init(dims, init_rng)
    state = AdamState.init_for(model.params, config.alpha)
    train_enc = encode_windows(train_wins, emb)
    dev_enc = encode_windows(dev_wins, emb)
    n = len(train_enc)

    initial_loss = _mean_corpus_loss(model, train_enc, emb, config.batch_size)
    history = [HistoryRow(pass_no=0, loss=initial_loss)]
    log.info("initial mean loss %.6f over %d instances (K=%d)",
             initial_loss, n, len(index))

    saturated = 0
    best = None  # (micro_f1, pass_no, params copy)
    for pass_no in range(1, config.max_passes + 1):
        order = shuffle_rng.permutation(n)
        pass_loss_sum = 0.0
        for batch_no, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            part = train_enc.slice(idx)
            arrays = embedded_batch(part, emb)
            mask = None
            if config.dropout_p > 0.0:
                mask = dropout_mask(
                    (len(part), dims.dim_word), config.dropout_p, drop_rng
                )
            loss_sum, grads, sat = _batch_loss_grads(
                model, arrays, part.gold, mask, config.threads
            )
            saturated += sat
            if not np.isfinite(loss_sum):
                norms = {k: float(np.linalg.norm(v)) for k, v in model.params.items()}
                raise TrainingError(
                    f"non-finite loss at pass {pass_no}, batch {batch_no}; "
                    f"parameter norms: {norms}"
                )
            for name in grads:
                grads[name] /= len(part)
            if config.clip_norm:
                _clip_grads(grads, config.clip_norm)
            adam_step(model.params, grads, state)
            pass_loss_sum += loss_sum

        row = HistoryRow(pass_no=pass_no, loss=pass_loss_sum / n)
        if pass_no % config.eval_every == 0 or pass_no == config.max_passes:
            report = evaluate_encoded(model, dev_enc, emb, config.threshold,
                                      config.batch_size)
            row.strict = report.strict.f1
            row.loose_macro = report.loose_macro.f1
            row.loose_micro = report.loose_micro.f1
            if best is None or row.loose_micro > best[0]:
                best = (row.loose_micro, pass_no,
                        {k: v.copy() for k, v in model.params.items()})
            log.info("pass %d: loss %.6f dev micro-F1 %.4f",
                     pass_no, row.loss, row.loose_micro)
        else:
            log.debug("pass %d: loss %.6f", pass_no, row.loss)
        history.append(row)

    # the final pass always evaluates, so best is guaranteed to exist
    best_micro, best_pass, best_params = best
    checkpoint = Checkpoint(
        config=config, label_index=index, dims=dims, params=best_params,
        pass_count=best_pass, history=history,
    )
    return TrainResult(
        checkpoint=checkpoint, history=history, initial_loss=initial_loss,
        saturated=saturated, window_counters=counters,
        best_pass=best_pass, best_micro_f1=best_micro,
    )


def save_checkpoint(ckpt, path):
    """Write a checkpoint: one JSON header line, then raw tensor bytes.

    The header carries a versioned manifest (names, shapes, dtype) with
    the config and label index embedded; payloads are row-major
    little-endian float64 in manifest order.  Serialization is
    deterministic, so save-load-save is byte identical.
    """
    tensors = [
        {"name": name, "shape": list(p.shape), "dtype": "<f8"}
        for name, p in ckpt.params.items()
    ]
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": asdict(ckpt.config),
        "dims": asdict(ckpt.dims),
        "labels": list(ckpt.label_index.types),
        "pass_count": ckpt.pass_count,
        "history": [
            [r.pass_no, r.loss, r.strict, r.loose_macro, r.loose_micro]
            for r in ckpt.history
        ],
        "tensors": tensors,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(p, dtype="<f8").tobytes() for p in ckpt.params.values()
    )
    atomic_write_bytes(path, blob + b"\n" + payload)


def load_checkpoint(path):
    """Read and validate a checkpoint; round-trips are bitwise exact."""
    with open(path, "rb") as fh:
        raw = fh.read()
    head, sep, payload = raw.partition(b"\n")
    if not sep:
        raise CheckpointError("missing checkpoint header")
    try:
        header = json.loads(head.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from None
    if header.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError("not a finet checkpoint")
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {header.get('version')!r}"
        )

    config = TrainConfig(**header["config"])
    dims = ModelDims(**header["dims"])
    index = LabelIndex(header["labels"])

    params = {}
    offset = 0
    for entry in header["tensors"]:
        if entry["dtype"] != "<f8":
            raise CheckpointError(f"unsupported tensor dtype {entry['dtype']!r}")
        shape = tuple(int(d) for d in entry["shape"])
        nbytes = int(np.prod(shape)) * 8
        chunk = payload[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise CheckpointError(
                f"tensor {entry['name']!r}: payload truncated "
                f"({len(chunk)} of {nbytes} bytes)"
            )
        params[entry["name"]] = (
            np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        )
        offset += nbytes
    if offset != len(payload):
        raise CheckpointError(
            f"{len(payload) - offset} unexpected trailing payload bytes"
        )

    expected = parameter_manifest(dims)
    got = [(name, tuple(p.shape)) for name, p in params.items()]
    if got != expected:
        raise CheckpointError(
            f"tensor manifest {got} does not match declared config {expected}"
        )

    history = [
        HistoryRow(pass_no=r[0], loss=r[1], strict=r[2],
                   loose_macro=r[3], loose_micro=r[4])
        for r in header["history"]
    ]
    return Checkpoint(
        config=config, label_index=index, dims=dims, params=params,
        pass_count=header["pass_count"], history=history,
    )
