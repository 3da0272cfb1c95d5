"""Command-line surface: train, eval, predict, and attention inspection.

Exit codes: 0 success, 1 data/model error, 2 usage error.  The env var
FINET_LOG (debug/info/warning/error) controls verbosity; every command
logs its full resolved configuration and seed before doing any work.
All file outputs are written atomically (temp file + rename).
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import model as model_mod
from .classifier import decide
from .corpus import WindowCounters, read_corpus, window_corpus
from .embeddings import load_embeddings
from .errors import CorpusError, DimensionError, EncoderMismatchError, FinetError
from .ioutil import atomic_write_text
from .metrics import evaluate
from .trainer import (
    TrainConfig,
    evaluate_encoded,
    load_checkpoint,
    predict_corpus,
    save_checkpoint,
    train,
    write_history,
)

log = logging.getLogger("finet.cli")


def _setup_logging():
    level = os.environ.get("FINET_LOG", "info").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _log_invocation(command, payload):
    log.info("%s: resolved config %s", command,
             json.dumps(payload, sort_keys=True, default=str))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="finet",
        description="Fine-grained entity type classifier "
                    "(averaging / LSTM / attentive context encoders)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and keep the best-on-dev checkpoint")
    p_train.add_argument("--encoder", required=True,
                         choices=("average", "lstm", "attentive"))
    p_train.add_argument("--train", dest="train_path", required=True)
    p_train.add_argument("--dev", dest="dev_path", required=True)
    p_train.add_argument("--embeddings", required=True)
    p_train.add_argument("--out", default=".",
                         help="output directory for checkpoint.finet and history.csv")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--ctx-window", type=int, default=15, metavar="C")
    p_train.add_argument("--mention-window", type=int, default=5, metavar="M")
    p_train.add_argument("--hidden", type=int, default=100, metavar="D_H")
    p_train.add_argument("--att-hidden", type=int, default=50, metavar="D_A")
    p_train.add_argument("--lr", type=float, default=0.005)
    p_train.add_argument("--batch", type=int, default=1000)
    p_train.add_argument("--dropout", type=float, default=0.5)
    p_train.add_argument("--eval-every", type=int, default=10)
    p_train.add_argument("--max-passes", type=int, required=True)
    p_train.add_argument("--threshold", type=float, default=0.5)
    p_train.add_argument("--lenient-labels", action="store_true")
    p_train.add_argument("--threads", type=int, default=1)
    p_train.add_argument("--deterministic", action="store_true",
                         help="force fixed gradient-reduction order (always on)")
    p_train.set_defaults(func=cmd_train)

    def io_common(p, need_out):
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--embeddings", required=True)
        p.add_argument("--out", required=need_out)

    p_eval = sub.add_parser("eval", help="score a checkpoint on labeled data")
    io_common(p_eval, need_out=False)
    p_eval.add_argument("--threshold", type=float, default=None,
                        help="override the checkpoint's decision threshold")
    p_eval.add_argument("--lenient-labels", action="store_true")
    p_eval.set_defaults(func=cmd_eval)

    p_pred = sub.add_parser("predict", help="write JSON-lines predictions")
    io_common(p_pred, need_out=True)
    p_pred.add_argument("--threshold", type=float, default=None)
    p_pred.set_defaults(func=cmd_predict)

    p_att = sub.add_parser("attend", help="dump attention weights as TSV")
    io_common(p_att, need_out=True)
    p_att.set_defaults(func=cmd_attend)
    return parser


def cmd_train(args):
    config = TrainConfig(
        encoder=args.encoder, max_passes=args.max_passes,
        ctx_size=args.ctx_window, mention_size=args.mention_window,
        dim_hidden=args.hidden, dim_att=args.att_hidden, alpha=args.lr,
        batch_size=args.batch, dropout_p=args.dropout,
        eval_every=args.eval_every, seed=args.seed, threshold=args.threshold,
        lenient_labels=args.lenient_labels, threads=args.threads,
        deterministic=args.deterministic,
    )
    _log_invocation("train", {
        "config": asdict(config), "seed": config.seed,
        "train": args.train_path, "dev": args.dev_path,
        "embeddings": args.embeddings, "out": args.out,
    })
    emb = load_embeddings(args.embeddings)
    log.info("loaded %d embeddings of dim %d (unk from %s)",
             len(emb), emb.dim, emb.report.unk_source)
    train_instances = read_corpus(args.train_path)
    dev_instances = read_corpus(args.dev_path)

    result = train(config, train_instances, dev_instances, emb)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / "checkpoint.finet"
    save_checkpoint(result.checkpoint, ckpt_path)
    write_history(result.history, out_dir / "history.csv")
    if result.best_micro_f1 is not None:
        print(f"best dev loose-micro F1 {result.best_micro_f1:.4f} "
              f"at pass {result.best_pass}")
    print(f"checkpoint written to {ckpt_path}")
    return 0


def _load_for_inference(args):
    ckpt = load_checkpoint(args.checkpoint)
    emb = load_embeddings(args.embeddings)
    if emb.dim != ckpt.dims.dim_word:
        raise DimensionError(
            f"embedding dim {emb.dim} does not match checkpoint "
            f"dim {ckpt.dims.dim_word}"
        )
    return ckpt, emb


def cmd_eval(args):
    _log_invocation("eval", vars(args) | {"func": "eval"})
    ckpt, emb = _load_for_inference(args)
    instances = read_corpus(args.data)
    if not instances:
        raise CorpusError(f"no instances in {args.data}")
    counters = WindowCounters()
    wins = window_corpus(instances, ckpt.dims.ctx_size, ckpt.dims.mention_size,
                         ckpt.label_index, lenient=args.lenient_labels,
                         counters=counters)
    if not wins:
        raise CorpusError("no usable instances after label filtering")
    if counters.dropped_labels:
        log.warning("dropped %d unknown labels (%d instances skipped)",
                    counters.dropped_labels, counters.dropped_instances)
    threshold = ckpt.config.threshold if args.threshold is None else args.threshold
    encoded = model_mod.encode_windows(wins, emb)
    report = evaluate_encoded(ckpt.model(), encoded, emb, threshold)
    print(report.format_table())
    if args.out:
        atomic_write_text(args.out, json.dumps(report.as_dict(), indent=2) + "\n")
        log.info("report written to %s", args.out)
    return 0


def cmd_predict(args):
    _log_invocation("predict", vars(args) | {"func": "predict"})
    ckpt, emb = _load_for_inference(args)
    instances = read_corpus(args.data, require_labels=False)
    if not instances:
        raise CorpusError(f"no instances in {args.data}")
    wins = window_corpus(instances, ckpt.dims.ctx_size, ckpt.dims.mention_size,
                         ckpt.label_index, lenient=True)
    threshold = ckpt.config.threshold if args.threshold is None else args.threshold
    encoded = model_mod.encode_windows(wins, emb)
    proba = predict_corpus(ckpt.model(), encoded, emb)
    index = ckpt.label_index

    lines = []
    for inst, row in zip(instances, proba):
        pred = sorted(index.name_of(k) for k in decide(row, threshold))
        record = {}
        if inst.labels:
            record["gold"] = sorted(inst.labels)
        record["pred"] = pred
        record["proba"] = [float(p) for p in row]
        lines.append(json.dumps(record))
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"{len(lines)} predictions written to {args.out}")
    return 0


def cmd_attend(args):
    _log_invocation("attend", vars(args) | {"func": "attend"})
    ckpt, emb = _load_for_inference(args)
    if ckpt.dims.encoder != "attentive":
        raise EncoderMismatchError(
            f"attend requires an attentive checkpoint, got {ckpt.dims.encoder!r}"
        )
    instances = read_corpus(args.data, require_labels=False)
    if not instances:
        raise CorpusError(f"no instances in {args.data}")
    wins = window_corpus(instances, ckpt.dims.ctx_size, ckpt.dims.mention_size,
                         ckpt.label_index, lenient=True)
    encoded = model_mod.encode_windows(wins, emb)
    mdl = ckpt.model()
    index = ckpt.label_index

    rows = ["instance\tside\tposition\ttoken\tattention\tpredicted"]
    chunk = 256
    for start in range(0, len(wins), chunk):
        part = encoded.slice(slice(start, start + chunk))
        proba, cache = mdl.forward(*model_mod.embedded_batch(part, emb))
        att = cache.trace.attention
        for b in range(len(part)):
            win = wins[start + b]
            pred = ",".join(
                sorted(index.name_of(k) for k in decide(proba[b], ckpt.config.threshold))
            )
            for side, tokens, key in (("L", win.left, "left"),
                                      ("R", win.right, "right")):
                for pos, token in enumerate(tokens, start=1):
                    rows.append(
                        f"{start + b}\t{side}\t{pos}\t{token}"
                        f"\t{att[key][b, pos - 1]:.8f}\t{pred}"
                    )
    atomic_write_text(args.out, "\n".join(rows) + "\n")
    print(f"attention dump for {len(wins)} instances written to {args.out}")
    return 0


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FinetError as exc:
        print(f"finet: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"finet: error: {exc}", file=sys.stderr)
        return 1


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
