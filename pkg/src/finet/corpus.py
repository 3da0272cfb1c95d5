"""Corpus parsing, label indexing, fixed-width windowing, and batching.

Input is JSON-lines, one instance per line:
``{"tokens": [...], "mention_start": int, "mention_end": int, "labels": [...]}``
(``labels`` may be absent or empty only for prediction inputs).
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddings import PAD_TOKEN
from .errors import CorpusError, ParseError, SpanError, UnknownLabelError


@dataclass(frozen=True)
class Instance:
    tokens: tuple
    mention_start: int
    mention_end: int
    labels: frozenset

    @property
    def mention_tokens(self):
        return self.tokens[self.mention_start : self.mention_end]


def parse_instance(line, require_labels=True):
    """Parse and validate one JSON-lines instance."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON at byte offset {exc.pos}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ParseError("instance line must be a JSON object")

    tokens = obj.get("tokens")
    if not isinstance(tokens, list) or not tokens or not all(
        isinstance(t, str) for t in tokens
    ):
        raise ParseError("'tokens' must be a nonempty list of strings")
    try:
        start = int(obj["mention_start"])
        end = int(obj["mention_end"])
    except (KeyError, TypeError, ValueError):
        raise ParseError("'mention_start' and 'mention_end' must be integers") from None
    if not (0 <= start < end <= len(tokens)):
        raise SpanError(
            f"mention span [{start}, {end}) out of bounds for {len(tokens)} tokens"
        )

    labels = obj.get("labels", [])
    if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
        raise ParseError("'labels' must be a list of strings")
    if require_labels and not labels:
        raise ParseError("instance has no labels")

    return Instance(
        tokens=tuple(tokens),
        mention_start=start,
        mention_end=end,
        labels=frozenset(labels),
    )


def read_corpus(path, require_labels=True):
    """Read a JSON-lines corpus file; blank lines are skipped."""
    instances = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                instances.append(parse_instance(line, require_labels=require_labels))
            except (ParseError, SpanError) as exc:
                raise type(exc)(f"{path}, line {lineno}: {exc}") from None
    return instances


class LabelIndex:
    """Deterministic type-name <-> index map (lexicographic order)."""

    def __init__(self, types):
        self.types = tuple(types)
        if len(self.types) < 1:
            raise CorpusError("label index must contain at least one type")
        if len(set(self.types)) != len(self.types):
            raise CorpusError("label index contains duplicate types")
        self._by_name = {t: i for i, t in enumerate(self.types)}

    def __len__(self):
        return len(self.types)

    def __contains__(self, name):
        return name in self._by_name

    def index_of(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownLabelError(f"label {name!r} not in index") from None

    def name_of(self, idx):
        return self.types[idx]

    def to_text(self):
        return "".join(t + "\n" for t in self.types)

    @classmethod
    def from_lines(cls, lines):
        return cls([line.rstrip("\n") for line in lines if line.strip()])


def build_label_index(instances):
    """Collect the distinct labels of a corpus, sorted lexicographically."""
    seen = set()
    count = 0
    for inst in instances:
        count += 1
        seen.update(inst.labels)
    if count == 0:
        raise CorpusError("cannot build a label index from an empty corpus")
    if not seen:
        raise CorpusError("corpus contains no labels")
    return LabelIndex(sorted(seen))


@dataclass
class WindowedInstance:
    """Fixed-width model input: C left tokens, M mention tokens, C right
    tokens (padded where the sentence runs out), plus the gold bit-vector."""

    left: tuple
    mention: tuple
    right: tuple
    gold: np.ndarray  # (K,) of 0.0/1.0

    def gold_labels(self, index):
        return {index.name_of(k) for k in np.flatnonzero(self.gold)}


@dataclass
class WindowCounters:
    dropped_labels: int = 0
    dropped_instances: int = 0
    unknown: set = field(default_factory=set)


def window(inst, ctx_size, mention_size, index, pad_token=PAD_TOKEN,
           lenient=False, counters=None):
    """Cut an instance into a fixed-width window.

    The left context keeps the C tokens nearest the mention with padding
    on the sentence-start side (l_C is always mention-adjacent); the
    right context pads on the far end.  Mentions longer than M truncate
    to their first M tokens.  Unknown labels raise in strict mode or are
    dropped (and counted) when ``lenient``.
    """
    if ctx_size < 1 or mention_size < 1:
        raise CorpusError(
            f"window sizes must be >= 1, got C={ctx_size}, M={mention_size}"
        )
    toks = inst.tokens
    left = toks[max(0, inst.mention_start - ctx_size) : inst.mention_start]
    left = (pad_token,) * (ctx_size - len(left)) + tuple(left)
    right = toks[inst.mention_end : inst.mention_end + ctx_size]
    right = tuple(right) + (pad_token,) * (ctx_size - len(right))
    mention = inst.mention_tokens[:mention_size]
    mention = tuple(mention) + (pad_token,) * (mention_size - len(mention))

    gold = np.zeros(len(index), dtype=np.float64)
    for label in sorted(inst.labels):
        if label in index:
            gold[index.index_of(label)] = 1.0
        elif lenient:
            if counters is not None:
                counters.dropped_labels += 1
                counters.unknown.add(label)
        else:
            raise UnknownLabelError(f"label {label!r} not in index")
    return WindowedInstance(left=left, mention=mention, right=right, gold=gold)


def window_corpus(instances, ctx_size, mention_size, index, pad_token=PAD_TOKEN,
                  lenient=False, counters=None):
    """Window a whole corpus.  In lenient mode, instances whose labels
    are all unknown are skipped (counted); unlabeled prediction inputs
    (empty label set) are kept with an all-zero gold vector."""
    out = []
    for inst in instances:
        win = window(inst, ctx_size, mention_size, index, pad_token=pad_token,
                     lenient=lenient, counters=counters)
        if inst.labels and not win.gold.any():
            if counters is not None:
                counters.dropped_instances += 1
            continue
        out.append(win)
    return out


def batches(instances, batch_size, rng):
    """Shuffle once, then slice into consecutive batches (short tail kept)."""
    if batch_size < 1:
        raise CorpusError(f"batch_size must be >= 1, got {batch_size}")
    n = len(instances)
    if n == 0:
        raise CorpusError("cannot batch an empty instance sequence")
    order = rng.permutation(n)
    return [
        [instances[j] for j in order[i : i + batch_size]]
        for i in range(0, n, batch_size)
    ]
