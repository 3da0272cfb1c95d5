"""Synthetic corpora and embedding files for the behavioral tests.

Two task families:

* overfit corpus: 200 instances, 6 types, trivially separable. The
  mention token and a context cue token both identify the type, so
  every encoder (averaging included) can drive training accuracy to 1.
* trigger corpus: the label is carried ONLY by a cue token fixed at
  the sixth position left of the mention, flanked by decoy cues of
  random types. The bag of tokens is ambiguous (three cues, one
  informative), so the averaging encoder is capped; the LSTM encoder
  must carry the signal across six steps; the attentive encoder only
  has to point at the right slot, and the flanking decoys punish it
  for pointing one position off.

Embedding vectors are drawn small (scale 0.1) so initial logits stay
near zero and the initial loss lands at K*ln2 to within a fraction of
a percent.
"""

import json

import numpy as np

from finet.corpus import parse_instance
from finet.embeddings import load_embeddings

FILLERS = [f"filler{i}" for i in range(20)]


def instance_line(tokens, start, end, labels):
    return json.dumps({
        "tokens": list(tokens), "mention_start": start,
        "mention_end": end, "labels": list(labels),
    })


def embedding_lines(tokens, dim, rng, scale=0.1):
    return [
        f"{tok} " + " ".join(f"{x:.6f}" for x in rng.normal(0.0, scale, size=dim))
        for tok in tokens
    ]


def make_embeddings(tokens, dim, seed, scale=0.1):
    rng = np.random.default_rng(seed)
    return load_embeddings(embedding_lines(tokens, dim, rng, scale))


# -- overfit corpus ---------------------------------------------------

OVERFIT_TYPES = [f"/type{k}" for k in range(6)]
OVERFIT_VOCAB = FILLERS + [f"ent{k}" for k in range(6)] + [f"cue{k}" for k in range(6)]


def overfit_corpus(seed=0, n=200):
    """Instances with 4 context tokens a side; label k = i mod 6."""
    rng = np.random.default_rng(seed)
    instances = []
    for i in range(n):
        k = i % 6
        left = list(rng.choice(FILLERS, size=4))
        right = list(rng.choice(FILLERS, size=4))
        side = left if rng.random() < 0.5 else right
        side[rng.integers(0, 4)] = f"cue{k}"
        tokens = left + [f"ent{k}"] + right
        instances.append(parse_instance(
            instance_line(tokens, 4, 5, [OVERFIT_TYPES[k]])
        ))
    return instances


# -- trigger corpus ---------------------------------------------------

TRIGGER_TYPES = [f"/trig{k}" for k in range(4)]
TRIGGER_VOCAB = FILLERS + [f"cue{k}" for k in range(4)] + ["it"]

_WINDOW = 8  # context tokens per side in the generated sentences

# Index of the trigger inside the left context, both in sentence order
# and in the attention dump's left block. left[7] is mention-adjacent,
# so slot 2 puts five tokens between the cue and the mention.
TRIGGER_SLOT = 2


def trigger_corpus(seed=0, n=400):
    """Sentences whose label is decided by the cue at TRIGGER_SLOT.

    Layout: 8 tokens, mention "it", 8 tokens. left[2] carries cue k for
    label k; left[1] and left[3] carry cues of uniformly random types.
    A position-blind reader sees three cues and cannot tell which one
    matters.
    """
    rng = np.random.default_rng(seed)
    instances = []
    for _ in range(n):
        k = int(rng.integers(4))
        left = [FILLERS[int(rng.integers(len(FILLERS)))] for _ in range(_WINDOW)]
        right = [FILLERS[int(rng.integers(len(FILLERS)))] for _ in range(_WINDOW)]
        left[TRIGGER_SLOT - 1] = f"cue{rng.integers(0, 4)}"
        left[TRIGGER_SLOT] = f"cue{k}"
        left[TRIGGER_SLOT + 1] = f"cue{rng.integers(0, 4)}"
        tokens = left + ["it"] + right
        instances.append(parse_instance(
            instance_line(tokens, _WINDOW, _WINDOW + 1, [TRIGGER_TYPES[k]])
        ))
    return instances
