"""Frozen pre-trained word embeddings with unk fallback and zero padding.

File format: UTF-8 text, one entry per line, ``token v_1 ... v_D`` with
space-separated decimals, no header.  The table is immutable after load;
training never touches it (lookups are served from a read-only matrix).
"""

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError

PAD_TOKEN = "<pad>"
UNK_TOKEN = "unk"

PAD_ID = 0
UNK_ID = 1


@dataclass
class LoadReport:
    dim: int
    vectors: int
    duplicates: int
    unk_source: str  # "file" or "mean"


class EmbeddingTable:
    """Immutable token -> vector map with pad and unk handling.

    Row 0 of the matrix is the all-zero pad vector, row 1 the unk
    vector; vocabulary entries follow.  ``lookup`` is total: the pad
    token maps to zeros, out-of-vocabulary words map to unk.
    """

    def __init__(self, tokens, matrix, pad_token=PAD_TOKEN, report=None):
        self.pad_token = pad_token
        self._ids = {tok: i + 2 for i, tok in enumerate(tokens)}
        self._matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        self._matrix.flags.writeable = False
        self.report = report

    @property
    def dim(self):
        return self._matrix.shape[1]

    @property
    def matrix(self):
        return self._matrix

    def __len__(self):
        return len(self._ids)

    def __contains__(self, token):
        return token in self._ids

    def token_id(self, token):
        """Row index for a token (pad -> 0, unknown -> 1)."""
        if token == self.pad_token:
            return PAD_ID
        return self._ids.get(token, UNK_ID)

    def vocabulary(self):
        """Loaded tokens in insertion order (pad and synthetic unk excluded)."""
        return tuple(self._ids)

    def lookup(self, token):
        return self._matrix[self.token_id(token)]

    @property
    def unk_vector(self):
        return self._matrix[UNK_ID]

    @property
    def pad_vector(self):
        return self._matrix[PAD_ID]

    def checksum(self):
        """SHA-256 over the sorted vocabulary and all vector bytes."""
        digest = hashlib.sha256()
        digest.update(self._matrix[PAD_ID].tobytes())
        digest.update(self._matrix[UNK_ID].tobytes())
        for token in sorted(self._ids):
            digest.update(token.encode("utf-8"))
            digest.update(self._matrix[self._ids[token]].tobytes())
        return digest.hexdigest()


def load_embeddings(source, expected_dim=None, pad_token=PAD_TOKEN):
    """Parse an embedding file (or iterable of lines) into a table.

    The dimension is inferred from the first line unless expected_dim is
    given.  The unk vector comes from a token literally spelled ``unk``;
    when absent it is the elementwise mean of all loaded vectors
    (recorded in the table's load report).  Duplicate tokens: last wins,
    counted in the report.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_embeddings(fh, expected_dim=expected_dim, pad_token=pad_token)

    dim = expected_dim
    rows = {}
    duplicates = 0
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split(" ")
        token, values = parts[0], parts[1:]
        if dim is None:
            if not values:
                raise ParseError(f"line {lineno}: no vector components")
            dim = len(values)
        if len(values) != dim:
            raise ParseError(
                f"line {lineno}: expected {dim} components, found {len(values)}"
            )
        try:
            vec = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
        if token in rows:
            duplicates += 1
        rows[token] = vec

    if not rows:
        raise ParseError("embedding source is empty")

    tokens = list(rows)
    stacked = np.stack([rows[t] for t in tokens])
    if UNK_TOKEN in rows:
        unk = rows[UNK_TOKEN]
        unk_source = "file"
    else:
        unk = stacked.mean(axis=0)
        unk_source = "mean"

    matrix = np.empty((len(tokens) + 2, dim), dtype=np.float64)
    matrix[PAD_ID] = 0.0
    matrix[UNK_ID] = unk
    matrix[2:] = stacked
    report = LoadReport(
        dim=dim, vectors=len(tokens), duplicates=duplicates, unk_source=unk_source
    )
    return EmbeddingTable(tokens, matrix, pad_token=pad_token, report=report)
