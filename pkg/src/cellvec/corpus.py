"""Token vocabulary with frequency filtering and the encoded training corpus.

Each Morton cell id is a token; each trajectory's collapsed cell sequence is
one sentence. The corpus file format is one sequence per line, space-separated
decimal codes; the vocabulary file is one ``token count`` pair per line.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import FormatError


def _cells_of(seq):
    return seq.cells if hasattr(seq, "cells") else seq


class Vocab:
    """Frequency-filtered token table with dense deterministic indices.

    Tokens are ordered by descending count, ties broken by ascending token
    value, so identical input always yields an identical table.
    """

    def __init__(self, tokens, counts):
        self.tokens = list(tokens)
        self.counts = np.asarray(counts, dtype=np.int64)
        self._index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._index

    def index(self, token) -> int:
        return self._index[token]

    def get(self, token, default=None):
        return self._index.get(token, default)

    def count_of(self, token) -> int:
        return int(self.counts[self._index[token]])

    @property
    def total_count(self) -> int:
        return int(self.counts.sum())

    def save(self, sink) -> None:
        for tok, cnt in zip(self.tokens, self.counts):
            sink.write(f"{tok} {cnt}\n")

    @classmethod
    def load(cls, stream) -> "Vocab":
        tokens, counts = [], []
        for line_no, line in enumerate(stream, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"vocab line {line_no}: expected 'token count'")
            tokens.append(int(parts[0]))
            counts.append(int(parts[1]))
        return cls(tokens, counts)


def build_vocab(sequences: Iterable, min_count: int = 5) -> Vocab:
    """Count token occurrences across all sequences and drop rare tokens.

    Counting happens after duplicate collapsing (each dwell counts once).
    Tokens with fewer than ``min_count`` occurrences are excluded; an empty
    result raises ValueError since there is nothing to train on.
    """
    counter: Counter = Counter()
    for seq in sequences:
        counter.update(_cells_of(seq))
    items = [(tok, cnt) for tok, cnt in counter.items() if cnt >= min_count]
    if not items:
        raise ValueError(f"vocabulary is empty after min_count={min_count} filtering")
    items.sort(key=lambda tc: (-tc[1], tc[0]))
    return Vocab([t for t, _ in items], [c for _, c in items])


@dataclass
class Corpus:
    """Index-encoded sequences plus the vocabulary that encoded them."""

    sequences: list
    vocab: Vocab

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sequences)


def encode_corpus(sequences: Iterable, vocab: Vocab) -> Corpus:
    """Map tokens to vocab indices, dropping OOV tokens and sequences that
    end up shorter than 2 (a single token has no context to train on)."""
    index = vocab._index
    encoded = []
    for seq in sequences:
        ids = [index[t] for t in _cells_of(seq) if t in index]
        if len(ids) >= 2:
            encoded.append(np.asarray(ids, dtype=np.int32))
    return Corpus(encoded, vocab)


@dataclass(frozen=True)
class CorpusStats:
    n_sequences: int
    n_cells: int
    mean_len: float
    stddev_len: float


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Population statistics over encoded sequence lengths."""
    if not corpus.sequences:
        raise ValueError("corpus is empty")
    lengths = np.array([len(s) for s in corpus.sequences], dtype=np.float64)
    mean = float(lengths.mean())
    stddev = float(math.sqrt(np.mean((lengths - mean) ** 2)))
    return CorpusStats(len(lengths), int(lengths.sum()), mean, stddev)


def write_sequences(sink, sequences: Iterable) -> None:
    """One sequence per line, space-separated decimal Morton codes."""
    for seq in sequences:
        cells = _cells_of(seq)
        if cells:
            sink.write(" ".join(map(str, cells)))
            sink.write("\n")


def read_sequences(stream) -> list:
    """Inverse of write_sequences."""
    out = []
    for line in stream:
        line = line.strip()
        if line:
            out.append([int(tok) for tok in line.split()])
    return out
