"""Fully enumerable landscapes stored as a reward per sequence."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np


def sequence_index(X: np.ndarray, vocab_size: int) -> np.ndarray:
    """Base-|V| index with position 0 most significant."""
    X = np.atleast_2d(np.asarray(X, dtype=np.int64))
    weights = vocab_size ** np.arange(X.shape[1] - 1, -1, -1, dtype=np.int64)
    return X @ weights


def all_sequences(length: int, vocab_size: int) -> np.ndarray:
    """Every sequence of V^L in table order."""
    return np.array(list(product(range(vocab_size), repeat=length)), dtype=np.int64)


@dataclass
class LookupOracle:
    table: np.ndarray
    length: int
    vocab_size: int

    kind = "lookup"

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=float)
        if self.table.shape != (self.vocab_size ** self.length,):
            raise ValueError(f"lookup table must have {self.vocab_size ** self.length} entries")

    @classmethod
    def normalized(cls, raw: np.ndarray, length: int, vocab_size: int) -> "LookupOracle":
        raw = np.asarray(raw, dtype=float)
        lo, hi = raw.min(), raw.max()
        if hi == lo:
            raise ValueError("cannot min-max normalise a constant table")
        return cls((raw - lo) / (hi - lo), length, vocab_size)

    def score(self, X: np.ndarray) -> np.ndarray:
        return self.table[sequence_index(X, self.vocab_size)]

    def known_max(self) -> float:
        return float(self.table.max())


def motif_landscape(length: int, vocab_size: int, rng: np.random.Generator, num_motifs: int = 4,
                    motif_length: int = 6, noise: float = 0.05, symmetric: bool = True) -> np.ndarray:
    """Raw rewards for every sequence: best planted-motif match plus noise.

    A motif scores (matches / motif_length)^2 at its best offset, times a
    per-motif weight near 1. With ``symmetric`` the score of a sequence is
    the max over the sequence and its reversal.
    """
    X = all_sequences(length, vocab_size)
    motifs = rng.integers(0, vocab_size, size=(num_motifs, motif_length))
    weights = rng.uniform(0.95, 1.0, size=num_motifs)

    def motif_score(S: np.ndarray) -> np.ndarray:
        best = np.zeros(len(S))
        for m, w in zip(motifs, weights):
            hits = np.zeros(len(S))
            for off in range(length - motif_length + 1):
                hits = np.maximum(hits, (S[:, off:off + motif_length] == m).sum(axis=1))
            best = np.maximum(best, w * (hits / motif_length) ** 2)
        return best

    score = motif_score(X)
    if symmetric:
        score = np.maximum(score, motif_score(X[:, ::-1]))
    return score + noise * rng.random(len(X))
