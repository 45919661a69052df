from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Solver, quantile_threshold


@dataclass
class Pssm:
    """Independent categorical distribution per position, shape (L, V)."""

    probs: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, vocab_size: int, pseudocount: float = 0.0) -> "Pssm":
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        L = X.shape[1]
        counts = np.zeros((L, vocab_size))
        np.add.at(counts, (np.broadcast_to(np.arange(L), X.shape), X), 1.0)
        counts += pseudocount
        totals = counts.sum(axis=1, keepdims=True)
        probs = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 1.0 / vocab_size)
        return cls(probs)

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        cum = np.cumsum(self.probs, axis=1)
        u = rng.random((n, self.probs.shape[0]))
        idx = (u[:, :, None] > cum[None, :, :]).sum(axis=2)
        return np.minimum(idx, self.probs.shape[1] - 1)

    def log_prob(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        with np.errstate(divide="ignore"):
            return np.log(self.probs[np.arange(X.shape[1]), X]).sum(axis=1)


@dataclass
class MarkovChain:
    """First-order chain over adjacent positions.

    ``initial`` is (V,), ``transitions`` is (L-1, V, V) with rows indexed by
    the previous token. Rows with no support fall back to the position's
    marginal.
    """

    initial: np.ndarray
    transitions: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, vocab_size: int, pseudocount: float = 0.0) -> "MarkovChain":
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        L = X.shape[1]
        marg = Pssm.fit(X, vocab_size, pseudocount).probs
        counts = np.zeros((max(L - 1, 0), vocab_size, vocab_size))
        for i in range(L - 1):
            np.add.at(counts[i], (X[:, i], X[:, i + 1]), 1.0)
        counts += pseudocount
        totals = counts.sum(axis=2, keepdims=True)
        fallback = np.broadcast_to(marg[1:, None, :], counts.shape)
        trans = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), fallback)
        return cls(marg[0], trans)

    def sample(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        L = self.transitions.shape[0] + 1
        V = len(self.initial)
        out = np.empty((n, L), dtype=np.int64)
        u = rng.random((n, L))
        out[:, 0] = np.minimum((u[:, 0:1] > np.cumsum(self.initial)).sum(axis=1), V - 1)
        for i in range(1, L):
            cum = np.cumsum(self.transitions[i - 1][out[:, i - 1]], axis=1)
            out[:, i] = np.minimum((u[:, i:i + 1] > cum).sum(axis=1), V - 1)
        return out


class CrossEntropy(Solver):
    """Refits a generative model on the above-quantile observations and samples from it."""

    class_tag = "CEM"
    defaults = {"quantile": 0.85, "smoothing": 1.0, "model": "Pssm"}

    def __init__(self, length, vocab_size, hyperparams=None, rng=None):
        super().__init__(length, vocab_size, hyperparams, rng)
        if self.hyperparams["model"] not in ("Pssm", "Markov"):
            raise ValueError(f"unknown CEM model {self.hyperparams['model']!r}")
        self.model: Pssm | MarkovChain | None = None
        self.selected: np.ndarray | None = None
        self._buffer: list[tuple] = []

    def select(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        keep = y >= quantile_threshold(y, self.hyperparams["quantile"])
        if not keep.any():
            keep[np.argmax(y)] = True
        return np.asarray(X)[keep]

    def fit(self, X, y, rounds=None):
        if len(X) == 0:
            return
        self.selected = self.select(X, y)
        model_cls = Pssm if self.hyperparams["model"] == "Pssm" else MarkovChain
        self.model = model_cls.fit(self.selected, self.vocab_size, self.hyperparams["smoothing"])
        self._buffer = []

    def propose(self) -> tuple:
        if self.model is None:
            return self.random_sequence()
        if not self._buffer:
            # sampling is vectorised, so draw ahead in blocks
            self._buffer = [tuple(int(t) for t in row) for row in self.model.sample(self.rng, 64)][::-1]
        return self._buffer.pop()
