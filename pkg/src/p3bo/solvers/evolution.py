from __future__ import annotations

import numpy as np

from .base import Solver


def tournament(fitness: np.ndarray, size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``count`` winners, each the best of ``size`` entrants.

    Entrants are distinct unless the field is at least four times the
    tournament size, where sampling with replacement is used.
    """
    n = len(fitness)
    size = max(1, min(size, n))
    if size == n:
        entrants = np.broadcast_to(np.arange(n), (count, n))
    elif 4 * size <= n:
        # entrants drawn with replacement; collisions are rare at this ratio
        entrants = rng.integers(0, n, size=(count, size))
    else:
        # random keys -> argpartition gives `size` distinct entrants per row
        entrants = np.argpartition(rng.random((count, n)), size - 1, axis=1)[:, :size]
    scores = fitness[entrants]
    return entrants[np.arange(count), np.argmax(scores, axis=1)]


def recombine(A: np.ndarray, B: np.ndarray, p_cross: float, rng: np.random.Generator) -> np.ndarray:
    """Copy left to right starting on parent A, switching parent with prob ``p_cross``."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    n, L = A.shape
    switches = rng.random((n, L)) < p_cross
    switches[:, 0] = False
    on_b = np.cumsum(switches, axis=1) % 2 == 1
    return np.where(on_b, B, A)


def mutate(X: np.ndarray, p_mut: float, vocab_size: int, rng: np.random.Generator) -> np.ndarray:
    """Change each position to a different uniformly chosen token with prob ``p_mut``."""
    X = np.array(X, copy=True)
    hit = rng.random(X.shape) < p_mut
    shift = rng.integers(1, vocab_size, size=X.shape)
    X[hit] = (X[hit] + shift[hit]) % vocab_size
    return X


class Evolution(Solver):
    """Tournament selection, one-pointer crossover and point mutation.

    Observations older than ``age_limit`` rounds are excluded from parent
    selection.
    """

    class_tag = "Evolution"
    defaults = {
        "crossover_probability": 0.1,
        "mutation_probability": 0.01,
        "tournament_size": 2,
        "age_limit": 5,
    }

    def __init__(self, length, vocab_size, hyperparams=None, rng=None):
        super().__init__(length, vocab_size, hyperparams, rng)
        self._X = np.zeros((0, length), dtype=np.int64)
        self._y = np.zeros(0)

    def fit(self, X, y, rounds=None):
        X = np.asarray(X, dtype=np.int64)
        y = np.asarray(y, dtype=float)
        if len(X) and rounds is not None:
            rounds = np.asarray(rounds)
            alive = rounds > rounds.max() - int(self.hyperparams["age_limit"])
            X, y = X[alive], y[alive]
        self._X, self._y = X, y

    def propose(self) -> tuple:
        if len(self._X) == 0:
            return self.random_sequence()
        hp = self.hyperparams
        a, b = tournament(self._y, int(hp["tournament_size"]), 2, self.rng)
        child = recombine(self._X[a], self._X[b], hp["crossover_probability"], self.rng)
        child = mutate(child, hp["mutation_probability"], self.vocab_size, self.rng)[0]
        return tuple(int(t) for t in child)
