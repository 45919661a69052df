from __future__ import annotations

import abc
import math
from typing import ClassVar

import numpy as np


def quantile_threshold(values, q: float) -> float:
    """Nearest-rank q-quantile used for every cutoff in the package.

    The threshold is the sorted value at 0-based index floor(q * n), clipped
    to the last element; selecting ``values >= threshold`` keeps ties.
    """
    v = np.sort(np.asarray(values, dtype=float))
    if len(v) == 0:
        raise ValueError("quantile of empty sequence")
    idx = min(int(math.floor(q * len(v) + 1e-9)), len(v) - 1)
    return float(v[max(idx, 0)])


class Solver(abc.ABC):
    """A constituent optimizer with the off-policy fit/propose interface.

    ``fit`` may receive sequences this solver never proposed; ``propose``
    returns a single sequence (a tuple of token indices).
    """

    class_tag: ClassVar[str]
    defaults: ClassVar[dict] = {}

    def __init__(self, length: int, vocab_size: int, hyperparams: dict | None = None,
                 rng: np.random.Generator | None = None):
        self.length = length
        self.vocab_size = vocab_size
        self.hyperparams = {**self.defaults, **(hyperparams or {})}
        unknown = set(self.hyperparams) - set(self.defaults)
        if unknown:
            raise ValueError(f"{self.class_tag}: unknown hyperparameters {sorted(unknown)}")
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.hyperparams})"

    @abc.abstractmethod
    def fit(self, X: np.ndarray, y: np.ndarray, rounds: np.ndarray | None = None) -> None:
        ...

    @abc.abstractmethod
    def propose(self) -> tuple:
        ...

    def random_sequence(self) -> tuple:
        return tuple(int(t) for t in self.rng.integers(0, self.vocab_size, size=self.length))
