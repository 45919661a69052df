from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..seqcore import Sequence, Vocabulary


class Evaluator(Protocol):
    kind: str

    def score(self, X: np.ndarray) -> np.ndarray:
        """Rewards for an (n, L) array of token indices."""


@dataclass
class OracleInstance:
    """A black-box objective plus the metadata needed to run a benchmark on it."""

    id: str
    vocabulary: Vocabulary
    length: int
    rounds: int
    batch_size: int
    evaluator: Evaluator
    seed: int = 0
    init_dataset: list[tuple[Sequence, float]] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for seq, _ in self.init_dataset:
            self._check(seq, "init_dataset")
            if seq in seen:
                raise ValueError(f"duplicate sequence in init dataset of {self.id}")
            seen.add(seq)

    @property
    def kind(self) -> str:
        return self.evaluator.kind

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def _check(self, seq, where) -> None:
        if len(seq) != self.length:
            raise ValueError(f"{where}: sequence length {len(seq)} != {self.length}")
        for t in seq:
            if not 0 <= t < self.vocab_size:
                raise ValueError(f"{where}: token {t} outside vocabulary of size {self.vocab_size}")

    def evaluate(self, batch) -> list[float]:
        """Rewards for a batch of sequences, in input order."""
        batch = list(batch)
        if not batch:
            return []
        for i, seq in enumerate(batch):
            try:
                self._check(seq, "evaluate")
            except ValueError as exc:
                raise ValueError(f"invalid sequence at index {i}: {exc}") from None
        X = np.array(batch, dtype=np.int64)
        return [float(v) for v in self.evaluator.score(X)]

    def known_max(self) -> float | None:
        fn = getattr(self.evaluator, "known_max", None)
        return fn() if fn else None


def evaluate(oracle: OracleInstance, batch) -> list[float]:
    return oracle.evaluate(batch)
