"""Sequence representation, distances and encodings.

Sequences are tuples of vocabulary indices. Text only appears at file
boundaries, via :meth:`Vocabulary.decode` / :meth:`Vocabulary.encode`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence as _Seq

import numpy as np

Sequence = tuple  # tuple[int, ...]

DNA = "ACGT"
PROTEIN = "ACDEFGHIKLMNPQRSTVWY"


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise ValueError("vocabulary needs at least two symbols")
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"duplicate symbols in vocabulary {''.join(symbols)!r}")
        if any(len(s) != 1 for s in symbols):
            raise ValueError("vocabulary symbols must be single characters")

    @classmethod
    def from_string(cls, s: str) -> "Vocabulary":
        return cls(tuple(s))

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return "".join(self.symbols)

    @property
    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.symbols)}

    def encode(self, text: str) -> Sequence:
        idx = self.index
        try:
            return tuple(idx[c] for c in text)
        except KeyError as exc:
            raise ValueError(f"token {exc.args[0]!r} not in vocabulary {self}") from None

    def decode(self, seq: Iterable[int]) -> str:
        return "".join(self.symbols[i] for i in seq)


def validate(seq: _Seq[int], length: int, vocab_size: int) -> None:
    if len(seq) != length:
        raise ValueError(f"sequence length {len(seq)} != {length}")
    for t in seq:
        if not 0 <= t < vocab_size:
            raise ValueError(f"token index {t} out of range for vocabulary of size {vocab_size}")


def hamming_distance(a: _Seq[int], b: _Seq[int]) -> int:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return sum(1 for x, y in zip(a, b) if x != y)


def edit_distance(a: _Seq[int], b: _Seq[int]) -> int:
    """Levenshtein distance with unit costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def pairwise_edit_distances(seqs: np.ndarray) -> np.ndarray:
    """All-pairs Levenshtein distance for an (n, L) index array.

    The DP runs over positions and is vectorised over the n*n pairs, which
    is what makes optima enumeration on 4^8 tables affordable.
    """
    seqs = np.asarray(seqs)
    n, la = seqs.shape
    lb = la
    a = seqs[:, None, :]
    b = seqs[None, :, :]
    prev = np.broadcast_to(np.arange(lb + 1, dtype=np.int16), (n, n, lb + 1)).copy()
    for i in range(1, la + 1):
        cur = np.empty_like(prev)
        cur[:, :, 0] = i
        sub = (a[:, :, i - 1 : i] != b).astype(np.int16)  # (n, n, lb)
        diag = prev[:, :, :-1] + sub
        up = prev[:, :, 1:] + 1
        best = np.minimum(diag, up)
        for j in range(1, lb + 1):
            cur[:, :, j] = np.minimum(best[:, :, j - 1], cur[:, :, j - 1] + 1)
        prev = cur
    return prev[:, :, lb].astype(np.int64)


def one_hot_encode(seq: _Seq[int], vocab_size: int) -> np.ndarray:
    """Position-major one-hot vector of length L * vocab_size."""
    out = np.zeros(len(seq) * vocab_size)
    out[np.arange(len(seq)) * vocab_size + np.asarray(seq, dtype=np.int64)] = 1.0
    return out


def one_hot_batch(X: np.ndarray, vocab_size: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.int64)
    n, length = X.shape
    out = np.zeros((n, length * vocab_size))
    cols = np.arange(length) * vocab_size + X
    out[np.arange(n)[:, None], cols] = 1.0
    return out


def as_array(seqs: Iterable[_Seq[int]], length: int | None = None) -> np.ndarray:
    arr = np.array(list(seqs), dtype=np.int64)
    if arr.size == 0:
        return arr.reshape(0, length or 0)
    return arr


def to_tuples(X: np.ndarray) -> list[Sequence]:
    return [tuple(int(t) for t in row) for row in np.asarray(X)]


@dataclass
class Observation:
    seq: Sequence
    reward: float
    round: int


@dataclass
class ObservationStore:
    """Deduplicated archive of evaluated sequences.

    Insertion order is kept; a stored reward is never overwritten.
    """

    length: int
    vocab_size: int
    _entries: dict = field(default_factory=dict)
    _order: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self._order)

    def __contains__(self, seq) -> bool:
        return seq in self._entries

    def __iter__(self) -> Iterator[Observation]:
        return iter(self._order)

    def get(self, seq) -> float:
        return self._entries[seq].reward

    def add(self, seq: Sequence, reward: float, round: int) -> None:
        if seq in self._entries:
            raise ValueError(f"sequence already observed: {seq}")
        obs = Observation(tuple(seq), float(reward), int(round))
        self._entries[obs.seq] = obs
        self._order.append(obs)

    def extend(self, seqs, rewards, round: int) -> None:
        for s, r in zip(seqs, rewards):
            self.add(s, r, round)

    def arrays(self, subset=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (X, y, rounds); ``subset`` restricts to a set of sequences."""
        obs = self._order if subset is None else [o for o in self._order if o.seq in subset]
        if not obs:
            return (np.zeros((0, self.length), dtype=np.int64), np.zeros(0), np.zeros(0, dtype=np.int64))
        X = np.array([o.seq for o in obs], dtype=np.int64)
        y = np.array([o.reward for o in obs])
        r = np.array([o.round for o in obs], dtype=np.int64)
        return X, y, r

    def max_reward(self) -> float | None:
        if not self._order:
            return None
        return max(o.reward for o in self._order)
