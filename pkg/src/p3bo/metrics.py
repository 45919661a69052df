"""Sample-efficiency, diversity and optima-discovery metrics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform
from scipy.stats import rankdata

from .seqcore import pairwise_edit_distances

log = logging.getLogger(__name__)


@dataclass
class RunTrace:
    """Per-round record of one optimization run."""

    batches: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    cumulative_max: list = field(default_factory=list)
    attribution_counts: list = field(default_factory=list)
    probabilities: list = field(default_factory=list)
    scores: list = field(default_factory=list)

    @classmethod
    def from_records(cls, records) -> "RunTrace":
        t = cls()
        for r in records:
            t.append(r.batch, r.rewards, r.cumulative_max, r.attribution_counts, r.probabilities,
                     r.scores)
        return t

    def append(self, batch, rewards, cumulative_max, attribution_counts=None, probabilities=None,
               scores=None) -> None:
        if self.cumulative_max and cumulative_max < self.cumulative_max[-1]:
            raise ValueError("cumulative max must be non-decreasing")
        self.batches.append(list(batch))
        self.rewards.append(list(rewards))
        self.cumulative_max.append(float(cumulative_max))
        self.attribution_counts.append(attribution_counts)
        self.probabilities.append(probabilities)
        self.scores.append(scores)

    def __len__(self) -> int:
        return len(self.cumulative_max)


def auc_max_reward(trace) -> float:
    """Mean of the per-round cumulative maximum (accepts a trace or a curve)."""
    curve = trace.cumulative_max if isinstance(trace, RunTrace) else list(trace)
    if not curve:
        raise ValueError("AUC needs at least one round")
    return float(np.mean(curve))


def mean_pairwise_hamming(batch) -> float | None:
    """Average Hamming distance over unordered pairs; None for fewer than two sequences."""
    X = np.asarray(list(batch), dtype=np.int64)
    n = len(X)
    if n < 2:
        log.info("pairwise Hamming undefined for a batch of %d", n)
        return None
    # per position, count differing pairs from token frequencies
    total = 0
    for col in X.T:
        counts = np.unique(col, return_counts=True)[1]
        total += (n * n - int(np.sum(counts * counts))) // 2
    return total / (n * (n - 1) / 2)


def mean_positional_entropy(batch) -> float:
    """Shannon entropy (nats) of each position's token distribution, averaged over positions."""
    X = np.asarray(list(batch), dtype=np.int64)
    if len(X) == 0:
        raise ValueError("entropy of an empty batch")
    out = 0.0
    for col in X.T:
        p = np.unique(col, return_counts=True)[1] / len(col)
        out -= float(np.sum(p * np.log(p)))
    return out / X.shape[1]


def complete_linkage_labels(dist: np.ndarray, threshold: float) -> np.ndarray:
    """Flat clusters from complete linkage, merging while the closest distance is below ``threshold``."""
    dist = np.asarray(dist, dtype=float)
    n = len(dist)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    if n == 1:
        return np.ones(1, dtype=np.int64)
    Z = linkage(squareform(dist, checks=False), method="complete")
    return fcluster(Z, t=np.nextafter(threshold, -np.inf), criterion="distance")


def high_reward_clusters(sequences, rewards, max_reward: float, reward_threshold_fraction: float = 0.8,
                         distance_threshold: float = 0.5) -> int:
    """Number of complete-linkage clusters among sequences above the reward threshold."""
    X = np.asarray(list(sequences), dtype=np.int64)
    y = np.asarray(list(rewards), dtype=float)
    keep = y >= reward_threshold_fraction * max_reward
    X = X[keep]
    if len(X) == 0:
        return 0
    D = (X[:, None, :] != X[None, :, :]).mean(axis=2)
    return int(len(np.unique(complete_linkage_labels(D, distance_threshold))))


def enumerate_optima(table, length: int, vocab_size: int, reward_threshold: float = 0.9,
                     edit_threshold: float = 3, reverse: str = "literal") -> list[tuple]:
    """Distinct optima of an enumerable landscape.

    Sequences at or above ``reward_threshold`` are clustered by complete
    linkage on edit distance; each cluster contributes its best member
    (ties to the lexicographically smallest). With ``reverse="literal"``
    the reversal of every representative is added as a separate optimum.
    """
    from .oracles.lookup import all_sequences

    if reverse not in ("literal", "none"):
        raise ValueError(f"unsupported reverse mode {reverse!r}")
    table = np.asarray(table, dtype=float)
    idx = np.nonzero(table >= reward_threshold)[0]
    if len(idx) == 0:
        return []
    X = all_sequences(length, vocab_size)[idx]
    y = table[idx]
    labels = complete_linkage_labels(pairwise_edit_distances(X), edit_threshold)
    reps = []
    for lab in np.unique(labels):
        members = np.nonzero(labels == lab)[0]
        # table order is lexicographic, so the first max is the smallest tie
        best = members[np.argmax(y[members])]
        reps.append(tuple(int(t) for t in X[best]))
    optima = list(dict.fromkeys(reps))
    if reverse == "literal":
        optima = list(dict.fromkeys(optima + [s[::-1] for s in optima]))
    return sorted(optima)


def fraction_of_optima(oracle, proposed, optima=None, **kwargs) -> float:
    """Share of precomputed optima that appear exactly in ``proposed``."""
    if optima is None:
        ev = getattr(oracle, "evaluator", oracle)
        optima = enumerate_optima(ev.table, ev.length, ev.vocab_size, **kwargs)
    if not optima:
        return 0.0
    proposed = {tuple(int(t) for t in s) for s in proposed}
    return sum(1 for o in optima if o in proposed) / len(optima)


def rank_methods(auc_table: dict) -> dict:
    """Mean rank per method over instances; the highest AUC gets rank M, ties averaged.

    ``auc_table`` maps (method, instance) to AUC.
    """
    methods = sorted({m for m, _ in auc_table})
    instances = sorted({i for _, i in auc_table})
    missing = [(m, i) for m in methods for i in instances if (m, i) not in auc_table]
    if missing:
        raise ValueError("missing AUC cells: " + ", ".join(f"({m}, {i})" for m, i in missing))
    if not methods:
        return {}
    ranks = np.zeros(len(methods))
    for inst in instances:
        ranks += rankdata([auc_table[(m, inst)] for m in methods], method="average")
    return {m: float(r / len(instances)) for m, r in zip(methods, ranks)}
