from __future__ import annotations

import hashlib

import numpy as np

from ..seqcore import one_hot_batch
from .base import Solver
from .evolution import mutate, recombine, tournament
from .regressors import FIT_CACHE, Ensemble, fit_ensemble

MIN_OBSERVATIONS = 10


class ModelBased(Solver):
    """Surrogate-model optimizer.

    Fits a CV-filtered ensemble of linear regressors on one-hot features and
    proposes the best novel sequences found by an evolutionary search on the
    acquisition function.
    """

    class_tag = "MBO"
    defaults = {
        "acquisition_function": "PosteriorMean",
        "ucb_scale_factor": 1.0,
        "regressor": "Ensemble",
        "inner_rounds": 500,
        "inner_batch_size": 25,
        "inner_population_size": 100,
        "inner_tournament_size": 5,
        "inner_crossover_probability": 0.1,
        "inner_mutation_probability": None,  # None -> 1 / L
    }

    def __init__(self, length, vocab_size, hyperparams=None, rng=None):
        super().__init__(length, vocab_size, hyperparams, rng)
        if self.hyperparams["acquisition_function"] not in ("PosteriorMean", "UCB"):
            raise ValueError(f"unknown acquisition {self.hyperparams['acquisition_function']!r}")
        self.model: Ensemble | None = None
        self.exhausted = False
        self._predict = None
        self._X = np.zeros((0, length), dtype=np.int64)
        self._y = np.zeros(0)
        self._observed: set[tuple] = set()
        self._proposed: set[tuple] = set()
        self._queue: list[tuple] = []

    @property
    def low_confidence(self) -> bool:
        return self.model is None or self.model.low_confidence

    def fit(self, X, y, rounds=None):
        X = np.asarray(X, dtype=np.int64)
        y = np.asarray(y, dtype=float)
        self._X, self._y = X, y
        self._observed = {tuple(r) for r in X.tolist()}
        self._queue = []
        self.exhausted = False
        if len(X) < MIN_OBSERVATIONS:
            self.model = None
            self._predict = None
            return
        kind = self.hyperparams["regressor"]
        key = (kind, hashlib.sha1(X.tobytes() + y.tobytes()).hexdigest())
        model = FIT_CACHE.get(key)
        if model is None:
            model = fit_ensemble(one_hot_batch(X, self.vocab_size), y, kind=kind, seed=0)
            FIT_CACHE.put(key, model)
        self.model = model
        self._predict = model.on_tokens(self.length, self.vocab_size)

    def predict(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self._predict(np.atleast_2d(np.asarray(X, dtype=np.int64)))

    def acquisition(self, X: np.ndarray) -> np.ndarray:
        mean, std = self.predict(X)
        if self.hyperparams["acquisition_function"] == "UCB":
            return mean + self.hyperparams["ucb_scale_factor"] * std
        return mean

    def inner_search(self) -> list[tuple[tuple, float]]:
        """Evolve candidates against the acquisition function.

        Returns novel (unobserved, not yet proposed) sequences ranked by
        non-increasing acquisition value.
        """
        hp = self.hyperparams
        p_mut = hp["inner_mutation_probability"] or 1.0 / self.length
        order = np.argsort(-self._y, kind="stable")
        pop = self._X[order[: hp["inner_population_size"]]]
        fit = self.acquisition(pop)
        found_X = [pop]
        found_v = [fit]
        for _ in range(int(hp["inner_rounds"])):
            k = int(hp["inner_batch_size"])
            parents = tournament(fit, int(hp["inner_tournament_size"]), 2 * k, self.rng)
            kids = recombine(pop[parents[:k]], pop[parents[k:]], hp["inner_crossover_probability"], self.rng)
            kids = mutate(kids, p_mut, self.vocab_size, self.rng)
            vals = self.acquisition(kids)
            found_X.append(kids)
            found_v.append(vals)
            # regularised evolution: the oldest members die first
            pop = np.concatenate([pop, kids])[-hp["inner_population_size"]:]
            fit = np.concatenate([fit, vals])[-hp["inner_population_size"]:]
        allX = np.concatenate(found_X)
        allv = np.concatenate(found_v)
        ranked = np.lexsort((np.arange(len(allv)), -allv))
        packed = allX.astype(np.uint8)
        seen: set[bytes] = set()
        out = []
        for i in ranked:
            key = packed[i].tobytes()
            if key in seen:
                continue
            seen.add(key)
            seq = tuple(allX[i].tolist())
            if seq not in self._observed and seq not in self._proposed:
                out.append((seq, float(allv[i])))
        return out

    def propose(self) -> tuple:
        if self.model is None:
            return self.random_sequence()
        while True:
            while self._queue:
                seq = self._queue.pop()
                if seq not in self._proposed and seq not in self._observed:
                    self._proposed.add(seq)
                    return seq
            if self.exhausted:
                return self.random_sequence()
            ranked = self.inner_search()
            if not ranked:
                self.exhausted = True
                return self.random_sequence()
            self._queue = [s for s, _ in reversed(ranked)]
