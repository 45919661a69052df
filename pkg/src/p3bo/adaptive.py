"""Online evolution of the population's solver classes and hyperparameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .solvers import CLASS_ORDER, quantile_threshold


@dataclass(frozen=True)
class Prior:
    kind: str  # "uniform" | "loguniform" | "categorical"
    lo: float = 0.0
    hi: float = 1.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind in ("uniform", "loguniform"):
            if not self.lo < self.hi:
                raise ValueError(f"prior needs lo < hi, got ({self.lo}, {self.hi})")
            if self.kind == "loguniform" and self.lo <= 0:
                raise ValueError("log-uniform prior requires lo > 0")
        elif self.kind == "categorical":
            if not self.values:
                raise ValueError("categorical prior needs values")
        else:
            raise ValueError(f"unknown prior kind {self.kind!r}")

    @property
    def numeric(self) -> bool:
        return self.kind != "categorical"

    def sample(self, rng: np.random.Generator):
        if self.kind == "uniform":
            return float(rng.uniform(self.lo, self.hi))
        if self.kind == "loguniform":
            return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))
        return self.values[int(rng.integers(len(self.values)))]

    def contains(self, value) -> bool:
        if self.numeric:
            return self.lo <= value <= self.hi
        return value in self.values

    def clip(self, value: float) -> float:
        return float(min(max(value, self.lo), self.hi))

    def to_dict(self) -> dict:
        if self.numeric:
            return {"kind": self.kind, "lo": self.lo, "hi": self.hi}
        return {"kind": self.kind, "values": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "Prior":
        if d["kind"] == "categorical":
            return cls("categorical", values=tuple(d["values"]))
        return cls(d["kind"], float(d["lo"]), float(d["hi"]))


def uniform(lo, hi) -> Prior:
    return Prior("uniform", lo, hi)


def loguniform(lo, hi) -> Prior:
    return Prior("loguniform", lo, hi)


def categorical(*values) -> Prior:
    return Prior("categorical", values=tuple(values))


DEFAULT_PRIORS: dict[str, dict[str, Prior]] = {
    "SMW": {},
    "Evolution": {
        "crossover_probability": uniform(0.1, 0.3),
        "mutation_probability": uniform(0.05, 0.2),
    },
    "CEM": {
        "quantile": uniform(0.825, 0.975),
        "smoothing": loguniform(0.1, 10.0),
        "model": categorical("Pssm", "Markov"),
    },
    "MBO": {
        "acquisition_function": categorical("PosteriorMean", "UCB"),
        "ucb_scale_factor": uniform(0.5, 1.2),
        "regressor": categorical("Ensemble", "BayesianRidge"),
    },
}


@dataclass
class MemberSpec:
    class_tag: str
    hyperparams: dict = field(default_factory=dict)

    def copy(self) -> "MemberSpec":
        return MemberSpec(self.class_tag, dict(self.hyperparams))


@dataclass
class AdaptConfig:
    quantile: float = 0.5
    tournament_size: int = 2
    crossover_rate: float = 0.1
    mutation_rate: float = 0.5
    scale_factors: tuple = (0.8, 1.25)
    warmup_rounds: int = 3

    def __post_init__(self):
        if not 0 < self.quantile < 1:
            raise ValueError("survivor quantile must lie in (0, 1)")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.tournament_size < 1:
            raise ValueError("tournament size must be >= 1")


def sample_hyperparams(class_tag: str, priors, rng) -> dict:
    return {name: prior.sample(rng) for name, prior in priors.get(class_tag, {}).items()}


def sample_initial_population(priors, n: int, rng: np.random.Generator, classes=CLASS_ORDER,
                              max_mbo: int = 4) -> list[MemberSpec]:
    """``n`` members with at least one per class and at most ``max_mbo`` MBO instances."""
    classes = list(classes)
    if n < len(classes):
        raise ValueError(f"population size {n} smaller than the number of classes ({len(classes)})")
    tags = list(classes)
    n_mbo = tags.count("MBO")
    while len(tags) < n:
        allowed = [c for c in classes if c != "MBO" or n_mbo < max_mbo]
        tag = allowed[int(rng.integers(len(allowed)))]
        n_mbo += tag == "MBO"
        tags.append(tag)
    tags = [tags[i] for i in rng.permutation(len(tags))]
    return [MemberSpec(t, sample_hyperparams(t, priors, rng)) for t in tags]


def select_survivors(scores, q: float) -> list[int]:
    """Indices whose score reaches the nearest-rank q-quantile (ties kept)."""
    scores = np.asarray(scores, dtype=float)
    if len(scores) == 0:
        raise ValueError("empty population")
    cut = quantile_threshold(scores, q)
    return [i for i, s in enumerate(scores) if s >= cut]


def tournament_select(survivors: list[int], scores, size: int, rng: np.random.Generator) -> int:
    size = min(size, len(survivors))
    entrants = rng.choice(len(survivors), size=size, replace=False)
    # entrants come in random order, so taking the first maximum breaks ties uniformly
    vals = [scores[survivors[e]] for e in entrants]
    return survivors[entrants[int(np.argmax(vals))]]


def recombine(parent_a: MemberSpec, parent_b: MemberSpec, score_a: float, score_b: float,
              crossover_rate: float, rng: np.random.Generator) -> tuple[MemberSpec, float]:
    """Child spec plus the score it inherits from the class-supplying parent."""
    if parent_a.class_tag != parent_b.class_tag:
        if rng.random() < 0.5:
            return parent_a.copy(), score_a
        return parent_b.copy(), score_b
    hp = {}
    for name, value in parent_a.hyperparams.items():
        take_b = rng.random() < crossover_rate and name in parent_b.hyperparams
        hp[name] = parent_b.hyperparams[name] if take_b else value
    return MemberSpec(parent_a.class_tag, hp), score_a


def mutate(child: MemberSpec, mutation_rate: float, priors, rng: np.random.Generator,
           scale_factors=(0.8, 1.25)) -> MemberSpec:
    hp = dict(child.hyperparams)
    class_priors = priors.get(child.class_tag, {})
    for name in list(hp):
        prior = class_priors.get(name)
        if prior is None or rng.random() >= mutation_rate:
            continue
        if not prior.numeric or rng.random() < 0.5:
            hp[name] = prior.sample(rng)
        else:
            factor = scale_factors[int(rng.integers(len(scale_factors)))]
            hp[name] = prior.clip(hp[name] * factor)
    return MemberSpec(child.class_tag, hp)


def adapt(population: list[MemberSpec], scores, config: AdaptConfig, priors,
          rng: np.random.Generator) -> tuple[list[MemberSpec], list[float]]:
    """One generation: survivors -> tournament -> recombine -> mutate, N times."""
    scores = [float(s) for s in scores]
    survivors = select_survivors(scores, config.quantile)
    children, inherited = [], []
    for _ in range(len(population)):
        a = tournament_select(survivors, scores, config.tournament_size, rng)
        b = tournament_select(survivors, scores, config.tournament_size, rng)
        child, score = recombine(population[a], population[b], scores[a], scores[b],
                                 config.crossover_rate, rng)
        children.append(mutate(child, config.mutation_rate, priors, rng, config.scale_factors))
        inherited.append(score)
    return children, inherited
