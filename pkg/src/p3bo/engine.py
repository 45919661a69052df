"""The population-based optimization loop.

Each round the engine samples population members by their selection
probabilities, collects B novel sequences with per-member attribution,
evaluates them, converts the outcome into relative-improvement rewards and
decayed credit scores, optionally evolves the population, and refits every
member on the shared observations.

Random streams: everything derives from ``EngineConfig.seed`` through
``numpy.random.SeedSequence``. Stream 0 drives member sampling in batch
construction, stream 1 drives adaptation and stream (2, k) belongs to the
k-th solver instance ever created in the run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .adaptive import DEFAULT_PRIORS, AdaptConfig, MemberSpec, adapt
from .oracles.base import OracleInstance
from .seqcore import ObservationStore
from .solvers import Solver, make_solver

log = logging.getLogger(__name__)

REWARD_EPS = 1e-6


class SearchSpaceExhausted(RuntimeError):
    pass


@dataclass
class EngineConfig:
    population_size: int = 15
    temperature: float = 1.0
    decay: float = 0.25
    warmup_rounds: int = 3
    retry_cap: int = 10
    seed: int | list = 0
    share_data: bool = True
    uniform_warmup: bool = True
    initial_weights: list | None = None
    stall_limit: int = 1000

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population size must be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if not 0 <= self.decay < 1:
            raise ValueError("decay must lie in [0, 1)")
        if self.warmup_rounds < 0:
            raise ValueError("warmup_rounds must be >= 0")


@dataclass
class CreditLedger:
    rewards: list = field(default_factory=list)   # per round: array of r_i
    scores: np.ndarray | None = None
    probabilities: np.ndarray | None = None
    f_max: float | None = None


@dataclass
class Batch:
    sequences: list
    attribution: list  # per member: set of sequences
    draws: np.ndarray  # per member: number of times it was sampled


@dataclass
class RoundRecord:
    round: int
    batch: list
    rewards: list
    members: list          # MemberSpec per member that proposed this round
    probabilities: np.ndarray  # used to build this round's batch
    draws: np.ndarray
    attribution_counts: np.ndarray
    member_rewards: np.ndarray
    scores: np.ndarray     # credit after this round's update (before adaptation)
    next_probabilities: np.ndarray
    batch_max: float
    cumulative_max: float
    adapted: bool = False
    next_members: list | None = None


def compute_rewards(attribution, rewards_of, f_max: float | None, eps: float = REWARD_EPS) -> np.ndarray:
    """Relative improvement of each member's best proposal over ``f_max``.

    ``rewards_of`` maps a sequence to its observed reward. Members without
    proposals get the round minimum among active members (0 if none are
    active); without a previous maximum every reward is 0.
    """
    n = len(attribution)
    if f_max is None:
        return np.zeros(n)
    denom = max(abs(f_max), eps)
    r = np.full(n, np.nan)
    for i, seqs in enumerate(attribution):
        if seqs:
            r[i] = (max(rewards_of[s] for s in seqs) - f_max) / denom
    active = ~np.isnan(r)
    r[~active] = r[active].min() if active.any() else 0.0
    return r


def update_credit(scores, rewards, decay: float) -> np.ndarray:
    return decay * np.asarray(scores, dtype=float) + np.asarray(rewards, dtype=float)


def explicit_credit(history, decay: float) -> np.ndarray:
    """Credit as the explicit decayed sum over a (T, N) reward history."""
    history = np.asarray(history, dtype=float)
    T = len(history)
    weights = decay ** np.arange(T - 1, -1, -1, dtype=float)
    return weights @ history


def selection_probabilities(scores, temperature: float, warmup: bool = False) -> np.ndarray:
    """Softmax of min-max normalised credit scores (uniform during warm-up)."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    s = np.asarray(scores, dtype=float)
    if warmup:
        return np.full(len(s), 1.0 / len(s))
    lo, hi = s.min(), s.max()
    norm = (s - lo) / (hi - lo) if hi > lo else np.zeros_like(s)
    z = np.exp((norm - norm.max()) / temperature)
    return z / z.sum()


def build_batch(solvers: list[Solver], p, batch_size: int, history, rng: np.random.Generator,
                retry_cap: int = 10, space_size: int | None = None, instance: str = "",
                stall_limit: int = 1000) -> Batch:
    """Collect ``batch_size`` novel sequences, crediting every member that proposed each one."""
    if space_size is not None and len(history) + batch_size > space_size:
        raise SearchSpaceExhausted(
            f"{instance or 'instance'}: {len(history)} observed + batch {batch_size} exceeds "
            f"search space of {space_size} sequences")
    n = len(solvers)
    p = np.asarray(p, dtype=float)
    cum = np.cumsum(p)
    batch: dict = {}
    attribution = [set() for _ in range(n)]
    draws = np.zeros(n, dtype=np.int64)
    stalled = 0
    while len(batch) < batch_size:
        i = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), n - 1)
        draws[i] += 1
        if stalled >= stall_limit:
            x = _random_novel(solvers[i], history, batch, rng)
        else:
            for _ in range(retry_cap + 1):
                x = solvers[i].propose()
                if x not in history:
                    break
            else:
                stalled += 1
                continue
        attribution[i].add(x)
        if x in batch:
            stalled += 1
        else:
            batch[x] = None
            stalled = 0
    return Batch(list(batch), attribution, draws)


def _random_novel(solver: Solver, history, batch, rng) -> tuple:
    while True:
        x = tuple(int(t) for t in rng.integers(0, solver.vocab_size, size=solver.length))
        if x not in history and x not in batch:
            return x


class Engine:
    def __init__(self, oracle: OracleInstance, population: list[MemberSpec], config: EngineConfig,
                 adapt_config: AdaptConfig | None = None, priors=None, batch_size: int | None = None):
        if len(population) != config.population_size:
            raise ValueError(f"population has {len(population)} members, config expects "
                             f"{config.population_size}")
        self.oracle = oracle
        self.config = config
        self.adapt_config = adapt_config
        self.priors = priors if priors is not None else DEFAULT_PRIORS
        self.batch_size = batch_size or oracle.batch_size
        seed = config.seed if isinstance(config.seed, (list, tuple)) else [config.seed]
        self._seed = [int(s) for s in seed]
        self._draw_rng = self._stream(0)
        self._adapt_rng = self._stream(1)
        self._solver_serial = 0
        self.store = ObservationStore(oracle.length, oracle.vocab_size)
        self.own: list[set] = []
        self.specs: list[MemberSpec] = []
        self.solvers: list[Solver] = []
        self._set_population([s.copy() for s in population])
        self.round = 0
        self.ledger = CreditLedger(scores=np.zeros(len(population)))
        if oracle.init_dataset:
            for seq, y in oracle.init_dataset:
                self.store.add(seq, y, 0)
            self.ledger.f_max = self.store.max_reward()
        n = len(population)
        w = np.full(n, 1.0 / n) if config.initial_weights is None else np.asarray(config.initial_weights, float)
        if len(w) != n or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("initial weights must be a non-negative vector of population size")
        self.ledger.probabilities = w / w.sum()
        self._fit_all()

    def _stream(self, *key) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self._seed, spawn_key=key))

    def _set_population(self, specs: list[MemberSpec]) -> None:
        self.specs = specs
        self.solvers = []
        for spec in specs:
            rng = self._stream(2, self._solver_serial)
            self._solver_serial += 1
            self.solvers.append(make_solver(spec.class_tag, self.oracle.length, self.oracle.vocab_size,
                                            spec.hyperparams, rng))
        self.own = [set() for _ in specs]

    @property
    def space_size(self) -> int:
        return self.oracle.vocab_size ** self.oracle.length

    def _fit_all(self) -> None:
        if len(self.store) == 0:
            return
        if self.config.share_data:
            X, y, r = self.store.arrays()
            for s in self.solvers:
                s.fit(X, y, r)
            return
        for s, own in zip(self.solvers, self.own):
            visible = own | {seq for seq, _ in self.oracle.init_dataset}
            X, y, r = self.store.arrays(visible)
            s.fit(X, y, r)

    def run_round(self) -> RoundRecord:
        cfg = self.config
        t = self.round + 1
        p_used = self.ledger.probabilities.copy()
        members = [s.copy() for s in self.specs]
        batch = build_batch(self.solvers, p_used, self.batch_size, self.store, self._draw_rng,
                            cfg.retry_cap, self.space_size, self.oracle.id, cfg.stall_limit)
        ys = self.oracle.evaluate(batch.sequences)
        self.store.extend(batch.sequences, ys, t)
        for own, seqs in zip(self.own, batch.attribution):
            own.update(seqs)
        observed = dict(zip(batch.sequences, ys))
        f_prev = self.ledger.f_max
        r = compute_rewards(batch.attribution, observed, f_prev)
        batch_max = max(ys)
        self.ledger.f_max = batch_max if f_prev is None else max(f_prev, batch_max)
        scores = update_credit(self.ledger.scores, r, cfg.decay)
        self.ledger.rewards.append(r)
        record_scores = scores.copy()

        adapted = False
        if self.adapt_config is not None and t > self.adapt_config.warmup_rounds:
            specs, inherited = adapt(self.specs, scores, self.adapt_config, self.priors, self._adapt_rng)
            self._set_population(specs)
            scores = np.asarray(inherited, dtype=float)
            adapted = True
        self.ledger.scores = scores
        warm = cfg.uniform_warmup and t < cfg.warmup_rounds
        self.ledger.probabilities = selection_probabilities(scores, cfg.temperature, warmup=warm)
        self._fit_all()
        self.round = t
        return RoundRecord(
            round=t,
            batch=batch.sequences,
            rewards=ys,
            members=members,
            probabilities=p_used,
            draws=batch.draws,
            attribution_counts=np.array([len(a) for a in batch.attribution]),
            member_rewards=r,
            scores=record_scores,
            next_probabilities=self.ledger.probabilities.copy(),
            batch_max=batch_max,
            cumulative_max=self.ledger.f_max,
            adapted=adapted,
            next_members=[s.copy() for s in self.specs] if adapted else None,
        )

    def run(self, rounds: int | None = None) -> list[RoundRecord]:
        rounds = self.oracle.rounds if rounds is None else rounds
        return [self.run_round() for _ in range(rounds)]
