from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from p3bo.adaptive import (
    DEFAULT_PRIORS,
    AdaptConfig,
    MemberSpec,
    Prior,
    adapt,
    categorical,
    loguniform,
    mutate,
    recombine,
    sample_hyperparams,
    sample_initial_population,
    select_survivors,
    uniform,
)
from p3bo.solvers import CLASS_ORDER, SOLVER_CLASSES


def in_support(spec: MemberSpec) -> bool:
    return all(DEFAULT_PRIORS[spec.class_tag][k].contains(v) for k, v in spec.hyperparams.items())


def test_prior_validation():
    with pytest.raises(ValueError):
        uniform(1.0, 1.0)
    with pytest.raises(ValueError):
        loguniform(0.0, 1.0)
    with pytest.raises(ValueError):
        categorical()
    p = loguniform(0.1, 10)
    assert Prior.from_dict(p.to_dict()) == p


def test_prior_catalog_matches_solver_hyperparameters():
    for cls, priors in DEFAULT_PRIORS.items():
        assert set(priors) <= set(SOLVER_CLASSES[cls].defaults)
    assert DEFAULT_PRIORS["SMW"] == {}
    assert DEFAULT_PRIORS["MBO"]["ucb_scale_factor"] == uniform(0.5, 1.2)


def test_samples_in_support(rng):
    for _ in range(200):
        for cls in CLASS_ORDER:
            assert in_support(MemberSpec(cls, sample_hyperparams(cls, DEFAULT_PRIORS, rng)))


@pytest.mark.parametrize("scores,q,expected", [
    ((1, 2, 3, 4), 0.5, [2, 3]),
    ((5, 5, 5), 0.5, [0, 1, 2]),
    ((1, 9, 3, 9), 0.999, [1, 3]),
])
def test_survivor_examples(scores, q, expected):
    assert select_survivors(scores, q) == expected


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=15), st.floats(0.01, 0.99), st.data())
def test_survivors_monotone(scores, q, data):
    i = data.draw(st.integers(0, len(scores) - 1))
    before = select_survivors(scores, q)
    bumped = list(scores)
    bumped[i] += data.draw(st.floats(0, 5))
    assert before
    if i in before:
        assert i in select_survivors(bumped, q)


def test_recombine_rates(rng):
    a = MemberSpec("Evolution", {"crossover_probability": 0.1, "mutation_probability": 0.05})
    b = MemberSpec("Evolution", {"crossover_probability": 0.3, "mutation_probability": 0.2})
    assert recombine(a, b, 1.0, 2.0, 0.0, rng) == (a, 1.0)
    child, s = recombine(a, b, 1.0, 2.0, 1.0, rng)
    assert child.hyperparams == b.hyperparams and s == 1.0


def test_recombine_cross_class_fair(rng):
    a, b = MemberSpec("SMW"), MemberSpec("CEM", {"quantile": 0.9, "smoothing": 1.0, "model": "Pssm"})
    counts = Counter()
    for _ in range(4000):
        child, s = recombine(a, b, 0.0, 1.0, 0.5, rng)
        counts[child.class_tag] += 1
        assert s == (0.0 if child.class_tag == "SMW" else 1.0)
    assert chisquare([counts["SMW"], counts["CEM"]]).pvalue > 1e-3


def test_mutation_examples(rng):
    spec = MemberSpec("Evolution", {"crossover_probability": 0.3, "mutation_probability": 0.1})
    assert mutate(spec, 0.0, DEFAULT_PRIORS, rng) == spec
    # only scaling by 1.25 is possible here, and the result is clipped into the prior
    out = mutate(spec, 1.0, DEFAULT_PRIORS, np.random.default_rng(0), scale_factors=(1.25,))
    seen = set()
    for seed in range(50):
        out = mutate(spec, 1.0, DEFAULT_PRIORS, np.random.default_rng(seed), scale_factors=(1.25,))
        assert in_support(out)
        seen.add(out.hyperparams["crossover_probability"])
    assert 0.3 in seen


def test_categorical_mutation_matches_prior():
    rng = np.random.default_rng(4)
    spec = MemberSpec("MBO", {"acquisition_function": "UCB", "ucb_scale_factor": 1.0, "regressor": "Ensemble"})
    counts = Counter(mutate(spec, 1.0, DEFAULT_PRIORS, rng).hyperparams["regressor"] for _ in range(4000))
    assert chisquare([counts["Ensemble"], counts["BayesianRidge"]]).pvalue > 1e-3


def test_adapt_contract(rng):
    pop = sample_initial_population(DEFAULT_PRIORS, 15, rng)
    for _ in range(30):
        scores = rng.normal(size=15)
        pop, inherited = adapt(pop, scores, AdaptConfig(), DEFAULT_PRIORS, rng)
        assert len(pop) == 15 and len(inherited) == 15
        assert all(in_support(m) for m in pop)


def test_adapt_collapses_to_best(rng):
    pop = sample_initial_population(DEFAULT_PRIORS, 15, rng)
    scores = np.arange(15.0)
    cfg = AdaptConfig(quantile=0.999, crossover_rate=0.0, mutation_rate=0.0)
    children, inherited = adapt(pop, scores, cfg, DEFAULT_PRIORS, rng)
    assert all(c == pop[14] for c in children)
    assert inherited == [14.0] * 15


def test_adapt_keeps_class_frequencies_without_pressure():
    rng = np.random.default_rng(0)
    pop = [MemberSpec("SMW")] * 5 + [MemberSpec("CEM", {"quantile": 0.9, "smoothing": 1.0, "model": "Pssm"})] * 10
    cfg = AdaptConfig(quantile=0.01, crossover_rate=0.0, mutation_rate=0.0)
    smw = 0
    trials = 400
    for _ in range(trials):
        children, _ = adapt(pop, np.zeros(15), cfg, DEFAULT_PRIORS, rng)
        smw += sum(c.class_tag == "SMW" for c in children)
    assert abs(smw / (15 * trials) - 1 / 3) < 0.02


def test_initial_population_constraints():
    for seed in range(200):
        pop = sample_initial_population(DEFAULT_PRIORS, 15, np.random.default_rng(seed))
        c = Counter(m.class_tag for m in pop)
        assert min(c[k] for k in CLASS_ORDER) >= 1 and c["MBO"] <= 4
    four = sample_initial_population(DEFAULT_PRIORS, 4, np.random.default_rng(0))
    assert sorted(m.class_tag for m in four) == sorted(CLASS_ORDER)
    with pytest.raises(ValueError):
        sample_initial_population(DEFAULT_PRIORS, 3, np.random.default_rng(0))
    a = sample_initial_population(DEFAULT_PRIORS, 15, np.random.default_rng(9))
    assert a == sample_initial_population(DEFAULT_PRIORS, 15, np.random.default_rng(9))


def test_engine_adaptation_starts_after_warmup():
    from p3bo.engine import Engine, EngineConfig
    from p3bo.harness.generate import gen_problem
    inst = gen_problem("lookup", {"rounds": 5, "batch_size": 10}, seed=0)
    pop = [MemberSpec("SMW"), MemberSpec("CEM", {"quantile": 0.9, "smoothing": 1.0, "model": "Pssm"})]
    e = Engine(inst, pop, EngineConfig(population_size=2, seed=0), adapt_config=AdaptConfig())
    flags = [r.adapted for r in e.run()]
    assert flags == [False, False, False, True, True]
