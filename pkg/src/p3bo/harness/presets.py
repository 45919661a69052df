"""Ready-made ablation experiments."""

from __future__ import annotations

import copy

from ..solvers import CLASS_ORDER
from .config import ExperimentConfig, MethodSpec, ProblemSpec

# Weakest standalone class on the bundled Ising instance (lowest median AUC).
WEAKEST_CLASS = {"ising": "Evolution"}

TEMPERATURES = (0.1, 1.0, 10.0, 100.0)
POPULATION_SIZES = (1, 5, 10, 15)
BATCH_SIZES = (1, 10, 100, 500)

DEFAULT_PROBLEM = ProblemSpec(kind="ising", seed=1, params={})


def _p3bo(name: str, **kw) -> MethodSpec:
    return MethodSpec(name=name, type="p3bo", **kw)


def _config(methods, problem, seeds, output_dir, **kw) -> ExperimentConfig:
    return ExperimentConfig(problems=[copy.deepcopy(problem)], methods=methods, seeds=list(seeds),
                            output_dir=output_dir, **kw)


def leave_one_out(problem=DEFAULT_PROBLEM, seeds=range(10)) -> list[ExperimentConfig]:
    """The full baseline plus one config per removed class."""
    out = [_config([_p3bo("P3BO")], problem, seeds, "results/leave_one_out/full")]
    for cls in CLASS_ORDER:
        rest = [c for c in CLASS_ORDER if c != cls]
        m = _p3bo(f"P3BO-no-{cls}", population={"sample": "prior", "classes": rest})
        out.append(_config([m], problem, seeds, f"results/leave_one_out/no-{cls}"))
    return out


def sharing(problem=DEFAULT_PROBLEM, seeds=range(10)) -> ExperimentConfig:
    methods = [_p3bo("P3BO"), _p3bo("P3BO-no-sharing", engine={"share_data": False})]
    return _config(methods, problem, seeds, "results/sharing")


def bad_init(problem=DEFAULT_PROBLEM, seeds=range(10), weakest: str | None = None) -> ExperimentConfig:
    weakest = weakest or WEAKEST_CLASS.get(problem.kind or "ising", "Evolution")
    pop = {"class": weakest, "count": 15}
    methods = [_p3bo("P3BO-bad-init", population=dict(pop)),
               MethodSpec(name="Adaptive-P3BO-bad-init", type="adaptive_p3bo", population=dict(pop))]
    return _config(methods, problem, seeds, "results/bad_init")


def temperature(problem=DEFAULT_PROBLEM, seeds=range(10)) -> ExperimentConfig:
    methods = [_p3bo(f"P3BO-tau{t:g}", engine={"temperature": t}) for t in TEMPERATURES]
    return _config(methods, problem, seeds, "results/temperature")


def population_size(problem=DEFAULT_PROBLEM, seeds=range(10)) -> ExperimentConfig:
    methods = [_p3bo(f"P3BO-N{n}", engine={"population_size": n}) for n in POPULATION_SIZES]
    return _config(methods, problem, seeds, "results/population_size")


def batch_size(problem=DEFAULT_PROBLEM, seeds=range(10)) -> list[ExperimentConfig]:
    # batch size is a per-experiment override, so each value is its own config
    return [_config([_p3bo("P3BO")], problem, seeds, f"results/batch_size/B{b}", batch_size=b)
            for b in BATCH_SIZES]


PRESETS = {
    "leave-one-out": leave_one_out,
    "sharing": sharing,
    "bad-init": bad_init,
    "temperature": temperature,
    "population-size": population_size,
    "batch-size": batch_size,
}


def ablation_presets() -> dict[str, ExperimentConfig]:
    """Every preset as a flat name -> config mapping."""
    out = {}
    for name, fn in PRESETS.items():
        made = fn()
        if isinstance(made, list):
            for cfg in made:
                out[f"{name}/{cfg.output_dir.rsplit('/', 1)[-1]}"] = cfg
        else:
            out[name] = made
    return out
