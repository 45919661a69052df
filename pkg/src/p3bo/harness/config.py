"""Experiment configuration files.

Configs are YAML documents with a mandatory ``version: 1`` key::

    version: 1
    output_dir: results/ising          # relative to the config file
    seeds: [0, 1, 2]                   # or `replicates: 3` for seeds 0..2
    workers: 1
    problems:
      - file: problems/ising.txt       # written by `p3bo gen-problem`
      - generate: {kind: hmm, seed: 1, params: {length: 30}}
    methods:
      - name: P3BO
        type: p3bo                     # p3bo | adaptive_p3bo | standalone
        population: {sample: prior}    # or {class: SMW, count: 15} or an explicit member list
        engine: {population_size: 15, temperature: 1.0, decay: 0.25}
      - name: MBO
        type: standalone
        class: MBO
        hyperparams: {}

Optional top-level ``rounds`` and ``batch_size`` override every problem's
own values. ``priors`` replaces the default hyperparameter prior catalog
per class, e.g. ``{Evolution: {mutation_probability: {kind: uniform, lo: 0.05, hi: 0.2}}}``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..adaptive import DEFAULT_PRIORS, AdaptConfig, Prior
from ..engine import EngineConfig
from ..oracles import OracleInstance, read_problem
from ..solvers import SOLVER_CLASSES
from .generate import gen_problem

CONFIG_VERSION = 1
METHOD_TYPES = ("p3bo", "adaptive_p3bo", "standalone")


class ConfigError(ValueError):
    pass


@dataclass
class MethodSpec:
    name: str
    type: str
    class_tag: str | None = None
    hyperparams: dict = field(default_factory=dict)
    population: object = field(default_factory=lambda: {"sample": "prior"})
    engine: dict = field(default_factory=dict)
    adapt: dict = field(default_factory=dict)

    def engine_config(self, seed) -> EngineConfig:
        opts = dict(self.engine)
        if self.type == "standalone":
            opts["population_size"] = 1
        return EngineConfig(seed=seed, **opts)

    def adapt_config(self) -> AdaptConfig | None:
        if self.type != "adaptive_p3bo":
            return None
        opts = dict(self.adapt)
        if "scale_factors" in opts:
            opts["scale_factors"] = tuple(opts["scale_factors"])
        return AdaptConfig(**opts)

    def to_dict(self) -> dict:
        d = {"name": self.name, "type": self.type}
        if self.type == "standalone":
            d["class"] = self.class_tag
            d["hyperparams"] = dict(self.hyperparams)
        else:
            d["population"] = copy.deepcopy(self.population)
        if self.engine:
            d["engine"] = dict(self.engine)
        if self.adapt:
            d["adapt"] = dict(self.adapt)
        return d


@dataclass
class ProblemSpec:
    file: str | None = None
    kind: str | None = None
    seed: int = 0
    params: dict = field(default_factory=dict)

    def load(self, base_dir: Path | None = None) -> OracleInstance:
        if self.file is not None:
            path = Path(self.file)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return read_problem(path)
        return gen_problem(self.kind, self.params, self.seed)

    def to_dict(self) -> dict:
        if self.file is not None:
            return {"file": self.file}
        return {"generate": {"kind": self.kind, "seed": self.seed, "params": dict(self.params)}}


@dataclass
class ExperimentConfig:
    problems: list
    methods: list
    seeds: list
    output_dir: str = "results"
    rounds: int | None = None
    batch_size: int | None = None
    workers: int = 1
    priors: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_PRIORS))
    base_dir: Path | None = None

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        if not self.problems:
            raise ConfigError("at least one problem is required")
        if not self.methods:
            raise ConfigError("at least one method is required")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate method names: {names}")
        for m in self.methods:
            _check_method(m)
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def resolved_output(self) -> Path:
        out = Path(self.output_dir)
        if self.base_dir is not None and not out.is_absolute():
            out = self.base_dir / out
        return out

    def to_dict(self) -> dict:
        d = {
            "version": CONFIG_VERSION,
            "output_dir": self.output_dir,
            "seeds": list(self.seeds),
            "workers": self.workers,
            "problems": [p.to_dict() for p in self.problems],
            "methods": [m.to_dict() for m in self.methods],
        }
        if self.rounds is not None:
            d["rounds"] = self.rounds
        if self.batch_size is not None:
            d["batch_size"] = self.batch_size
        if self.priors != DEFAULT_PRIORS:
            d["priors"] = {c: {k: p.to_dict() for k, p in ps.items()} for c, ps in self.priors.items()}
        return d

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def validate_problems(self) -> None:
        """Parse every referenced problem file; raises on the first failure."""
        for p in self.problems:
            if p.file is not None:
                p.load(self.base_dir)


def _check_method(m: MethodSpec) -> None:
    if m.type not in METHOD_TYPES:
        raise ConfigError(f"method {m.name!r}: unknown type {m.type!r}; expected one of {METHOD_TYPES}")
    if m.type == "standalone":
        if m.class_tag not in SOLVER_CLASSES:
            raise ConfigError(f"method {m.name!r}: unknown solver class {m.class_tag!r}")
        unknown = set(m.hyperparams) - set(SOLVER_CLASSES[m.class_tag].defaults)
        if unknown:
            raise ConfigError(f"method {m.name!r}: unknown hyperparameters {sorted(unknown)}")
        return
    pop = m.population
    if isinstance(pop, dict):
        if "class" in pop and pop["class"] not in SOLVER_CLASSES:
            raise ConfigError(f"method {m.name!r}: unknown solver class {pop['class']!r}")
        for c in pop.get("classes", ()):
            if c not in SOLVER_CLASSES:
                raise ConfigError(f"method {m.name!r}: unknown solver class {c!r}")
    elif isinstance(pop, list):
        for member in pop:
            if member.get("class") not in SOLVER_CLASSES:
                raise ConfigError(f"method {m.name!r}: unknown solver class {member.get('class')!r}")
    else:
        raise ConfigError(f"method {m.name!r}: population must be a mapping or a member list")
    known = set(EngineConfig.__dataclass_fields__) - {"seed"}
    unknown = set(m.engine) - known
    if unknown:
        raise ConfigError(f"method {m.name!r}: unknown engine options {sorted(unknown)}")
    unknown = set(m.adapt) - set(AdaptConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"method {m.name!r}: unknown adapt options {sorted(unknown)}")


def _method(d: dict) -> MethodSpec:
    if not isinstance(d, dict) or "name" not in d or "type" not in d:
        raise ConfigError(f"method entries need 'name' and 'type': {d!r}")
    extra = set(d) - {"name", "type", "class", "hyperparams", "population", "engine", "adapt"}
    if extra:
        raise ConfigError(f"method {d['name']!r}: unknown keys {sorted(extra)}")
    return MethodSpec(
        name=str(d["name"]),
        type=d["type"],
        class_tag=d.get("class"),
        hyperparams=dict(d.get("hyperparams") or {}),
        population=d.get("population", {"sample": "prior"}),
        engine=dict(d.get("engine") or {}),
        adapt=dict(d.get("adapt") or {}),
    )


def _problem(d: dict) -> ProblemSpec:
    if isinstance(d, dict) and "file" in d:
        return ProblemSpec(file=str(d["file"]))
    if isinstance(d, dict) and "generate" in d:
        g = d["generate"]
        if "kind" not in g:
            raise ConfigError("generated problems need a 'kind'")
        return ProblemSpec(kind=g["kind"], seed=int(g.get("seed", 0)), params=dict(g.get("params") or {}))
    raise ConfigError(f"problem entries need 'file' or 'generate': {d!r}")


def _priors(d: dict | None) -> dict:
    priors = copy.deepcopy(DEFAULT_PRIORS)
    for cls, entries in (d or {}).items():
        if cls not in SOLVER_CLASSES:
            raise ConfigError(f"priors: unknown solver class {cls!r}")
        priors[cls] = {k: Prior.from_dict(v) for k, v in entries.items()}
    return priors


def from_dict(d: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a mapping")
    if d.get("version") != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {d.get('version')!r}; expected {CONFIG_VERSION}")
    if "seeds" in d:
        seeds = [int(s) for s in d["seeds"]]
    elif "replicates" in d:
        seeds = list(range(int(d["replicates"])))
    else:
        raise ConfigError("config needs 'seeds' or 'replicates'")
    try:
        return ExperimentConfig(
            problems=[_problem(p) for p in d.get("problems") or []],
            methods=[_method(m) for m in d.get("methods") or []],
            seeds=seeds,
            output_dir=str(d.get("output_dir", "results")),
            rounds=d.get("rounds"),
            batch_size=d.get("batch_size"),
            workers=int(d.get("workers", 1)),
            priors=_priors(d.get("priors")),
            base_dir=base_dir,
        )
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed config: {exc}") from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    cfg = from_dict(data, base_dir=path.parent)
    cfg.validate_problems()
    return cfg


def loads_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    return from_dict(yaml.safe_load(text), base_dir=base_dir)
