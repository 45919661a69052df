"""Experiment execution and result files.

Every (method, instance, seed) triple is an independent run. Its random
state derives from ``SeedSequence([seed, crc32(method), crc32(instance)])``:
the engine uses child streams 0, 1 and (2, k) of that sequence, and the
initial population is drawn from child stream 3. Nothing reads ambient
entropy, so a rerun of the same config reproduces every output byte.

Layout of ``output_dir``::

    runs/<run_id>/rounds.csv     per-round rows of one triple
    runs/<run_id>/summary.json   summary record of one triple
    rounds.csv                   all per-round rows, ordered by run id
    summaries.json               all summary records, ordered by run id
    errors.json                  failed triples (empty list when none)
    config.yaml                  the normalized config that produced the results
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..adaptive import MemberSpec, sample_hyperparams, sample_initial_population
from ..engine import Engine
from ..metrics import (
    auc_max_reward,
    enumerate_optima,
    fraction_of_optima,
    high_reward_clusters,
    mean_pairwise_hamming,
    mean_positional_entropy,
)
from ..oracles import OracleInstance
from ..solvers import CLASS_ORDER
from .config import ExperimentConfig, MethodSpec

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "run_id", "method", "instance", "seed", "round", "row_type",
    "batch_max", "cumulative_max", "mean_pairwise_hamming", "mean_entropy",
    "member", "class", "probability", "score", "reward", "draws", "attribution_count", "hyperparams",
]


@dataclass
class TripleResult:
    run_id: str
    rows: list | None
    summary: dict | None
    error: dict | None


def run_id_for(method: str, instance: str, seed: int) -> str:
    clean = lambda s: re.sub(r"[^A-Za-z0-9._-]+", "_", s)  # noqa: E731
    return f"{clean(method)}__{clean(instance)}__s{seed}"


def seed_words(method: str, instance: str, seed: int) -> list[int]:
    return [int(seed), zlib.crc32(method.encode()), zlib.crc32(instance.encode())]


def build_population(method: MethodSpec, priors, rng: np.random.Generator) -> list[MemberSpec]:
    """Initial members of a run; hyperparameters missing from the config come from the priors."""
    if method.type == "standalone":
        return [MemberSpec(method.class_tag, dict(method.hyperparams))]
    pop = method.population
    if isinstance(pop, list):
        out = []
        for m in pop:
            hp = sample_hyperparams(m["class"], priors, rng)
            hp.update(m.get("hyperparams") or {})
            out.append(MemberSpec(m["class"], hp))
        return out
    n = int(method.engine.get("population_size", 15))
    if "class" in pop:
        n = int(pop.get("count", n))
        fixed = pop.get("hyperparams") or {}
        return [MemberSpec(pop["class"], {**sample_hyperparams(pop["class"], priors, rng), **fixed})
                for _ in range(n)]
    classes = list(pop.get("classes", CLASS_ORDER))
    if n < len(classes):
        # too small to hold every class: n distinct classes
        picked = [classes[i] for i in sorted(rng.choice(len(classes), size=n, replace=False))]
        return [MemberSpec(c, sample_hyperparams(c, priors, rng)) for c in picked]
    return sample_initial_population(priors, n, rng, classes=classes, max_mbo=int(pop.get("max_mbo", 4)))


_OPTIMA_CACHE: dict = {}


def _optima(inst: OracleInstance):
    key = (inst.id, zlib.crc32(inst.evaluator.table.tobytes()))
    if key not in _OPTIMA_CACHE:
        ev = inst.evaluator
        _OPTIMA_CACHE[key] = enumerate_optima(ev.table, ev.length, ev.vocab_size)
    return _OPTIMA_CACHE[key]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _hp_json(hp: dict) -> str:
    short = {k: float(f"{v:.9g}") if isinstance(v, float) else v for k, v in _jsonable(hp).items()}
    return json.dumps(short, sort_keys=True)


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def rows_to_csv(rows: list[dict], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def run_triple(method: MethodSpec, inst: OracleInstance, seed: int, priors,
               rounds: int | None = None, batch_size: int | None = None) -> tuple[list, dict]:
    """Run one triple and return (csv rows, summary record)."""
    words = seed_words(method.name, inst.id, seed)
    pop_rng = np.random.default_rng(np.random.SeedSequence(words, spawn_key=(3,)))
    population = build_population(method, priors, pop_rng)
    cfg = method.engine_config(words)
    if cfg.population_size != len(population):
        cfg.population_size = len(population)
    engine = Engine(inst, population, cfg, adapt_config=method.adapt_config(), priors=priors,
                    batch_size=batch_size)
    records = engine.run(rounds)
    run_id = run_id_for(method.name, inst.id, seed)
    base = {"run_id": run_id, "method": method.name, "instance": inst.id, "seed": seed}
    rows, curve, hammings, entropies = [], [], [], []
    proposed, rewards = [], []
    for rec in records:
        ham = mean_pairwise_hamming(rec.batch)
        ent = mean_positional_entropy(rec.batch)
        curve.append(rec.cumulative_max)
        if ham is not None:
            hammings.append(ham)
        entropies.append(ent)
        proposed.extend(rec.batch)
        rewards.extend(rec.rewards)
        rows.append({**base, "round": rec.round, "row_type": "summary", "batch_max": rec.batch_max,
                     "cumulative_max": rec.cumulative_max, "mean_pairwise_hamming": ham,
                     "mean_entropy": ent})
        for i, spec in enumerate(rec.members):
            rows.append({**base, "round": rec.round, "row_type": "member", "member": i,
                         "class": spec.class_tag, "probability": rec.probabilities[i],
                         "score": rec.scores[i], "reward": rec.member_rewards[i],
                         "draws": rec.draws[i], "attribution_count": rec.attribution_counts[i],
                         "hyperparams": _hp_json(spec.hyperparams)})
    summary = {
        **base,
        "kind": inst.kind,
        "rounds": len(records),
        "final_cumulative_max": curve[-1] if curve else None,
        "auc": auc_max_reward(curve) if curve else None,
        "curve": curve,
        "mean_pairwise_hamming": float(np.mean(hammings)) if hammings else None,
        "mean_entropy": float(np.mean(entropies)) if entropies else None,
        "final_members": [{"class": s.class_tag, "hyperparams": s.hyperparams} for s in engine.specs],
    }
    if inst.kind == "lookup":
        summary["fraction_of_optima"] = fraction_of_optima(inst, proposed, optima=_optima(inst))
        summary["high_reward_clusters"] = high_reward_clusters(proposed, rewards, inst.known_max())
    return rows, summary


def _execute(args) -> TripleResult:
    method, inst, seed, priors, rounds, batch_size, out_dir = args
    run_id = run_id_for(method.name, inst.id, seed)
    try:
        rows, summary = run_triple(method, inst, seed, priors, rounds, batch_size)
    except Exception as exc:  # one failed triple must not take down its siblings
        log.exception("run %s failed", run_id)
        err = {"run_id": run_id, "method": method.name, "instance": inst.id, "seed": seed,
               "error": type(exc).__name__, "message": str(exc)}
        return TripleResult(run_id, None, None, err)
    if out_dir is not None:
        d = Path(out_dir) / "runs" / run_id
        d.mkdir(parents=True, exist_ok=True)
        (d / "rounds.csv").write_text(rows_to_csv(rows), encoding="utf-8")
        (d / "summary.json").write_text(dump_json(summary), encoding="utf-8")
    return TripleResult(run_id, rows, summary, None)


def run_experiment(config: ExperimentConfig, output_dir=None, instances: list | None = None) -> dict:
    """Run every (method, instance, seed) triple and write merged outputs.

    Returns a dict with ``summaries`` and ``errors`` lists ordered by run id.
    """
    out = Path(output_dir) if output_dir is not None else config.resolved_output()
    out.mkdir(parents=True, exist_ok=True)
    if instances is None:
        instances = [p.load(config.base_dir) for p in config.problems]
    ids = [i.id for i in instances]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate instance ids: {ids}")
    jobs = [(m, inst, s, config.priors, config.rounds, config.batch_size, out)
            for m in config.methods for inst in instances for s in config.seeds]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_execute, jobs))
    else:
        results = [_execute(j) for j in jobs]
    results.sort(key=lambda r: r.run_id)
    ok = [r for r in results if r.error is None]
    errors = [r.error for r in results if r.error is not None]
    merged = rows_to_csv([row for r in ok for row in r.rows])
    (out / "rounds.csv").write_text(merged, encoding="utf-8")
    (out / "summaries.json").write_text(dump_json([r.summary for r in ok]), encoding="utf-8")
    (out / "errors.json").write_text(dump_json(errors), encoding="utf-8")
    (out / "config.yaml").write_text(config.dumps(), encoding="utf-8")
    return {"summaries": [r.summary for r in ok], "errors": errors, "output_dir": out}
