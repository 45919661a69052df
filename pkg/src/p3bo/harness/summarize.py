"""Aggregate finished experiments into rank tables and Max-reward curves."""

from __future__ import annotations

import json
import zlib
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..metrics import rank_methods
from .runner import _fmt

BOOTSTRAP_RESAMPLES = 1000


class IncompleteResults(ValueError):
    pass


def load_summaries(dirs) -> list[dict]:
    out = []
    for d in dirs:
        path = Path(d) / "summaries.json"
        if not path.exists():
            raise IncompleteResults(f"{d}: no summaries.json (was the experiment run?)")
        out.extend(json.loads(path.read_text(encoding="utf-8")))
    return out


def _grid(summaries: list[dict]):
    cells: dict = defaultdict(dict)
    kinds = {}
    for s in summaries:
        key = (s["method"], s["instance"])
        if s["seed"] in cells[key]:
            raise IncompleteResults(f"duplicate result for {key} seed {s['seed']}")
        cells[key][s["seed"]] = s
        kinds[s["instance"]] = s.get("kind", "unknown")
    methods = sorted({m for m, _ in cells})
    instances = sorted({i for _, i in cells})
    missing = [f"({m}, {i})" for m in methods for i in instances if (m, i) not in cells]
    if missing:
        raise IncompleteResults("incomplete grid, missing " + ", ".join(missing))
    for inst in instances:
        seedsets = {m: sorted(cells[(m, inst)]) for m in methods}
        if len({tuple(v) for v in seedsets.values()}) > 1:
            raise IncompleteResults(f"instance {inst}: methods ran different seeds {seedsets}")
    return cells, methods, instances, kinds


def bootstrap_band(curves: np.ndarray, rng: np.random.Generator, resamples: int = BOOTSTRAP_RESAMPLES,
                   level: float = 0.95) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean curve and percentile bootstrap band, resampling rows (seeds)."""
    curves = np.asarray(curves, dtype=float)
    n = len(curves)
    idx = rng.integers(0, n, size=(resamples, n))
    means = curves[idx].mean(axis=1)
    alpha = (1 - level) / 2
    lo, hi = np.quantile(means, [alpha, 1 - alpha], axis=0)
    return curves.mean(axis=0), lo, hi


def summarize(dirs, out_dir=None) -> dict:
    """Write ``rank_table.csv``, ``aucs.csv`` and ``curves.csv``; returns the rank table."""
    dirs = [Path(d) for d in dirs]
    if not dirs:
        raise IncompleteResults("no result directories given")
    cells, methods, instances, kinds = _grid(load_summaries(dirs))
    out = Path(out_dir) if out_dir is not None else dirs[0]
    out.mkdir(parents=True, exist_ok=True)

    auc = {k: float(np.mean([s["auc"] for s in v.values()])) for k, v in cells.items()}
    groups = sorted(set(kinds.values()))
    table = {}
    for g in groups:
        sub = {k: v for k, v in auc.items() if kinds[k[1]] == g}
        table[g] = rank_methods(sub)
    table["all"] = rank_methods(auc)
    cols = groups + ["all"]
    lines = ["method," + ",".join(cols)]
    for m in methods:
        lines.append(m + "," + ",".join(_fmt(table[c][m]) for c in cols))
    (out / "rank_table.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["method,instance,kind,mean_auc,seeds"]
    for (m, i), v in sorted(auc.items()):
        lines.append(f"{m},{i},{kinds[i]},{_fmt(v)},{len(cells[(m, i)])}")
    (out / "aucs.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["instance,method,round,mean,ci_low,ci_high"]
    for i in instances:
        for m in methods:
            runs = cells[(m, i)]
            curves = np.array([runs[s]["curve"] for s in sorted(runs)], dtype=float)
            rng = np.random.default_rng(zlib.crc32(f"{m}|{i}".encode()))
            mean, lo, hi = bootstrap_band(curves, rng)
            for t in range(curves.shape[1]):
                lines.append(f"{i},{m},{t + 1},{_fmt(mean[t])},{_fmt(lo[t])},{_fmt(hi[t])}")
    (out / "curves.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return table
