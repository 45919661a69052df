"""Command-line entry point: ``p3bo <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness.config import ConfigError, load_config
from .harness.generate import UsageError, gen_problem
from .harness.presets import PRESETS
from .harness.runner import run_experiment
from .harness.summarize import IncompleteResults, summarize
from .metrics import enumerate_optima
from .oracles import ProblemFormatError, dumps, read_problem


def _params(items: list[str]) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"parameters must look like key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    res = run_experiment(cfg, output_dir=args.output)
    n_ok, n_err = len(res["summaries"]), len(res["errors"])
    print(f"{n_ok} runs completed, {n_err} failed; results in {res['output_dir']}")
    for e in res["errors"]:
        print(f"  {e['run_id']}: {e['error']}: {e['message']}", file=sys.stderr)
    return 1 if n_err else 0


def cmd_gen_problem(args) -> int:
    inst = gen_problem(args.kind, _params(args.params), args.seed)
    text = dumps(inst)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_summarize(args) -> int:
    table = summarize(args.dirs, out_dir=args.output)
    cols = list(table)
    methods = sorted(table["all"])
    print("method".ljust(28) + "".join(c.rjust(12) for c in cols))
    for m in methods:
        print(m.ljust(28) + "".join(f"{table[c][m]:12.3f}" for c in cols))
    return 0


def cmd_presets(args) -> int:
    if args.name == "list":
        print("\n".join(PRESETS))
        return 0
    if args.name not in PRESETS:
        raise UsageError(f"unknown preset {args.name!r}; expected one of {sorted(PRESETS)} or 'list'")
    made = PRESETS[args.name]()
    configs = made if isinstance(made, list) else [made]
    if args.output is None:
        sys.stdout.write("\n---\n".join(c.dumps() for c in configs))
        return 0
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for c in configs:
        name = c.output_dir.rstrip("/").rsplit("/", 1)[-1]
        path = out / f"{name}.yaml"
        path.write_text(c.dumps(), encoding="utf-8")
        print(path)
    return 0


def cmd_enumerate_optima(args) -> int:
    inst = read_problem(args.lookup_file)
    if inst.kind != "lookup":
        raise UsageError(f"{args.lookup_file}: expected a lookup problem, got {inst.kind}")
    ev = inst.evaluator
    optima = enumerate_optima(ev.table, ev.length, ev.vocab_size, reward_threshold=args.threshold,
                              edit_threshold=args.edit_distance, reverse=args.reverse)
    for seq in optima:
        print(inst.vocabulary.decode(seq))
    print(f"{len(optima)} optima", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="p3bo", description="Population-based batched sequence optimization.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", help="run every (method, instance, seed) triple of a config")
    s.add_argument("config")
    s.add_argument("-o", "--output", help="override the config's output directory")
    s.add_argument("-j", "--workers", type=int, help="parallel worker processes")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("gen-problem", help="write a synthetic problem instance")
    s.add_argument("kind", help="ising, hmm, random_mlp, random_rnn or lookup")
    s.add_argument("params", nargs="*", help="key=value overrides, e.g. length=20")
    s.add_argument("-s", "--seed", type=int, default=0)
    s.add_argument("-o", "--output", help="file to write (default stdout)")
    s.set_defaults(func=cmd_gen_problem)

    s = sub.add_parser("summarize", help="rank table and curves from result directories")
    s.add_argument("dirs", nargs="+")
    s.add_argument("-o", "--output", help="where to write the aggregate CSVs (default: first dir)")
    s.set_defaults(func=cmd_summarize)

    s = sub.add_parser("presets", help="emit ablation configs ('list' shows names)")
    s.add_argument("name")
    s.add_argument("-o", "--output", help="directory to write YAML files into (default stdout)")
    s.set_defaults(func=cmd_presets)

    s = sub.add_parser("enumerate-optima", help="list the distinct optima of a lookup problem")
    s.add_argument("lookup_file")
    s.add_argument("--threshold", type=float, default=0.9)
    s.add_argument("--edit-distance", type=float, default=3)
    s.add_argument("--reverse", choices=("literal", "none"), default="literal")
    s.set_defaults(func=cmd_enumerate_optima)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, ProblemFormatError, IncompleteResults, FileNotFoundError,
            ValueError) as exc:
        print(f"p3bo: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
