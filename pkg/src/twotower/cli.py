"""Command-line entry points.

Exit codes: 0 on success, 1 for configuration errors, 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ._backend import BACKEND
from .bench import BENCH_HEADER, bench_select
from .config import ConfigError, load_config
from .harness import compare, evaluate, train
from .stats import paired_t_test
from .verify import format_results, run_all


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    result = train(cfg, out_dir=args.out_dir)
    for sr in result.per_seed:
        last = sr.log[-1].reward_mean if sr.log else float("nan")
        print(
            f"seed {sr.seed}: final mean reward {last:.3f}, "
            f"checkpoint {sr.checkpoint_path}, log {sr.log_path}"
        )
    return 0


def _cmd_eval(args) -> int:
    summary = evaluate(args.checkpoint, episodes=args.episodes, seed=args.seed)
    print(f"episodes: {len(summary.scores)}")
    print(f"mean: {summary.mean!r}")
    print(f"std: {summary.std!r}")
    print("scores: " + ", ".join(repr(s) for s in summary.scores))
    return 0


def _cmd_verify_es(args) -> int:
    results = run_all(trials=args.trials, oracle_trials=args.oracle_trials)
    print(format_results(results))
    return 0 if all(r.passed for r in results) else 2


def _cmd_bench_select(args) -> int:
    cfg = load_config(args.config)
    n_list = [int(x) for x in args.n_list.replace(",", " ").split()]
    rows = bench_select(cfg, n_list, trials=args.trials, seed=args.seed)
    print(BENCH_HEADER)
    for row in rows:
        print(row.csv_row())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(BENCH_HEADER + "\n")
            for row in rows:
                fh.write(row.csv_row() + "\n")
    return 0


def _read_scores(path: str) -> list[float]:
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            field = line.split(",")[-1]
            try:
                vals.append(float(field))
            except ValueError:
                continue  # header line
    return vals


def _cmd_ttest(args) -> int:
    xs = _read_scores(args.csv_a)
    ys = _read_scores(args.csv_b)
    if len(xs) != len(ys):
        raise ValueError(f"sample sizes differ: {len(xs)} vs {len(ys)}")
    t, p = paired_t_test(xs, ys)
    print(f"n: {len(xs)}")
    print(f"t: {t!r}")
    print(f"p: {p!r}")
    return 0


def _cmd_compare(args) -> int:
    cfgs = [load_config(p) for p in args.configs]
    result = compare(cfgs, out_dir=args.out_dir, episodes=args.episodes)
    print("task,arch,mean,std,seeds")
    for task, arch, mean, std, n in result.rows:
        print(f"{task},{arch},{mean!r},{std!r},{n}")
    print("arch_a,arch_b,t,p")
    for a, b, t, p in result.pvalues:
        print(f"{a},{b},{t!r},{p!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twotower",
        description=f"Two-tower implicit policy training and benchmarks (backend: {BACKEND})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run ES training from a config file")
    p.add_argument("config")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("verify-es", help="run the ES estimator verification suite")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--oracle-trials", type=int, default=10_000_000)
    p.set_defaults(func=_cmd_verify_es)

    p = sub.add_parser("bench-select", help="benchmark the action-selection backends")
    p.add_argument("config")
    p.add_argument("--n-list", default="1024,2048,4096,8192,16384")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench_select)

    p = sub.add_parser("ttest", help="paired t-test over two score files")
    p.add_argument("csv_a")
    p.add_argument("csv_b")
    p.set_defaults(func=_cmd_ttest)

    p = sub.add_parser("compare", help="train several configs and compare final scores")
    p.add_argument("configs", nargs="+")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--episodes", type=int, default=10)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
