"""Command-line entry point: ``dqlpa {train,sweep-gamma,eval,trace,oracle-check}``."""

from __future__ import annotations

import argparse
import logging
import sys

from ..errors import CheckpointError, ConfigError, TrainingError
from . import experiments
from .config import from_document, load_document, merge, scale_episodes


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _single(values, flag):
    if len(values) != 1:
        raise ConfigError(f"{flag} takes a single value for this command")
    return values[0]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dqlpa", description="Deep-Q-learning power allocation experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_required=True):
        p.add_argument("--config", help="YAML file or preset name (full, desk); default: full")
        p.add_argument("--seed", type=int, required=seed_required, help="root seed (u64)")
        p.add_argument("--out", help="output directory (default: experiment.out_dir)")
        p.add_argument("--cells", type=int, help="number of cells N")
        p.add_argument("--repeats", type=int, help="independent evaluation episodes")
        return p

    p = common(sub.add_parser("train", help="centralized DQN training"))
    p.add_argument("--users", type=_int_list, help="users per cell K")
    p.add_argument("--episodes", type=int, help="total training episodes (observe share kept)")
    p.add_argument("--gamma", type=_float_list, help="discount factor")

    p = common(sub.add_parser("sweep-gamma", help="train one network per discount factor"))
    p.add_argument("--users", type=_int_list, help="users per cell K")
    p.add_argument("--episodes", type=int)
    p.add_argument("--gamma", type=_float_list, help="comma-separated discount factors")
    p.add_argument("--eval-cells", type=_int_list, help="comma-separated cell counts for evaluation")

    p = common(sub.add_parser("eval", help="compare schemes across users-per-cell values"))
    p.add_argument("--checkpoint", help="trained network (needed for the dqn scheme)")
    p.add_argument("--users", type=_int_list, help="comma-separated K values")
    p.add_argument("--schemes", help="comma-separated subset of dqn,fp,wmmse,max,random")
    p.add_argument("--slots", type=int, help="slots per evaluation episode")

    p = common(sub.add_parser("trace", help="per-slot comparison on one layout"))
    p.add_argument("--checkpoint")
    p.add_argument("--users", type=_int_list, help="users per cell K")
    p.add_argument("--schemes")
    p.add_argument("--slots", type=int, help="number of slots (default 1000)")

    p = common(sub.add_parser("oracle-check", help="FP/WMMSE against exhaustive search"))
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--levels", type=int, default=50)
    return parser


def resolve(args) -> tuple:
    doc = load_document(args.config)
    over: dict = {"experiment": {}, "channel": {}, "train": {}}
    if args.seed is not None:
        over["experiment"]["seed"] = args.seed
    if args.cells is not None:
        over["channel"]["n_cells"] = args.cells
        over["channel"]["grid_dims"] = None
    if args.repeats is not None:
        over["experiment"]["repeats"] = args.repeats
    users = getattr(args, "users", None)
    if users:
        if args.command == "eval":
            over["experiment"]["eval_users"] = users
        else:
            over["channel"]["users_per_cell"] = _single(users, "--users")
    gamma = getattr(args, "gamma", None)
    if gamma:
        if args.command == "sweep-gamma":
            over["experiment"]["gammas"] = gamma
        else:
            over["train"]["gamma"] = _single(gamma, "--gamma")
    if getattr(args, "eval_cells", None):
        over["experiment"]["eval_cells"] = args.eval_cells
    if getattr(args, "schemes", None):
        over["experiment"]["schemes"] = [s.strip() for s in args.schemes.split(",") if s.strip()]
    slots = getattr(args, "slots", None)
    if slots is not None:
        over["experiment"]["trace_slots" if args.command == "trace" else "eval_slots"] = slots
    doc = merge(doc, over)
    if getattr(args, "episodes", None) is not None:
        doc = scale_episodes(doc, args.episodes)
    cfg = from_document(doc)
    out = args.out or cfg.out_dir
    return cfg, out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        cfg, out = resolve(args)
        if args.command == "train":
            res = experiments.cmd_train(cfg, out)
            last = res["rows"][-min(50, len(res["rows"])):]
            print(f"trained {len(res['rows'])} episodes; mean avg rate of last {len(last)}: "
                  f"{sum(r.avg_rate for r in last) / len(last):.4f} bit/s/Hz per link")
        elif args.command == "sweep-gamma":
            res = experiments.cmd_sweep_gamma(cfg, out)
            for row in res["eval"]:
                print(f"gamma={row.gamma:g} N={row.N}: avg rate {row.avg_rate:.4f}")
        elif args.command == "eval":
            res = experiments.cmd_eval(cfg, out, args.checkpoint)
            for row in res["rows"]:
                print(f"K={row.K} {row.scheme:>6}: avg rate {row.avg_rate:.4f}")
        elif args.command == "trace":
            experiments.cmd_trace(cfg, out, args.checkpoint)
            print(f"wrote {out}/trace.csv")
        elif args.command == "oracle-check":
            res = experiments.cmd_oracle_check(cfg, out, args.instances, args.levels)
            print(f"FP mean ratio to brute force: {res['fp_mean_ratio']:.4f}; "
                  f"WMMSE: {res['wmmse_mean_ratio']:.4f}")
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
