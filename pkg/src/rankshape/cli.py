"""Batch command-line interface.

Every subcommand reads files, writes results to stdout (JSON lines or
CSV), and exits 0 on success, 1 on input errors, 2 on numerical or
degenerate-data errors. Errors are a single machine-parseable stderr line:
``error [<code>]: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import InputError, RankshapeError
from .evalstats import PassCounts, fit_decoupling_logit, load_decoupling_csv, pass_curve
from .io import apply_overrides, load_run_config, read_trajectory
from .probes import (
    LOW_OMEGA_THRESHOLD,
    ProbeSet,
    StitchPlan,
    lookahead_manifold,
    select_probe,
)
from .rewards import RolloutOutcome, group_advantages, total_reward
from .sim import SimTrace, biased_init, build_env, train
from .spectral import covariance_spectrum, effective_rank
from .windows import norm_rank, windowed_min_effrank

REPORT_HEADER = "alpha,seed,iterations,final_mean_windowed_erank,final_success_rate"


class _Parser(argparse.ArgumentParser):
    """argparse parser that reports usage problems as InputError (exit 1)."""

    def error(self, message):
        raise InputError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="rankshape", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("effrank", help="effective rank of whole trajectories")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_effrank)

    p = sub.add_parser("window-rank", help="windowed effective-rank profile")
    p.add_argument("files", nargs="+")
    p.add_argument("--w", type=int, default=64, help="window width (default 64)")
    p.add_argument("--stride", type=int, default=16, help="window stride (default 16)")
    p.set_defaults(func=cmd_window_rank)

    p = sub.add_parser("reward", help="rank-aware rewards for outcome records")
    p.add_argument("records", help="JSONL file with fields correct, norm_rank")
    p.add_argument("--alpha", type=float, default=0.5)
    p.set_defaults(func=cmd_reward)

    p = sub.add_parser("advantage", help="group-standardized advantages")
    p.add_argument("rewards", help="CSV file, one group of rewards per row")
    p.set_defaults(func=cmd_advantage)

    p = sub.add_parser("passk", help="mean unbiased pass@k over problems")
    p.add_argument("counts", help="file with one per-problem correct count per line")
    p.add_argument("--n", type=int, required=True, help="samples per problem")
    p.add_argument("--ks", required=True, help="comma-separated k values")
    p.set_defaults(func=cmd_passk)

    p = sub.add_parser("fit-decouple", help="logistic fit of correctness on rank and entropy")
    p.add_argument("samples", help="CSV with header eff_rank,entropy,correct")
    p.set_defaults(func=cmd_fit_decouple)

    p = sub.add_parser("soe-select", help="score probes against a look-ahead manifold")
    p.add_argument("--basis", required=True, help="trajectory file of look-ahead states")
    p.add_argument("--probes", required=True, help="trajectory file, one probe vector per row")
    p.add_argument("--energy", type=float, default=0.9, help="basis energy threshold")
    p.add_argument("--prefix", type=int, default=0, help="prefix length to record")
    p.add_argument("--query-id", default=None)
    p.set_defaults(func=cmd_soe_select)

    p = sub.add_parser("simulate", help="train the subspace bandit and write a trace")
    p.add_argument("--config", required=True, help="key = value run config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="aggregate final metrics over a run directory")
    p.add_argument("--runs", required=True, help="directory of simulate outputs")
    p.set_defaults(func=cmd_report)

    return parser


def cmd_effrank(args) -> int:
    for name in args.files:
        H = read_trajectory(name)
        value = effective_rank(covariance_spectrum(H))
        print(json.dumps({"file": name, "effective_rank": value}))
    return 0


def cmd_window_rank(args) -> int:
    for name in args.files:
        H = read_trajectory(name)
        profile = windowed_min_effrank(H, args.w, args.stride)
        print(json.dumps({
            "file": name,
            "window": profile.window_width,
            "stride": profile.stride,
            "per_window_erank": list(profile.per_window_erank),
            "min_erank": profile.min_erank,
            "r_max": profile.r_max,
            "norm_rank": norm_rank(profile),
        }))
    return 0


def cmd_reward(args) -> int:
    path = Path(args.records)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"record line {lineno} is not valid JSON: {exc}") from None
        if not isinstance(record, dict) or "correct" not in record or "norm_rank" not in record:
            raise InputError(f"record line {lineno} needs fields correct and norm_rank")
        outcome = RolloutOutcome(correct=bool(record["correct"]),
                                 norm_rank=float(record["norm_rank"]))
        print(json.dumps({
            "correct": outcome.correct,
            "norm_rank": outcome.norm_rank,
            "reward": total_reward(outcome, args.alpha),
        }))
    return 0


def cmd_advantage(args) -> int:
    path = Path(args.rewards)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rewards = [float(cell) for cell in line.split(",")]
        except ValueError:
            raise InputError(f"unparseable reward on line {lineno}") from None
        advantages = group_advantages(rewards)
        print(",".join(f"{a:.6f}" for a in advantages))
    return 0


def cmd_passk(args) -> int:
    path = Path(args.counts)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    counts = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            counts.append(int(line))
        except ValueError:
            raise InputError(f"unparseable count on line {lineno}: {line!r}") from None
    try:
        ks = [int(part) for part in args.ks.split(",") if part.strip()]
    except ValueError:
        raise InputError(f"unparseable k list: {args.ks!r}") from None
    if not ks:
        raise InputError("need at least one k")
    curve = pass_curve(PassCounts(n=args.n, counts=tuple(counts)), ks)
    for k in ks:
        print(f"{k},{curve[k]:.6f}")
    return 0


def cmd_fit_decouple(args) -> int:
    fit = fit_decoupling_logit(load_decoupling_csv(args.samples))
    print(fit.to_json())
    return 0


def cmd_soe_select(args) -> int:
    states = read_trajectory(args.basis)
    probe_rows = read_trajectory(args.probes)
    basis = lookahead_manifold(states, args.energy)
    probes = ProbeSet(vectors=probe_rows)
    choice = select_probe(probes, basis)
    plan = StitchPlan(
        prefix_length=args.prefix,
        probe_index=choice.index,
        probe_label=choice.label,
        omega_score=choice.omega,
        basis_k=basis.k,
        warning=choice.omega < LOW_OMEGA_THRESHOLD,
        query_id=args.query_id,
    )
    print(plan.to_json())
    return 0


def cmd_simulate(args) -> int:
    cfg = apply_overrides(load_run_config(args.config), args.set)
    env = build_env(cfg.env_seed, d=cfg.dim, vocab=cfg.vocab, bias_dim=cfg.bias_dim,
                    n_null=cfg.null_tokens, tau=cfg.tau, horizon=cfg.horizon,
                    decay=cfg.decay)
    policy = biased_init(env, cfg.bias_logit)
    if cfg.verbose:
        print(f"training: alpha={cfg.alpha:g} seed={cfg.train_seed} "
              f"iterations={cfg.iterations}", file=sys.stderr)
    trace = train(env, policy, alpha=cfg.alpha, group_size=cfg.group_size,
                  iterations=cfg.iterations, learning_rate=cfg.learning_rate,
                  seed=cfg.train_seed, window=cfg.window, stride=cfg.stride)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = (f"{cfg.label}_" if cfg.label else "") + f"alpha{cfg.alpha:g}_seed{cfg.train_seed}"
    trace_path = out / f"{stem}.csv"
    config_path = out / f"{stem}.json"
    trace.to_csv(trace_path)
    config_path.write_text(trace.config_json(), encoding="utf-8")
    if cfg.verbose:
        print(f"final: erank={trace.mean_windowed_erank[-1]:.4f} "
              f"success={trace.success_rate[-1]:.4f}", file=sys.stderr)
    print(json.dumps({"trace": str(trace_path), "config": str(config_path)}))
    return 0


def cmd_report(args) -> int:
    runs = Path(args.runs)
    if not runs.is_dir():
        raise InputError(f"not a directory: {runs}")
    rows = []
    for config_path in sorted(runs.glob("*.json")):
        try:
            config = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed config JSON {config_path}: {exc}") from None
        if not isinstance(config, dict) or "alpha" not in config or "train_seed" not in config:
            continue
        trace_path = config_path.with_suffix(".csv")
        if not trace_path.exists():
            raise InputError(f"missing trace CSV for {config_path}")
        trace = SimTrace.from_csv(trace_path)
        rows.append((
            float(config["alpha"]),
            int(config["train_seed"]),
            len(trace),
            float(trace.mean_windowed_erank[-1]),
            float(trace.success_rate[-1]),
        ))
    if not rows:
        raise InputError(f"no run records found in {runs}")
    rows.sort(key=lambda row: (row[0], row[1]))
    print(REPORT_HEADER)
    for alpha, seed, iterations, erank, success in rows:
        print(f"{alpha:g},{seed},{iterations},{erank:.6f},{success:.6f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except RankshapeError as exc:
        message = " ".join(str(exc).split())
        print(f"error [{exc.code}]: {message}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
