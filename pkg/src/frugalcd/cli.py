"""Command line entry points.

Subcommands: run (simulated sessions), compare (all strategies plus the
fully supervised reference), ablate (term combinations of the display
objective), synth (write a generated dataset), serve (HTTP service).
Outputs are deterministic byte for byte for a fixed invocation: every
stochastic component is seeded and floats are serialized with repr.

Exit codes: 0 success, 2 invalid arguments or state, 3 data format or
IO problems, 4 numeric failure. The FRUGAL_LOG environment variable
sets the logging level (e.g. DEBUG, INFO).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from .baselines import Strategy
from .data import (generate_synthetic, load_dataset, parse_synthetic_spec,
                   save_dataset)
from .errors import (DataFormatError, DataIOError, InvalidArgument,
                     InvalidState, NumericFailure)
from .session import (format_ablation_grid, format_eer_grid, run_ablation,
                      run_fully_supervised, run_simulated, stratified_split,
                      derive_seed, write_metrics_csv)
from .types import Hyperparams

log = logging.getLogger("frugalcd")

_ALL_STRATEGIES = tuple(s.value for s in Strategy)


def parse_seed_spec(text: str) -> tuple[int, ...]:
    """Parse "7", "1..10" (inclusive) or "1,4,9" into seeds."""
    text = text.strip()
    try:
        if ".." in text:
            lo, _, hi = text.partition("..")
            lo_i, hi_i = int(lo), int(hi)
            if hi_i < lo_i:
                raise InvalidArgument(f"empty seed range {text!r}")
            return tuple(range(lo_i, hi_i + 1))
        if "," in text:
            return tuple(int(p) for p in text.split(","))
        return (int(text),)
    except ValueError:
        raise InvalidArgument(f"bad seed spec {text!r}; use N, A..B or "
                              "A,B,C") from None


def _add_source_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", metavar="PATH",
                     help="dataset directory written by 'synth' or "
                          "save_dataset; must include labels")
    src.add_argument("--synthetic", metavar="SPEC",
                     help="'default' or key=value list, e.g. "
                          "n=400,d=8,seed=3")


def _add_hp_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=None,
                   help="diversity weight")
    p.add_argument("--beta", type=float, default=None,
                   help="ambiguity weight")
    p.add_argument("--gamma", type=float, default=None,
                   help="spread weight; must be positive")
    p.add_argument("--clusters", type=int, default=None, metavar="K")
    p.add_argument("--display-size", type=int, default=None, metavar="B")
    p.add_argument("--budget", type=int, default=None, metavar="T",
                   help="number of labeling iterations")
    p.add_argument("--svm-epochs", type=int, default=None)


def _hp_from_args(args, seed: int) -> Hyperparams:
    overrides = {"seed": seed}
    for attr, field in (("alpha", "alpha"), ("beta", "beta"),
                        ("gamma", "gamma"), ("clusters", "n_clusters"),
                        ("display_size", "display_size"),
                        ("budget", "n_rounds"),
                        ("svm_epochs", "svm_epochs")):
        v = getattr(args, attr, None)
        if v is not None:
            overrides[field] = v
    return Hyperparams(**overrides)


def _load_source(args):
    """(dataset, ground_truth) from --dataset or --synthetic."""
    if args.synthetic is not None:
        spec = parse_synthetic_spec(args.synthetic)
        return generate_synthetic(spec)
    dataset, labels, _ = load_dataset(args.dataset)
    if labels is None or not labels.labeled_mask.all():
        raise InvalidArgument(
            f"dataset {args.dataset} lacks full ground-truth labels; "
            "simulated runs need them")
    return dataset, labels


def _strategies(name: str) -> tuple[Strategy, ...]:
    if name == "all":
        return tuple(Strategy)
    return (Strategy(name),)


def cmd_run(args) -> int:
    """Simulated sessions; one trace CSV per seed plus a summary grid."""
    dataset, truth = _load_source(args)
    strategies = _strategies(args.strategy)
    seeds = parse_seed_spec(args.seeds)
    os.makedirs(args.out, exist_ok=True)

    by_strategy: dict[str, list] = {s.value: [] for s in strategies}
    n_pool = None
    for seed in seeds:
        records = []
        for strat in strategies:
            hp = _hp_from_args(args, seed)
            trace = run_simulated(dataset, truth, hp, strat)
            by_strategy[strat.value].append(trace)
            records.extend(trace)
            log.info("seed=%d strategy=%s final_eer=%s", seed, strat.value,
                     trace[-1].eer)
        write_metrics_csv(records,
                          os.path.join(args.out, f"trace_seed{seed}.csv"),
                          seed)
        if n_pool is None:
            n_pool = _pool_size(dataset, truth, seeds[0])

    grid = format_eer_grid(by_strategy, n_pool)
    _write_text(os.path.join(args.out, "summary.txt"), grid)
    sys.stdout.write(grid)
    return 0


def _pool_size(dataset, truth, seed: int) -> int:
    hp = Hyperparams(seed=seed)
    train_idx, _ = stratified_split(truth, 0.5,
                                    seed=derive_seed(hp.seed, "split"))
    return int(train_idx.shape[0])


def _write_text(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_compare(args) -> int:
    """All four strategies plus the fully supervised reference."""
    dataset, truth = _load_source(args)
    seeds = parse_seed_spec(args.seeds)
    os.makedirs(args.out, exist_ok=True)

    by_strategy: dict[str, list] = {s.value: [] for s in Strategy}
    floors = []
    for seed in seeds:
        hp = _hp_from_args(args, seed)
        for strat in Strategy:
            by_strategy[strat.value].append(
                run_simulated(dataset, truth, hp, strat))
        floors.append(run_fully_supervised(dataset, truth, hp))

    n_pool = _pool_size(dataset, truth, seeds[0])
    rows = []
    for name, traces in by_strategy.items():
        for trace, seed in zip(traces, seeds):
            for r in trace:
                rows.append([name, r.iteration,
                             repr(float(r.sampling_rate_pct)),
                             "" if r.eer is None else repr(float(r.eer)),
                             seed])
    for floor, seed in zip(floors, seeds):
        rows.append(["fully_supervised", "", "", repr(float(floor)), seed])

    with open(os.path.join(args.out, "comparison.csv"), "w",
              newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["strategy", "iter", "samp_pct", "eer", "seed"])
        writer.writerows(rows)

    grid = format_eer_grid(by_strategy, n_pool)
    mean_floor = sum(floors) / len(floors)
    text = grid + f"fully supervised reference: {100.0 * mean_floor:.2f}\n"
    _write_text(os.path.join(args.out, "summary.txt"), text)
    sys.stdout.write(text)
    return 0


def cmd_ablate(args) -> int:
    """Term-combination grid of the display objective."""
    dataset, truth = _load_source(args)
    seeds = parse_seed_spec(args.seeds)
    os.makedirs(args.out, exist_ok=True)

    per_row: dict[str, list] = {}
    for seed in seeds:
        hp = _hp_from_args(args, seed)
        for name, trace in run_ablation(dataset, truth, hp).items():
            per_row.setdefault(name, []).append(trace)

    n_pool = _pool_size(dataset, truth, seeds[0])
    grid = format_eer_grid(per_row, n_pool)
    _write_text(os.path.join(args.out, "ablation.txt"), grid)
    with open(os.path.join(args.out, "ablation.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["config", "iter", "samp_pct", "eer", "seed"])
        for name, traces in per_row.items():
            for trace, seed in zip(traces, seeds):
                for r in trace:
                    writer.writerow([name, r.iteration,
                                     repr(float(r.sampling_rate_pct)),
                                     "" if r.eer is None
                                     else repr(float(r.eer)), seed])
    sys.stdout.write(grid)
    return 0


def cmd_synth(args) -> int:
    """Generate a synthetic dataset directory with ground-truth labels."""
    spec = parse_synthetic_spec(args.synthetic or "default")
    dataset, labels = generate_synthetic(spec)
    save_dataset(args.out, dataset, labels,
                 metadata={"source": "synthetic",
                           "spec": {"n": spec.n, "d": spec.d,
                                    "positive_rate": spec.positive_rate,
                                    "n_modes": spec.n_modes,
                                    "separation": spec.separation,
                                    "noise": spec.noise, "seed": spec.seed}})
    sys.stdout.write(f"wrote {dataset.n} x {dataset.d} dataset with "
                     f"{labels.n_positive} positives to {args.out}\n")
    return 0


def cmd_serve(args) -> int:
    """Run the HTTP labeling service (blocking)."""
    import uvicorn

    from .service import create_app

    app = create_app(state_dir=args.state_dir, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.serve_port,
                log_level=(os.environ.get("FRUGAL_LOG") or "info").lower())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frugalcd",
        description="Interactive active learning for patch-pair change "
                    "detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulated labeling sessions")
    _add_source_args(p_run)
    _add_hp_args(p_run)
    p_run.add_argument("--strategy", default="proposed",
                       choices=_ALL_STRATEGIES + ("all",))
    p_run.add_argument("--seeds", default="0", metavar="RANGE",
                       help="seed list: N, A..B or A,B,C")
    p_run.add_argument("--out", required=True, metavar="DIR")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="all strategies plus supervised reference")
    _add_source_args(p_cmp)
    _add_hp_args(p_cmp)
    p_cmp.add_argument("--seeds", default="0..9", metavar="RANGE")
    p_cmp.add_argument("--out", required=True, metavar="DIR")
    p_cmp.set_defaults(func=cmd_compare)

    p_abl = sub.add_parser("ablate", help="objective term ablation grid")
    _add_source_args(p_abl)
    _add_hp_args(p_abl)
    p_abl.add_argument("--seeds", default="0", metavar="RANGE")
    p_abl.add_argument("--out", required=True, metavar="DIR")
    p_abl.set_defaults(func=cmd_ablate)

    p_syn = sub.add_parser("synth", help="write a synthetic dataset")
    p_syn.add_argument("--synthetic", metavar="SPEC", default="default")
    p_syn.add_argument("--out", required=True, metavar="DIR")
    p_syn.set_defaults(func=cmd_synth)

    p_srv = sub.add_parser("serve", help="run the HTTP labeling service")
    p_srv.add_argument("--serve-port", type=int, default=8000, metavar="N")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--state-dir", default=None, metavar="DIR",
                       help="directory for session event logs")
    p_srv.add_argument("--ui-dir", default=None, metavar="DIR",
                       help="static annotation page to mount at /ui")
    p_srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("FRUGAL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidArgument, InvalidState) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (DataFormatError, DataIOError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except NumericFailure as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 4


if __name__ == "__main__":
    sys.exit(main())
