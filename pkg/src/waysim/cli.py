"""``waysim`` command line: run, sweep, table1, validate.

Exit codes: 0 success, 1 validation failure, 2 I/O error, 3 table1 self-check
mismatch.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import engine
from .config import ConfigError, config_problems, load_config, read_config_data
from .store import AuditLog, TableKind, save_tables, snapshot_world
from .trust_core import TABLE_I_PARAMS, ActionClass, action_value, action_weight, display_round, replay

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_MISMATCH = 0, 1, 2, 3

TRAJECTORY_HEADER = ["iteration", "entity_kind", "entity_id", "action", "value", "decision"]
METRICS_HEADER = ["metric", "key", "value"]
SWEEP_HEADER = ["seed", "user_id", "user_type", "final_trust", "time_to_threshold", "removed_at"]
SUMMARY_HEADER = [
    "user_type", "runs", "mean_final_trust", "reach_fraction",
    "mean_time_to_threshold", "mean_time_to_threshold_reached",
]

TABLE_I_SEQUENCE = (
    ActionClass.POSITIVE, ActionClass.MALICIOUS, ActionClass.POSITIVE,
    ActionClass.MALICIOUS, ActionClass.MALICIOUS,
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def parse_seed_range(text: str) -> list:
    """``"7"`` -> [7]; ``"0..499"`` -> 0..499 inclusive."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


# -- table1 ------------------------------------------------------------------

def table1_rows():
    """Rows of (iteration, action, A_N, Total_a, exact value, display value)."""
    values = replay(TABLE_I_SEQUENCE, TABLE_I_PARAMS)
    rows = []
    neg = 0
    for i, (action, v) in enumerate(zip(TABLE_I_SEQUENCE, values), start=1):
        neg += action.is_negative
        rows.append((i, action, neg, i, v, display_round(v)))
    return rows


def cmd_table1(args, out=None) -> int:
    out = out or sys.stdout
    rows = table1_rows()
    print("iteration\taction\tA_N\tTotal_a\tV_a\tV_a(1dp)", file=out)
    ok = True
    for i, action, neg, total, v, shown in rows:
        expected = action_value(neg, total, action_weight(action, TABLE_I_PARAMS), TABLE_I_PARAMS.m)
        ok &= abs(v - expected) <= 1e-12
        print(f"{i}\t{action.value}\t{neg}\t{total}\t{v:.6f}\t{shown}", file=out)
    if not ok:
        print("self-check FAILED: replay disagrees with closed form", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


# -- validate ----------------------------------------------------------------

def cmd_validate(args, out=None) -> int:
    out = out or sys.stdout
    try:
        data = read_config_data(args.config)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        problems = exc.problems
    else:
        problems = config_problems(data)
    if problems:
        for p in problems:
            print(f"violation: {p}", file=out)
        print(f"{args.config}: {len(problems)} violation(s)", file=out)
        return EXIT_INVALID
    print(f"{args.config}: ok", file=out)
    return EXIT_OK



# -- run ---------------------------------------------------------------------

def write_trajectories(report, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(TRAJECTORY_HEADER)
        for p in report.trajectories:
            w.writerow([p.iteration, p.entity_kind.value, p.entity_id,
                        p.action.value if p.action else "", repr(p.value), p.decision.value])


def write_metrics(report, path) -> None:
    m = report.metrics
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(METRICS_HEADER)
        for stage, n in m.stage_counts.items():
            w.writerow(["stage_count", stage.value, n])
        for uid, v in m.final_trust.items():
            w.writerow(["final_trust", uid, _fmt(v)])
        for did, v in m.final_domain_trust.items():
            w.writerow(["final_domain_trust", did, _fmt(v)])
        for uid, it in m.time_to_threshold.items():
            w.writerow(["time_to_threshold", uid, _fmt(it)])
        for u in report.config.users:
            w.writerow(["removed_at", u.user_id, _fmt(m.removals.get(u.user_id))])


def write_run_outputs(sim: engine.Simulation, out_dir: Path) -> None:
    report = sim.report
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectories(report, out_dir / "trajectories.csv")
    write_metrics(report, out_dir / "metrics.csv")
    save_tables(snapshot_world(sim.world, TableKind.UTT), out_dir / "utt.tsv")
    save_tables(snapshot_world(sim.world, TableKind.DTT), out_dir / "dtt.tsv")
    audit_path = out_dir / "audit.log"
    audit_path.write_text("", encoding="utf-8")
    AuditLog(audit_path).extend(report.events)


def cmd_run(args, out=None) -> int:
    out = out or sys.stdout
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        sim = engine.Simulation(cfg)
        sim.run()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        for p in exc.problems:
            print(f"violation: {p}", file=sys.stderr)
        return EXIT_INVALID
    try:
        write_run_outputs(sim, Path(args.out))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    counts = sim.report.metrics.stage_counts
    summary = " ".join(f"{s.value}={n}" for s, n in counts.items())
    print(f"seed={cfg.seed} requests={cfg.request_count} {summary} -> {args.out}", file=out)
    return EXIT_OK


# -- sweep -------------------------------------------------------------------

def write_sweep(rows, summary, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([r.seed, r.user_id, r.user_type, _fmt(r.final_trust),
                        _fmt(r.time_to_threshold), _fmt(r.removed_at)])
    with open(out_dir / "sweep_summary.csv", "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(SUMMARY_HEADER)
        for s in summary:
            w.writerow([s.user_type, s.runs, _fmt(s.mean_final_trust), _fmt(s.reach_fraction),
                        _fmt(s.mean_time_to_threshold), _fmt(s.mean_time_to_threshold_reached)])


def cmd_sweep(args, out=None) -> int:
    out = out or sys.stdout
    try:
        seeds = parse_seed_range(args.seeds)
    except ValueError:
        print(f"error: bad seed range {args.seeds!r} (expected N or A..B)", file=sys.stderr)
        return EXIT_INVALID
    if not seeds:
        print(f"error: seed range {args.seeds!r} is empty", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = load_config(args.config)
        rows = engine.sweep(cfg, seeds, jobs=args.jobs)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        for p in exc.problems:
            print(f"violation: {p}", file=sys.stderr)
        return EXIT_INVALID
    summary = engine.summarize(rows, cfg.request_count)
    try:
        write_sweep(rows, summary, Path(args.out))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for s in summary:
        print(f"{s.user_type:<10} runs={s.runs} mean_final_trust={s.mean_final_trust:.4f} "
              f"reach={s.reach_fraction:.3f} mean_ttt={s.mean_time_to_threshold:.2f}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waysim", description="Two-tier trust-gated request simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and write CSV/TSV outputs")
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--seed", type=int, default=None, metavar="N",
                   help="override the seed stored in the config")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario over a range of seeds")
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--seeds", required=True, metavar="A..B", help="inclusive seed range")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table1", help="replay the five-step reference trust computation")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("validate", help="check a scenario config and list every violation")
    p.add_argument("--config", required=True, metavar="PATH")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
