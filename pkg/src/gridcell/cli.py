"""Command-line entry point for batch experiments.

Exit codes: 0 success, 1 usage error, 2 config or trace error, 3 solver
failure, 4 oracle deviation above tolerance.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .channel import sample_channels
from .config import SystemConfig, load_config
from .energy import load_nre_trace
from .errors import ConfigError, GridcellError, SolverFailureError, TraceError
from .oracle import check_single_cell_oracle
from .simulator import RunMetrics, run, sweep_v

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ORACLE = 4

DEFAULT_SWEEP_V = (0.01, 0.0316, 0.1, 0.316, 1.0)
ORACLE_TOLERANCE = 1e-6

METRICS_COLUMNS = ("V", "seed", "avg_delay_slots", "avg_expenditure_cents_per_frame",
                   "annualized_cents", "stability_ok", "drift_slack_min")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; we reserve 2 for config errors
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gridcell", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, trace=False):
        p.add_argument("--config", required=True, help="JSON configuration file")
        if trace:
            p.add_argument("--trace", required=True, help="irradiance trace CSV")
        p.add_argument("--out", default=".", help="output directory for CSVs")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="config override, repeatable")
        p.add_argument("--seed", type=int, default=None, help="override rng_seed")

    p_validate = sub.add_parser("validate", help="check a configuration file")
    common(p_validate)

    p_run = sub.add_parser("run", help="simulate one horizon")
    common(p_run, trace=True)
    p_run.add_argument("--dump-channels", default=None, metavar="PATH",
                       help="write per-slot channel realizations CSV")
    p_run.add_argument("--dump-slots", default=None, metavar="PATH",
                       help="write per-slot solution trace CSV")

    p_sweep = sub.add_parser("sweep", help="sweep the control parameter")
    common(p_sweep, trace=True)
    p_sweep.add_argument("--v-values", default=",".join(str(v) for v in DEFAULT_SWEEP_V),
                         help="comma-separated control values")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel runs")

    p_oracle = sub.add_parser("oracle", help="brute-force single-cell check")
    common(p_oracle, trace=True)
    p_oracle.add_argument("--frames", type=int, default=10)
    return parser


def _parse_override(item: str):
    if "=" not in item:
        raise _UsageError(f"override '{item}' is not KEY=VALUE")
    key, value = item.split("=", 1)
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _load(args) -> SystemConfig:
    overrides = dict(_parse_override(item) for item in args.overrides)
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    return load_config(args.config, overrides)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header, rows) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _metrics_rows(metrics_list: list[RunMetrics]):
    for m in metrics_list:
        yield (m.control_v, m.rng_seed, m.avg_delay_slots,
               m.avg_expenditure_per_frame, m.annualized_expenditure,
               m.stability_ok, m.drift_slack_min)


def _dump_channels(path: str, cfg: SystemConfig) -> None:
    rows = []
    serving = cfg.serving_scbs
    for t in range(cfg.num_frames * cfg.slots_per_frame):
        h = sample_channels(cfg, t).h
        for j in range(cfg.num_scbs):
            for u in range(cfg.num_ues):
                m = serving[u]
                n = u - cfg.ue_offsets[m]
                for a in range(cfg.num_tx_antennas):
                    rows.append((t, j, m, n, a, h[j, u, a].real, h[j, u, a].imag))
    _write_csv(path, ("slot", "j", "m", "n", "antenna", "re", "im"), rows)


def _dump_slots(path: str, cfg: SystemConfig, result) -> None:
    header = ["slot", "phi"]
    serving = cfg.serving_scbs
    for u in range(cfg.num_ues):
        m = serving[u]
        header.append(f"rate_{m}_{u - cfg.ue_offsets[m]}")
    for m in range(cfg.num_scbs):
        header.append(f"power_{m}")
    header += ["grid_exchange_mw", "objective", "status"]
    rows = []
    for t, sol in enumerate(result.slot_solutions):
        rows.append((t, sol.phi, *sol.rates, *sol.scbs_power,
                     sol.grid_exchange, sol.objective, sol.status))
    _write_csv(path, header, rows)


def _write_run_outputs(out_dir: str, cfg: SystemConfig, result) -> None:
    _write_csv(os.path.join(out_dir, "metrics.csv"), METRICS_COLUMNS,
               _metrics_rows([result.metrics]))
    ledger = result.ledger
    rows = []
    cumulative = 0.0
    for k, g in enumerate(ledger.expenditure_per_frame):
        cumulative += g
        rows.append((k, float(np.sum(ledger.harvested_per_frame[k])), g, cumulative))
    _write_csv(os.path.join(out_dir, "ledger.csv"),
               ("frame", "E_hav_total", "G_k", "cumulative"), rows)
    rows = []
    serving = cfg.serving_scbs
    for k, sched in enumerate(result.schedules):
        for u in range(cfg.num_ues):
            m = serving[u]
            rows.append((k, m, u - cfg.ue_offsets[m], int(sched.indicator[u]),
                         bool(sched.asleep[m])))
    _write_csv(os.path.join(out_dir, "decisions.csv"),
               ("frame", "m", "n", "a", "asleep_m"), rows)


def _cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"config OK: {cfg.num_scbs} ScBS, {cfg.num_ues} UEs, "
          f"N_T={cfg.num_tx_antennas}, T={cfg.slots_per_frame}, "
          f"K={cfg.num_frames}, V={cfg.control_v}")
    print(f"diagnostic rate cap: {cfg.r_max_cap:.3f} nats/slot "
          "(heuristic stand-in; used only in drift diagnostics)")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = _load(args)
    trace = load_nre_trace(args.trace)
    result = run(cfg, trace)
    _write_run_outputs(args.out, cfg, result)
    if args.dump_channels:
        _dump_channels(args.dump_channels, cfg)
    if args.dump_slots:
        _dump_slots(args.dump_slots, cfg, result)
    m = result.metrics
    print(f"V={m.control_v}: delay {m.avg_delay_slots:.4f} slots, "
          f"expenditure {m.avg_expenditure_per_frame:.6e} cents/frame "
          f"({m.annualized_expenditure:.6e} cents/yr city-scale), "
          f"stability_ok={m.stability_ok}, drift_slack_min={m.drift_slack_min:.3e}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    trace = load_nre_trace(args.trace)
    try:
        v_values = [float(x) for x in args.v_values.split(",") if x.strip()]
    except ValueError as exc:
        raise _UsageError(f"bad --v-values: {exc}") from exc
    if not v_values:
        raise _UsageError("--v-values is empty")
    metrics = sweep_v(cfg, v_values, trace, jobs=args.jobs)
    _write_csv(os.path.join(args.out, "metrics.csv"), METRICS_COLUMNS,
               _metrics_rows(metrics))
    for m in metrics:
        print(f"V={m.control_v}: delay {m.avg_delay_slots:.4f} slots, "
              f"expenditure {m.avg_expenditure_per_frame:.6e} cents/frame")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    cfg = _load(args)
    trace = load_nre_trace(args.trace)
    report = check_single_cell_oracle(cfg, trace, num_frames=args.frames)
    print(f"oracle checked {report.slots_checked} slots: "
          f"max phi deviation {report.max_phi_deviation:.3e}, "
          f"max objective deviation {report.max_objective_deviation:.3e}, "
          f"max power deviation {report.max_power_deviation:.3e}")
    if report.max_deviation > ORACLE_TOLERANCE:
        print(f"FAIL: deviation {report.max_deviation:.3e} > {ORACLE_TOLERANCE}")
        return EXIT_ORACLE
    print("PASS")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb == "validate":
            return _cmd_validate(args)
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "sweep":
            return _cmd_sweep(args)
        if args.verb == "oracle":
            return _cmd_oracle(args)
        raise _UsageError(f"unknown verb {args.verb}")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverFailureError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, TraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GridcellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
