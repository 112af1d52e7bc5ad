#!/usr/bin/env python3
"""Sweep the control weight V and tabulate the delay/expenditure tradeoff.

Runs share common random numbers, so metric differences across V come only
from the control decisions.  Writes one CSV row per V; pass --plot to also
save a two-panel figure.

Example:
    python3 scripts/run_tradeoff_sweep.py \
        --config configs/default.json --trace data/solar_trace.csv \
        --v-values 0.01,0.1,1.0 --out sweep.csv
"""

import argparse
import csv
import sys

from gridcell import load_config, load_nre_trace, sweep_v


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", required=True)
    ap.add_argument("--trace", required=True)
    ap.add_argument("--v-values", default="0.01,0.0316,0.1,0.316,1.0")
    ap.add_argument("--frames", type=int, default=None,
                    help="override the horizon length")
    ap.add_argument("--out", default="sweep.csv")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--plot", default=None, metavar="PNG",
                    help="save a delay/expenditure figure")
    args = ap.parse_args()

    overrides = {} if args.frames is None else {"num_frames": args.frames}
    cfg = load_config(args.config, overrides)
    trace = load_nre_trace(args.trace)
    v_values = [float(x) for x in args.v_values.split(",") if x.strip()]

    metrics = sweep_v(cfg, v_values, trace, jobs=args.jobs)

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["V", "avg_delay_slots", "avg_expenditure_cents_per_frame",
                         "annualized_cents", "stability_ok"])
        for m in metrics:
            writer.writerow([m.control_v, m.avg_delay_slots,
                             m.avg_expenditure_per_frame,
                             m.annualized_expenditure, int(m.stability_ok)])
            print(f"V={m.control_v:<8g} delay={m.avg_delay_slots:.5f} slots  "
                  f"expenditure={m.avg_expenditure_per_frame:.6e} cents/frame")

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
        vs = [m.control_v for m in metrics]
        ax1.semilogx(vs, [m.avg_delay_slots for m in metrics], "o-")
        ax1.set_xlabel("V")
        ax1.set_ylabel("average delay (slots)")
        ax2.semilogx(vs, [m.avg_expenditure_per_frame for m in metrics], "s-")
        ax2.set_xlabel("V")
        ax2.set_ylabel("expenditure (cents/frame)")
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"figure saved to {args.plot}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
