"""Acceptance suite: one test per criterion, each reporting a pass/fail line.

The heavy 200-frame multicell runs are shared through a session fixture: one
run per control value with common random numbers, reused by the drift, power
balance, tradeoff, stability and rate-safety criteria.
"""

import os
import time

import numpy as np
import pytest

from gridcell.beamform import (
    achieved_sinrs,
    min_power_beamforming,
    rate,
)
from gridcell.channel import ChannelRealization, sample_channels
from gridcell.cli import main as cli_main
from gridcell.config import drift_constants, load_config, validate_config
from gridcell.energy import frame_expenditure, frame_expenditure_split, load_nre_trace
from gridcell.errors import InfeasibleError
from gridcell.queues import RATE_TOLERANCE, QueueState
from gridcell.scheduler import drift_bound_check, schedule_frame
from gridcell.simulator import run

from conftest import DEFAULT_CONFIG, TINY_CONFIG, TRACE_PATH

SWEEP_V = (0.01, 0.1, 1.0)
NOISE_BAND = 0.01


def _verdict(report, name, ok, detail):
    report(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="session")
def sweep_results():
    """One full-horizon run per control value, common random numbers."""
    cfg = load_config(DEFAULT_CONFIG)
    trace = load_nre_trace(TRACE_PATH)
    results, timings = {}, {}
    for v in SWEEP_V:
        start = time.perf_counter()
        results[v] = run(cfg.replace(control_v=v), trace)
        timings[v] = time.perf_counter() - start
    return {"cfg": cfg, "results": results, "timings": timings}


def test_criterion_1_scheduling_truth_table(report):
    """Exhaustive 50x50 backlog grid against the scheduling rule."""
    cfg = validate_config({
        "num_scbs": 1, "ues_per_scbs": [1], "num_tx_antennas": 1,
        "distance_matrix_m": [[40.0]],
    })
    start = time.perf_counter()
    grid = np.linspace(0.0, 5.0, 50)
    bad = 0
    for qa in grid:
        for qu in grid:
            d = schedule_frame(QueueState(np.array([qa]), np.array([qu])), cfg, 0)
            expect = 1 if (qa > qu and qa > 0) else 0
            bad += int(d.indicator[0] != expect)
            bad += int(d.asleep[0] != (expect == 0))
    elapsed = time.perf_counter() - start
    _verdict(report, "criterion 1 (scheduling truth table)",
             bad == 0 and elapsed < 1.0,
             f"{bad} mismatches over 2500 backlog pairs in {elapsed:.2f}s")


def test_criterion_2_beamforming_oracle(report):
    """Scalar solves vs the closed form, plus the budget boundary."""
    cfg = load_config(TINY_CONFIG)
    sched = schedule_frame(QueueState(np.array([5.0]), np.array([0.0])), cfg, 0)
    rng = np.random.default_rng(1234)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        h = np.array([[[rng.normal(0, 0.3) + 1j * rng.normal(0, 0.3)]]])
        gain = abs(h[0, 0, 0]) ** 2
        gamma = rng.uniform(0.01, 0.9) * cfg.p_max_mw * gain / cfg.noise_mw[0]
        beams = min_power_beamforming(
            ChannelRealization(h=h, slot_index=0), sched, np.array([gamma]), cfg)
        p = float(np.sum(np.abs(beams) ** 2))
        exact = gamma * cfg.noise_mw[0] / gain
        worst = max(worst, abs(p - exact) / exact)

    h = np.array([[[0.5 + 0.1j]]])
    gain = abs(h[0, 0, 0]) ** 2
    channels = ChannelRealization(h=h, slot_index=0)
    boundary_ok = True
    try:
        min_power_beamforming(
            channels, sched,
            np.array([cfg.p_max_mw * (1 - 1e-6) * gain / cfg.noise_mw[0]]), cfg)
    except InfeasibleError:
        boundary_ok = False
    try:
        min_power_beamforming(
            channels, sched,
            np.array([cfg.p_max_mw * (1 + 1e-6) * gain / cfg.noise_mw[0]]), cfg)
        boundary_ok = False
    except InfeasibleError:
        pass
    elapsed = time.perf_counter() - start
    _verdict(report, "criterion 2 (beamforming oracle)",
             worst <= 1e-6 and boundary_ok and elapsed < 30.0,
             f"max rel err {worst:.2e}, boundary within 1e-6 of the budget "
             f"{'resolved' if boundary_ok else 'missed'}, {elapsed:.1f}s")


def test_criterion_3_activeness_and_proportionality(report):
    """Randomized multicell solves: targets bind, rates split like weights."""
    cfg = load_config(DEFAULT_CONFIG)
    rng = np.random.default_rng(99)
    start = time.perf_counter()
    worst_sinr, worst_ratio = 0.0, 0.0
    for trial in range(50):
        qa = rng.uniform(0.5, 6.0, size=4)
        sched = schedule_frame(QueueState(qa.copy(), np.zeros(4)), cfg, 0)
        psi = qa / qa.sum()
        phi = rng.uniform(0.5, 3.0)
        gammas = np.expm1(psi * phi)
        channels = sample_channels(cfg.replace(rng_seed=trial), 0)
        beams = min_power_beamforming(channels, sched, gammas, cfg)
        sinrs = achieved_sinrs(channels, beams, sched, cfg)
        worst_sinr = max(worst_sinr, float(np.max(np.abs(sinrs - gammas) / gammas)))
        rates = np.array([rate(s) for s in sinrs])
        ratios = (rates / rates[0]) / (psi / psi[0])
        worst_ratio = max(worst_ratio, float(np.max(np.abs(ratios - 1.0))))
    elapsed = time.perf_counter() - start
    _verdict(report, "criterion 3 (activeness and proportionality)",
             worst_sinr <= 1e-5 and worst_ratio <= 1e-4 and elapsed < 120.0,
             f"max SINR dev {worst_sinr:.2e}, max rate-ratio dev "
             f"{worst_ratio:.2e}, {elapsed:.1f}s over 50 solves")


def test_criterion_4_drift_inequalities(report, sweep_results):
    """Per-queue and aggregate drift bounds on every frame of a full run."""
    cfg = sweep_results["cfg"]
    result = sweep_results["results"][0.1]
    consts = drift_constants(cfg)
    worst = np.inf
    for record in result.frames:
        check = drift_bound_check(record, consts, 0.1)
        worst = min(worst, float(np.min(check.access_slack)),
                    float(np.min(check.proc_slack)), check.aggregate_slack)
    elapsed = sweep_results["timings"][0.1]
    _verdict(report, "criterion 4 (drift inequalities)",
             worst >= -1e-9 and elapsed < 300.0,
             f"min slack {worst:.3e} over {len(result.frames)} frames, "
             f"run took {elapsed:.0f}s")


def test_criterion_5_power_balance(report, sweep_results):
    """Per-slot power balance and agreement of the two expenditure forms."""
    cfg = sweep_results["cfg"]
    result = sweep_results["results"][0.1]
    max_residual = float(np.max(np.abs(result.power_balance_residuals)))
    worst_form = 0.0
    for record in result.frames:
        a = frame_expenditure(record.grid_exchange, cfg.price_buy, cfg.price_sell)
        b = frame_expenditure_split(record.grid_exchange, cfg.price_buy, cfg.price_sell)
        worst_form = max(worst_form, abs(a - b) / max(abs(a), abs(b), 1e-300))
    _verdict(report, "criterion 5 (power balance)",
             max_residual <= 1e-9 and worst_form <= 1e-12,
             f"max residual {max_residual:.2e} mW, "
             f"expenditure-form rel diff {worst_form:.2e}")


def test_criterion_6_tradeoff_trend(report, sweep_results):
    """Delay nondecreasing and expenditure nonincreasing in the control
    weight, with the expenditure gap to the largest weight shrinking."""
    metrics = [sweep_results["results"][v].metrics for v in SWEEP_V]
    delays = [m.avg_delay_slots for m in metrics]
    costs = [m.avg_expenditure_per_frame for m in metrics]
    ok = True
    for lo, hi in zip(range(len(SWEEP_V) - 1), range(1, len(SWEEP_V))):
        ok &= delays[hi] >= delays[lo] * (1.0 - NOISE_BAND)
        ok &= costs[hi] <= costs[lo] * (1.0 + NOISE_BAND) + 1e-18
    gaps = [abs(c - costs[-1]) for c in costs]
    for lo, hi in zip(range(len(gaps) - 1), range(1, len(gaps))):
        ok &= gaps[hi] <= gaps[lo] * (1.0 + NOISE_BAND) + 1e-18
    total = sum(sweep_results["timings"].values())
    ok &= total < 900.0
    _verdict(report, "criterion 6 (tradeoff trend)", ok,
             f"delays {['%.5f' % d for d in delays]}, "
             f"expenditures {['%.4e' % c for c in costs]}, "
             f"sweep took {total:.0f}s")


def test_criterion_7_queue_stability(report, sweep_results):
    """Bounded backlogs: the late-run peak does not grow past the mid-run
    peak by more than 10% in any run inside the stability band."""
    checked, ok = 0, True
    details = []
    for v in SWEEP_V:
        result = sweep_results["results"][v]
        if not result.metrics.stability_ok:
            continue
        checked += 1
        backlog = result.slot_backlog_totals
        q = len(backlog) // 4
        second = float(np.max(backlog[q:2 * q]))
        last = float(np.max(backlog[3 * q:]))
        ok &= last < 1.1 * second
        details.append(f"V={v}: last/second peak {last / second:.4f}")
    ok &= checked > 0
    _verdict(report, "criterion 7 (queue stability)", ok,
             f"{checked} runs in the stability band; " + "; ".join(details))


def test_criterion_8_rate_limit_safety(report, sweep_results):
    """Realized per-slot rate never exceeds the access backlog."""
    total, violations = 0, 0
    for v in SWEEP_V:
        result = sweep_results["results"][v]
        for t, sol in enumerate(result.slot_solutions):
            total += 1
            if np.any(sol.rates > result.queue_trace[t, :, 0] + RATE_TOLERANCE):
                violations += 1
    _verdict(report, "criterion 8 (rate-limit safety)", violations == 0,
             f"{violations} violations across {total} slots")


def test_criterion_9_determinism(report, tmp_path):
    """Identical seeds produce byte-identical metric CSVs."""
    args = ["run", "--config", TINY_CONFIG, "--trace", TRACE_PATH]
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    ok = cli_main(args + ["--out", out_a]) == 0
    ok &= cli_main(args + ["--out", out_b]) == 0
    mismatched = []
    for name in ("metrics.csv", "ledger.csv", "decisions.csv"):
        with open(os.path.join(out_a, name), "rb") as fh:
            a = fh.read()
        with open(os.path.join(out_b, name), "rb") as fh:
            b = fh.read()
        if a != b:
            mismatched.append(name)
    ok &= not mismatched
    _verdict(report, "criterion 9 (determinism)", ok,
             "byte-identical CSVs" if ok else f"mismatch in {mismatched}")
