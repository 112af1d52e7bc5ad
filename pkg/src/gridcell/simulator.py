"""Run the two-timescale control loop over a full horizon and collect metrics.

Per frame: estimate the harvest, fix the schedule and sleeping pattern from
frame-start backlogs; per slot: draw channels, solve the slot problem, update
queues.  The first 10% of frames are treated as warm-up and excluded from the
averaged metrics (raw traces keep every frame).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .beamform import SlotSolution, optimize_slot
from .channel import sample_channels
from .config import SystemConfig, drift_constants
from .energy import EnergyLedger, NreTrace, harvest_power, interpolate_trace
from .errors import SolverFailureError, ZeroArrivalsError
from .queues import QueueState, arrival, step_access, step_processing
from .scheduler import (
    FrameRecord,
    ScheduleDecision,
    drift_bound_check,
    schedule_frame,
)

log = logging.getLogger(__name__)

WARMUP_FRACTION = 0.1
SECONDS_PER_YEAR = 365 * 24 * 3600
REFERENCE_CITY_SCBS = 1e5


@dataclass(frozen=True)
class RunMetrics:
    control_v: float
    rng_seed: int
    avg_expenditure_per_frame: float    # cents
    annualized_expenditure: float       # cents per year, city-scaled
    avg_delay_slots: float
    backlog_trace: np.ndarray           # (K,) total backlog at frame starts
    empirical_avg_rate: np.ndarray      # (U,) mean rate over serving slots
    stability_flag: np.ndarray          # (U,) bool
    drift_slack_min: float

    @property
    def stability_ok(self) -> bool:
        return bool(np.all(self.stability_flag))


@dataclass
class RunResult:
    metrics: RunMetrics
    frames: list                        # FrameRecord per frame
    schedules: list                     # ScheduleDecision per frame
    ledger: EnergyLedger
    slot_solutions: list                # SlotSolution per slot
    slot_backlog_totals: np.ndarray     # (K*T,) total backlog at slot starts
    queue_trace: np.ndarray             # (K*T, U, 2) access/processing backlogs
    power_balance_residuals: np.ndarray  # (K*T,) mW


def measure_delay(slot_backlog_totals: np.ndarray, cfg: SystemConfig,
                  warmup_slots: int = 0) -> float:
    """Little's-law delay estimate in slots."""
    per_slot_arrivals = cfg.total_arrival_per_slot
    if per_slot_arrivals <= 0:
        raise ZeroArrivalsError("delay is undefined with zero total arrivals")
    backlog = np.asarray(slot_backlog_totals, dtype=float)[warmup_slots:]
    return float(np.mean(backlog)) / per_slot_arrivals


def annualize(avg_expenditure_per_frame: float, cfg: SystemConfig) -> float:
    """Scale a per-frame, per-network figure to a reference city and a year."""
    frame_seconds = cfg.slots_per_frame * cfg.slot_duration_s
    frames_per_year = SECONDS_PER_YEAR / frame_seconds
    return avg_expenditure_per_frame * frames_per_year * (REFERENCE_CITY_SCBS / cfg.num_scbs)


def run(cfg: SystemConfig, nre_trace: NreTrace) -> RunResult:
    """Execute the full horizon; deterministic for a fixed seed."""
    k_frames, t_frame = cfg.num_frames, cfg.slots_per_frame
    u_tot = cfg.num_ues
    consts = drift_constants(cfg)
    irr = interpolate_trace(nre_trace, cfg.slot_duration_s, k_frames * t_frame)
    ledger = EnergyLedger(cfg.price_buy, cfg.price_sell)

    queues = QueueState.empty(u_tot)
    frames: list[FrameRecord] = []
    schedules: list[ScheduleDecision] = []
    slot_solutions: list[SlotSolution] = []
    slot_backlogs = np.zeros(k_frames * t_frame)
    queue_trace = np.zeros((k_frames * t_frame, u_tot, 2))
    residuals = np.zeros(k_frames * t_frame)
    backlog_trace = np.zeros(k_frames)
    drift_slack_min = np.inf

    rate_sums = np.zeros(u_tot)
    rate_slot_counts = np.zeros(u_tot)
    warmup_frames = int(WARMUP_FRACTION * k_frames)
    warmup_slots = warmup_frames * t_frame

    for k in range(k_frames):
        frame_start = queues.copy()
        backlog_trace[k] = float(np.sum(queues.q_access) + np.sum(queues.q_proc))
        schedule = schedule_frame(queues, cfg, k)
        schedules.append(schedule)

        per_scbs_harvest = np.full(
            cfg.num_scbs,
            harvest_power(float(irr[k * t_frame]), cfg.harvester_area_m2,
                          cfg.harvester_efficiency) * t_frame)
        e_hav_rate = float(np.sum(per_scbs_harvest)) / t_frame

        record = FrameRecord(
            frame_index=k,
            q_access_start=frame_start.q_access.copy(),
            q_proc_start=frame_start.q_proc.copy(),
            q_access_end=None,
            q_proc_end=None,
        )
        exchanges = []

        for t in range(k * t_frame, (k + 1) * t_frame):
            slot_backlogs[t] = float(np.sum(queues.q_access) + np.sum(queues.q_proc))
            queue_trace[t, :, 0] = queues.q_access
            queue_trace[t, :, 1] = queues.q_proc

            channels = sample_channels(cfg, t)
            try:
                sol = optimize_slot(
                    channels, schedule, frame_start, queues.q_access, e_hav_rate, cfg)
            except SolverFailureError as exc:
                raise SolverFailureError(
                    f"frame {k}, slot {t}: {exc}") from exc
            slot_solutions.append(sol)

            residuals[t] = sol.grid_exchange - (
                float(np.sum(sol.scbs_power)) - e_hav_rate)
            exchanges.append(sol.grid_exchange)

            serveds = np.zeros(u_tot)
            new_qa = np.zeros(u_tot)
            new_qu = np.zeros(u_tot)
            for u in range(u_tot):
                r = float(sol.rates[u])
                new_qu[u], serveds[u] = step_processing(
                    float(queues.q_proc[u]), r, float(cfg.service_nats[u]))
                nu = arrival(float(cfg.arrival_nats[u]), t, k, t_frame)
                new_qa[u] = step_access(float(queues.q_access[u]), r, nu)
            queues = QueueState(new_qa, new_qu, t + 1)

            record.rates.append(sol.rates.copy())
            record.serveds.append(serveds)
            record.grid_exchange.append(sol.grid_exchange)

            if t >= warmup_slots:
                active = sol.rates > 0
                rate_sums[active] += sol.rates[active]
                rate_slot_counts[active] += 1

        record.q_access_end = queues.q_access.copy()
        record.q_proc_end = queues.q_proc.copy()
        record.harvested_total = float(np.sum(per_scbs_harvest))
        record.expenditure = ledger.record_frame(per_scbs_harvest, exchanges)
        frames.append(record)

        check = drift_bound_check(record, consts, cfg.control_v)
        frame_min = min(float(np.min(check.access_slack)),
                        float(np.min(check.proc_slack)),
                        check.aggregate_slack)
        drift_slack_min = min(drift_slack_min, frame_min)

    post = max(k_frames - warmup_frames, 1)
    avg_exp = float(np.sum(ledger.expenditure_per_frame[warmup_frames:])) / post

    empirical_rate = np.divide(
        rate_sums, rate_slot_counts,
        out=np.zeros(u_tot), where=rate_slot_counts > 0)
    lower = cfg.arrival_nats / t_frame
    stability = (empirical_rate > lower) & (empirical_rate < cfg.service_nats)
    for u in np.flatnonzero(~stability):
        log.warning(
            "UE %d: empirical rate %.4g outside stability band (%.4g, %.4g)",
            u, empirical_rate[u], lower[u], cfg.service_nats[u])

    try:
        delay = measure_delay(slot_backlogs, cfg, warmup_slots)
    except ZeroArrivalsError:
        delay = 0.0

    metrics = RunMetrics(
        control_v=cfg.control_v,
        rng_seed=cfg.rng_seed,
        avg_expenditure_per_frame=avg_exp,
        annualized_expenditure=annualize(avg_exp, cfg),
        avg_delay_slots=delay,
        backlog_trace=backlog_trace,
        empirical_avg_rate=empirical_rate,
        stability_flag=stability,
        drift_slack_min=float(drift_slack_min),
    )
    return RunResult(
        metrics=metrics,
        frames=frames,
        schedules=schedules,
        ledger=ledger,
        slot_solutions=slot_solutions,
        slot_backlog_totals=slot_backlogs,
        queue_trace=queue_trace,
        power_balance_residuals=residuals,
    )


def sweep_v(cfg: SystemConfig, v_values, nre_trace: NreTrace, jobs: int = 1):
    """One run per control value, common random numbers across runs."""
    v_values = list(v_values)
    if not v_values:
        raise ValueError("sweep needs at least one control value")
    configs = [cfg.replace(control_v=float(v)) for v in v_values]
    if jobs > 1 and len(configs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_metrics_only, configs,
                                    [nre_trace] * len(configs)))
    else:
        results = [_run_metrics_only(c, nre_trace) for c in configs]
    return results


def _run_metrics_only(cfg: SystemConfig, nre_trace: NreTrace) -> RunMetrics:
    return run(cfg, nre_trace).metrics
