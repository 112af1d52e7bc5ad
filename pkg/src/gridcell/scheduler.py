"""Frame-level decisions and Lyapunov bookkeeping.

A UE is scheduled for a frame only when its access backlog strictly exceeds
its processing backlog (equality leaves it idle) and is nonzero; an ScBS with
no scheduled UE sleeps for the whole frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DriftConstants, SystemConfig
from .errors import IncompleteFrameError
from .queues import QueueState


@dataclass(frozen=True)
class ScheduleDecision:
    indicator: np.ndarray            # (U,) 0/1
    active_sets: tuple[tuple[int, ...], ...]  # per ScBS, local UE indices
    asleep: np.ndarray               # (M,) bool
    frame_index: int

    @property
    def any_scheduled(self) -> bool:
        return bool(np.any(self.indicator))


@dataclass(frozen=True)
class LyapunovRecord:
    lyapunov_value: float
    drift: float
    penalty: float
    bound_rhs: float


@dataclass
class FrameRecord:
    """Everything needed to audit one frame after the fact."""

    frame_index: int
    q_access_start: np.ndarray
    q_proc_start: np.ndarray
    q_access_end: np.ndarray
    q_proc_end: np.ndarray
    rates: list = field(default_factory=list)    # T arrays of (U,)
    serveds: list = field(default_factory=list)  # T arrays of (U,)
    grid_exchange: list = field(default_factory=list)  # T scalars, mW
    expenditure: float = 0.0                     # G[k], cents
    harvested_total: float = 0.0                 # sum over ScBSs, mW*slot


@dataclass(frozen=True)
class DriftCheck:
    ok: bool
    access_slack: np.ndarray   # (U,)
    proc_slack: np.ndarray     # (U,)
    aggregate_slack: float
    record: LyapunovRecord


def schedule_frame(queues: QueueState, cfg: SystemConfig, frame_index: int) -> ScheduleDecision:
    """Scheduled-UE indicators and sleeping pattern from frame-start backlogs."""
    qa, qu = queues.q_access, queues.q_proc
    indicator = ((qu - qa < 0) & (qa > 0)).astype(int)
    active_sets = []
    asleep = np.empty(cfg.num_scbs, dtype=bool)
    for m, (off, cnt) in enumerate(zip(cfg.ue_offsets, cfg.ues_per_scbs)):
        local = tuple(int(n) for n in range(cnt) if indicator[off + n])
        active_sets.append(local)
        asleep[m] = len(local) == 0
    return ScheduleDecision(
        indicator=indicator,
        active_sets=tuple(active_sets),
        asleep=asleep,
        frame_index=frame_index,
    )


def lyapunov_value(queues: QueueState) -> float:
    """Half the summed squared backlogs at a frame start."""
    return 0.5 * float(np.sum(queues.q_access ** 2) + np.sum(queues.q_proc ** 2))


def drift_bound_check(
    record: FrameRecord,
    constants: DriftConstants,
    control_v: float,
    slack_floor: float = -1e-9,
) -> DriftCheck:
    """Audit one frame against the per-queue and aggregate drift bounds.

    The per-queue bound caps the realized squared drift by the quadratic
    constant plus the frame-start backlog times the frame's net flow; the
    aggregate bound does the same for the full drift-plus-penalty with
    expectations replaced by this frame's realization.
    """
    t = len(record.rates)
    if t == 0 or len(record.serveds) != t or len(record.grid_exchange) != t:
        raise IncompleteFrameError("frame record is missing slot entries")

    rates = np.asarray(record.rates)        # (T, U)
    serveds = np.asarray(record.serveds)    # (T, U)
    sum_r = rates.sum(axis=0)
    sum_s = serveds.sum(axis=0)

    qa0, qu0 = record.q_access_start, record.q_proc_start
    qa1, qu1 = record.q_access_end, record.q_proc_end

    arrivals = qa1 - qa0 + sum_r            # recovers lambda for audited frames
    access_lhs = 0.5 * (qa1 ** 2 - qa0 ** 2)
    access_rhs = constants.c_access + qa0 * (arrivals - sum_r)
    proc_lhs = 0.5 * (qu1 ** 2 - qu0 ** 2)
    proc_rhs = constants.c_proc + qu0 * (sum_r - sum_s)

    access_slack = access_rhs - access_lhs
    proc_slack = proc_rhs - proc_lhs

    l0 = 0.5 * float(np.sum(qa0 ** 2) + np.sum(qu0 ** 2))
    l1 = 0.5 * float(np.sum(qa1 ** 2) + np.sum(qu1 ** 2))
    drift = l1 - l0
    penalty = control_v * record.expenditure
    bound_rhs = (
        constants.psi_total
        + penalty
        + float(np.sum(qa0 * (arrivals - sum_r)))
        + float(np.sum(qu0 * (sum_r - sum_s)))
    )
    aggregate_slack = bound_rhs - (drift + penalty)

    ok = bool(
        np.all(access_slack >= slack_floor)
        and np.all(proc_slack >= slack_floor)
        and aggregate_slack >= slack_floor
    )
    return DriftCheck(
        ok=ok,
        access_slack=access_slack,
        proc_slack=proc_slack,
        aggregate_slack=aggregate_slack,
        record=LyapunovRecord(
            lyapunov_value=l0, drift=drift, penalty=penalty, bound_rhs=bound_rhs),
    )
