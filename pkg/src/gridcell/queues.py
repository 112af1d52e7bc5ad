"""Access and processing queue dynamics.

Backlogs are continuous (nats).  Within one slot the order of operations is:
serve the processing queue from its pre-arrival backlog, move the slot's
transmitted nats from the access queue into the processing queue, then inject
the frame's traffic if the slot is a frame start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IncompleteFrameError, RateExceedsBacklogError

RATE_TOLERANCE = 1e-9  # absolute slack when checking r <= q_access


@dataclass
class QueueState:
    """Backlogs of every UE at the start of ``slot_index``."""

    q_access: np.ndarray  # (U,) nats
    q_proc: np.ndarray    # (U,) nats
    slot_index: int = 0

    def copy(self) -> "QueueState":
        return QueueState(self.q_access.copy(), self.q_proc.copy(), self.slot_index)

    @classmethod
    def empty(cls, num_ues: int) -> "QueueState":
        return cls(np.zeros(num_ues), np.zeros(num_ues), 0)


def arrival(lam: float, slot_index: int, frame_index: int, slots_per_frame: int) -> float:
    """Traffic injected in this slot: the whole frame's load at the frame
    start, nothing otherwise."""
    return lam if slot_index == frame_index * slots_per_frame else 0.0


def step_access(q: float, r: float, nu: float) -> float:
    """One-slot access-queue update q - r + nu.

    The transmitted rate may not exceed the backlog (no blank information);
    rates come from a numerical solver, so a small absolute tolerance applies.
    """
    if r > q + RATE_TOLERANCE:
        raise RateExceedsBacklogError(f"rate {r} exceeds access backlog {q}")
    return max(q - r, 0.0) + nu


def step_processing(q: float, r: float, s_bar: float) -> tuple[float, float]:
    """One-slot processing-queue update; returns (new backlog, nats served).

    Service is capped by the pre-arrival backlog; the rate transferred in the
    same slot only becomes serviceable next slot.
    """
    served = min(s_bar, q)
    return q - served + r, served


def frame_totals(rates, serveds, lam: float, slots_per_frame: int) -> tuple[float, float]:
    """Frame-level backlog deltas implied by one frame of slot records.

    Returns (access delta, processing delta); telescoping the per-slot
    updates over the frame must reproduce these exactly.
    """
    rates = np.asarray(rates, dtype=float)
    serveds = np.asarray(serveds, dtype=float)
    if rates.shape[0] != slots_per_frame or serveds.shape[0] != slots_per_frame:
        raise IncompleteFrameError(
            f"expected {slots_per_frame} slot records, got {rates.shape[0]}")
    access_delta = lam - float(np.sum(rates))
    proc_delta = float(np.sum(rates)) - float(np.sum(serveds))
    return access_delta, proc_delta
