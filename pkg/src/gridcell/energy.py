"""Solar trace handling, harvesting, grid exchange and expenditure accounting.

Harvested power is pooled across ScBSs (free intra-network trading), so only
the network total enters the per-slot balance.  Expenditure uses two-way
trading: buy at ``price_buy`` when consumption exceeds the harvest rate, sell
the surplus at ``price_sell`` otherwise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NegativeIrradianceError,
    NonMonotoneTimestampsError,
    OutOfRangeError,
    ParseError,
)

TRACE_HEADER = ("timestamp_s", "irradiance_w_per_m2")


@dataclass(frozen=True)
class NreTrace:
    """Sampled irradiance trace with strictly increasing timestamps."""

    timestamps_s: np.ndarray
    irradiance_w_per_m2: np.ndarray

    def __post_init__(self):
        if len(self.timestamps_s) < 2:
            raise ParseError("trace needs at least 2 samples")
        if np.any(np.diff(self.timestamps_s) <= 0):
            raise NonMonotoneTimestampsError("trace timestamps must be strictly increasing")
        if np.any(self.irradiance_w_per_m2 < 0):
            raise NegativeIrradianceError("irradiance must be nonnegative")

    @property
    def span_s(self) -> tuple[float, float]:
        return float(self.timestamps_s[0]), float(self.timestamps_s[-1])


def load_nre_trace(path: str) -> NreTrace:
    """Load a ``timestamp_s,irradiance_w_per_m2`` CSV."""
    times, values = [], []
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != TRACE_HEADER:
                raise ParseError(f"expected header {','.join(TRACE_HEADER)}")
            for row in reader:
                if not row:
                    continue
                if len(row) != 2:
                    raise ParseError(f"malformed row: {row}")
                times.append(float(row[0]))
                values.append(float(row[1]))
    except OSError as exc:
        raise ParseError(f"cannot read trace file: {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"non-numeric trace entry: {exc}") from exc
    return NreTrace(np.asarray(times), np.asarray(values))


def irradiance_at(trace: NreTrace, time_s: float) -> float:
    """Linear interpolation of the trace at an arbitrary time."""
    lo, hi = trace.span_s
    if time_s < lo or time_s > hi:
        raise OutOfRangeError(f"time {time_s} outside trace span [{lo}, {hi}]")
    return float(np.interp(time_s, trace.timestamps_s, trace.irradiance_w_per_m2))


def interpolate_trace(trace: NreTrace, slot_duration_s: float, horizon_slots: int) -> np.ndarray:
    """Per-slot irradiance, evaluated at slot midpoints."""
    mids = (np.arange(horizon_slots) + 0.5) * slot_duration_s
    lo, hi = trace.span_s
    if horizon_slots < 1:
        raise OutOfRangeError("horizon must cover at least one slot")
    if mids[0] < lo or mids[-1] > hi:
        raise OutOfRangeError(
            f"horizon of {horizon_slots} slots not covered by trace span [{lo}, {hi}]")
    return np.interp(mids, trace.timestamps_s, trace.irradiance_w_per_m2)


def harvest_power(irradiance_w_per_m2: float, area_m2: float, efficiency: float) -> float:
    """Harvested power in mW for a given irradiance."""
    return irradiance_w_per_m2 * area_m2 * efficiency * 1000.0


def grid_exchange(total_scbs_power_mw: float, total_harvest_rate_mw: float) -> float:
    """Signed grid trade: positive buys, negative sells."""
    return total_scbs_power_mw - total_harvest_rate_mw


def frame_expenditure(exchanges_mw, price_buy: float, price_sell: float) -> float:
    """Frame expenditure in cents from the T per-slot grid exchanges."""
    p = np.asarray(exchanges_mw, dtype=float)
    return float(np.sum((price_buy - price_sell) * np.maximum(p, 0.0) + price_sell * p))


def frame_expenditure_split(exchanges_mw, price_buy: float, price_sell: float) -> float:
    """Algebraically equivalent buy-minus-sell form, kept for cross-checks."""
    p = np.asarray(exchanges_mw, dtype=float)
    return float(np.sum(price_buy * np.maximum(p, 0.0) - price_sell * np.maximum(-p, 0.0)))


@dataclass
class EnergyLedger:
    """Per-run energy accounting."""

    price_buy: float
    price_sell: float
    harvested_per_frame: list = field(default_factory=list)   # (M,) arrays, mW*slot
    grid_exchange_per_slot: list = field(default_factory=list)  # mW, signed
    expenditure_per_frame: list = field(default_factory=list)   # cents
    cumulative_expenditure: float = 0.0

    def record_frame(self, harvested_mw_slot: np.ndarray, exchanges_mw) -> float:
        """Close out one frame; returns its expenditure G[k]."""
        g = frame_expenditure(exchanges_mw, self.price_buy, self.price_sell)
        self.harvested_per_frame.append(np.asarray(harvested_mw_slot, dtype=float))
        self.grid_exchange_per_slot.extend(float(x) for x in exchanges_mw)
        self.expenditure_per_frame.append(g)
        self.cumulative_expenditure += g
        return g

    def recompute_cumulative(self, slots_per_frame: int) -> float:
        """Re-derive the cumulative total from raw per-slot exchanges."""
        total = 0.0
        ex = self.grid_exchange_per_slot
        for k in range(len(self.expenditure_per_frame)):
            chunk = ex[k * slots_per_frame:(k + 1) * slots_per_frame]
            total += frame_expenditure(chunk, self.price_buy, self.price_sell)
        return total
