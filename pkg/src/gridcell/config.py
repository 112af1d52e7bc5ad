"""Static system description: network geometry, traffic, prices, control knobs.

Unit conventions used everywhere in the package:
  rates / backlogs  nats per slot (natural log)
  powers            mW
  money             cents
  time              slots (slot_duration_s seconds each)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .errors import DimensionError, NonPositiveError, PriceOrderError, ConfigError

DYNAMIC_WEIGHTS = "dynamic-backlog"

# fields that may be given per UE as a scalar (broadcast) or a flat list
_PER_UE_FIELDS = ("noise_mw", "arrival_nats", "service_nats")

_DEFAULTS = {
    "slots_per_frame": 10,
    "num_frames": 200,
    "slot_duration_s": 0.1,
    "pa_efficiency": 0.35,
    "p_max_mw": 398.1,        # 26 dBm
    "p_sp_mw": 199.5,         # 23 dBm
    "noise_mw": 1e-9,         # -90 dBm
    "pathloss_exponent": 4.0,
    "arrival_nats": 1.5,
    "service_nats": 3.5,
    "rate_weights": DYNAMIC_WEIGHTS,
    "control_v": 0.1,
    "price_buy": 1.2e-9,
    "price_sell": 1.0e-9,
    "harvester_area_m2": 5e-4,
    "harvester_efficiency": 0.3,
    "rng_seed": 0,
    "r_max_cap": None,        # filled from the default cap formula
    "phi_grid_points": 32,
    "phi_refine_points": 8,
    "phi_refine_rounds": 2,
}

_REQUIRED = ("num_scbs", "ues_per_scbs", "num_tx_antennas", "distance_matrix_m")


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Validated, immutable system description.

    UEs are indexed two ways: per cell as (m, n) and by a flat index
    u in [0, num_ues); ``ue_offsets`` maps between the two.
    """

    num_scbs: int
    ues_per_scbs: tuple[int, ...]
    num_tx_antennas: int
    slots_per_frame: int
    num_frames: int
    slot_duration_s: float
    pa_efficiency: float
    p_max_mw: float
    p_sp_mw: float
    noise_mw: np.ndarray          # (U,)
    pathloss_exponent: float
    distance_matrix_m: np.ndarray  # (M, U): ScBS j -> UE u, cross links included
    arrival_nats: np.ndarray      # (U,) nats injected at each frame start
    service_nats: np.ndarray      # (U,) processing-queue service per slot
    rate_weights: np.ndarray | str  # (U,) static weights, or DYNAMIC_WEIGHTS
    control_v: float
    price_buy: float
    price_sell: float
    harvester_area_m2: float
    harvester_efficiency: float
    rng_seed: int
    r_max_cap: float
    phi_grid_points: int
    phi_refine_points: int
    phi_refine_rounds: int

    @property
    def num_ues(self) -> int:
        return int(sum(self.ues_per_scbs))

    @property
    def ue_offsets(self) -> tuple[int, ...]:
        """Flat index of the first UE of each cell."""
        out, acc = [], 0
        for n in self.ues_per_scbs:
            out.append(acc)
            acc += n
        return tuple(out)

    def ue_index(self, m: int, n: int) -> int:
        return self.ue_offsets[m] + n

    @property
    def serving_scbs(self) -> np.ndarray:
        """(U,) index of the ScBS serving each flat UE index."""
        out = np.empty(self.num_ues, dtype=int)
        for m, (off, cnt) in enumerate(zip(self.ue_offsets, self.ues_per_scbs)):
            out[off:off + cnt] = m
        return out

    @property
    def circuit_power_mw(self) -> float:
        return circuit_power(self.p_sp_mw, self.num_tx_antennas)

    @property
    def total_arrival_per_slot(self) -> float:
        return float(np.sum(self.arrival_nats)) / self.slots_per_frame

    def replace(self, **overrides) -> "SystemConfig":
        """Re-validate with some raw fields overridden."""
        raw = self.to_raw()
        raw.update(overrides)
        return validate_config(raw)

    def to_raw(self) -> dict:
        """Round-trip back to a plain configuration document."""
        raw = {
            "num_scbs": self.num_scbs,
            "ues_per_scbs": list(self.ues_per_scbs),
            "num_tx_antennas": self.num_tx_antennas,
            "slots_per_frame": self.slots_per_frame,
            "num_frames": self.num_frames,
            "slot_duration_s": self.slot_duration_s,
            "pa_efficiency": self.pa_efficiency,
            "p_max_mw": self.p_max_mw,
            "p_sp_mw": self.p_sp_mw,
            "noise_mw": self.noise_mw.tolist(),
            "pathloss_exponent": self.pathloss_exponent,
            "distance_matrix_m": self.distance_matrix_m.tolist(),
            "arrival_nats": self.arrival_nats.tolist(),
            "service_nats": self.service_nats.tolist(),
            "rate_weights": (self.rate_weights if isinstance(self.rate_weights, str)
                             else self.rate_weights.tolist()),
            "control_v": self.control_v,
            "price_buy": self.price_buy,
            "price_sell": self.price_sell,
            "harvester_area_m2": self.harvester_area_m2,
            "harvester_efficiency": self.harvester_efficiency,
            "rng_seed": self.rng_seed,
            "r_max_cap": self.r_max_cap,
            "phi_grid_points": self.phi_grid_points,
            "phi_refine_points": self.phi_refine_points,
            "phi_refine_rounds": self.phi_refine_rounds,
        }
        return raw


@dataclass(frozen=True)
class DriftConstants:
    """Per-UE quadratic drift constants and their network total."""

    c_access: np.ndarray  # (U,)
    c_proc: np.ndarray    # (U,)
    psi_total: float = field(default=0.0)


def circuit_power(p_sp_mw: float, n_t: int) -> float:
    """Baseband + RF-chain circuit power of one active ScBS, in mW."""
    if p_sp_mw <= 0:
        raise NonPositiveError("p_sp_mw must be > 0")
    if n_t < 1:
        raise NonPositiveError("n_t must be >= 1")
    return p_sp_mw * (0.87 + 0.1 * n_t + 0.03 * n_t * n_t)


def default_rate_cap(cfg_like: dict, distances: np.ndarray, noise: np.ndarray) -> float:
    """Diagnostic ceiling on the per-slot rate (nats).

    Uses the strongest link gain scaled by a 99.9th-percentile factor of the
    per-component fading power; used only in drift diagnostics, never to clip
    simulated rates.
    """
    chi = float(cfg_like["pathloss_exponent"])
    p_max = float(cfg_like["p_max_mw"])
    n_t = int(cfg_like["num_tx_antennas"])
    fade_factor = chi2.ppf(0.999, 2) / 2.0
    max_gain = float(np.max(distances ** (-chi))) * fade_factor
    snr = p_max * n_t * max_gain / float(np.min(noise))
    return math.log(1.0 + snr)


def _as_per_ue(value, num_ues: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(num_ues, float(arr))
    if arr.shape != (num_ues,):
        raise DimensionError(f"{name} must be a scalar or a list of {num_ues} values")
    return arr


def validate_config(raw: dict) -> SystemConfig:
    """Check a configuration document and fill defaults.

    Unknown keys are rejected outright to prevent silent typos.
    """
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    known = set(_DEFAULTS) | set(_REQUIRED) | {"control_v"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing required configuration keys: {missing}")

    doc = dict(_DEFAULTS)
    doc.update(raw)

    m = int(doc["num_scbs"])
    if m < 1:
        raise NonPositiveError("num_scbs must be >= 1")
    ues_per = tuple(int(x) for x in np.atleast_1d(doc["ues_per_scbs"]))
    if len(ues_per) != m:
        raise DimensionError(f"ues_per_scbs must list {m} cell sizes")
    if any(n < 1 for n in ues_per):
        raise NonPositiveError("every cell must serve at least one UE")
    num_ues = sum(ues_per)

    n_t = int(doc["num_tx_antennas"])
    t = int(doc["slots_per_frame"])
    k = int(doc["num_frames"])
    if n_t < 1 or t < 1 or k < 1:
        raise NonPositiveError("num_tx_antennas, slots_per_frame and num_frames must be >= 1")

    for key in ("slot_duration_s", "pa_efficiency", "p_max_mw", "p_sp_mw",
                "pathloss_exponent", "control_v", "harvester_area_m2",
                "harvester_efficiency"):
        if float(doc[key]) <= 0:
            raise NonPositiveError(f"{key} must be > 0")
    if float(doc["pa_efficiency"]) > 1.0:
        raise ConfigError("pa_efficiency must lie in (0, 1]")

    price_buy = float(doc["price_buy"])
    price_sell = float(doc["price_sell"])
    if price_sell <= 0 or price_buy <= 0:
        raise NonPositiveError("prices must be > 0")
    if price_buy <= price_sell:
        raise PriceOrderError(
            f"price_buy ({price_buy}) must exceed price_sell ({price_sell})")

    distances = np.asarray(doc["distance_matrix_m"], dtype=float)
    if distances.shape != (m, num_ues):
        raise DimensionError(
            f"distance_matrix_m must have shape ({m}, {num_ues}), got {distances.shape}")
    if np.any(distances <= 0) or not np.all(np.isfinite(distances)):
        raise NonPositiveError("all distances must be finite and > 0")

    noise = _as_per_ue(doc["noise_mw"], num_ues, "noise_mw")
    if np.any(noise <= 0):
        raise NonPositiveError("noise_mw must be > 0")
    arrivals = _as_per_ue(doc["arrival_nats"], num_ues, "arrival_nats")
    if np.any(arrivals < 0):
        raise ConfigError("arrival_nats must be >= 0")
    service = _as_per_ue(doc["service_nats"], num_ues, "service_nats")
    if np.any(service <= 0):
        raise NonPositiveError("service_nats must be > 0")

    weights = doc["rate_weights"]
    if isinstance(weights, str):
        if weights != DYNAMIC_WEIGHTS:
            raise ConfigError(f"rate_weights mode must be '{DYNAMIC_WEIGHTS}'")
    else:
        weights = _as_per_ue(weights, num_ues, "rate_weights")
        if np.any(weights <= 0):
            raise NonPositiveError("rate_weights must be > 0")

    r_max = doc["r_max_cap"]
    if r_max is None:
        r_max = default_rate_cap(doc, distances, noise)
    r_max = float(r_max)
    if r_max <= 0:
        raise NonPositiveError("r_max_cap must be > 0")

    grid = int(doc["phi_grid_points"])
    refine = int(doc["phi_refine_points"])
    rounds = int(doc["phi_refine_rounds"])
    if grid < 2 or refine < 0 or rounds < 0:
        raise ConfigError("phi_grid_points must be >= 2; refinement knobs >= 0")

    return SystemConfig(
        num_scbs=m,
        ues_per_scbs=ues_per,
        num_tx_antennas=n_t,
        slots_per_frame=t,
        num_frames=k,
        slot_duration_s=float(doc["slot_duration_s"]),
        pa_efficiency=float(doc["pa_efficiency"]),
        p_max_mw=float(doc["p_max_mw"]),
        p_sp_mw=float(doc["p_sp_mw"]),
        noise_mw=noise,
        pathloss_exponent=float(doc["pathloss_exponent"]),
        distance_matrix_m=distances,
        arrival_nats=arrivals,
        service_nats=service,
        rate_weights=weights,
        control_v=float(doc["control_v"]),
        price_buy=price_buy,
        price_sell=price_sell,
        harvester_area_m2=float(doc["harvester_area_m2"]),
        harvester_efficiency=float(doc["harvester_efficiency"]),
        rng_seed=int(doc["rng_seed"]),
        r_max_cap=r_max,
        phi_grid_points=grid,
        phi_refine_points=refine,
        phi_refine_rounds=rounds,
    )


def load_config(path: str, overrides: dict | None = None) -> SystemConfig:
    """Read a JSON configuration file, apply overrides, validate."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file does not parse as JSON: {exc}") from exc
    if overrides:
        raw.update(overrides)
    return validate_config(raw)


def access_drift_constant(arrival, t: int, r_max: float):
    """Bound on the one-frame squared drift of an access queue."""
    return (np.asarray(arrival, dtype=float) ** 2 + t * t * r_max * r_max) / 2.0


def proc_drift_constant(service, t: int, r_max: float):
    """Bound on the one-frame squared drift of a processing queue."""
    return t * t * (np.asarray(service, dtype=float) ** 2 + r_max * r_max) / 2.0


def drift_constants(cfg: SystemConfig) -> DriftConstants:
    """Quadratic drift constants for the two queue families.

    The access constant covers one frame of arrivals against at most T slots
    at the diagnostic rate cap; the processing constant covers T slots of
    service against T slots of the cap.
    """
    t = cfg.slots_per_frame
    c_access = access_drift_constant(cfg.arrival_nats, t, cfg.r_max_cap)
    c_proc = proc_drift_constant(cfg.service_nats, t, cfg.r_max_cap)
    return DriftConstants(
        c_access=c_access,
        c_proc=c_proc,
        psi_total=float(np.sum(c_access) + np.sum(c_proc)),
    )
