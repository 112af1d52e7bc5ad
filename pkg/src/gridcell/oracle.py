"""Brute-force single-cell scalar oracle.

For a network with one ScBS, one UE and one transmit antenna, the inner
minimum-power problem has the closed form p = (exp(psi*phi) - 1) * sigma^2
/ |h|^2, so the whole slot decision reduces to a dense scalar grid search.
The oracle re-runs the full horizon with its own queue arithmetic and
compares every slot decision against the production path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import sample_channels
from .config import DYNAMIC_WEIGHTS, SystemConfig
from .energy import NreTrace, harvest_power, interpolate_trace
from .errors import ConfigError
from .simulator import run

ORACLE_GRID_POINTS = 10_001


@dataclass(frozen=True)
class OracleReport:
    max_phi_deviation: float
    max_objective_deviation: float   # relative
    max_power_deviation: float       # relative, transmit power
    slots_checked: int

    @property
    def max_deviation(self) -> float:
        return max(self.max_phi_deviation, self.max_objective_deviation,
                   self.max_power_deviation)


def _closed_form_power(gamma: float, noise_mw: float, gain: float) -> float:
    return gamma * noise_mw / gain


def check_single_cell_oracle(
    cfg: SystemConfig,
    trace: NreTrace,
    num_frames: int = 10,
    grid_points: int = ORACLE_GRID_POINTS,
) -> OracleReport:
    """Compare production slot decisions with an independent grid search."""
    if cfg.num_scbs != 1 or cfg.num_ues != 1 or cfg.num_tx_antennas != 1:
        raise ConfigError("the scalar oracle needs exactly one single-antenna "
                          "ScBS serving one UE")
    cfg = cfg.replace(num_frames=num_frames)
    result = run(cfg, trace)

    t_frame = cfg.slots_per_frame
    sigma = float(cfg.noise_mw[0])
    lam = float(cfg.arrival_nats[0])
    s_bar = float(cfg.service_nats[0])
    dynamic = isinstance(cfg.rate_weights, str) and cfg.rate_weights == DYNAMIC_WEIGHTS
    circuit = cfg.circuit_power_mw
    v = cfg.control_v
    a_b, a_s = cfg.price_buy, cfg.price_sell

    irr = interpolate_trace(trace, cfg.slot_duration_s, num_frames * t_frame)

    qa, qu = 0.0, 0.0
    max_phi_dev = 0.0
    max_obj_dev = 0.0
    max_pow_dev = 0.0
    slots = 0

    for k in range(num_frames):
        scheduled = (qa - qu > 0) and (qa > 0)
        qa_frame, qu_frame = qa, qu
        e_rate = harvest_power(
            float(irr[k * t_frame]), cfg.harvester_area_m2, cfg.harvester_efficiency)
        for t in range(k * t_frame, (k + 1) * t_frame):
            gain = float(np.abs(sample_channels(cfg, t).h[0, 0, 0]) ** 2)

            if not scheduled:
                phi_star, p_star = 0.0, 0.0
                obj_star = _objective(0.0, 0.0, e_rate, 0.0, False, cfg)
            else:
                psi = 1.0 if dynamic else float(cfg.rate_weights[0])
                coeff = (qu_frame - qa_frame) * psi
                phi_ub = qa / psi if psi > 0 else 0.0
                phis = np.linspace(0.0, phi_ub, grid_points)
                gammas = np.expm1(psi * phis)
                powers = _closed_form_power(gammas, sigma, gain)
                feasible = powers <= cfg.p_max_mw
                p_sc = powers / cfg.pa_efficiency + circuit
                exchange = p_sc - e_rate
                objs = (v * (a_b - a_s) * np.maximum(exchange, 0.0)
                        + v * a_s * exchange + coeff * phis)
                objs = np.where(feasible, objs, np.inf)
                best = int(np.argmin(objs))
                phi_star = float(phis[best])
                p_star = float(powers[best])
                obj_star = float(objs[best])

            sol = result.slot_solutions[t]
            sim_power = float(np.sum(np.abs(sol.beams) ** 2))
            max_phi_dev = max(max_phi_dev, abs(sol.phi - phi_star))
            max_obj_dev = max(
                max_obj_dev, abs(sol.objective - obj_star) / (1.0 + abs(obj_star)))
            max_pow_dev = max(
                max_pow_dev, abs(sim_power - p_star) / (1.0 + abs(p_star)))
            slots += 1

            # independent queue arithmetic, mirroring serve-transfer-arrive
            psi_eff = (1.0 if dynamic else float(cfg.rate_weights[0])) if scheduled else 0.0
            r = psi_eff * phi_star
            served = min(s_bar, qu)
            qu = qu - served + r
            nu = lam if t == k * t_frame else 0.0
            qa = max(qa - r, 0.0) + nu

    return OracleReport(
        max_phi_deviation=max_phi_dev,
        max_objective_deviation=max_obj_dev,
        max_power_deviation=max_pow_dev,
        slots_checked=slots,
    )


def _objective(p_sc_total, phi, e_rate, coeff, any_active, cfg) -> float:
    exchange = p_sc_total - e_rate
    return (cfg.control_v * (cfg.price_buy - cfg.price_sell) * max(exchange, 0.0)
            + cfg.control_v * cfg.price_sell * exchange + coeff * phi)


def closed_form_min_power(gamma: float, noise_mw: float, channel_gain: float) -> float:
    """Exposed for tests: the single-UE single-antenna optimum."""
    return _closed_form_power(gamma, noise_mw, channel_gain)


def closed_form_feasible(gamma: float, noise_mw: float, channel_gain: float,
                         p_max_mw: float) -> bool:
    return _closed_form_power(gamma, noise_mw, channel_gain) <= p_max_mw


def max_feasible_phi(psi: float, noise_mw: float, channel_gain: float,
                     p_max_mw: float) -> float:
    """Largest phi the power budget admits in the scalar case."""
    return math.log1p(p_max_mw * channel_gain / noise_mw) / psi
