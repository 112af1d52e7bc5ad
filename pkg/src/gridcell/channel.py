"""Per-slot Rayleigh-faded channel vectors with distance-based pathloss.

Each (transmitter j, UE u) link gets an i.i.d. circularly symmetric complex
Gaussian vector whose per-component variance is d_{j,u}^{-chi}.  Draws are
keyed by (seed, slot, j, u) through a counter-based generator, so any slot of
any run can be regenerated independently and sweeps stay reproducible without
shared RNG state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig

# second key word fixed so distinct seeds can never alias onto each other
_KEY_SALT = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class ChannelRealization:
    """Channel vectors for one slot: ``h[j, u]`` is the length-N_T vector
    from ScBS j to UE u (serving and cross-cell links alike)."""

    h: np.ndarray  # complex, (M, U, N_T)
    slot_index: int


def _link_rng(seed: int, slot_index: int, j: int, u: int) -> np.random.Generator:
    bitgen = np.random.Philox(
        key=np.array([seed & 0xFFFFFFFFFFFFFFFF, _KEY_SALT], dtype=np.uint64),
        counter=np.array([slot_index, j, u, 0], dtype=np.uint64),
    )
    return np.random.Generator(bitgen)


def sample_channels(cfg: SystemConfig, slot_index: int) -> ChannelRealization:
    """Draw the full (M, U, N_T) channel tensor for one slot."""
    m, u_tot, n_t = cfg.num_scbs, cfg.num_ues, cfg.num_tx_antennas
    gains = cfg.distance_matrix_m ** (-cfg.pathloss_exponent)
    h = np.empty((m, u_tot, n_t), dtype=complex)
    for j in range(m):
        for u in range(u_tot):
            rng = _link_rng(cfg.rng_seed, slot_index, j, u)
            std = np.sqrt(gains[j, u] / 2.0)
            re = rng.normal(0.0, std, size=n_t)
            im = rng.normal(0.0, std, size=n_t)
            h[j, u] = re + 1j * im
    if not np.all(np.isfinite(h.view(float))):
        raise FloatingPointError("non-finite channel realization")
    return ChannelRealization(h=h, slot_index=slot_index)
