"""Independent scalar oracle against the production slot decisions."""

import math

import numpy as np
import pytest

from gridcell.errors import ConfigError
from gridcell.oracle import (
    check_single_cell_oracle,
    closed_form_feasible,
    closed_form_min_power,
    max_feasible_phi,
)


def test_closed_form_helpers():
    assert closed_form_min_power(3.0, 1e-9, 2e-8) == pytest.approx(0.15)
    assert closed_form_feasible(3.0, 1e-9, 2e-8, 0.2)
    assert not closed_form_feasible(3.0, 1e-9, 2e-8, 0.1)
    phi = max_feasible_phi(2.0, 1e-9, 2e-8, 0.2)
    assert math.expm1(2.0 * phi) * 1e-9 / 2e-8 == pytest.approx(0.2)


def test_oracle_matches_production(tiny_cfg, trace):
    report = check_single_cell_oracle(tiny_cfg, trace, num_frames=10)
    assert report.slots_checked == 10 * tiny_cfg.slots_per_frame
    assert report.max_deviation <= 1e-6


def test_oracle_rejects_multicell(default_cfg, trace):
    with pytest.raises(ConfigError):
        check_single_cell_oracle(default_cfg, trace)
