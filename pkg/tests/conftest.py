"""Shared fixtures: configs, the bundled irradiance trace, live reporting."""

import os

import pytest

from gridcell.config import load_config
from gridcell.energy import load_nre_trace

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEFAULT_CONFIG = os.path.join(ROOT, "configs", "default.json")
TINY_CONFIG = os.path.join(ROOT, "configs", "tiny.json")
TRACE_PATH = os.path.join(ROOT, "data", "solar_trace.csv")


@pytest.fixture(scope="session")
def default_cfg():
    return load_config(DEFAULT_CONFIG)


@pytest.fixture(scope="session")
def tiny_cfg():
    return load_config(TINY_CONFIG)


@pytest.fixture(scope="session")
def trace():
    return load_nre_trace(TRACE_PATH)


@pytest.fixture(scope="session")
def report(pytestconfig):
    """Print a line to the live terminal even under output capture."""
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")

    def _report(line: str) -> None:
        if capman is not None:
            with capman.global_and_fixture_disabled():
                print(line, flush=True)
        else:
            print(line, flush=True)

    return _report
