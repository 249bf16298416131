"""Shared fixtures for the simulator test suite"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Modules live at the repository root
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from initial_conditions import make_initial  # noqa: E402


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ('PESKIN_N', 'PESKIN_DT', 'PESKIN_OUTPUT_DIR', 'PESKIN_LOG_LEVEL'):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def unit_circle():
    return make_initial('circle', {'A': 1.0}, 128)


@pytest.fixture
def demo():
    return make_initial('demo', {}, 128)


@pytest.fixture
def rel_error():
    def _rel_error(x, xref):
        ref_norm = np.max(np.abs(xref))
        if ref_norm < 1.0e-14:
            ref_norm = 1.0
        return float(np.max(np.abs(np.asarray(x) - np.asarray(xref))) / ref_norm)
    return _rel_error
