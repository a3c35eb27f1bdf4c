"""Shared fixtures for the test suite."""

import json
from pathlib import Path

import pytest

from core.model_spec import load_model, parse_model

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"

DECAY_SOURCE = """\
model decay
var X = 1.0
param a ~ N(0.5, 0.1) in (0, inf)
eq dX/dt = -a*X
obs X noise 0.3
"""

LV_TRUTH = {"a": 2.0, "b": 1.0, "c": 4.0, "d": 1.0}
STC_TRUTH = {"k1": 0.07, "k2": 0.6, "k3": 0.05, "k4": 0.3, "V": 0.017, "Km": 0.3}


@pytest.fixture
def models_dir():
    return MODELS_DIR


@pytest.fixture
def decay_model():
    return parse_model(DECAY_SOURCE)


@pytest.fixture
def lotka_model():
    return load_model(MODELS_DIR / "lotka.ode")


@pytest.fixture
def stc_model():
    return load_model(MODELS_DIR / "stc.ode")


@pytest.fixture
def pif_model():
    return load_model(MODELS_DIR / "pif45.ode")


@pytest.fixture
def write_config(tmp_path):
    """Write a run configuration JSON next to copies of the shipped models."""

    def _write(data, name="run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def small_lv_config(write_config, tmp_path):
    """A fast Lotka-Volterra run: 300 particles on [0, 1]."""
    data = {
        "model_path": str(MODELS_DIR / "lotka.ode"),
        "grid": {"t_start": 0.0, "t_end": 1.0, "dt": 0.01},
        "filter": {"n_particles": 300, "seed": 7},
        "truth": {"source": "generate_rk4", "refine": 10},
        "evidence": {
            "source": "sample",
            "schedule": {"kind": "uniform_random", "variables": ["X"], "n": 5, "seed": 3},
        },
        "true_params": LV_TRUTH,
        "output_dir": str(tmp_path / "out"),
    }
    return write_config(data)
