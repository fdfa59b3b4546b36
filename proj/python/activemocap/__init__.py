"""Active viewpoint selection for simulated 3D human motion capture."""

from ._core import *  # noqa: F401,F403
from ._core import ExperimentConfig, run_experiment


def config(**overrides):
    """ExperimentConfig with keys overridden from keyword arguments."""
    cfg = ExperimentConfig()
    for key, value in overrides.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        cfg.set(key, str(value))
    cfg.validate()
    return cfg


def run(**overrides):
    """Runs one experiment configured by keyword arguments."""
    return run_experiment(config(**overrides))
