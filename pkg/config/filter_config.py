"""
Filter Configuration Module

Run-time knobs of the particle filter and the noise levels of the compiled
DBN.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

from core.errors import ConfigError


def _check_non_negative(name: str, values: Dict[str, float]) -> None:
    for key, value in values.items():
        if not (value >= 0 and math.isfinite(value)):
            raise ConfigError(f"{name}[{key!r}] must be finite and >= 0, got {value}")


@dataclass
class NoiseConfig:
    """
    Noise levels of the two-slice DBN.

    Attributes:
        walk_fraction: Per-step random-walk sd of each parameter as a fraction
            of its prior sd
        walk_sd: Per-parameter walk sd overriding walk_fraction
        process_noise_sd: Per-variable additive transition noise sd (default 0)
        observation_sd: Per-variable observation noise sd overriding the
            model's ``obs`` declarations
    """
    walk_fraction: float = 0.02
    walk_sd: Dict[str, float] = field(default_factory=dict)
    process_noise_sd: Dict[str, float] = field(default_factory=dict)
    observation_sd: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        """Validate noise levels."""
        if not (self.walk_fraction >= 0 and math.isfinite(self.walk_fraction)):
            raise ConfigError(f"walk_fraction must be finite and >= 0, got {self.walk_fraction}")
        _check_non_negative("walk_sd", self.walk_sd)
        _check_non_negative("process_noise_sd", self.process_noise_sd)
        for key, value in self.observation_sd.items():
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"observation_sd[{key!r}] must be positive, got {value}")

    @classmethod
    def deterministic(cls) -> "NoiseConfig":
        """No parameter walk and no process noise."""
        return cls(walk_fraction=0.0)


@dataclass
class FilterConfig:
    """
    Configuration of the bootstrap particle filter.

    Attributes:
        n_particles: Ensemble size (>= 2)
        resample_threshold: Resample when ESS < threshold * n_particles
        seed: 64-bit unsigned seed of all random streams
        init_state_sd: Per-variable sd of the initial state spread (default 0)
        n_threads: Worker threads for particle propagation; results do not
            depend on it
        point_params: Start every particle at these parameter values instead
            of sampling the priors
    """
    n_particles: int = 5000
    resample_threshold: float = 0.5
    seed: int = 0
    init_state_sd: Dict[str, float] = field(default_factory=dict)
    n_threads: int = 1
    point_params: Optional[Dict[str, float]] = None

    def __post_init__(self):
        """Validate configuration parameters."""
        if int(self.n_particles) != self.n_particles or self.n_particles < 2:
            raise ConfigError(f"n_particles must be an integer >= 2, got {self.n_particles}")
        if not 0 < self.resample_threshold <= 1:
            raise ConfigError(f"resample_threshold must be in (0, 1], got {self.resample_threshold}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.n_threads) != self.n_threads or self.n_threads < 1:
            raise ConfigError(f"n_threads must be a positive integer, got {self.n_threads}")
        _check_non_negative("init_state_sd", self.init_state_sd)
        self.n_particles = int(self.n_particles)
        self.seed = int(self.seed)
        self.n_threads = int(self.n_threads)
