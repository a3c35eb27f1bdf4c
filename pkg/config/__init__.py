"""Configuration package for the ODE-DBN toolkit."""

from .filter_config import FilterConfig, NoiseConfig
from .run_config import RunConfig, load_run_config

__all__ = ['FilterConfig', 'NoiseConfig', 'RunConfig', 'load_run_config']
