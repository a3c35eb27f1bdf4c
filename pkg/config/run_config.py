"""
Run Configuration Module

JSON run configurations: which model to filter, on what grid, against which
truth and evidence, and where to write the results.
"""

import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from core.errors import ConfigError
from .filter_config import FilterConfig, NoiseConfig

TRUTH_SOURCES = ("generate_rk4", "file")
EVIDENCE_SOURCES = ("sample", "file")
METRIC_TIMES = ("grid", "evidence")


@dataclass
class GridConfig:
    """
    Filter grid.

    Attributes:
        t_start: First grid time
        t_end: End of the interval
        dt: Euler step of the DBN
    """
    t_start: float = 0.0
    t_end: float = 1.0
    dt: float = 0.01

    def __post_init__(self):
        """Validate the interval."""
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"grid.dt must be positive, got {self.dt}")
        if not self.t_start < self.t_end:
            raise ConfigError(f"grid needs t_start < t_end, got [{self.t_start}, {self.t_end}]")


@dataclass
class TruthConfig:
    """
    Benchmark truth source.

    Attributes:
        source: 'generate_rk4' (RK4 at dt / refine from true_params) or 'file'
        path: Trajectory CSV for source 'file'
        refine: RK4 step divisor relative to the filter dt
    """
    source: str = "generate_rk4"
    path: Optional[str] = None
    refine: int = 10

    def __post_init__(self):
        """Validate the source."""
        if self.source not in TRUTH_SOURCES:
            raise ConfigError(f"truth.source must be one of {TRUTH_SOURCES}, got {self.source!r}")
        if self.source == "file" and not self.path:
            raise ConfigError("truth.source 'file' needs truth.path")
        if int(self.refine) != self.refine or self.refine < 1:
            raise ConfigError(f"truth.refine must be a positive integer, got {self.refine}")


@dataclass
class ScheduleConfig:
    """Evidence sampling schedule (see core.evidence.SamplingSchedule)."""
    kind: str = "uniform_random"
    variables: List[str] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    n: int = 0
    ratio: float = 2.0
    seed: int = 0


@dataclass
class EvidenceConfig:
    """
    Evidence source.

    Attributes:
        source: 'sample' (read off the truth) or 'file'
        path: Evidence CSV for source 'file'
        schedule: Sampling schedule for source 'sample'
        noise_sd: Sd of noise added to sampled evidence
    """
    source: str = "sample"
    path: Optional[str] = None
    schedule: Optional[ScheduleConfig] = None
    noise_sd: float = 0.0

    def __post_init__(self):
        """Validate the source."""
        if self.source not in EVIDENCE_SOURCES:
            raise ConfigError(
                f"evidence.source must be one of {EVIDENCE_SOURCES}, got {self.source!r}"
            )
        if self.source == "file" and not self.path:
            raise ConfigError("evidence.source 'file' needs evidence.path")
        if self.source == "sample" and self.schedule is None:
            raise ConfigError("evidence.source 'sample' needs evidence.schedule")
        if not (self.noise_sd >= 0 and math.isfinite(self.noise_sd)):
            raise ConfigError(f"evidence.noise_sd must be finite and >= 0, got {self.noise_sd}")


@dataclass
class RunConfig:
    """
    Complete recipe of one benchmark run.

    Paths are absolute once loaded through load_run_config.

    Attributes:
        model_path: Model source file
        grid: Filter grid
        filter: Particle filter settings
        noise: DBN noise settings
        truth: Benchmark truth source
        evidence: Evidence source
        true_params: Parameter values generating the truth
        inputs_path: Exogenous input CSV (models with inputs)
        center_priors_at_truth: Recentre every prior on true_params
        metric_times: Evaluate metrics on the whole 'grid' or at 'evidence' times
        obs_noise_fraction: Observation noise sd as a fraction of each observed
            variable's truth range; None keeps the model's declarations
        output_dir: Directory receiving the run outputs
    """
    model_path: str
    grid: GridConfig
    filter: FilterConfig = field(default_factory=FilterConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    truth: TruthConfig = field(default_factory=TruthConfig)
    evidence: Optional[EvidenceConfig] = None
    true_params: Dict[str, float] = field(default_factory=dict)
    inputs_path: Optional[str] = None
    center_priors_at_truth: bool = False
    metric_times: str = "grid"
    obs_noise_fraction: Optional[float] = 0.02
    output_dir: str = "outputs"

    def __post_init__(self):
        """Validate cross-section constraints."""
        if self.metric_times not in METRIC_TIMES:
            raise ConfigError(f"metric_times must be one of {METRIC_TIMES}, got {self.metric_times!r}")
        if self.center_priors_at_truth and not self.true_params:
            raise ConfigError("center_priors_at_truth needs true_params")
        if self.obs_noise_fraction is not None and not (
            self.obs_noise_fraction > 0 and math.isfinite(self.obs_noise_fraction)
        ):
            raise ConfigError(f"obs_noise_fraction must be positive, got {self.obs_noise_fraction}")

    def with_seed(self, seed: int) -> "RunConfig":
        """Copy of this configuration with another filter seed."""
        return self.with_filter(seed=seed)

    def with_filter(self, **changes) -> "RunConfig":
        """Copy with some FilterConfig fields replaced."""
        values = {f.name: getattr(self.filter, f.name) for f in fields(self.filter)}
        values.update(changes)
        return self._with(filter=FilterConfig(**values))

    def centered_at_truth(self) -> "RunConfig":
        """Copy whose priors are recentred on true_params."""
        return self._with(center_priors_at_truth=True)

    def _with(self, **changes) -> "RunConfig":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return RunConfig(**data)


def _build(cls, data: Any, where: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f"{where} must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(f"{where}: {e}") from e


def _resolve(base: Path, path: Optional[str]) -> Optional[str]:
    if path is None:
        return None
    p = Path(path)
    return str(p if p.is_absolute() else (base / p).resolve())


def parse_run_config(data: Mapping[str, Any], base_dir: Union[str, Path] = ".") -> RunConfig:
    """
    Build a RunConfig from parsed JSON.

    Args:
        data: JSON object
        base_dir: Directory that relative paths are resolved against

    Raises:
        ConfigError: On unknown keys at any level, missing required keys or
            invalid values
    """
    base = Path(base_dir)
    top = _build_top_level(data)

    evidence = None
    if top.get("evidence") is not None:
        ev = dict(top["evidence"]) if isinstance(top["evidence"], Mapping) else top["evidence"]
        if isinstance(ev, dict) and ev.get("schedule") is not None:
            ev["schedule"] = _build(ScheduleConfig, ev["schedule"], "evidence.schedule")
        evidence = _build(EvidenceConfig, ev, "evidence")
        evidence.path = _resolve(base, evidence.path)

    truth = _build(TruthConfig, top.get("truth", {}), "truth")
    truth.path = _resolve(base, truth.path)

    return RunConfig(
        model_path=_resolve(base, top["model_path"]),
        grid=_build(GridConfig, top["grid"], "grid"),
        filter=_build(FilterConfig, top.get("filter", {}), "filter"),
        noise=_build(NoiseConfig, top.get("noise", {}), "noise"),
        truth=truth,
        evidence=evidence,
        true_params={k: float(v) for k, v in top.get("true_params", {}).items()},
        inputs_path=_resolve(base, top.get("inputs_path")),
        center_priors_at_truth=bool(top.get("center_priors_at_truth", False)),
        metric_times=top.get("metric_times", "grid"),
        obs_noise_fraction=top.get("obs_noise_fraction", 0.02),
        output_dir=_resolve(base, top.get("output_dir", "outputs")),
    )


def _build_top_level(data: Any) -> Dict[str, Any]:
    if not isinstance(data, Mapping):
        raise ConfigError("run configuration must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in run configuration: {', '.join(unknown)}")
    for key in ("model_path", "grid"):
        if key not in data:
            raise ConfigError(f"run configuration is missing {key!r}")
    return dict(data)


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """
    Load a JSON run configuration.

    Relative paths inside the file are resolved against its directory.

    Args:
        path: Path to the JSON file

    Returns:
        Validated RunConfig

    Raises:
        FileNotFoundError: If the file doesn't exist
        ConfigError: On malformed JSON, unknown keys or invalid values
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Run configuration not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    return parse_run_config(data, path.parent)


def describe_run_config(cfg: RunConfig) -> List[Tuple[str, str]]:
    """Key/value lines for console reports."""
    rows = [
        ("Model", cfg.model_path),
        ("Grid", f"[{cfg.grid.t_start:g}, {cfg.grid.t_end:g}] dt={cfg.grid.dt:g}"),
        ("Particles", str(cfg.filter.n_particles)),
        ("Seed", str(cfg.filter.seed)),
        ("Truth", cfg.truth.source),
    ]
    if cfg.evidence is not None:
        rows.append(("Evidence", cfg.evidence.source))
    rows.append(("Output", cfg.output_dir))
    return rows
