"""
Commands Module

Implementations of the ``validate``, ``simulate``, ``filter`` and ``plot``
subcommands. Each prints a short sectioned report and returns the written
artifacts; error translation into exit codes happens in main.py.
"""

import logging
from pathlib import Path
from typing import Optional, Union

from config.run_config import RunConfig, describe_run_config, load_run_config
from .dbn import compile_dbn, describe_dbn
from .evidence import EvidenceStream, load_evidence
from .filter import load_result_frame
from .integrate import Trajectory, load_trajectory, save_trajectory
from .model_spec import ModelSpec, load_model
from .pipeline import BenchmarkPipeline
from .plotting import plot_variable

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def print_section(title: str):
    """Print a formatted section header."""
    print("\n" + "=" * 70)
    print(title.center(70))
    print("=" * 70)


def _print_rows(rows):
    for key, value in rows:
        print(f"  {key + ':':<18}{value}")


def _load_config(config_path: Union[str, Path], seed: Optional[int],
                 n_threads: Optional[int]) -> RunConfig:
    cfg = load_run_config(config_path)
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if n_threads is not None:
        changes["n_threads"] = n_threads
    if changes:
        cfg = cfg.with_filter(**changes)
    return cfg


def cmd_validate(model_path: Union[str, Path], dt: float = 0.01) -> ModelSpec:
    """
    Parse and validate a model, then print its compiled DBN.

    Raises:
        ModelSyntaxError: On grammar errors (line and column reported)
        ModelValidationError: On declaration errors such as unknown symbols
    """
    m = load_model(model_path)
    tpl = compile_dbn(m, dt)

    print_section(f"MODEL {m.name}")
    _print_rows([
        ("Variables", ", ".join(m.variable_names)),
        ("Parameters", ", ".join(m.parameter_names) or "(none)"),
        ("Inputs", ", ".join(m.input_names) or "(none)"),
        ("Observed", ", ".join(m.observed_variables) or "(none)"),
    ])
    print()
    print(describe_dbn(tpl))
    print("\n[OK] model is valid")
    return m


def cmd_simulate(config_path: Union[str, Path], output: Optional[Union[str, Path]] = None) -> Path:
    """
    Integrate the benchmark truth and write it as CSV.

    The truth is integrated with RK4 at dt / refine from the true parameters
    and read off at the filter grid.

    Returns:
        Path of the trajectory CSV (``<output_dir>/truth.csv`` by default)
    """
    cfg = load_run_config(config_path)
    pipeline = BenchmarkPipeline(cfg)
    print_section("SIMULATE")
    _print_rows(describe_run_config(cfg))

    truth = pipeline.simulate_truth()
    path = Path(output) if output else Path(cfg.output_dir) / "truth.csv"
    save_trajectory(truth, path)
    print(f"\n  Wrote {len(truth.times)} rows to {path}")
    return path


def cmd_filter(config_path: Union[str, Path], seed: Optional[int] = None,
               n_threads: Optional[int] = None) -> Path:
    """
    Run the particle filter of a configuration and write all outputs.

    Args:
        config_path: JSON run configuration
        seed: Overrides the configured filter seed
        n_threads: Overrides the configured thread count

    Returns:
        The output directory
    """
    cfg = _load_config(config_path, seed, n_threads)
    pipeline = BenchmarkPipeline(cfg)
    print_section("FILTER")
    _print_rows(describe_run_config(cfg))

    pipeline.run()
    out_dir = pipeline.save_results()

    print_section("RESULTS")
    for report in pipeline.metrics:
        print(f"  {report.variable:<12} RMSE {report.rmse:>12.6g}   MAE {report.mae:>12.6g}")
    print(f"\n  Outputs written to {out_dir}")
    return out_dir


def cmd_plot(result_path: Union[str, Path], truth_path: Optional[Union[str, Path]],
             variable: str, out: Union[str, Path],
             evidence_path: Optional[Union[str, Path]] = None,
             true_value: Optional[float] = None) -> Path:
    """
    Plot one variable or parameter of a filter result as SVG.

    Raises:
        ValidationError: If the result holds no columns for ``variable``
        DataFormatError: If an input file doesn't parse
    """
    frame = load_result_frame(result_path)
    truth: Optional[Trajectory] = load_trajectory(truth_path) if truth_path else None
    evidence: Optional[EvidenceStream] = load_evidence(evidence_path) if evidence_path else None

    if truth is not None and variable not in truth.variable_names and true_value is None:
        logger.warning("%s is not in the truth file; plotting without a benchmark line", variable)

    path = plot_variable(frame, variable, out, truth=truth, evidence=evidence, true_value=true_value)
    print(f"Saved plot of {variable} to {path}")
    return path
