"""
Pipeline Module

Orchestrates one benchmark run end to end:
- Load the model and its exogenous inputs
- Generate or load the benchmark truth
- Sample or load the evidence
- Compile the DBN and run the particle filter
- Score the posterior mean and write the reports
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from config.filter_config import NoiseConfig
from config.run_config import RunConfig
from .dbn import DbnTemplate, compile_dbn
from .errors import ConfigError, ValidationError
from .evidence import (EvidenceStream, SamplingSchedule, load_evidence,
                       sample_evidence, save_evidence)
from .filter import FilterResult, run_filter, save_result
from .inputs import InputTable
from .integrate import (GridSpec, Trajectory, integrate, load_trajectory,
                        resample_trajectory, save_trajectory)
from .metrics import MetricReport, compute_all_metrics, save_metrics
from .model_spec import ModelSpec, load_model
from .reporting import RunReport

logger = logging.getLogger(__name__)


class BenchmarkPipeline:
    """
    Runs a RunConfig: truth, evidence, filtering, metrics and reports.

    Intermediate products are cached on the instance so a caller can run
    the stages separately (``simulate`` only needs the truth).
    """

    def __init__(self, config: RunConfig):
        """
        Initialize the pipeline.

        Args:
            config: Run configuration with absolute paths
        """
        self.config = config
        self.grid = GridSpec(config.grid.t_start, config.grid.t_end, config.grid.dt)

        self._model: Optional[ModelSpec] = None
        self._inputs: Optional[InputTable] = None
        self._truth: Optional[Trajectory] = None
        self._evidence: Optional[EvidenceStream] = None

        self.template: Optional[DbnTemplate] = None
        self.result: Optional[FilterResult] = None
        self.metrics: List[MetricReport] = []
        self.report: Optional[RunReport] = None

    @property
    def model(self) -> ModelSpec:
        """Model with priors recentred on truth when configured."""
        if self._model is None:
            m = load_model(self.config.model_path)
            if self.config.center_priors_at_truth:
                m = m.with_prior_means(self.config.true_params)
            self._model = m
        return self._model

    @property
    def inputs(self) -> InputTable:
        if self._inputs is None:
            if self.config.inputs_path is None:
                if self.model.inputs:
                    raise ConfigError(
                        f"model {self.model.name} declares inputs but no inputs_path is configured"
                    )
                self._inputs = InputTable.empty()
            else:
                self._inputs = InputTable.from_csv(self.config.inputs_path, self.model)
        return self._inputs

    def simulate_truth(self) -> Trajectory:
        """
        RK4 benchmark from the true parameters, read off at the filter grid.

        Raises:
            ModelValidationError: If true_params misses a model parameter
            IntegrationError: If the integration produces a non-finite state
        """
        fine = self.grid.refined(self.config.truth.refine)
        dense = integrate(self.model, self.config.true_params, fine, method="rk4", inputs=self.inputs)
        return resample_trajectory(dense, self.grid.times)

    @property
    def truth(self) -> Trajectory:
        if self._truth is None:
            if self.config.truth.source == "file":
                self._truth = load_trajectory(self.config.truth.path)
            else:
                self._truth = self.simulate_truth()
        return self._truth

    @property
    def evidence(self) -> EvidenceStream:
        if self._evidence is None:
            ev_cfg = self.config.evidence
            if ev_cfg is None:
                self._evidence = EvidenceStream()
            elif ev_cfg.source == "file":
                self._evidence = load_evidence(ev_cfg.path)
            else:
                s = ev_cfg.schedule
                schedule = SamplingSchedule(kind=s.kind, variables=tuple(s.variables),
                                            times=tuple(s.times), n=s.n, ratio=s.ratio, seed=s.seed)
                self._evidence = sample_evidence(self.truth, schedule, ev_cfg.noise_sd)
        return self._evidence

    def noise_config(self) -> NoiseConfig:
        """
        DBN noise settings with observation sds derived from the truth range.

        Explicit ``observation_sd`` entries win over the derived values; a
        flat truth keeps the model's declared noise.
        """
        noise = self.config.noise
        fraction = self.config.obs_noise_fraction
        if fraction is None:
            return noise
        derived: Dict[str, float] = {}
        for variable in self.model.observed_variables:
            if variable in noise.observation_sd or variable not in self.truth.variable_names:
                continue
            values = self.truth.column(variable)
            spread = float(np.max(values) - np.min(values))
            if spread > 0:
                derived[variable] = fraction * spread
        derived.update(noise.observation_sd)
        return replace(noise, observation_sd=derived)

    def eval_times(self) -> np.ndarray:
        if self.config.metric_times == "grid":
            return self.grid.times
        times = np.unique(self.evidence.times)
        if times.size == 0:
            raise ValidationError("metric_times 'evidence' needs at least one evidence record")
        return times

    def run(self) -> FilterResult:
        """
        Filter the evidence and score the posterior mean against the truth.

        Returns:
            FilterResult
        """
        self.template = compile_dbn(self.model, self.grid.dt, self.noise_config())
        logger.info("Filtering %s with %d evidence record(s)", self.model.name, len(self.evidence))
        self.result = run_filter(self.template, self.model, self.evidence, self.grid,
                                 self.config.filter, self.inputs)
        self.metrics = compute_all_metrics(self.result.mean_trajectory(), self.truth, self.eval_times())
        self.report = RunReport(
            model=self.model,
            result=self.result,
            metrics=self.metrics,
            n_particles=self.config.filter.n_particles,
            seed=self.config.filter.seed,
            n_evidence=len(self.evidence),
            true_params=dict(self.config.true_params),
        )
        return self.result

    def metric_for(self, variable: str) -> MetricReport:
        for report in self.metrics:
            if report.variable == variable:
                return report
        raise ValidationError(f"no metrics for variable {variable!r}")

    def save_results(self, output_dir: Optional[Path] = None) -> Path:
        """
        Save result.csv, metrics.json, summary.txt/md, truth.csv and evidence.csv.

        Args:
            output_dir: Target directory (defaults to the configured one)

        Returns:
            The output directory
        """
        if self.result is None or self.report is None:
            raise ValueError("Must run the pipeline before saving results")
        output_dir = Path(output_dir or self.config.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)

        save_result(self.result, output_dir / "result.csv")
        save_metrics(self.metrics, output_dir / "metrics.json")
        self.report.save_reports(output_dir)
        save_trajectory(self.truth, output_dir / "truth.csv")
        save_evidence(self.evidence, output_dir / "evidence.csv")
        return output_dir
