"""
Reporting Module

Generates text and markdown summaries of a filter run: per-variable
accuracy, final parameter estimates against prior and truth, and
particle-filter diagnostics.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .filter import FilterResult
from .metrics import MetricReport
from .model_spec import ModelSpec

logger = logging.getLogger(__name__)


@dataclass
class RunReport:
    """
    Summary of one filter run.

    Attributes:
        model: Model that was filtered (its priors are the ones used)
        result: Filter output
        metrics: Accuracy reports, one per scored variable
        n_particles: Ensemble size
        seed: Filter seed
        n_evidence: Number of evidence records
        true_params: True parameter values, when known
    """
    model: ModelSpec
    result: FilterResult
    metrics: List[MetricReport]
    n_particles: int
    seed: int
    n_evidence: int
    true_params: Dict[str, float] = field(default_factory=dict)

    def parameter_rows(self) -> List[Dict[str, Optional[float]]]:
        """Prior mean, final posterior mean and sd, and truth per parameter."""
        means = self.result.final_parameter_means()
        sds = self.result.final_parameter_sds()
        return [
            {
                "name": p.name,
                "prior_mean": p.prior_mean,
                "posterior_mean": means[p.name],
                "posterior_sd": sds[p.name],
                "truth": self.true_params.get(p.name),
            }
            for p in self.model.parameters
        ]

    def parameters_improved(self) -> int:
        """Parameters whose final posterior mean is closer to truth than the prior mean."""
        count = 0
        for row in self.parameter_rows():
            if row["truth"] is not None and (
                abs(row["posterior_mean"] - row["truth"]) < abs(row["prior_mean"] - row["truth"])
            ):
                count += 1
        return count

    def _grid_line(self) -> str:
        times = self.result.times
        return f"[{times[0]:g}, {times[-1]:g}], {len(times) - 1} steps"

    def to_text(self) -> str:
        """
        Generate a formatted text report.

        Returns:
            Formatted text string
        """
        lines = []
        lines.append("=" * 70)
        lines.append(f"ODE-DBN FILTER SUMMARY - {self.model.name}")
        lines.append("=" * 70)

        lines.append("\n--- Run ---\n")
        lines.append(f"Grid:                 {self._grid_line():>30}")
        lines.append(f"Particles:            {self.n_particles:>30d}")
        lines.append(f"Seed:                 {self.seed:>30d}")
        lines.append(f"Evidence Records:     {self.n_evidence:>30d}")
        lines.append(f"Resampling Events:    {self.result.n_resamples:>30d}")
        lines.append(f"Minimum ESS:          {float(np.min(self.result.ess)):>30.1f}")

        lines.append("\n--- Accuracy ---\n")
        lines.append(f"{'Variable':<12}{'RMSE':>14}{'MAE':>14}{'Points':>10}")
        for r in self.metrics:
            lines.append(f"{r.variable:<12}{r.rmse:>14.6g}{r.mae:>14.6g}{r.n_points:>10d}")

        if self.model.parameters:
            lines.append("\n--- Parameters (final time) ---\n")
            lines.append(f"{'Name':<10}{'Prior':>12}{'Posterior':>12}{'Sd':>12}{'Truth':>12}")
            for row in self.parameter_rows():
                truth = "-" if row["truth"] is None else f"{row['truth']:.6g}"
                lines.append(
                    f"{row['name']:<10}{row['prior_mean']:>12.6g}{row['posterior_mean']:>12.6g}"
                    f"{row['posterior_sd']:>12.6g}{truth:>12}"
                )
            if self.true_params:
                lines.append(
                    f"\nCloser to truth than prior: {self.parameters_improved()} "
                    f"of {len(self.model.parameters)}"
                )

        lines.append("\n" + "=" * 70)
        return "\n".join(lines)

    def to_markdown(self) -> str:
        """
        Generate a formatted markdown report.

        Returns:
            Formatted markdown string
        """
        lines = []
        lines.append(f"# Filter Summary: {self.model.name}\n")

        lines.append("## Run\n")
        lines.append(f"- **Grid**: {self._grid_line()}")
        lines.append(f"- **Particles**: {self.n_particles}")
        lines.append(f"- **Seed**: {self.seed}")
        lines.append(f"- **Evidence Records**: {self.n_evidence}")
        lines.append(f"- **Resampling Events**: {self.result.n_resamples}")
        lines.append(f"- **Minimum ESS**: {float(np.min(self.result.ess)):.1f}\n")

        lines.append("## Accuracy\n")
        lines.append("| Variable | RMSE | MAE | Points |")
        lines.append("|---|---|---|---|")
        for r in self.metrics:
            lines.append(f"| {r.variable} | {r.rmse:.6g} | {r.mae:.6g} | {r.n_points} |")

        if self.model.parameters:
            lines.append("\n## Parameters\n")
            lines.append("| Name | Prior mean | Posterior mean | Posterior sd | Truth |")
            lines.append("|---|---|---|---|---|")
            for row in self.parameter_rows():
                truth = "-" if row["truth"] is None else f"{row['truth']:.6g}"
                lines.append(
                    f"| {row['name']} | {row['prior_mean']:.6g} | {row['posterior_mean']:.6g} "
                    f"| {row['posterior_sd']:.6g} | {truth} |"
                )
        return "\n".join(lines) + "\n"

    def save_reports(self, output_dir: Path) -> None:
        """
        Save summary.txt and summary.md to the output directory.

        Args:
            output_dir: Directory to save output files
        """
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)

        text_path = output_dir / "summary.txt"
        text_path.write_text(self.to_text() + "\n", encoding="utf-8")
        logger.info("Saved text report to %s", text_path)

        md_path = output_dir / "summary.md"
        md_path.write_text(self.to_markdown(), encoding="utf-8")
        logger.info("Saved markdown report to %s", md_path)
