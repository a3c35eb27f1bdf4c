"""
Plotting Module

Renders a filtered variable as an SVG figure: benchmark truth as a dashed
line, the posterior mean as a solid line, a shaded band of one posterior
standard deviation and the evidence as gray dots.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .errors import ValidationError  # noqa: E402
from .evidence import EvidenceStream  # noqa: E402
from .integrate import Trajectory  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed element ids make repeated renders byte-identical
matplotlib.rcParams["svg.hashsalt"] = "ode-dbn"


def plot_variable(result: pd.DataFrame, variable: str, out: Union[str, Path],
                  truth: Optional[Trajectory] = None,
                  evidence: Optional[EvidenceStream] = None,
                  true_value: Optional[float] = None) -> Path:
    """
    Plot one variable or parameter of a filter result.

    Args:
        result: Result frame with ``t``, ``<variable>_mean`` and
            ``<variable>_sd`` columns
        variable: Variable or parameter name
        out: SVG output path
        truth: Benchmark trajectory; drawn dashed when it holds ``variable``
        evidence: Evidence records; those for ``variable`` are drawn as dots
        true_value: Constant truth drawn as a dashed horizontal line
            (parameters)

    Returns:
        Path of the written SVG

    Raises:
        ValidationError: If the result has no columns for ``variable``
    """
    mean_col, sd_col = f"{variable}_mean", f"{variable}_sd"
    if mean_col not in result.columns or sd_col not in result.columns:
        raise ValidationError(f"filter result has no variable {variable!r}")

    t = result["t"].to_numpy(dtype=float)
    mean = result[mean_col].to_numpy(dtype=float)
    sd = result[sd_col].to_numpy(dtype=float)

    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.fill_between(t, mean - sd, mean + sd, color="tab:blue", alpha=0.25, linewidth=0,
                    label="posterior mean ± 1 sd")
    ax.plot(t, mean, color="tab:blue", linestyle="-", linewidth=1.5, label="posterior mean")

    if truth is not None and variable in truth.variable_names:
        ax.plot(truth.times, truth.column(variable), color="black", linestyle="--",
                linewidth=1.2, label="benchmark")
    elif true_value is not None:
        ax.axhline(true_value, color="black", linestyle="--", linewidth=1.2, label="true value")

    if evidence is not None:
        points = evidence.for_variable(variable)
        if len(points):
            ax.scatter(points.times, [r.value for r in points], color="gray", s=18, zorder=3,
                       label="evidence")

    ax.set_xlabel("time")
    ax.set_ylabel(variable)
    ax.set_xlim(t[0], t[-1])
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("Saved plot of %s to %s", variable, out)
    return out
