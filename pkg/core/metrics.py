"""
Metrics Module

Calculates accuracy metrics of predicted trajectories against benchmark
truth: root mean square error and mean absolute error.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np

from .errors import ValidationError
from .integrate import Trajectory, resample_trajectory


@dataclass(frozen=True)
class MetricReport:
    """
    Accuracy of one variable's prediction.

    Attributes:
        variable: Variable name
        rmse: Root mean square error
        mae: Mean absolute error (never above rmse)
        n_points: Number of evaluation times
        eval_times: Evaluation times
    """
    variable: str
    rmse: float
    mae: float
    n_points: int
    eval_times: np.ndarray = field(repr=False, compare=False)

    def to_dict(self) -> Dict:
        return {"variable": self.variable, "rmse": self.rmse, "mae": self.mae,
                "n_points": self.n_points}


def compute_rmse(errors: np.ndarray) -> float:
    """Root mean square of an error vector."""
    return float(np.sqrt(np.mean(np.square(errors))))


def compute_mae(errors: np.ndarray) -> float:
    """Mean absolute value of an error vector."""
    return float(np.mean(np.abs(errors)))


def compute_metrics(pred: Trajectory, truth: Trajectory, variable: str,
                    eval_times: Sequence[float]) -> MetricReport:
    """
    Compare a predicted trajectory with the truth.

    Both trajectories are linearly interpolated at ``eval_times``.

    Args:
        pred: Predicted (posterior mean) trajectory
        truth: Benchmark trajectory
        variable: Variable to score
        eval_times: Evaluation times, inside both spans

    Returns:
        MetricReport

    Raises:
        ValidationError: On an empty evaluation set, a variable missing
            from either trajectory or times outside a span
    """
    times = np.asarray(eval_times, dtype=float)
    if times.size == 0:
        raise ValidationError("metrics need at least one evaluation time")
    for label, traj in (("prediction", pred), ("truth", truth)):
        if variable not in traj.variable_names:
            raise ValidationError(f"{label} trajectory has no variable {variable!r}")

    errors = (resample_trajectory(pred, times).column(variable)
              - resample_trajectory(truth, times).column(variable))
    rmse = compute_rmse(errors)
    # rounding can put mae a hair above rmse when all errors are equal
    mae = min(compute_mae(errors), rmse)
    return MetricReport(variable, rmse, mae, int(times.size), times)


def compute_all_metrics(pred: Trajectory, truth: Trajectory,
                        eval_times: Sequence[float]) -> List[MetricReport]:
    """
    Metrics for every prediction variable also present in the truth.

    Returns:
        Reports in the prediction's variable order
    """
    return [
        compute_metrics(pred, truth, name, eval_times)
        for name in pred.variable_names
        if name in truth.variable_names
    ]


def save_metrics(reports: Sequence[MetricReport], path: Union[str, Path]) -> Path:
    """Write the reports as a JSON list."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps([r.to_dict() for r in reports], indent=2) + "\n", encoding="utf-8")
    return path
