"""
Integration Module

Fixed-step numerical integration of ModelSpec systems: the first-order
Euler step embedded in the DBN transition and the classical RK4 scheme used
to generate benchmark truth.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import (ConfigError, DataFormatError, ExprDomainError,
                     IntegrationError, ModelValidationError, ValidationError)
from .inputs import InputTable, resolve_inputs
from .model_spec import ModelSpec, rhs

logger = logging.getLogger(__name__)

MAX_GRID_STEPS = 10 ** 7
CSV_FLOAT_FORMAT = "%.17g"
METHODS = ("euler", "rk4")


@dataclass(frozen=True)
class GridSpec:
    """
    Fixed time grid {t_start, t_start + dt, ...} not extending past t_end.

    Attributes:
        t_start: First grid time
        t_end: End of the simulation interval
        dt: Step size (> 0)
    """
    t_start: float
    t_end: float
    dt: float

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"grid dt must be positive, got {self.dt}")
        if not self.t_start < self.t_end:
            raise ConfigError(f"grid needs t_start < t_end, got [{self.t_start}, {self.t_end}]")
        if (self.t_end - self.t_start) / self.dt > MAX_GRID_STEPS:
            raise ConfigError(f"grid has more than {MAX_GRID_STEPS} steps")

    @property
    def n_steps(self) -> int:
        # tolerance absorbs spans like 2 / 0.01 that land a hair under an integer
        return int(math.floor((self.t_end - self.t_start) / self.dt + 1e-9))

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)

    def refined(self, factor: int) -> "GridSpec":
        """Same interval with the step divided by ``factor``."""
        return GridSpec(self.t_start, self.t_end, self.dt / factor)

    def nearest_index(self, t: float) -> int:
        """Index of the grid time closest to ``t`` (may fall outside the grid)."""
        return int(round((t - self.t_start) / self.dt))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Dense time-indexed matrix of state values.

    Attributes:
        variable_names: Column names, in order
        times: Strictly increasing time vector
        values: Array of shape (len(times), len(variable_names))
    """
    variable_names: Tuple[str, ...]
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variable_names", tuple(self.variable_names))
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.times.ndim != 1 or len(self.times) == 0:
            raise ValidationError("trajectory needs at least one time point")
        if np.any(np.diff(self.times) <= 0):
            raise ValidationError("trajectory times must be strictly increasing")
        if self.values.shape != (len(self.times), len(self.variable_names)):
            raise ValidationError(
                f"trajectory values have shape {self.values.shape}, expected "
                f"({len(self.times)}, {len(self.variable_names)})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("trajectory contains non-finite values")

    def column(self, name: str) -> np.ndarray:
        """Values of one variable over time."""
        if name not in self.variable_names:
            raise ValidationError(f"trajectory has no variable {name!r}")
        return self.values[:, self.variable_names.index(name)]

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.values, columns=list(self.variable_names))
        df.insert(0, "t", self.times)
        return df


def euler_step(state: np.ndarray, derivative: np.ndarray, dt: float) -> np.ndarray:
    """
    One explicit Euler step: state + dt * derivative, element-wise.

    Non-finite inputs propagate; callers decide how to treat them.
    """
    return state + dt * derivative


def _param_vector(m: ModelSpec, params: Union[Mapping[str, float], Sequence[float]]) -> np.ndarray:
    if isinstance(params, Mapping):
        vector = m.parameter_vector(params)
    else:
        vector = np.asarray(params, dtype=float)
        if vector.shape != (len(m.parameters),):
            raise ModelValidationError(
                f"expected {len(m.parameters)} parameter values, got {vector.shape}"
            )
    for value, decl in zip(vector, m.parameters):
        if not decl.lower_bound <= value <= decl.upper_bound:
            raise ModelValidationError(
                f"parameter {decl.name}={value} outside ({decl.lower_bound}, {decl.upper_bound})"
            )
    return vector


def integrate(m: ModelSpec, params: Union[Mapping[str, float], Sequence[float]],
              grid: GridSpec, method: str = "euler",
              inputs: Optional[InputTable] = None) -> Trajectory:
    """
    Integrate a model over a fixed grid from its declared initial state.

    Args:
        m: Model
        params: Parameter values, by name or in declaration order
        grid: Time grid
        method: 'euler' (rhs at the left endpoint) or 'rk4' (classical
            four-stage scheme, inputs interpolated at stage times)
        inputs: Exogenous input series, required when the model declares inputs

    Returns:
        Trajectory on the grid; the first row equals the initial state

    Raises:
        IntegrationError: On a non-finite state (with time and variable) or
            an input series that doesn't cover the grid
    """
    if method not in METHODS:
        raise ConfigError(f"unknown integration method {method!r}; expected one of {METHODS}")
    p = _param_vector(m, params)
    table = resolve_inputs(m, inputs)
    table.check_coverage(grid.t_start, grid.t_start + grid.n_steps * grid.dt)

    times = grid.times
    dt = grid.dt
    names = m.variable_names
    values = np.empty((len(times), len(names)), dtype=float)
    x = m.initial_state()
    values[0] = x

    def f(state: np.ndarray, t: float) -> np.ndarray:
        try:
            return rhs(m, state, p, table.values_at(t), t)
        except ExprDomainError as e:
            raise IntegrationError(str(e), time=t, variable=e.symbol) from e

    for k in range(grid.n_steps):
        t = times[k]
        if method == "euler":
            x = euler_step(x, f(x, t), dt)
        else:
            half = 0.5 * dt
            k1 = f(x, t)
            k2 = f(x + half * k1, t + half)
            k3 = f(x + half * k2, t + half)
            k4 = f(x + dt * k3, t + dt)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        if not np.all(np.isfinite(x)):
            bad = names[int(np.argmin(np.isfinite(x)))]
            raise IntegrationError(
                f"non-finite value of {bad!r} at t={times[k + 1]}", time=times[k + 1], variable=bad
            )
        values[k + 1] = x

    logger.debug("Integrated %s with %s over %d steps", m.name, method, grid.n_steps)
    return Trajectory(names, times, values)


def resample_trajectory(traj: Trajectory, query_times: Sequence[float]) -> Trajectory:
    """
    Linearly interpolate every variable at the query times.

    A query exactly at a stored time returns the stored value.

    Raises:
        ValidationError: If a query time lies outside the trajectory span
    """
    query = np.asarray(query_times, dtype=float)
    first, last = traj.times[0], traj.times[-1]
    tol = 1e-9 * max(1.0, last - first)
    if query.size and (query.min() < first - tol or query.max() > last + tol):
        raise ValidationError(
            f"query times [{query.min()}, {query.max()}] outside trajectory span [{first}, {last}]"
        )
    values = np.column_stack(
        [np.interp(query, traj.times, traj.values[:, i]) for i in range(len(traj.variable_names))]
    ) if traj.variable_names else np.empty((len(query), 0))
    return Trajectory(traj.variable_names, query, values)


def save_trajectory(traj: Trajectory, path: Union[str, Path]) -> Path:
    """Write ``t,<var1>,<var2>,...`` CSV with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    traj.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info("Saved trajectory to %s", path)
    return path


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    """
    Read a trajectory CSV written by save_trajectory.

    Raises:
        FileNotFoundError: If the file doesn't exist
        DataFormatError: If the header lacks ``t`` or values are malformed
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trajectory file not found: {path}")
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataFormatError(f"Error reading trajectory {path}: {e}") from e
    if df.columns.empty or df.columns[0] != "t":
        raise DataFormatError(f"{path}: trajectory CSV must start with a 't' column")
    try:
        numeric = df.astype(float)
        return Trajectory(tuple(df.columns[1:]), numeric["t"].to_numpy(),
                          numeric.iloc[:, 1:].to_numpy())
    except (ValueError, ValidationError) as e:
        raise DataFormatError(f"{path}: {e}") from e
