"""
Inputs Module

Loads exogenous input series (forcing functions such as TOC1) from CSV and
interpolates them at arbitrary model times.

The CSV file must contain a ``t`` column plus one column per series.
"""

import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .errors import DataFormatError, IntegrationError, ModelValidationError
from .model_spec import ModelSpec

logger = logging.getLogger(__name__)


class InputTable:
    """
    Exogenous input series for one model, linearly interpolated in time.

    Values are returned in the model's input declaration order.
    """

    def __init__(self, names: Tuple[str, ...], times: np.ndarray,
                 columns: Mapping[str, np.ndarray]):
        """
        Initialize the table.

        Args:
            names: Model input names, in declaration order
            times: Strictly increasing sample times
            columns: Input name -> sampled values (same length as times)
        """
        self.names = tuple(names)
        self.times = np.asarray(times, dtype=float)
        self.columns: Dict[str, np.ndarray] = {
            n: np.asarray(columns[n], dtype=float) for n in self.names
        }
        if self.names:
            if self.times.ndim != 1 or len(self.times) < 2:
                raise DataFormatError("input series needs at least two samples")
            if np.any(np.diff(self.times) <= 0):
                raise DataFormatError("input series times must be strictly increasing")
            for n, values in self.columns.items():
                if values.shape != self.times.shape or not np.all(np.isfinite(values)):
                    raise DataFormatError(f"input series {n!r} has missing or non-finite samples")

    @classmethod
    def empty(cls) -> "InputTable":
        """Table for models without exogenous inputs."""
        return cls((), np.array([]), {})

    @classmethod
    def from_csv(cls, path: Union[str, Path], model: ModelSpec) -> "InputTable":
        """
        Load the series a model declares from a CSV file.

        Args:
            path: CSV with a ``t`` column and the referenced source columns
            model: Model whose ``input`` declarations name the columns

        Returns:
            InputTable keyed by the model's input names

        Raises:
            FileNotFoundError: If the file doesn't exist
            DataFormatError: If a referenced column is missing or malformed
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Input series file not found: {path}")
        try:
            df = pd.read_csv(path, float_precision="round_trip")
        except (pd.errors.ParserError, UnicodeDecodeError) as e:
            raise DataFormatError(f"Error reading input series {path}: {e}") from e

        if "t" not in df.columns:
            raise DataFormatError(f"{path}: input series CSV must contain a 't' column")
        df = df.sort_values("t")

        columns = {}
        for decl in model.inputs:
            if decl.source not in df.columns:
                raise DataFormatError(f"{path}: no column {decl.source!r} for input {decl.name!r}")
            columns[decl.name] = pd.to_numeric(df[decl.source], errors="coerce").to_numpy()
        logger.debug("Loaded %d input series from %s", len(columns), path)
        return cls(model.input_names, df["t"].to_numpy(dtype=float), columns)

    def check_coverage(self, t_start: float, t_end: float) -> None:
        """
        Ensure every series spans [t_start, t_end].

        Raises:
            IntegrationError: If the interval reaches outside the samples
        """
        if not self.names:
            return
        tol = 1e-9 * max(1.0, self.times[-1] - self.times[0])
        if t_start < self.times[0] - tol or t_end > self.times[-1] + tol:
            raise IntegrationError(
                f"input series cover [{self.times[0]}, {self.times[-1]}] "
                f"but the simulation needs [{t_start}, {t_end}]"
            )

    def values_at(self, t: float) -> Tuple[float, ...]:
        """Interpolated input values at time ``t``."""
        return tuple(float(np.interp(t, self.times, self.columns[n])) for n in self.names)


def resolve_inputs(model: ModelSpec, inputs: Optional[InputTable]) -> InputTable:
    """Return ``inputs`` or an empty table, checking it matches the model."""
    if inputs is None:
        if model.inputs:
            raise ModelValidationError(
                f"model {model.name!r} declares inputs {', '.join(model.input_names)} "
                f"but no input series were supplied"
            )
        return InputTable.empty()
    if inputs.names != model.input_names:
        raise ModelValidationError(
            f"input table provides {inputs.names}, model expects {model.input_names}"
        )
    return inputs
