"""
Evidence Module

Evidence streams of (time, variable, value) records: CSV ingestion and
export, and sampling of benchmark evidence from a truth trajectory on
sparse, irregular or front-loaded schedules.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import DataFormatError, EvidenceError, ValidationError
from .integrate import CSV_FLOAT_FORMAT, Trajectory, resample_trajectory

logger = logging.getLogger(__name__)

EVIDENCE_COLUMNS = ["t", "variable", "value"]
SCHEDULE_KINDS = ("explicit", "uniform_random", "geometric_front_loaded")


class EvidenceRecord(NamedTuple):
    """One observation."""
    time: float
    variable: str
    value: float


class EvidenceStream:
    """
    Time-sorted sequence of evidence records.

    Ties in time are allowed across different variables; a (time, variable)
    pair may appear only once.
    """

    def __init__(self, records: Iterable[EvidenceRecord] = ()):
        """
        Initialize the stream, sorting by time then variable.

        Raises:
            EvidenceError: On non-finite values or duplicate (time, variable)
        """
        ordered = sorted((EvidenceRecord(float(r[0]), str(r[1]), float(r[2])) for r in records),
                         key=lambda r: (r.time, r.variable))
        for r in ordered:
            if not (math.isfinite(r.time) and math.isfinite(r.value)):
                raise EvidenceError(f"non-finite evidence record {r}")
        for prev, cur in zip(ordered, ordered[1:]):
            if prev.time == cur.time and prev.variable == cur.variable:
                raise EvidenceError(f"duplicate evidence for {cur.variable!r} at t={cur.time}")
        self.records: Tuple[EvidenceRecord, ...] = tuple(ordered)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[EvidenceRecord]:
        return iter(self.records)

    def __eq__(self, other) -> bool:
        return isinstance(other, EvidenceStream) and self.records == other.records

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.records], dtype=float)

    @property
    def variables(self) -> Tuple[str, ...]:
        """Distinct observed variables, in order of first appearance."""
        return tuple(dict.fromkeys(r.variable for r in self.records))

    def for_variable(self, variable: str) -> "EvidenceStream":
        return EvidenceStream(r for r in self.records if r.variable == variable)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": [r.time for r in self.records],
                "variable": [r.variable for r in self.records],
                "value": [r.value for r in self.records],
            },
            columns=EVIDENCE_COLUMNS,
        )


@dataclass
class SamplingSchedule:
    """
    Where evidence is taken.

    Attributes:
        kind: 'explicit', 'uniform_random' or 'geometric_front_loaded'
        variables: Observed variables sampled at every schedule time
        times: Sample times for 'explicit' (strictly increasing)
        n: Number of sample times for the generated kinds
        ratio: Growth ratio of successive gaps for 'geometric_front_loaded' (> 1)
        seed: Seed for 'uniform_random' times and for added noise
    """
    kind: str
    variables: Tuple[str, ...]
    times: Tuple[float, ...] = field(default_factory=tuple)
    n: int = 0
    ratio: float = 2.0
    seed: int = 0

    def __post_init__(self):
        """Validate the schedule."""
        self.variables = tuple(self.variables)
        self.times = tuple(float(x) for x in self.times)
        if self.kind not in SCHEDULE_KINDS:
            raise EvidenceError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        if not self.variables:
            raise EvidenceError("schedule must name at least one variable")
        if self.kind == "explicit":
            if not self.times:
                raise EvidenceError("explicit schedule needs at least one time")
            if any(b <= a for a, b in zip(self.times, self.times[1:])):
                raise EvidenceError("explicit schedule times must be strictly increasing")
        elif self.n < 1:
            raise EvidenceError(f"schedule needs n >= 1, got {self.n}")
        if self.kind == "geometric_front_loaded" and not self.ratio > 1:
            raise EvidenceError(f"geometric schedule needs ratio > 1, got {self.ratio}")

    def sample_times(self, t_start: float, t_end: float) -> np.ndarray:
        """
        Sample times over [t_start, t_end].

        'uniform_random' draws one uniform time inside each of n equal
        strata; 'geometric_front_loaded' places time k (k = 1..n) at
        t_start + span * (ratio^k - 1) / (ratio^n - 1).
        """
        span = t_end - t_start
        if self.kind == "explicit":
            return np.array(self.times, dtype=float)
        if self.kind == "uniform_random":
            rng = np.random.default_rng([self.seed, 0])
            offsets = rng.uniform(0.0, 1.0, size=self.n)
            return t_start + span * (np.arange(self.n) + offsets) / self.n
        k = np.arange(1, self.n + 1)
        return t_start + span * (self.ratio ** k - 1.0) / (self.ratio ** self.n - 1.0)


def load_evidence(path: Union[str, Path]) -> EvidenceStream:
    """
    Load an evidence CSV with header ``t,variable,value``.

    Unsorted rows are sorted silently.

    Args:
        path: Path to the CSV file

    Returns:
        Sorted, validated EvidenceStream (empty for a header-only file)

    Raises:
        FileNotFoundError: If the file doesn't exist
        DataFormatError: On a missing column or a malformed row (line number
            reported)
        EvidenceError: On non-finite values or duplicate (time, variable)
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Evidence file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False,
                         encoding="utf-8")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataFormatError(f"Error loading evidence from {path}: {e}") from e
    except pd.errors.EmptyDataError:
        raise DataFormatError(f"{path}: evidence file is empty (expected header t,variable,value)")

    if list(df.columns) != EVIDENCE_COLUMNS:
        raise DataFormatError(f"{path}: evidence CSV must have header t,variable,value")

    records: List[EvidenceRecord] = []
    for offset, row in enumerate(df.itertuples(index=False)):
        line = offset + 2  # header is line 1
        if all(pd.isna(field) or not str(field).strip() for field in row):
            continue
        if any(pd.isna(field) for field in row):
            raise DataFormatError(f"{path}, line {line}: malformed row {tuple(row)}")
        try:
            time = float(row.t)
            value = float(row.value)
        except ValueError:
            raise DataFormatError(f"{path}, line {line}: malformed row {tuple(row)}") from None
        variable = row.variable.strip()
        if not variable:
            raise DataFormatError(f"{path}, line {line}: missing variable name")
        if not (math.isfinite(time) and math.isfinite(value)):
            raise EvidenceError(f"{path}, line {line}: non-finite evidence value")
        records.append(EvidenceRecord(time, variable, value))

    stream = EvidenceStream(records)
    logger.debug("Loaded %d evidence records from %s", len(stream), path)
    return stream


def save_evidence(stream: EvidenceStream, path: Union[str, Path]) -> Path:
    """Write ``t,variable,value`` CSV with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stream.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info("Saved %d evidence records to %s", len(stream), path)
    return path


def sample_evidence(truth: Trajectory, schedule: SamplingSchedule, noise_sd: float = 0.0,
                    rng: Optional[np.random.Generator] = None) -> EvidenceStream:
    """
    Read evidence off a truth trajectory.

    Args:
        truth: Benchmark trajectory
        schedule: Sampling schedule; times are generated over truth's span
        noise_sd: Sd of additive Gaussian noise; 0 reproduces truth exactly
        rng: Noise stream (defaults to one seeded from the schedule)

    Returns:
        EvidenceStream with one record per (time, variable)

    Raises:
        EvidenceError: If schedule times leave the truth span or a variable
            is not in the trajectory
    """
    if not (noise_sd >= 0 and math.isfinite(noise_sd)):
        raise EvidenceError(f"noise_sd must be finite and >= 0, got {noise_sd}")
    missing = [v for v in schedule.variables if v not in truth.variable_names]
    if missing:
        raise EvidenceError(f"truth has no variable(s) {', '.join(missing)}")

    t_start, t_end = float(truth.times[0]), float(truth.times[-1])
    times = schedule.sample_times(t_start, t_end)
    try:
        sampled = resample_trajectory(truth, times)
    except ValidationError as e:
        raise EvidenceError(f"schedule does not fit the truth span [{t_start}, {t_end}]: {e}") from e

    rng = rng if rng is not None else np.random.default_rng([schedule.seed, 1])
    records = []
    for variable in schedule.variables:
        values = sampled.column(variable)
        if noise_sd > 0:
            values = values + rng.normal(0.0, noise_sd, size=values.shape)
        records.extend(EvidenceRecord(float(t), variable, float(v)) for t, v in zip(times, values))
    return EvidenceStream(records)


def check_observed(stream: EvidenceStream, observed: Sequence[str]) -> None:
    """
    Ensure evidence only concerns observed variables.

    Raises:
        EvidenceError: Naming the first unobserved variable
    """
    for variable in stream.variables:
        if variable not in observed:
            raise EvidenceError(f"evidence for unobserved variable {variable!r}")
