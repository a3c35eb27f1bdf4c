"""
Particle Filter Module

Bootstrap (sampling-importance-resampling) particle filter over a compiled
DBN. Every particle carries a parameter vector and a state vector; the
filter propagates them through the DBN transition, weights them by the
observation likelihood at evidence times and resamples systematically when
the effective sample size collapses.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats
from scipy.special import logsumexp

from config.filter_config import FilterConfig
from .dbn import (DbnTemplate, SliceState, TransitionNoise, apply_transition,
                  draw_transition_noise, observation_logpdf)
from .errors import ConfigError, DataFormatError, EvidenceError, FilterFailure
from .evidence import EvidenceRecord, EvidenceStream, check_observed
from .inputs import InputTable, resolve_inputs
from .integrate import CSV_FLOAT_FORMAT, GridSpec, Trajectory
from .model_spec import ModelSpec, ParameterDecl

logger = logging.getLogger(__name__)

# Truncated priors accepting fewer draws than this are a configuration error
MIN_PRIOR_ACCEPTANCE = 1e-3

# Random stream purposes; each (seed, step, purpose) triple keys one stream
_INIT, _TRANSITION, _RESAMPLE = 0, 1, 2


def particle_stream(seed: int, step: int, purpose: int) -> np.random.Generator:
    """Counter-based random stream for one (seed, step, purpose)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, step, purpose])))


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    """
    Weighted particle set.

    Attributes:
        params: Array (N, n_params)
        state: Array (N, n_vars)
        log_weights: Array (N,)
        t: Model time of the ensemble
    """
    params: np.ndarray
    state: np.ndarray
    log_weights: np.ndarray
    t: float

    @property
    def n(self) -> int:
        return len(self.log_weights)

    def weights(self) -> np.ndarray:
        """Normalised weights."""
        return np.exp(self.log_weights - logsumexp(self.log_weights))

    def as_slice(self) -> SliceState:
        return SliceState(self.t, self.params, self.state)


def normalize_log_weights(log_weights: np.ndarray, t: Optional[float] = None) -> np.ndarray:
    """
    Shift log-weights so they log-sum-exp to zero.

    Raises:
        FilterFailure: If every weight is zero
    """
    total = logsumexp(log_weights)
    if not np.isfinite(total):
        raise FilterFailure(f"all particle weights are zero at t={t}", time=t)
    return log_weights - total


def ess(log_weights: np.ndarray) -> float:
    """
    Effective sample size 1 / sum(w_i^2) of normalised weights, in [1, N].
    """
    w = np.exp(log_weights - logsumexp(log_weights))
    value = 1.0 / np.sum(w * w)
    return float(np.clip(value, 1.0, len(log_weights)))


def systematic_indices(weights: np.ndarray, u: float) -> np.ndarray:
    """
    Offspring indices of systematic resampling.

    Pointers u + k/N (k = 0..N-1, u in [0, 1/N)) are matched against the
    cumulative weights.
    """
    n = len(weights)
    cumulative = np.cumsum(weights)
    positions = u + np.arange(n) / n
    indices = np.searchsorted(cumulative, positions, side="right")
    return np.minimum(indices, n - 1)


def systematic_resample(ensemble: ParticleEnsemble, rng: np.random.Generator) -> ParticleEnsemble:
    """
    Resample the ensemble with a single uniform offset.

    Returns:
        Ensemble of N offspring with uniform weights

    Raises:
        FilterFailure: If all weights are zero (reported with the ensemble time)
    """
    normalize_log_weights(ensemble.log_weights, ensemble.t)
    weights = ensemble.weights()
    n = ensemble.n
    indices = systematic_indices(weights, rng.uniform(0.0, 1.0 / n))
    return ParticleEnsemble(
        params=ensemble.params[indices],
        state=ensemble.state[indices],
        log_weights=np.full(n, -math.log(n)),
        t=ensemble.t,
    )


def _sample_truncated_prior(decl: ParameterDecl, n: int, rng: np.random.Generator) -> np.ndarray:
    lo_z = (decl.lower_bound - decl.prior_mean) / decl.prior_sd
    hi_z = (decl.upper_bound - decl.prior_mean) / decl.prior_sd
    acceptance = stats.norm.cdf(hi_z) - stats.norm.cdf(lo_z)
    if acceptance < MIN_PRIOR_ACCEPTANCE:
        raise ConfigError(
            f"prior of {decl.name!r} puts only {acceptance:.2e} of its mass inside "
            f"({decl.lower_bound}, {decl.upper_bound})"
        )

    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        draws = rng.normal(decl.prior_mean, decl.prior_sd, size=int(need / acceptance * 1.1) + 16)
        kept = draws[(draws > decl.lower_bound) & (draws < decl.upper_bound)][:need]
        out[filled:filled + len(kept)] = kept
        filled += len(kept)
    return out


def init_particles(tpl: DbnTemplate, m: ModelSpec, cfg: FilterConfig,
                   rng: np.random.Generator) -> ParticleEnsemble:
    """
    Draw the initial ensemble.

    Parameters come from the truncated Gaussian priors (rejection sampling
    inside the bounds) unless ``cfg.point_params`` pins them; each state
    variable is Normal(initial value, init_state_sd). Weights are uniform.

    Raises:
        ConfigError: On a prior with acceptance below 1e-3 inside its bounds
            or init_state_sd naming unknown variables
    """
    n = cfg.n_particles
    unknown = sorted(set(cfg.init_state_sd) - set(m.variable_names))
    if unknown:
        raise ConfigError(f"init_state_sd names unknown variable(s): {', '.join(unknown)}")

    if cfg.point_params is not None:
        params = np.tile(m.parameter_vector(cfg.point_params), (n, 1))
    else:
        params = np.empty((n, len(m.parameters)))
        for j, decl in enumerate(m.parameters):
            params[:, j] = _sample_truncated_prior(decl, n, rng)

    state = np.tile(m.initial_state(), (n, 1))
    z = rng.standard_normal(state.shape)
    for j, name in enumerate(m.variable_names):
        sd = cfg.init_state_sd.get(name, 0.0)
        if sd > 0:
            state[:, j] = state[:, j] + sd * z[:, j]

    return ParticleEnsemble(params, state, np.full(n, -math.log(n)), t=0.0)


def posterior_summary(ensemble: ParticleEnsemble) -> Tuple[np.ndarray, np.ndarray]:
    """
    Weighted mean and standard deviation of every variable and parameter.

    Columns are the state variables followed by the parameters. The sd is
    the square root of the weighted population variance. Moments are
    accumulated as deviations from the first live particle, so an ensemble
    of identical particles reports that value exactly.
    """
    w = ensemble.weights()
    values = np.hstack([ensemble.state, ensemble.params])
    alive = w > 0
    reference = values[int(np.argmax(alive))]
    with np.errstate(invalid="ignore"):
        dev = np.where(alive[:, None], values - reference, 0.0)
    mean_dev = np.sum(w[:, None] * dev, axis=0)
    var = np.sum(w[:, None] * (dev - mean_dev) ** 2, axis=0)
    return reference + mean_dev, np.sqrt(np.maximum(var, 0.0))


@dataclass(frozen=True, eq=False)
class FilterResult:
    """
    Posterior summaries on the filter grid.

    Attributes:
        times: Grid times
        variable_names: Model variables (first columns of mean/sd)
        parameter_names: Model parameters (remaining columns)
        mean: Posterior means, shape (T, n_vars + n_params)
        sd: Posterior sds, same shape
        ess: Effective sample size per grid time
        evidence_times: Grid times at which evidence was assimilated
        n_resamples: Number of resampling events
    """
    times: np.ndarray
    variable_names: Tuple[str, ...]
    parameter_names: Tuple[str, ...]
    mean: np.ndarray
    sd: np.ndarray
    ess: np.ndarray
    evidence_times: np.ndarray
    n_resamples: int = 0

    @property
    def names(self) -> Tuple[str, ...]:
        return self.variable_names + self.parameter_names

    def _index(self, name: str) -> int:
        if name not in self.names:
            raise EvidenceError(f"filter result has no variable or parameter {name!r}")
        return self.names.index(name)

    def mean_of(self, name: str) -> np.ndarray:
        return self.mean[:, self._index(name)]

    def sd_of(self, name: str) -> np.ndarray:
        return self.sd[:, self._index(name)]

    def mean_trajectory(self) -> Trajectory:
        """Posterior-mean trajectory of the model variables."""
        return Trajectory(self.variable_names, self.times, self.mean[:, :len(self.variable_names)])

    def final_parameter_means(self) -> Dict[str, float]:
        return {name: float(self.mean_of(name)[-1]) for name in self.parameter_names}

    def final_parameter_sds(self) -> Dict[str, float]:
        return {name: float(self.sd_of(name)[-1]) for name in self.parameter_names}

    def to_frame(self) -> pd.DataFrame:
        """Columns t, <name>_mean, <name>_sd, ..., ess."""
        data = {"t": self.times}
        for i, name in enumerate(self.names):
            data[f"{name}_mean"] = self.mean[:, i]
            data[f"{name}_sd"] = self.sd[:, i]
        data["ess"] = self.ess
        return pd.DataFrame(data)


def _snap_evidence(ev: EvidenceStream, grid: GridSpec) -> Dict[int, List[EvidenceRecord]]:
    times = grid.times
    tol = 1e-9 * max(1.0, times[-1] - times[0])
    by_step: Dict[int, List[EvidenceRecord]] = {}
    for record in ev:
        if record.time < times[0] - tol or record.time > times[-1] + tol:
            raise EvidenceError(
                f"evidence at t={record.time} lies outside the grid span "
                f"[{times[0]}, {times[-1]}]"
            )
        k = min(max(grid.nearest_index(record.time), 0), grid.n_steps)
        by_step.setdefault(k, []).append(record)
    return by_step


def _propagate(tpl: DbnTemplate, ensemble: ParticleEnsemble, step: int, t_next: float,
               table: InputTable, cfg: FilterConfig,
               executor: Optional[ThreadPoolExecutor]) -> ParticleEnsemble:
    n = ensemble.n
    noise = draw_transition_noise(tpl, n, particle_stream(cfg.seed, step, _TRANSITION))
    input_values = table.values_at(ensemble.t)

    if executor is None:
        moved = apply_transition(tpl, ensemble.as_slice(), noise, input_values)
        params, state = moved.params, moved.state
    else:
        bounds = np.linspace(0, n, cfg.n_threads + 1).astype(int)

        def run_chunk(lo: int, hi: int) -> SliceState:
            chunk = SliceState(ensemble.t, ensemble.params[lo:hi], ensemble.state[lo:hi])
            chunk_noise = TransitionNoise(noise.params[lo:hi], noise.state[lo:hi])
            return apply_transition(tpl, chunk, chunk_noise, input_values)

        parts = list(executor.map(run_chunk, bounds[:-1], bounds[1:]))
        params = np.concatenate([p.params for p in parts])
        state = np.concatenate([p.state for p in parts])

    log_weights = ensemble.log_weights
    dead = ~np.all(np.isfinite(state), axis=1) & np.isfinite(log_weights)
    if np.any(dead):
        logger.debug("%d particle(s) died at t=%g", int(dead.sum()), t_next)
        log_weights = normalize_log_weights(np.where(dead, -np.inf, log_weights), t_next)
    return ParticleEnsemble(params, state, log_weights, t_next)


def _assimilate(tpl: DbnTemplate, ensemble: ParticleEnsemble,
                records: List[EvidenceRecord]) -> ParticleEnsemble:
    log_weights = ensemble.log_weights.copy()
    current = ensemble.as_slice()
    with np.errstate(invalid="ignore"):
        for record in records:
            lp = observation_logpdf(tpl, current, (record.variable, record.value))
            log_weights = log_weights + np.where(np.isnan(lp), -np.inf, lp)
    log_weights = normalize_log_weights(log_weights, ensemble.t)
    return ParticleEnsemble(ensemble.params, ensemble.state, log_weights, ensemble.t)


def run_filter(tpl: DbnTemplate, m: ModelSpec, ev: EvidenceStream, grid: GridSpec,
               cfg: FilterConfig, inputs: Optional[InputTable] = None) -> FilterResult:
    """
    Run the bootstrap particle filter over the grid.

    At each grid step every particle is propagated through the DBN
    transition; evidence records snapped to the step (nearest grid time,
    at most dt/2 away) are weighted in with the observation log-density,
    weights are normalised, and the ensemble is resampled when
    ESS < resample_threshold * N. Posterior mean and sd of every variable
    and parameter are recorded at every grid time (before resampling).

    Args:
        tpl: Compiled DBN (its dt must equal grid.dt)
        m: Model the template was compiled from
        ev: Evidence stream
        grid: Filter grid
        cfg: Filter configuration
        inputs: Exogenous input series

    Returns:
        FilterResult; a fixed seed reproduces it bit for bit for any
        number of threads

    Raises:
        EvidenceError: On evidence outside the grid or for a variable
            without an observation node
        FilterFailure: If every particle weight drops to zero
    """
    if not math.isclose(tpl.dt, grid.dt, rel_tol=1e-12):
        raise ConfigError(f"template dt {tpl.dt} differs from grid dt {grid.dt}")
    check_observed(ev, m.observed_variables)
    for variable in ev.variables:
        tpl.observation(variable)
    by_step = _snap_evidence(ev, grid)
    table = resolve_inputs(m, inputs)
    table.check_coverage(grid.t_start, grid.t_start + grid.n_steps * grid.dt)

    times = grid.times
    n_names = len(m.variables) + len(m.parameters)
    means = np.empty((len(times), n_names))
    sds = np.empty((len(times), n_names))
    ess_trace = np.empty(len(times))
    assimilated: List[float] = []
    n_resamples = 0
    threshold = cfg.resample_threshold * cfg.n_particles

    initial = init_particles(tpl, m, cfg, particle_stream(cfg.seed, 0, _INIT))
    ensemble = ParticleEnsemble(initial.params, initial.state, initial.log_weights, float(times[0]))

    executor = ThreadPoolExecutor(max_workers=cfg.n_threads) if cfg.n_threads > 1 else None
    try:
        for k, t in enumerate(times):
            if k > 0:
                ensemble = _propagate(tpl, ensemble, k, float(t), table, cfg, executor)

            records = by_step.get(k)
            if records:
                ensemble = _assimilate(tpl, ensemble, records)
                assimilated.append(float(t))

            ess_trace[k] = ess(ensemble.log_weights)
            means[k], sds[k] = posterior_summary(ensemble)

            if records and ess_trace[k] < threshold:
                ensemble = systematic_resample(ensemble, particle_stream(cfg.seed, k, _RESAMPLE))
                n_resamples += 1
                logger.debug("Resampled at t=%g (ESS %.1f)", t, ess_trace[k])
    finally:
        if executor is not None:
            executor.shutdown()

    logger.info(
        "Filtered %s: %d steps, %d evidence time(s), %d resample(s), min ESS %.1f",
        m.name, grid.n_steps, len(assimilated), n_resamples, float(ess_trace.min()),
    )
    return FilterResult(
        times=times,
        variable_names=m.variable_names,
        parameter_names=m.parameter_names,
        mean=means,
        sd=sds,
        ess=ess_trace,
        evidence_times=np.array(assimilated),
        n_resamples=n_resamples,
    )


def save_result(result: FilterResult, path: Union[str, Path]) -> Path:
    """Write the result CSV with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    result.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info("Saved filter result to %s", path)
    return path


def load_result_frame(path: Union[str, Path]) -> pd.DataFrame:
    """
    Read a result CSV written by save_result.

    Raises:
        FileNotFoundError: If the file doesn't exist
        DataFormatError: If the ``t`` or ``ess`` column is missing
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Result file not found: {path}")
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataFormatError(f"Error reading filter result {path}: {e}") from e
    if "t" not in df.columns or "ess" not in df.columns:
        raise DataFormatError(f"{path}: result CSV needs 't' and 'ess' columns")
    return df
