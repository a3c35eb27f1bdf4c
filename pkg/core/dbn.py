"""
DBN Module

Compiles a ModelSpec into a two-slice Dynamic Bayesian Network: each
variable node advances by one Euler step of its rate equation, each
parameter node follows a bounded Gaussian random walk, and each observed
variable has a Gaussian observation node.
"""

import logging
import math
from dataclasses import dataclass
from typing import FrozenSet, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from config.filter_config import NoiseConfig
from .errors import ConfigError, EvidenceError, ModelValidationError
from .expr import Expr, symbols
from .inputs import InputTable, resolve_inputs
from .integrate import euler_step
from .model_spec import TIME_SYMBOL, ModelSpec, rhs

logger = logging.getLogger(__name__)

# Clamped parameters are placed this far inside an open bound
BOUND_EPS = 1e-12


@dataclass(frozen=True)
class VariableNode:
    """Variable node: Euler transition over the variable's rate equation."""
    name: str
    parents: FrozenSet[str]
    equation: Expr
    process_noise_sd: float


@dataclass(frozen=True)
class ParameterNode:
    """Parameter node whose only inter-slice parent is itself."""
    name: str
    walk_sd: float
    lower_bound: float
    upper_bound: float


@dataclass(frozen=True)
class ObservationNode:
    """Gaussian observation of one variable."""
    variable: str
    noise_sd: float


@dataclass(frozen=True)
class DbnTemplate:
    """
    Compiled two-slice network.

    Attributes:
        model: Source model (rate equations are evaluated through it)
        dt: Euler step of the transition
        variable_nodes: One node per model variable, declaration order
        parameter_nodes: One node per model parameter, declaration order
        observation_nodes: One node per observed variable
        input_bindings: Names of the exogenous inputs
    """
    model: ModelSpec
    dt: float
    variable_nodes: Tuple[VariableNode, ...]
    parameter_nodes: Tuple[ParameterNode, ...]
    observation_nodes: Tuple[ObservationNode, ...]
    input_bindings: Tuple[str, ...]

    @property
    def walk_sd(self) -> np.ndarray:
        return np.array([p.walk_sd for p in self.parameter_nodes])

    @property
    def process_noise_sd(self) -> np.ndarray:
        return np.array([v.process_noise_sd for v in self.variable_nodes])

    @property
    def lower_bounds(self) -> np.ndarray:
        return np.array([p.lower_bound for p in self.parameter_nodes])

    @property
    def upper_bounds(self) -> np.ndarray:
        return np.array([p.upper_bound for p in self.parameter_nodes])

    def parents(self, variable: str) -> FrozenSet[str]:
        for node in self.variable_nodes:
            if node.name == variable:
                return node.parents
        raise ModelValidationError(f"no variable node {variable!r}")

    def observation(self, variable: str) -> ObservationNode:
        for node in self.observation_nodes:
            if node.variable == variable:
                return node
        raise EvidenceError(f"variable {variable!r} has no observation node")


@dataclass(frozen=True, eq=False)
class SliceState:
    """
    Joint latent state of one time slice.

    ``params`` and ``state`` are vectors for a single instance or arrays of
    shape (N, n) holding one row per particle.
    """
    t: float
    params: np.ndarray
    state: np.ndarray


@dataclass(frozen=True, eq=False)
class TransitionNoise:
    """Standard normal draws consumed by one transition, one row per particle."""
    params: np.ndarray
    state: np.ndarray


def compile_dbn(m: ModelSpec, dt: float, noise_cfg: Optional[NoiseConfig] = None) -> DbnTemplate:
    """
    Compile a model into a DBN template.

    Parent sets are the symbols of each rate equation (time excluded) plus
    the variable itself.

    Args:
        m: Validated model
        dt: Euler step (> 0)
        noise_cfg: Walk, process and observation noise levels

    Returns:
        DbnTemplate

    Raises:
        ConfigError: On a non-positive step, noise entries naming unknown nodes
            or an observation sd for a variable without an obs declaration
        ModelValidationError: On an observation of an unknown variable
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise ConfigError(f"dt must be positive, got {dt}")
    noise_cfg = noise_cfg or NoiseConfig()

    for label, mapping, names in (
        ("walk_sd", noise_cfg.walk_sd, m.parameter_names),
        ("process_noise_sd", noise_cfg.process_noise_sd, m.variable_names),
    ):
        unknown = sorted(set(mapping) - set(names))
        if unknown:
            raise ConfigError(f"{label} names unknown node(s): {', '.join(unknown)}")
    undeclared = sorted(set(noise_cfg.observation_sd) - set(m.observed_variables))
    if undeclared:
        raise ConfigError(
            f"observation_sd names variable(s) without an obs declaration: {', '.join(undeclared)}"
        )

    variable_nodes = tuple(
        VariableNode(
            name=v.name,
            parents=frozenset((symbols(eq) - {TIME_SYMBOL}) | {v.name}),
            equation=eq,
            process_noise_sd=float(noise_cfg.process_noise_sd.get(v.name, 0.0)),
        )
        for v, eq in zip(m.variables, m.equations)
    )
    parameter_nodes = tuple(
        ParameterNode(
            name=p.name,
            walk_sd=float(noise_cfg.walk_sd.get(p.name, noise_cfg.walk_fraction * p.prior_sd)),
            lower_bound=p.lower_bound,
            upper_bound=p.upper_bound,
        )
        for p in m.parameters
    )

    observation_nodes = []
    for o in m.observations:
        if o.variable not in m.variable_names:
            raise ModelValidationError(f"observation declared on unknown variable {o.variable!r}")
        observation_nodes.append(
            ObservationNode(o.variable, float(noise_cfg.observation_sd.get(o.variable, o.noise_sd)))
        )

    return DbnTemplate(
        model=m,
        dt=float(dt),
        variable_nodes=variable_nodes,
        parameter_nodes=parameter_nodes,
        observation_nodes=tuple(observation_nodes),
        input_bindings=m.input_names,
    )


def clamp_params(tpl: DbnTemplate, params: np.ndarray) -> np.ndarray:
    """Move parameters that left their open bounds just inside them."""
    lower = tpl.lower_bounds
    upper = tpl.upper_bounds
    inside_lower = np.maximum(lower + BOUND_EPS, np.nextafter(lower, np.inf))
    inside_upper = np.minimum(upper - BOUND_EPS, np.nextafter(upper, -np.inf))
    params = np.where(params <= lower, inside_lower, params)
    return np.where(params >= upper, inside_upper, params)


def draw_transition_noise(tpl: DbnTemplate, n: int, rng: np.random.Generator) -> TransitionNoise:
    """Draw the standard normals for ``n`` particles, parameters first."""
    param_z = rng.standard_normal((n, len(tpl.parameter_nodes)))
    state_z = rng.standard_normal((n, len(tpl.variable_nodes)))
    return TransitionNoise(param_z, state_z)


def apply_transition(tpl: DbnTemplate, s: SliceState, noise: TransitionNoise,
                     input_values: Sequence[float]) -> SliceState:
    """
    Deterministic part of the transition given pre-drawn noise.

    Parameters move first; the propagated values drive the Euler step.
    Non-finite states are returned as-is for the caller to flag.
    """
    params = s.params
    walk = tpl.walk_sd
    if np.any(walk > 0):
        params = clamp_params(tpl, params + walk * noise.params.reshape(params.shape))

    with np.errstate(all="ignore"):
        derivative = rhs(tpl.model, s.state, params, input_values, s.t, strict=False)
        state = euler_step(s.state, derivative, tpl.dt)
        process = tpl.process_noise_sd
        if np.any(process > 0):
            state = state + process * noise.state.reshape(state.shape)

    return SliceState(s.t + tpl.dt, params, state)


def transition(tpl: DbnTemplate, s: SliceState, rng: np.random.Generator,
               inputs: Optional[InputTable] = None) -> SliceState:
    """
    Sample the next slice.

    params' = clamp(params + walk_sd * eps), then
    state' = euler_step(state, rhs(state, params', u(t), t), dt) + eta.

    Args:
        tpl: Compiled template
        s: Current slice (single instance or one row per particle)
        rng: Random stream supplying eps and eta
        inputs: Exogenous input series

    Returns:
        Next slice at t + dt; particles whose state became non-finite keep
        the non-finite values (callers give them log-weight -inf)
    """
    table = resolve_inputs(tpl.model, inputs)
    n = s.state.shape[0] if s.state.ndim == 2 else 1
    noise = draw_transition_noise(tpl, n, rng)
    return apply_transition(tpl, s, noise, table.values_at(s.t))


def observation_logpdf(tpl: DbnTemplate, s: SliceState, record: Tuple[str, float]):
    """
    Log-density of an observed value under the observation node.

    Args:
        tpl: Compiled template
        s: Slice whose state supplies the mean
        record: (variable, observed value)

    Returns:
        log N(value; state[variable], noise_sd), per particle for batched slices

    Raises:
        EvidenceError: If the variable has no observation node
    """
    variable, value = record
    node = tpl.observation(variable)
    index = tpl.model.variable_names.index(variable)
    mean = s.state[..., index]
    logpdf = stats.norm.logpdf(value, loc=mean, scale=node.noise_sd)
    if np.ndim(logpdf) == 0:
        return float(logpdf)
    return logpdf


def describe_dbn(tpl: DbnTemplate) -> str:
    """Human-readable node list with parent sets."""
    lines = [f"DBN for model {tpl.model.name} (dt = {tpl.dt:g})", "", "Variable nodes:"]
    for node in tpl.variable_nodes:
        parents = ", ".join(sorted(node.parents))
        lines.append(f"  {node.name:<10} parents {{{parents}}}  process sd {node.process_noise_sd:g}")
    lines.append("")
    lines.append("Parameter nodes:")
    for node in tpl.parameter_nodes:
        lines.append(
            f"  {node.name:<10} parents {{{node.name}}}  walk sd {node.walk_sd:g}  "
            f"bounds ({node.lower_bound:g}, {node.upper_bound:g})"
        )
    lines.append("")
    lines.append("Observation nodes:")
    if not tpl.observation_nodes:
        lines.append("  (none)")
    for node in tpl.observation_nodes:
        lines.append(f"  {node.variable:<10} noise sd {node.noise_sd:g}")
    if tpl.input_bindings:
        lines.append("")
        lines.append(f"Inputs: {', '.join(tpl.input_bindings)}")
    return "\n".join(lines)
