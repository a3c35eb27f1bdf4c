"""
Model Specification Module

Parses, validates and evaluates the line-oriented ODE model language:

    model <name>
    var <ident> = <real>
    param <ident> ~ N(<mean>, <sd>) in (<lo>, <hi>)
    input <ident> from <column-name>
    eq d<ident>/dt = <expression>
    obs <ident> noise <real>

``#`` starts a comment. Parameter bounds are optional and default to
(-inf, inf).
"""

import math
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ExprDomainError, ModelSyntaxError, ModelValidationError
from .expr import Expr, evaluate, format_expr, parse_expression, symbols


TIME_SYMBOL = "t"

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_REAL = r"[+-]?(?:inf|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"

_MODEL_RE = re.compile(rf"model\s+(?P<name>{_IDENT})$")
_VAR_RE = re.compile(rf"var\s+(?P<name>{_IDENT})\s*=\s*(?P<value>{_REAL})$")
_PARAM_RE = re.compile(
    rf"param\s+(?P<name>{_IDENT})\s*~\s*N\(\s*(?P<mean>{_REAL})\s*,\s*(?P<sd>{_REAL})\s*\)"
    rf"(?:\s+in\s+\(\s*(?P<lo>{_REAL})\s*,\s*(?P<hi>{_REAL})\s*\))?$"
)
_INPUT_RE = re.compile(rf"input\s+(?P<name>{_IDENT})\s+from\s+(?P<column>\S+)$")
_EQ_RE = re.compile(rf"eq\s+d(?P<name>{_IDENT})\s*/\s*dt\s*=\s*(?P<rhs>.*\S)$")
_OBS_RE = re.compile(rf"obs\s+(?P<name>{_IDENT})\s+noise\s+(?P<sd>{_REAL})$")


@dataclass(frozen=True)
class VariableDecl:
    """State variable with its declared initial value."""
    name: str
    initial_value: float


@dataclass(frozen=True)
class ParameterDecl:
    """
    Model parameter with a truncated Gaussian prior.

    The prior encodes the population-level guess; the bounds are open.
    """
    name: str
    prior_mean: float
    prior_sd: float
    lower_bound: float = -math.inf
    upper_bound: float = math.inf


@dataclass(frozen=True)
class InputDecl:
    """Exogenous input read from a column of a time-series file."""
    name: str
    source: str
    interpolation: str = "linear"


@dataclass(frozen=True)
class ObsDecl:
    """Observed variable with its Gaussian measurement noise sd."""
    variable: str
    noise_sd: float


@dataclass(frozen=True)
class ModelSpec:
    """
    Parsed and validated ODE model.

    ``equations`` holds one right-hand side per variable, in variable
    declaration order.
    """
    name: str
    variables: Tuple[VariableDecl, ...]
    parameters: Tuple[ParameterDecl, ...]
    inputs: Tuple[InputDecl, ...]
    equations: Tuple[Expr, ...]
    observations: Tuple[ObsDecl, ...] = field(default_factory=tuple)

    def __post_init__(self):
        validate_model(self)

    @property
    def variable_names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return tuple(p.name for p in self.parameters)

    @property
    def input_names(self) -> Tuple[str, ...]:
        return tuple(i.name for i in self.inputs)

    @property
    def observed_variables(self) -> Tuple[str, ...]:
        return tuple(o.variable for o in self.observations)

    def initial_state(self) -> np.ndarray:
        return np.array([v.initial_value for v in self.variables], dtype=float)

    def prior_means(self) -> np.ndarray:
        return np.array([p.prior_mean for p in self.parameters], dtype=float)

    def equation(self, variable: str) -> Expr:
        return self.equations[self.variable_names.index(variable)]

    def parameter(self, name: str) -> ParameterDecl:
        for decl in self.parameters:
            if decl.name == name:
                return decl
        raise ModelValidationError(f"unknown parameter {name!r}")

    def parameter_vector(self, values: Mapping[str, float]) -> np.ndarray:
        """
        Order a name -> value mapping by parameter declaration.

        Raises:
            ModelValidationError: On missing or unknown parameter names
        """
        unknown = sorted(set(values) - set(self.parameter_names))
        if unknown:
            raise ModelValidationError(f"unknown parameter(s): {', '.join(unknown)}")
        missing = [n for n in self.parameter_names if n not in values]
        if missing:
            raise ModelValidationError(f"missing value for parameter(s): {', '.join(missing)}")
        return np.array([float(values[n]) for n in self.parameter_names], dtype=float)

    def with_prior_means(self, means: Mapping[str, float]) -> "ModelSpec":
        """Return a copy whose priors are recentred on ``means`` (sd unchanged)."""
        params = tuple(
            replace(p, prior_mean=float(means[p.name])) if p.name in means else p
            for p in self.parameters
        )
        return replace(self, parameters=params)


def validate_model(m: ModelSpec) -> None:
    """
    Check the declaration invariants of a model.

    Raises:
        ModelValidationError: On duplicate names, missing or surplus
            equations, unresolved symbols or invalid numeric fields
    """
    seen: Dict[str, str] = {}
    decls = (
        [("variable", v.name) for v in m.variables]
        + [("parameter", p.name) for p in m.parameters]
        + [("input", i.name) for i in m.inputs]
    )
    for kind, name in decls:
        if name == TIME_SYMBOL:
            raise ModelValidationError(f"'{TIME_SYMBOL}' is reserved for time and cannot name a {kind}")
        if name in seen:
            raise ModelValidationError(f"duplicate declaration of {name!r} ({seen[name]} and {kind})")
        seen[name] = kind

    if len(m.equations) != len(m.variables):
        raise ModelValidationError(
            f"model has {len(m.variables)} variable(s) but {len(m.equations)} equation(s)"
        )

    for v in m.variables:
        if not math.isfinite(v.initial_value):
            raise ModelValidationError(f"initial value of {v.name!r} is not finite")

    for p in m.parameters:
        if not math.isfinite(p.prior_mean):
            raise ModelValidationError(f"prior mean of {p.name!r} is not finite")
        if not (p.prior_sd > 0 and math.isfinite(p.prior_sd)):
            raise ModelValidationError(f"prior sd of {p.name!r} must be positive, got {p.prior_sd}")
        if not p.lower_bound < p.upper_bound:
            raise ModelValidationError(
                f"bounds of {p.name!r} must satisfy lower < upper, got ({p.lower_bound}, {p.upper_bound})"
            )

    for i in m.inputs:
        if i.interpolation != "linear":
            raise ModelValidationError(f"unsupported interpolation {i.interpolation!r} for {i.name!r}")

    known = set(seen) | {TIME_SYMBOL}
    for v, rhs_expr in zip(m.variables, m.equations):
        unresolved = sorted(symbols(rhs_expr) - known)
        if unresolved:
            raise ModelValidationError(
                f"unresolved symbol(s) in equation for {v.name!r}: {', '.join(unresolved)}"
            )

    observed = set()
    for o in m.observations:
        if o.variable not in m.variable_names:
            raise ModelValidationError(f"observation declared on unknown variable {o.variable!r}")
        if o.variable in observed:
            raise ModelValidationError(f"duplicate observation of {o.variable!r}")
        if not (o.noise_sd > 0 and math.isfinite(o.noise_sd)):
            raise ModelValidationError(f"observation noise of {o.variable!r} must be positive")
        observed.add(o.variable)


def _real(text: str) -> float:
    return float(text)


def parse_model(source_text: str) -> ModelSpec:
    """
    Parse model source text into a validated ModelSpec.

    Args:
        source_text: Model source in the line-oriented model language

    Returns:
        Validated ModelSpec

    Raises:
        ModelSyntaxError: On a line that matches no statement form, with
            line and column
        ModelValidationError: On unresolved symbols, duplicate declarations
            or a variable without an equation
    """
    name: Optional[str] = None
    variables: List[VariableDecl] = []
    parameters: List[ParameterDecl] = []
    inputs: List[InputDecl] = []
    observations: List[ObsDecl] = []
    equations: Dict[str, Expr] = {}

    for lineno, raw in enumerate(source_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.lstrip()
        if not stripped:
            continue
        indent = len(line) - len(stripped)
        keyword = stripped.split(None, 1)[0]

        if keyword == "model":
            match = _MODEL_RE.match(stripped)
            if match is None:
                raise ModelSyntaxError("expected 'model <name>'", lineno, indent + 1)
            if name is not None:
                raise ModelValidationError(f"line {lineno}: model name declared twice")
            name = match["name"]

        elif keyword == "var":
            match = _VAR_RE.match(stripped)
            if match is None:
                raise ModelSyntaxError("expected 'var <ident> = <real>'", lineno, indent + 1)
            variables.append(VariableDecl(match["name"], _real(match["value"])))

        elif keyword == "param":
            match = _PARAM_RE.match(stripped)
            if match is None:
                raise ModelSyntaxError(
                    "expected 'param <ident> ~ N(<mean>, <sd>) [in (<lo>, <hi>)]'",
                    lineno, indent + 1,
                )
            lo = _real(match["lo"]) if match["lo"] is not None else -math.inf
            hi = _real(match["hi"]) if match["hi"] is not None else math.inf
            parameters.append(
                ParameterDecl(match["name"], _real(match["mean"]), _real(match["sd"]), lo, hi)
            )

        elif keyword == "input":
            match = _INPUT_RE.match(stripped)
            if match is None:
                raise ModelSyntaxError("expected 'input <ident> from <column>'", lineno, indent + 1)
            inputs.append(InputDecl(match["name"], match["column"]))

        elif keyword == "eq":
            match = _EQ_RE.match(stripped)
            if match is None:
                raise ModelSyntaxError("expected 'eq d<ident>/dt = <expression>'", lineno, indent + 1)
            var_name = match["name"]
            if var_name in equations:
                raise ModelValidationError(f"line {lineno}: duplicate equation for {var_name!r}")
            equations[var_name] = parse_expression(
                match["rhs"], line=lineno, column_offset=indent + match.start("rhs")
            )

        elif keyword == "obs":
            match = _OBS_RE.match(stripped)
            if match is None:
                raise ModelSyntaxError("expected 'obs <ident> noise <real>'", lineno, indent + 1)
            observations.append(ObsDecl(match["name"], _real(match["sd"])))

        else:
            raise ModelSyntaxError(f"unknown statement {keyword!r}", lineno, indent + 1)

    declared = [v.name for v in variables]
    for var_name in equations:
        if var_name not in declared:
            raise ModelValidationError(f"equation for undeclared variable {var_name!r}")
    for var_name in declared:
        if var_name not in equations:
            raise ModelValidationError(f"missing equation for variable {var_name!r}")

    return ModelSpec(
        name=name or "unnamed",
        variables=tuple(variables),
        parameters=tuple(parameters),
        inputs=tuple(inputs),
        equations=tuple(equations[v] for v in declared),
        observations=tuple(observations),
    )


def load_model(path) -> ModelSpec:
    """Read and parse a model file (UTF-8)."""
    with open(path, encoding="utf-8") as f:
        return parse_model(f.read())


def _format_real(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(float(value))


def format_model(m: ModelSpec) -> str:
    """Render a ModelSpec back into model source text."""
    lines = [f"model {m.name}"]
    for v in m.variables:
        lines.append(f"var {v.name} = {_format_real(v.initial_value)}")
    for p in m.parameters:
        line = f"param {p.name} ~ N({_format_real(p.prior_mean)}, {_format_real(p.prior_sd)})"
        if not (p.lower_bound == -math.inf and p.upper_bound == math.inf):
            line += f" in ({_format_real(p.lower_bound)}, {_format_real(p.upper_bound)})"
        lines.append(line)
    for i in m.inputs:
        lines.append(f"input {i.name} from {i.source}")
    for v, rhs_expr in zip(m.variables, m.equations):
        lines.append(f"eq d{v.name}/dt = {format_expr(rhs_expr)}")
    for o in m.observations:
        lines.append(f"obs {o.variable} noise {_format_real(o.noise_sd)}")
    return "\n".join(lines) + "\n"


def _bindings(m: ModelSpec, state: np.ndarray, params: np.ndarray,
              inputs: Optional[Sequence[float]], t: float) -> Dict[str, object]:
    bindings: Dict[str, object] = {TIME_SYMBOL: t}
    for i, name in enumerate(m.variable_names):
        bindings[name] = state[..., i]
    for i, name in enumerate(m.parameter_names):
        bindings[name] = params[..., i]
    values = () if inputs is None else inputs
    for i, name in enumerate(m.input_names):
        bindings[name] = values[i]
    return bindings


def rhs(m: ModelSpec, state: np.ndarray, params: np.ndarray,
        inputs: Optional[Sequence[float]] = None, t: float = 0.0,
        strict: bool = True) -> np.ndarray:
    """
    Evaluate the derivative vector f(x, theta, u, t).

    ``state`` and ``params`` are either vectors (one model instance) or
    arrays of shape (N, n_vars) / (N, n_params) evaluated row-wise.

    Args:
        m: Model
        state: Variable values in declaration order
        params: Parameter values in declaration order
        inputs: Input values at time ``t`` in declaration order
        t: Model time
        strict: Raise on non-finite derivatives instead of returning them

    Returns:
        Derivatives, same shape as ``state``

    Raises:
        ExprDomainError: In strict mode, naming the offending variable
    """
    state = np.asarray(state, dtype=float)
    params = np.asarray(params, dtype=float)
    if state.shape[-1] != len(m.variables) or params.shape[-1] != len(m.parameters):
        raise ModelValidationError(
            f"expected {len(m.variables)} state and {len(m.parameters)} parameter values, "
            f"got {state.shape[-1]} and {params.shape[-1]}"
        )
    if len(m.inputs) and (inputs is None or len(inputs) != len(m.inputs)):
        raise ModelValidationError(f"expected {len(m.inputs)} input value(s)")

    batch_shape = state.shape[:-1]
    bindings = _bindings(m, state, params, inputs, t)
    out = np.empty(state.shape, dtype=float)
    for i, (name, rhs_expr) in enumerate(zip(m.variable_names, m.equations)):
        value = evaluate(rhs_expr, bindings)
        if strict and not np.all(np.isfinite(value)):
            raise ExprDomainError(
                f"non-finite derivative for {name!r} at t={t}", symbol=name
            )
        out[..., i] = np.broadcast_to(value, batch_shape)
    return out
