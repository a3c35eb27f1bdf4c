"""Core package for the ODE-DBN toolkit."""

from .errors import (ConfigError, DataFormatError, EvidenceError, ExprDomainError,
                     FilterFailure, IntegrationError, ModelSyntaxError,
                     ModelValidationError, NumericError, OdeDbnError, ValidationError)
from .expr import eval_expr, parse_expression
from .model_spec import ModelSpec, load_model, parse_model, rhs
from .integrate import GridSpec, Trajectory, integrate
from . import metrics

__all__ = [
    'OdeDbnError',
    'ValidationError',
    'ModelSyntaxError',
    'ModelValidationError',
    'ConfigError',
    'EvidenceError',
    'DataFormatError',
    'NumericError',
    'ExprDomainError',
    'IntegrationError',
    'FilterFailure',
    'parse_expression',
    'eval_expr',
    'ModelSpec',
    'parse_model',
    'load_model',
    'rhs',
    'GridSpec',
    'Trajectory',
    'integrate',
    'metrics',
]
