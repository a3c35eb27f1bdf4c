"""
Errors Module

Exception hierarchy shared by every stage of the pipeline. The CLI maps the
two families onto exit codes: validation problems exit with 2, numeric
failures with 3.
"""

from typing import Optional


class OdeDbnError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(OdeDbnError, ValueError):
    """Input (model text, config, evidence, data file) is not acceptable."""


class ModelSyntaxError(ValidationError):
    """
    Model source text does not follow the grammar.

    Attributes:
        line: 1-based line number in the source text
        column: 1-based column of the offending character
    """

    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class ModelValidationError(ValidationError):
    """Model parses but violates a declaration invariant."""


class ConfigError(ValidationError):
    """Run, filter or noise configuration is invalid."""


class EvidenceError(ValidationError):
    """Evidence stream or sampling schedule is invalid."""


class DataFormatError(ValidationError):
    """A CSV file does not match its expected schema."""


class NumericError(OdeDbnError, ArithmeticError):
    """A computation produced a non-finite or undefined value."""


class ExprDomainError(NumericError):
    """
    Expression evaluation left the real domain.

    Attributes:
        symbol: Name of the variable (or symbol) being evaluated, if known
    """

    def __init__(self, message: str, symbol: Optional[str] = None):
        self.symbol = symbol
        super().__init__(message)


class IntegrationError(NumericError):
    """Integration reached a non-finite state or lacks input coverage."""

    def __init__(self, message: str, time: Optional[float] = None,
                 variable: Optional[str] = None):
        self.time = time
        self.variable = variable
        super().__init__(message)


class FilterFailure(NumericError):
    """Every particle has zero weight."""

    def __init__(self, message: str, time: Optional[float] = None):
        self.time = time
        super().__init__(message)
