"""
Expression Module

Abstract syntax tree, Pratt parser and evaluator for the right-hand sides of
model equations. Evaluation works on plain floats and, element-wise, on
numpy arrays so a whole particle ensemble is evaluated in one pass.
"""

import re
from dataclasses import dataclass
from typing import FrozenSet, Iterator, List, Mapping, Tuple, Union

import numpy as np

from .errors import ExprDomainError, ModelSyntaxError, ModelValidationError


Number = Union[float, np.ndarray]


@dataclass(frozen=True)
class Const:
    """Numeric literal."""
    value: float


@dataclass(frozen=True)
class Symbol:
    """Reference to a variable, parameter, input or the time symbol ``t``."""
    name: str


@dataclass(frozen=True)
class Neg:
    """Unary negation."""
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    """Binary arithmetic: one of ``+ - * / ^``."""
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    """Built-in function call (``pow`` or ``exp``)."""
    func: str
    args: Tuple["Expr", ...]


Expr = Union[Const, Symbol, Neg, BinOp, Call]


_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}

# name -> (arity, implementation)
FUNCTIONS = {
    "pow": (2, np.power),
    "exp": (1, np.exp),
}

# Left binding powers. Unary minus binds tighter than * and / but looser
# than ^, so -a^2 is -(a^2) and -a*X is (-a)*X.
_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_BP = 25

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


@dataclass(frozen=True)
class _Token:
    kind: str   # number | ident | op | end
    text: str
    column: int


def _tokenize(text: str, line: int, column_offset: int) -> Iterator[_Token]:
    pos = 0
    length = len(text)
    while pos < length:
        if text[pos:].strip() == "":
            break
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos or match.lastgroup is None:
            # Skip whitespace to point at the offending character
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ModelSyntaxError(
                f"unexpected character {text[bad]!r}", line, column_offset + bad + 1
            )
        kind = match.lastgroup
        start = match.start(kind)
        yield _Token(kind, match.group(kind), column_offset + start + 1)
        pos = match.end()
    yield _Token("end", "", column_offset + length + 1)


class _Parser:
    """Top-down operator precedence parser over a token list."""

    def __init__(self, text: str, line: int, column_offset: int):
        self.tokens: List[_Token] = list(_tokenize(text, line, column_offset))
        self.index = 0
        self.line = line

    @property
    def token(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        if tok.kind != "end":
            self.index += 1
        return tok

    def error(self, message: str, tok: _Token) -> ModelSyntaxError:
        return ModelSyntaxError(message, self.line, tok.column)

    def expect(self, text: str) -> None:
        tok = self.advance()
        if tok.kind != "op" or tok.text != text:
            found = tok.text or "end of expression"
            raise self.error(f"expected {text!r}, found {found!r}", tok)

    def lbp(self, tok: _Token) -> int:
        if tok.kind == "op":
            return _LBP.get(tok.text, 0)
        return 0

    def parse(self) -> Expr:
        expr = self.expression(0)
        if self.token.kind != "end":
            raise self.error(f"unexpected {self.token.text!r}", self.token)
        return expr

    def expression(self, rbp: int) -> Expr:
        tok = self.advance()
        left = self.nud(tok)
        while rbp < self.lbp(self.token):
            tok = self.advance()
            left = self.led(tok, left)
        return left

    def nud(self, tok: _Token) -> Expr:
        if tok.kind == "number":
            return Const(float(tok.text))
        if tok.kind == "ident":
            if self.token.kind == "op" and self.token.text == "(":
                return self.call(tok)
            return Symbol(tok.text)
        if tok.kind == "op" and tok.text == "-":
            return Neg(self.expression(_UNARY_BP))
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        found = tok.text or "end of expression"
        raise self.error(f"unexpected {found!r}", tok)

    def led(self, tok: _Token, left: Expr) -> Expr:
        if tok.text == "^":
            # right associative
            return BinOp("^", left, self.expression(_LBP["^"] - 1))
        return BinOp(tok.text, left, self.expression(_LBP[tok.text]))

    def call(self, name_tok: _Token) -> Expr:
        if name_tok.text not in FUNCTIONS:
            raise self.error(f"unknown function {name_tok.text!r}", name_tok)
        arity, _ = FUNCTIONS[name_tok.text]
        self.expect("(")
        args = [self.expression(0)]
        while self.token.kind == "op" and self.token.text == ",":
            self.advance()
            args.append(self.expression(0))
        self.expect(")")
        if len(args) != arity:
            raise self.error(
                f"{name_tok.text}() takes {arity} argument(s), got {len(args)}", name_tok
            )
        return Call(name_tok.text, tuple(args))


def parse_expression(text: str, line: int = 1, column_offset: int = 0) -> Expr:
    """
    Parse an infix arithmetic expression.

    Precedence from tightest to loosest: ``^`` (right associative), unary
    minus, ``* /``, ``+ -``.

    Args:
        text: Expression source
        line: Line number reported in syntax errors
        column_offset: Columns preceding ``text`` on its source line

    Returns:
        Expression tree

    Raises:
        ModelSyntaxError: If the text is not a well-formed expression
    """
    return _Parser(text, line, column_offset).parse()


def symbols(expr: Expr) -> FrozenSet[str]:
    """Return every symbol name referenced in the expression."""
    if isinstance(expr, Symbol):
        return frozenset([expr.name])
    if isinstance(expr, Const):
        return frozenset()
    if isinstance(expr, Neg):
        return symbols(expr.operand)
    if isinstance(expr, BinOp):
        return symbols(expr.left) | symbols(expr.right)
    if isinstance(expr, Call):
        found: FrozenSet[str] = frozenset()
        for arg in expr.args:
            found = found | symbols(arg)
        return found
    raise TypeError(f"not an expression node: {expr!r}")


def _evaluate(expr: Expr, bindings: Mapping[str, Number]) -> Number:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Symbol):
        try:
            return bindings[expr.name]
        except KeyError:
            raise ModelValidationError(f"unbound symbol {expr.name!r}") from None
    if isinstance(expr, BinOp):
        return _BINARY[expr.op](_evaluate(expr.left, bindings),
                                _evaluate(expr.right, bindings))
    if isinstance(expr, Neg):
        return np.negative(_evaluate(expr.operand, bindings))
    if isinstance(expr, Call):
        _, func = FUNCTIONS[expr.func]
        return func(*(_evaluate(arg, bindings) for arg in expr.args))
    raise TypeError(f"not an expression node: {expr!r}")


def evaluate(expr: Expr, bindings: Mapping[str, Number]) -> Number:
    """
    Evaluate without a finiteness check.

    Non-finite results (division by zero, 0 to a negative power) come back as
    inf/nan so batched callers can flag the affected elements themselves.
    """
    with np.errstate(all="ignore"):
        return _evaluate(expr, bindings)


def eval_expr(expr: Expr, bindings: Mapping[str, Number]) -> Number:
    """
    Evaluate an expression under a complete symbol binding.

    Args:
        expr: Expression tree
        bindings: Symbol name -> value (float or numpy array)

    Returns:
        Float for scalar bindings, array for array bindings

    Raises:
        ModelValidationError: If a symbol has no binding
        ExprDomainError: If the result is not finite
    """
    value = evaluate(expr, bindings)
    if not np.all(np.isfinite(value)):
        raise ExprDomainError(f"non-finite result evaluating {format_expr(expr)}")
    if np.ndim(value) == 0:
        return float(value)
    return value


def format_expr(expr: Expr) -> str:
    """
    Render an expression as source text.

    Every compound node is parenthesised, so parsing the output rebuilds an
    identical tree.
    """
    if isinstance(expr, Const):
        return repr(float(expr.value))
    if isinstance(expr, Symbol):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{format_expr(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({format_expr(expr.left)} {expr.op} {format_expr(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.func}({', '.join(format_expr(a) for a in expr.args)})"
    raise TypeError(f"not an expression node: {expr!r}")
