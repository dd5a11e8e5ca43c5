"""Coefficient expression language.

Coefficients ``a`` and ``f`` of a problem are written as small arithmetic
expressions over the variables ``theta``, ``u``, ``p`` and ``lambda``, e.g.
``lambda*u*(1-u^2)``. Expressions are parsed with a precedence-climbing
parser into an immutable tree which is compiled into nested closures;
partial derivatives are produced by differentiating the tree.

Evaluators work on floats and on :mod:`numpy` arrays alike.
"""

import logging
import re
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    ExpressionSyntaxError,
    NumericException,
    UnknownIdentifierError,
)

log = logging.getLogger(__name__)

VARIABLES = ("theta", "u", "p", "lambda")
"""Variables an expression may refer to, in evaluator argument order."""

CONSTANTS = {"pi": float(np.pi)}

_TOKEN_REGEX = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)

_BINARY_OPERATORS = {
    "+": (10, False),
    "-": (10, False),
    "*": (20, False),
    "/": (20, False),
    "^": (30, True),
}
"""Binary operator -> (precedence, right associative)."""

_UNARY_PRECEDENCE = 25
"""Unary minus binds tighter than ``*`` but looser than ``^``, so ``-u^2 == -(u^2)``."""

CompiledFn = Callable[[object, object, object, object], object]


class _NoSymbolicDerivative(Exception):
    pass


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str
    text: str
    offset: int


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    """Tokens of ``text``; offsets count UTF-8 bytes."""
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN_REGEX.match(text, pos)
        if not match or match.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExpressionSyntaxError(
                f"Unexpected character '{text[bad]}'", _byte_offset(text, bad)
            )
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind), _byte_offset(text, match.start(kind))))
        pos = match.end()
    tokens.append(_Token("end", "", _byte_offset(text, len(text))))
    return tokens


# --- tree ------------------------------------------------------------------


class Node:
    """Expression tree node."""

    __slots__ = ()

    def compile(self) -> CompiledFn:
        raise NotImplementedError("Abstract method")

    def diff(self, var: str) -> "Node":
        raise NotImplementedError("Abstract method")

    def variables(self) -> frozenset[str]:
        raise NotImplementedError("Abstract method")


@dataclass(frozen=True, slots=True)
class Num(Node):
    value: float

    def compile(self) -> CompiledFn:
        value = self.value
        return lambda theta, u, p, lam: value

    def diff(self, var: str) -> Node:
        return ZERO

    def variables(self) -> frozenset[str]:
        return frozenset()

    def __str__(self):
        return repr(self.value) if self.value < 0 else f"{self.value:g}"


ZERO = Num(0.0)
ONE = Num(1.0)


@dataclass(frozen=True, slots=True)
class Var(Node):
    name: str

    def compile(self) -> CompiledFn:
        if self.name == "theta":
            return lambda theta, u, p, lam: theta
        if self.name == "u":
            return lambda theta, u, p, lam: u
        if self.name == "p":
            return lambda theta, u, p, lam: p
        return lambda theta, u, p, lam: lam

    def diff(self, var: str) -> Node:
        return ONE if var == self.name else ZERO

    def variables(self) -> frozenset[str]:
        return frozenset({self.name})

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Neg(Node):
    operand: Node

    def compile(self) -> CompiledFn:
        fn = self.operand.compile()
        return lambda theta, u, p, lam: -fn(theta, u, p, lam)

    def diff(self, var: str) -> Node:
        return _neg(self.operand.diff(var))

    def variables(self) -> frozenset[str]:
        return self.operand.variables()

    def __str__(self):
        return f"(-{self.operand})"


@dataclass(frozen=True, slots=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node

    def compile(self) -> CompiledFn:
        lf = self.left.compile()
        rf = self.right.compile()
        if self.op == "+":
            return lambda theta, u, p, lam: lf(theta, u, p, lam) + rf(theta, u, p, lam)
        if self.op == "-":
            return lambda theta, u, p, lam: lf(theta, u, p, lam) - rf(theta, u, p, lam)
        if self.op == "*":
            return lambda theta, u, p, lam: lf(theta, u, p, lam) * rf(theta, u, p, lam)
        if self.op == "/":
            return lambda theta, u, p, lam: lf(theta, u, p, lam) / rf(theta, u, p, lam)

        if isinstance(self.right, Num) and float(self.right.value).is_integer():
            # integer powers are safe for negative bases
            exponent = int(self.right.value)
            return lambda theta, u, p, lam: lf(theta, u, p, lam) ** exponent
        return lambda theta, u, p, lam: np.power(
            lf(theta, u, p, lam), rf(theta, u, p, lam)
        )

    def diff(self, var: str) -> Node:
        dl = self.left.diff(var)
        dr = self.right.diff(var)
        if self.op == "+":
            return _add(dl, dr)
        if self.op == "-":
            return _sub(dl, dr)
        if self.op == "*":
            return _add(_mul(dl, self.right), _mul(self.left, dr))
        if self.op == "/":
            return _div(
                _sub(_mul(dl, self.right), _mul(self.left, dr)),
                _pow(self.right, Num(2.0)),
            )

        if dr == ZERO:
            if dl == ZERO:
                return ZERO
            c = self.right
            return _mul(_mul(c, _pow(self.left, _sub(c, ONE))), dl)
        # d(b^e) = b^e * (e' ln b + e b'/b)
        return _mul(
            self,
            _add(
                _mul(dr, Call("ln", self.left)),
                _div(_mul(self.right, dl), self.left),
            ),
        )

    def variables(self) -> frozenset[str]:
        return self.left.variables() | self.right.variables()

    def __str__(self):
        return f"({self.left}{self.op}{self.right})"


_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "ln": np.log,
    "abs": np.abs,
}


@dataclass(frozen=True, slots=True)
class Call(Node):
    name: str
    arg: Node

    def compile(self) -> CompiledFn:
        fn = _FUNCTIONS[self.name]
        arg = self.arg.compile()
        return lambda theta, u, p, lam: fn(arg(theta, u, p, lam))

    def diff(self, var: str) -> Node:
        inner = self.arg.diff(var)
        if inner == ZERO:
            return ZERO
        if self.name == "sin":
            outer = Call("cos", self.arg)
        elif self.name == "cos":
            outer = _neg(Call("sin", self.arg))
        elif self.name == "tan":
            outer = _add(ONE, _pow(Call("tan", self.arg), Num(2.0)))
        elif self.name == "exp":
            outer = self
        elif self.name == "ln":
            return _div(inner, self.arg)
        else:
            raise _NoSymbolicDerivative(self.name)
        return _mul(outer, inner)

    def variables(self) -> frozenset[str]:
        return self.arg.variables()

    def __str__(self):
        return f"{self.name}({self.arg})"


# Constructors folding constants and the 0/1 identities, so derivative trees stay small.


def _neg(a: Node) -> Node:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def _add(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return BinOp("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return BinOp("*", a, b)


def _div(a: Node, b: Node) -> Node:
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        return Num(a.value / b.value)
    return BinOp("/", a, b)


def _pow(a: Node, b: Node) -> Node:
    if b == ZERO:
        return ONE
    if b == ONE:
        return a
    if isinstance(a, Num) and isinstance(b, Num) and a.value > 0:
        return Num(a.value**b.value)
    return BinOp("^", a, b)


# --- parser ------------------------------------------------------------------


class _Parser:
    __slots__ = ["_tokens", "_pos"]

    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._pos = 0

    def _peek(self) -> _Token:
        return self._tokens[self._pos]

    def _next(self) -> _Token:
        token = self._tokens[self._pos]
        self._pos += 1
        return token

    def _expect(self, text: str) -> None:
        token = self._next()
        if token.text != text:
            what = "end of input" if token.kind == "end" else f"'{token.text}'"
            raise ExpressionSyntaxError(f"Expected '{text}', found {what}", token.offset)

    def parse(self) -> Node:
        tree = self._expression(0)
        token = self._peek()
        if token.kind != "end":
            raise ExpressionSyntaxError(f"Unexpected '{token.text}'", token.offset)
        return tree

    def _expression(self, min_precedence: int) -> Node:
        left = self._unary()
        while True:
            token = self._peek()
            if token.kind != "op" or token.text not in _BINARY_OPERATORS:
                break
            precedence, right_assoc = _BINARY_OPERATORS[token.text]
            if precedence < min_precedence:
                break
            self._next()
            right = self._expression(precedence if right_assoc else precedence + 1)
            left = BinOp(token.text, left, right)
        return left

    def _unary(self) -> Node:
        token = self._peek()
        if token.kind == "op" and token.text in ("-", "+"):
            self._next()
            operand = self._expression(_UNARY_PRECEDENCE)
            return Neg(operand) if token.text == "-" else operand
        return self._primary()

    def _primary(self) -> Node:
        token = self._next()

        if token.kind == "number":
            return Num(float(token.text))

        if token.kind == "name":
            if self._peek().text == "(":
                if token.text not in _FUNCTIONS:
                    raise UnknownIdentifierError(token.text, token.offset)
                self._next()
                arg = self._expression(0)
                self._expect(")")
                return Call(token.text, arg)
            if token.text in VARIABLES:
                return Var(token.text)
            if token.text in CONSTANTS:
                return Num(CONSTANTS[token.text])
            raise UnknownIdentifierError(token.text, token.offset)

        if token.text == "(":
            inner = self._expression(0)
            self._expect(")")
            return inner

        if token.kind == "end":
            raise ExpressionSyntaxError("Unexpected end of input", token.offset)
        raise ExpressionSyntaxError(f"Unexpected '{token.text}'", token.offset)


class Expression:
    """
    Parsed, compiled coefficient expression.

    Call it as ``expr(theta, u, p, lmbda)``; arguments may be floats or arrays.
    """

    __slots__ = [
        "__text",
        "__tree",
        "__fn",
        "__derivatives",
    ]

    def __init__(self, text: str, tree: Node):
        """
        :param text: Source text (kept for reports and hashing).
        :param tree: Parsed tree.
        """
        self.__text = text
        self.__tree = tree
        self.__fn = tree.compile()
        self.__derivatives = {}

    def __call__(self, theta, u, p, lmbda):
        try:
            return self.__fn(theta, u, p, lmbda)
        except (ZeroDivisionError, OverflowError) as ex:
            raise NumericException(
                f"Unable to evaluate '{self.__text}' at theta={theta}, u={u}, p={p}: {ex}",
                state=(theta, u, p),
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expression):
            raise NotImplementedError
        return self.tree == other.tree

    def __hash__(self):
        return hash(self.tree)

    def __repr__(self):
        return f"{self.__class__.__name__}(text={self.text!r})"

    @property
    def text(self) -> str:
        """Source text of the expression."""
        return self.__text

    @property
    def tree(self) -> Node:
        """Parsed expression tree."""
        return self.__tree

    @property
    def variables(self) -> frozenset[str]:
        """Variables the expression depends on."""
        return self.__tree.variables()

    def depends_on(self, var: str) -> bool:
        return var in self.variables

    @property
    def is_constant(self) -> bool:
        return not self.variables

    def derivative(self, var: str) -> "Expression | None":
        """
        Symbolic partial derivative.

        :param var: One of :data:`VARIABLES`.
        :return: Derivative expression, or ``None`` if the tree contains a function
            without a symbolic rule (callers then fall back to finite differences).
        """
        if var not in VARIABLES:
            raise UnknownIdentifierError(var, 0)
        if var not in self.__derivatives:
            try:
                tree = self.__tree.diff(var)
            except _NoSymbolicDerivative as ex:
                log.debug(f"No symbolic d/d{var} for '{self.__text}' (uses {ex})")
                self.__derivatives[var] = None
            else:
                self.__derivatives[var] = Expression(str(tree), tree)
        return self.__derivatives[var]


def parse_expression(text: str) -> Expression:
    """
    Parse a coefficient expression.

    :param text: Expression over ``theta``, ``u``, ``p``, ``lambda`` with ``+ - * / ^``,
        the functions ``sin cos tan exp ln abs``, numeric literals and the constant ``pi``.
    :raises ExpressionSyntaxError: On malformed input; :attr:`~.ExpressionSyntaxError.offset` is the byte offset.
    :raises UnknownIdentifierError: On unknown variables or functions.
    :return: Compiled expression.
    """
    if text is None:
        raise ExpressionSyntaxError("Expression is unset", 0)
    tree = _Parser(_tokenize(text)).parse()
    return Expression(text, tree)


def evaluate_constant(text: str) -> float:
    """
    Evaluate a variable-free expression such as ``pi/2``.

    :raises ExpressionSyntaxError: If the expression refers to variables.
    """
    expr = parse_expression(text)
    if not expr.is_constant:
        raise ExpressionSyntaxError(
            f"Constant expected, '{text}' uses {sorted(expr.variables)}", 0
        )
    return float(expr(0.0, 0.0, 0.0, 0.0))
