"""
Coefficient expression language: tokenizer, Pratt parser, evaluator and printer.
Expressions describe a(x, y) on the half-plane and the road potential f(x).
"""

import math
import re
import logging
from dataclasses import dataclass, field
from typing import Tuple, List, Optional, FrozenSet, Union

import numpy as np

from errors import ExpressionSyntaxError, UnknownIdentifierError, EvaluationDomainError

logger = logging.getLogger(__name__)

VARIABLES = ('x', 'y')
CONSTANTS = {'pi': math.pi, 'e': math.e}
# name -> (min arity, max arity); None means unbounded
FUNCTIONS = {
    'exp': (1, 1),
    'sin': (1, 1),
    'cos': (1, 1),
    'sqrt': (1, 1),
    'abs': (1, 1),
    'tanh': (1, 1),
    'min': (2, None),
    'max': (2, None),
}

# binding powers
_BP_ADD = 10
_BP_MUL = 20
_BP_NEG = 25
_BP_POW = 30


@dataclass(frozen=True)
class Number:
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Constant:
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Variable:
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Negate:
    operand: 'Node'
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: 'Node'
    right: 'Node'
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple['Node', ...]
    offset: int = field(default=0, compare=False)


Node = Union[Number, Constant, Variable, Negate, BinaryOp, Call]


@dataclass(frozen=True)
class Token:
    kind: str  # 'number', 'ident', 'op', 'end'
    text: str
    offset: int  # byte offset into the UTF-8 source


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


def _byte_offset(source: str, pos: int) -> int:
    return len(source[:pos].encode('utf-8'))


def tokenize(source: str) -> List[Token]:
    """Split expression text into tokens, tagging each with its byte offset."""
    tokens = []
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise ExpressionSyntaxError(
                f"Unexpected character {source[pos]!r}",
                offset=_byte_offset(source, pos),
                expected=['number', 'identifier', 'operator', '(']
            )
        kind = match.lastgroup
        if kind != 'ws':
            tokens.append(Token(kind, match.group(), _byte_offset(source, pos)))
        pos = match.end()
    tokens.append(Token('end', '', _byte_offset(source, len(source))))
    return tokens


class _Parser:
    """Pratt parser over a token list; one instance per parse call."""

    _INFIX = {'+': _BP_ADD, '-': _BP_ADD, '*': _BP_MUL, '/': _BP_MUL, '^': _BP_POW}

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def token(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str, expected: List[str]) -> Token:
        if self.token.text != text or self.token.kind == 'end':
            raise ExpressionSyntaxError(
                f"Expected {text!r} but found {self.token.text or 'end of input'!r}",
                offset=self.token.offset, expected=expected
            )
        return self.advance()

    def left_bp(self, tok: Token) -> int:
        if tok.kind == 'op':
            return self._INFIX.get(tok.text, 0)
        return 0

    def expression(self, rbp: int = 0) -> Node:
        left = self.prefix(self.advance())
        while rbp < self.left_bp(self.token):
            tok = self.advance()
            # ^ is right associative: parse its right side one notch weaker
            bp = _BP_POW - 1 if tok.text == '^' else self._INFIX[tok.text]
            right = self.expression(bp)
            left = BinaryOp(tok.text, left, right, tok.offset)
        if self.token.kind not in ('op', 'end'):
            raise ExpressionSyntaxError(
                f"Unexpected token {self.token.text!r}",
                offset=self.token.offset, expected=['+', '-', '*', '/', '^', ')', ',', 'end']
            )
        return left

    def prefix(self, tok: Token) -> Node:
        if tok.kind == 'number':
            return Number(float(tok.text), tok.offset)
        if tok.kind == 'ident':
            return self.identifier(tok)
        if tok.text == '-':
            return Negate(self.expression(_BP_NEG), tok.offset)
        if tok.text == '(':
            inner = self.expression()
            self.expect(')', [')'])
            return inner
        raise ExpressionSyntaxError(
            f"Unexpected {tok.text or 'end of input'!r}",
            offset=tok.offset, expected=['number', 'identifier', '-', '(']
        )

    def identifier(self, tok: Token) -> Node:
        name = tok.text
        if name in FUNCTIONS:
            self.expect('(', ['('])
            args = [self.expression()]
            while self.token.text == ',':
                self.advance()
                args.append(self.expression())
            self.expect(')', [')', ','])
            low, high = FUNCTIONS[name]
            if len(args) < low or (high is not None and len(args) > high):
                raise ExpressionSyntaxError(
                    f"Function {name} takes {low if high == low else f'at least {low}'} "
                    f"argument(s), got {len(args)}",
                    offset=tok.offset, expected=[]
                )
            return Call(name, tuple(args), tok.offset)
        if name in VARIABLES:
            return Variable(name, tok.offset)
        if name in CONSTANTS:
            return Constant(name, tok.offset)
        raise UnknownIdentifierError(f"Unknown identifier {name!r}", offset=tok.offset, name=name)


def to_text(node: Node) -> str:
    """Fully parenthesized rendering; re-parsing it yields the same tree."""
    if isinstance(node, Number):
        return repr(float(node.value))
    if isinstance(node, (Constant, Variable)):
        return node.name
    if isinstance(node, Negate):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinaryOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_text(a) for a in node.args)})"
    raise TypeError(f"Not an expression node: {node!r}")


def _variables(node: Node) -> FrozenSet[str]:
    if isinstance(node, Variable):
        return frozenset([node.name])
    if isinstance(node, Negate):
        return _variables(node.operand)
    if isinstance(node, BinaryOp):
        return _variables(node.left) | _variables(node.right)
    if isinstance(node, Call):
        return frozenset().union(*(_variables(a) for a in node.args))
    return frozenset()


def _domain_check(node: Node, values: np.ndarray, message: str, bad: Optional[np.ndarray] = None):
    if bad is None:
        bad = ~np.isfinite(values)
    if np.any(bad):
        raise EvaluationDomainError(message, to_text(node))


def _eval(node: Node, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if isinstance(node, Number):
        return np.full(np.broadcast(x, y).shape, node.value)
    if isinstance(node, Constant):
        return np.full(np.broadcast(x, y).shape, CONSTANTS[node.name])
    if isinstance(node, Variable):
        source = x if node.name == 'x' else y
        return np.broadcast_to(source, np.broadcast(x, y).shape).astype(float)
    if isinstance(node, Negate):
        return -_eval(node.operand, x, y)
    if isinstance(node, BinaryOp):
        left = _eval(node.left, x, y)
        right = _eval(node.right, x, y)
        if node.op == '+':
            result = left + right
        elif node.op == '-':
            result = left - right
        elif node.op == '*':
            result = left * right
        elif node.op == '/':
            _domain_check(node, right, "Division by zero", bad=(right == 0.0))
            result = left / right
        else:
            _domain_check(node, left, "Zero raised to a negative power",
                          bad=(left == 0.0) & (right < 0.0))
            _domain_check(node, left, "Negative base with non-integer exponent",
                          bad=(left < 0.0) & (right != np.round(right)))
            result = np.power(left, right)
        _domain_check(node, result, "Arithmetic overflow")
        return result
    if isinstance(node, Call):
        args = [_eval(a, x, y) for a in node.args]
        if node.name == 'sqrt':
            _domain_check(node, args[0], "Square root of a negative value", bad=(args[0] < 0.0))
            return np.sqrt(args[0])
        if node.name == 'min':
            return np.minimum.reduce(args)
        if node.name == 'max':
            return np.maximum.reduce(args)
        func = {'exp': np.exp, 'sin': np.sin, 'cos': np.cos, 'abs': np.abs, 'tanh': np.tanh}[node.name]
        result = func(args[0])
        _domain_check(node, result, f"Overflow in {node.name}")
        return result
    raise TypeError(f"Not an expression node: {node!r}")


@dataclass(frozen=True)
class Expression:
    """Parsed expression; immutable and safe to evaluate from any thread."""
    root: Node
    source: str = field(default='', compare=False)

    @property
    def variables(self) -> FrozenSet[str]:
        return _variables(self.root)

    def evaluate(self, x, y) -> np.ndarray:
        """Vectorized evaluation on broadcastable coordinate arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(all='ignore'):
            return _eval(self.root, x, y)

    def __str__(self) -> str:
        return to_text(self.root)


def parse(source: str) -> Expression:
    """
    Parse coefficient expression text.

    Args:
        source: Non-empty expression such as "1 - 0.1*(x^2 + y^2)"

    Returns:
        Expression with standard precedence (^ above * / above + -), left
        associative + - * / and right associative ^
    """
    if not isinstance(source, str) or not source.strip():
        raise ExpressionSyntaxError("Empty expression", offset=0, expected=['number', 'identifier', '-', '('])
    parser = _Parser(tokenize(source))
    root = parser.expression()
    if parser.token.kind != 'end':
        raise ExpressionSyntaxError(
            f"Unexpected trailing {parser.token.text!r}",
            offset=parser.token.offset, expected=['+', '-', '*', '/', '^', 'end']
        )
    return Expression(root, source)


def evaluate(expr: Expression, x: float, y: float) -> float:
    """Scalar evaluation at one point of the half-plane."""
    return float(expr.evaluate(x, y))
