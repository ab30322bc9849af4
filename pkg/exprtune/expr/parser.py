"""
Recursive descent parser for the expression mini-language.

Grammar (whitespace is insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := atom ['^' atom]
    atom   := number | ident | 'ln' '(' expr ')' | '(' expr ')' | '-' atom

Two dialects share the grammar. ``gp`` admits the four arithmetic operators
with numeric and feature atoms. ``budget`` additionally admits ``^``,
``ln(...)`` and the named constant ``e``.

A leading minus on a number gives a negative constant; on anything else it
gives ``(-1)*atom``.
"""

import math
import re
from collections.abc import Iterable
from enum import StrEnum
from typing import NamedTuple

from exprtune.errors import ExpressionSyntaxError
from exprtune.expr.tree import Binary, Constant, Expression, Feature, Op, Unary


class Dialect(StrEnum):
    GP = "gp"
    BUDGET = "budget"


_TOKEN_PATTERN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)

_BINARY_SYMBOLS = {"+": Op.ADD, "-": Op.SUB, "*": Op.MUL, "/": Op.DIV}


class Token(NamedTuple):
    kind: str
    text: str
    position: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    position = 0
    while True:
        match = _TOKEN_PATTERN.match(text, position)
        if match is None or match.end() == position:
            rest = text[position:]
            if rest.strip() == "":
                break
            offset = position + len(rest) - len(rest.lstrip())
            raise ExpressionSyntaxError(f"Unexpected character '{text[offset]}'", offset)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        position = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dialect: Dialect, features: set[str] | None):
        self.tokens = tokenize(text)
        self.index = 0
        self.dialect = dialect
        self.features = features

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text: str) -> Token:
        token = self.current
        if token.text != text or token.kind == "end":
            found = token.text or "end of input"
            raise ExpressionSyntaxError(f"Expected '{text}', found '{found}'", token.position)
        return self.advance()

    def parse(self) -> Expression:
        expr = self.expr()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(
                f"Unexpected '{self.current.text}'", self.current.position
            )
        return expr

    def expr(self) -> Expression:
        node = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = _BINARY_SYMBOLS[self.advance().text]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.factor()
        while self.current.kind == "op" and self.current.text in "*/":
            op = _BINARY_SYMBOLS[self.advance().text]
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Expression:
        base = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            token = self.advance()
            if self.dialect is Dialect.GP:
                raise ExpressionSyntaxError("'^' is not allowed in gp expressions", token.position)
            return Binary(Op.POW, base, self.atom())
        return base

    def atom(self) -> Expression:
        token = self.current
        if token.kind == "number":
            self.advance()
            value = float(token.text)
            if not math.isfinite(value):
                raise ExpressionSyntaxError(f"Number out of range: {token.text}", token.position)
            return Constant(value)
        if token.kind == "ident":
            self.advance()
            return self.identifier(token)
        if token.text == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if token.text == "-":
            self.advance()
            operand = self.atom()
            if isinstance(operand, Constant):
                return Constant(-operand.value)
            return Binary(Op.MUL, Constant(-1.0), operand)
        found = token.text or "end of input"
        raise ExpressionSyntaxError(f"Unexpected '{found}'", token.position)

    def identifier(self, token: Token) -> Expression:
        name = token.text
        if name == "ln":
            if self.dialect is Dialect.GP:
                raise ExpressionSyntaxError("ln is not allowed in gp expressions", token.position)
            self.expect("(")
            operand = self.expr()
            self.expect(")")
            return Unary(Op.LN, operand)
        if name == "e":
            if self.dialect is Dialect.GP:
                raise ExpressionSyntaxError(
                    "the constant e is not allowed in gp expressions", token.position
                )
            return Constant(math.e)
        if self.features is not None and name not in self.features:
            raise ExpressionSyntaxError(f"Unknown feature '{name}'", token.position)
        return Feature(name)


def parse(
    text: str,
    dialect: Dialect | str = Dialect.GP,
    features: Iterable[str] | None = None,
) -> Expression:
    """
    Parse infix ``text`` into an expression tree.

    Args:
        text: Expression in infix notation.
        dialect: ``gp`` or ``budget``.
        features: If given, the only feature names accepted.

    Raises:
        ExpressionSyntaxError: On malformed text or a dialect violation,
            with the offending position.
    """
    allowed = set(features) if features is not None else None
    return _Parser(text, Dialect(dialect), allowed).parse()
