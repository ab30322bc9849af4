"""
Canonical forms and solver-specific simplification.

``canonicalize`` folds constants, removes neutral elements and orders the
operands of commutative operators, so that expressions can be counted by
structure. The two conversions turn evolved expressions into the form they
are reported in: integer constants for RLS, no additive constants for the EA.
"""

import math

from exprtune.errors import EvaluationError
from exprtune.expr.tree import (
    Binary,
    Constant,
    Expression,
    Feature,
    Op,
    Unary,
    apply_binary,
    apply_unary,
    format_expression,
)


def _is_constant(expr: Expression, value: float | None = None) -> bool:
    return isinstance(expr, Constant) and (value is None or expr.value == value)


def _order_key(expr: Expression) -> tuple[int, float, str]:
    # constants < features < compounds, then by value / name / text
    match expr:
        case Constant(value):
            return (0, value, "")
        case Feature(name):
            return (1, 0.0, name)
    return (2, 0.0, format_expression(expr))


def _eliminate_identity(op: Op, left: Expression, right: Expression) -> Expression | None:
    match op:
        case Op.ADD:
            if _is_constant(left, 0):
                return right
            if _is_constant(right, 0):
                return left
        case Op.SUB:
            if _is_constant(right, 0):
                return left
        case Op.MUL:
            if _is_constant(left, 0) or _is_constant(right, 0):
                return Constant(0.0)
            if _is_constant(left, 1):
                return right
            if _is_constant(right, 1):
                return left
        case Op.DIV:
            if _is_constant(right, 1):
                return left
    return None


def canonicalize(expr: Expression) -> Expression:
    """
    Canonical form of ``expr``; idempotent and value-preserving.
    """
    match expr:
        case Binary(op, left, right):
            left = canonicalize(left)
            right = canonicalize(right)
            if isinstance(left, Constant) and isinstance(right, Constant):
                try:
                    return Constant(apply_binary(op, left.value, right.value))
                except EvaluationError:
                    return Binary(op, left, right)
            simplified = _eliminate_identity(op, left, right)
            if simplified is not None:
                return simplified
            if op in (Op.ADD, Op.MUL) and _order_key(right) < _order_key(left):
                left, right = right, left
            return Binary(op, left, right)
        case Unary(op, operand):
            operand = canonicalize(operand)
            if isinstance(operand, Constant):
                try:
                    return Constant(apply_unary(op, operand.value))
                except EvaluationError:
                    pass
            return Unary(op, operand)
    return expr


def _fixpoint(transform, expr: Expression) -> Expression:
    current = canonicalize(expr)
    while True:
        following = canonicalize(transform(current))
        if following == current:
            return current
        current = following


def _floor_constants(expr: Expression) -> Expression:
    match expr:
        case Constant(value) if not float(value).is_integer():
            return Constant(float(math.floor(value)))
        case Binary(op, left, right):
            return Binary(op, _floor_constants(left), _floor_constants(right))
        case Unary(op, operand):
            return Unary(op, _floor_constants(operand))
    return expr


def to_rls_form(expr: Expression) -> Expression:
    """
    Replace every non-integer constant r by floor(r), e.g. ``3/2`` becomes ``1``.

    Repeated until folding produces no new non-integer constant.
    """
    return _fixpoint(_floor_constants, expr)


def _drop_additive_constants(expr: Expression) -> Expression:
    match expr:
        case Binary(op, left, right):
            left = _drop_additive_constants(left)
            right = _drop_additive_constants(right)
            if op in (Op.ADD, Op.SUB) and _is_constant(right) and not _is_constant(left):
                return left
            # c - X keeps its constant: dropping it would flip the sign
            if op is Op.ADD and _is_constant(left) and not _is_constant(right):
                return right
            return Binary(op, left, right)
        case Unary(op, operand):
            return Unary(op, _drop_additive_constants(operand))
    return expr


def to_ea_form(expr: Expression) -> Expression:
    """
    Drop constants added to or subtracted from non-constant terms,
    e.g. ``1/(n+1)`` becomes ``1/n``.
    """
    return _fixpoint(_drop_additive_constants, expr)
