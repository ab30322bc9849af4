"""
Immutable arithmetic expression trees.

A tree is built from four node types: ``Constant``, ``Feature``, ``Binary``
and ``Unary``. Evolved parameter expressions only use ``Binary`` nodes with
the four arithmetic operators; ``pow`` and ``ln`` are reserved for budget
formulas. Nodes are frozen dataclasses, so trees compare structurally, hash
by structure and can be shared freely between workers.

Evaluation is total on finite inputs: division by zero yields 1 and every
intermediate value is saturated to +/-1e150.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from enum import StrEnum

from exprtune.errors import EvaluationError


class Op(StrEnum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"
    POW = "pow"
    LN = "ln"


#: Operators available to evolved trees.
GP_OPERATORS: tuple[Op, ...] = (Op.ADD, Op.SUB, Op.MUL, Op.DIV)

#: Constant terminals available to evolved trees.
GP_CONSTANTS: tuple[float, ...] = (1.0, 2.0, -1.0, -2.0)

SYMBOLS = {Op.ADD: "+", Op.SUB: "-", Op.MUL: "*", Op.DIV: "/", Op.POW: "^"}
PRECEDENCE = {Op.ADD: 1, Op.SUB: 1, Op.MUL: 2, Op.DIV: 2, Op.POW: 3}

SATURATION = 1e150


@dataclass(frozen=True, slots=True)
class Constant:
    value: float


@dataclass(frozen=True, slots=True)
class Feature:
    name: str


@dataclass(frozen=True, slots=True)
class Binary:
    op: Op
    left: Expression
    right: Expression


@dataclass(frozen=True, slots=True)
class Unary:
    op: Op
    operand: Expression


Expression = Constant | Feature | Binary | Unary

#: One row of the feature matrix: feature symbol -> value.
FeatureEnvironment = Mapping[str, float]


def _saturate(value: float) -> float:
    if value > SATURATION:
        return SATURATION
    if value < -SATURATION:
        return -SATURATION
    return value


def apply_binary(op: Op, left: float, right: float) -> float:
    """Apply a binary operator with protected division and saturation."""
    match op:
        case Op.ADD:
            return _saturate(left + right)
        case Op.SUB:
            return _saturate(left - right)
        case Op.MUL:
            return _saturate(left * right)
        case Op.DIV:
            if right == 0:
                return 1.0
            return _saturate(left / right)
        case Op.POW:
            try:
                result = math.pow(left, right)
            except OverflowError:
                return SATURATION
            except (ValueError, ZeroDivisionError):
                raise EvaluationError(f"Power {left}^{right} is undefined")
            return _saturate(result)
    raise EvaluationError(f"Unknown binary operator: {op}")


def apply_unary(op: Op, operand: float) -> float:
    if op is Op.LN:
        if operand <= 0:
            raise EvaluationError(f"ln is undefined for {operand}")
        return math.log(operand)
    raise EvaluationError(f"Unknown unary operator: {op}")


def evaluate(expr: Expression, env: FeatureEnvironment) -> float:
    """
    Evaluate ``expr`` with feature values taken from ``env``.

    Raises:
        EvaluationError: If a feature is unbound, or a budget-only operator
            is applied outside its domain.
    """
    match expr:
        case Constant(value):
            return float(value)
        case Feature(name):
            try:
                return _saturate(float(env[name]))
            except KeyError:
                raise EvaluationError(f"Unbound feature '{name}'") from None
        case Binary(op, left, right):
            return apply_binary(op, evaluate(left, env), evaluate(right, env))
        case Unary(op, operand):
            return apply_unary(op, evaluate(operand, env))
    raise TypeError(f"Not an expression: {expr!r}")


def size(expr: Expression) -> int:
    """Total number of nodes."""
    match expr:
        case Binary(_, left, right):
            return 1 + size(left) + size(right)
        case Unary(_, operand):
            return 1 + size(operand)
    return 1


def depth(expr: Expression) -> int:
    """Depth of the tree; a single node has depth 1."""
    match expr:
        case Binary(_, left, right):
            return 1 + max(depth(left), depth(right))
        case Unary(_, operand):
            return 1 + depth(operand)
    return 1


def subtrees(expr: Expression) -> list[Expression]:
    """All subtrees in preorder; index 0 is the tree itself."""
    nodes = []
    stack = [expr]
    while stack:
        node = stack.pop()
        nodes.append(node)
        match node:
            case Binary(_, left, right):
                stack.append(right)
                stack.append(left)
            case Unary(_, operand):
                stack.append(operand)
    return nodes


def node_depths(expr: Expression) -> list[int]:
    """Depth of every node, aligned with ``subtrees``."""
    depths = []
    stack = [(expr, 1)]
    while stack:
        node, level = stack.pop()
        depths.append(level)
        match node:
            case Binary(_, left, right):
                stack.append((right, level + 1))
                stack.append((left, level + 1))
            case Unary(_, operand):
                stack.append((operand, level + 1))
    return depths


def replace_subtree(expr: Expression, index: int, replacement: Expression) -> Expression:
    """Return a new tree with the preorder node ``index`` replaced."""
    if not 0 <= index < size(expr):
        raise IndexError(f"Node index {index} out of range for tree of size {size(expr)}")
    return _replace(expr, index, replacement)


def _replace(node: Expression, index: int, replacement: Expression) -> Expression:
    if index == 0:
        return replacement
    match node:
        case Binary(op, left, right):
            left_size = size(left)
            if index <= left_size:
                return Binary(op, _replace(left, index - 1, replacement), right)
            return Binary(op, left, _replace(right, index - 1 - left_size, replacement))
        case Unary(op, operand):
            return Unary(op, _replace(operand, index - 1, replacement))
    raise IndexError(f"Node index {index} out of range")


def features_of(expr: Expression) -> set[str]:
    return {node.name for node in subtrees(expr) if isinstance(node, Feature)}


def is_gp_tree(expr: Expression, features: Iterable[str], max_depth: int) -> bool:
    """Check the invariants every evolved tree must satisfy."""
    allowed = set(features)
    if depth(expr) > max_depth:
        return False
    for node in subtrees(expr):
        match node:
            case Feature(name) if name not in allowed:
                return False
            case Binary(op, _, _) if op not in GP_OPERATORS:
                return False
            case Unary():
                return False
    return True


def format_number(value: float) -> str:
    if value == math.e:
        return "e"
    if value == 0:
        return "0"
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def format_expression(expr: Expression) -> str:
    """
    Infix text with minimal parentheses.

    ``+`` and ``-`` are spaced, ``*``, ``/`` and ``^`` are not. Negative
    constants inside a larger expression are parenthesized, as is any right
    operand of equal precedence, so that parsing the text gives back the
    same tree.
    """
    match expr:
        case Constant(value):
            return format_number(value)
        case Feature(name):
            return name
        case Unary(op, operand):
            return f"{op}({format_expression(operand)})"
        case Binary(op, left, right):
            left_text = _format_operand(left, op, right_side=False)
            right_text = _format_operand(right, op, right_side=True)
            if op in (Op.ADD, Op.SUB):
                return f"{left_text} {SYMBOLS[op]} {right_text}"
            return f"{left_text}{SYMBOLS[op]}{right_text}"
    raise TypeError(f"Not an expression: {expr!r}")


def _format_operand(child: Expression, parent_op: Op, right_side: bool) -> str:
    text = format_expression(child)
    match child:
        case Constant(value) if value < 0:
            return f"({text})"
        case Binary(op, _, _):
            if parent_op is Op.POW:
                return f"({text})"
            child_precedence = PRECEDENCE[op]
            parent_precedence = PRECEDENCE[parent_op]
            if child_precedence < parent_precedence or (
                right_side and child_precedence == parent_precedence
            ):
                return f"({text})"
    return text
