"""
Expression trees for parameter mappings and budget formulas.

This package holds everything that works on trees:

- ``tree``: node types, evaluation, size/depth, formatting
- ``parser``: the infix mini-language in its ``gp`` and ``budget`` dialects
- ``variation``: grow/full generation, mutation and crossover
- ``simplify``: canonical forms and the RLS/EA reporting conversions
"""

from exprtune.expr.parser import Dialect, parse
from exprtune.expr.simplify import canonicalize, to_ea_form, to_rls_form
from exprtune.expr.tree import (
    GP_CONSTANTS,
    GP_OPERATORS,
    Binary,
    Constant,
    Expression,
    Feature,
    FeatureEnvironment,
    Op,
    Unary,
    depth,
    evaluate,
    features_of,
    format_expression,
    is_gp_tree,
    size,
    subtrees,
)
from exprtune.expr.variation import (
    InitMethod,
    crossover,
    mutate,
    random_tree,
    select_node,
)

__all__ = [
    "GP_CONSTANTS",
    "GP_OPERATORS",
    "Binary",
    "Constant",
    "Dialect",
    "Expression",
    "Feature",
    "FeatureEnvironment",
    "InitMethod",
    "Op",
    "Unary",
    "canonicalize",
    "crossover",
    "depth",
    "evaluate",
    "features_of",
    "format_expression",
    "is_gp_tree",
    "mutate",
    "parse",
    "random_tree",
    "select_node",
    "size",
    "subtrees",
    "to_ea_form",
    "to_rls_form",
]
