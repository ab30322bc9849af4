"""
Random tree generation and genetic variation.

Terminals are the constants 1, 2, -1, -2 plus the problem's features, all
drawn uniformly; operators are drawn uniformly from the four arithmetic
operators. Every operator takes an explicit random stream.
"""

from collections.abc import Sequence
from enum import StrEnum

from exprtune.expr.tree import (
    GP_CONSTANTS,
    GP_OPERATORS,
    Binary,
    Constant,
    Expression,
    Feature,
    depth,
    node_depths,
    replace_subtree,
    size,
    subtrees,
)
from exprtune.streams import RandomStream

#: Attempts at a depth-respecting splice before crossover gives up.
CROSSOVER_ATTEMPTS = 5

#: Depth of the subtree grown by subtree mutation.
MUTATION_SUBTREE_DEPTH = 2


class InitMethod(StrEnum):
    GROW = "grow"
    FULL = "full"


def terminal_set(features: Sequence[str]) -> tuple[Expression, ...]:
    return tuple(Constant(value) for value in GP_CONSTANTS) + tuple(
        Feature(name) for name in features
    )


def random_terminal(features: Sequence[str], rng: RandomStream) -> Expression:
    terminals = terminal_set(features)
    return terminals[int(rng.integers(len(terminals)))]


def random_tree(
    method: InitMethod | str,
    max_depth: int,
    rng: RandomStream,
    features: Sequence[str],
) -> Expression:
    """
    Generate a random tree with the grow or full method.

    ``full`` places every leaf at exactly ``max_depth``; ``grow`` picks
    uniformly among operators and terminals at each node above the limit,
    giving ragged trees of depth at most ``max_depth``.
    """
    if max_depth < 1:
        raise ValueError(f"max_depth must be at least 1, got {max_depth}")
    full = InitMethod(method) is InitMethod.FULL
    return _build(max_depth, full, rng, terminal_set(features))


def _build(
    depth_left: int, full: bool, rng: RandomStream, terminals: tuple[Expression, ...]
) -> Expression:
    if depth_left == 1:
        return terminals[int(rng.integers(len(terminals)))]
    if full:
        op = GP_OPERATORS[int(rng.integers(len(GP_OPERATORS)))]
    else:
        choice = int(rng.integers(len(GP_OPERATORS) + len(terminals)))
        if choice >= len(GP_OPERATORS):
            return terminals[choice - len(GP_OPERATORS)]
        op = GP_OPERATORS[choice]
    left = _build(depth_left - 1, full, rng, terminals)
    right = _build(depth_left - 1, full, rng, terminals)
    return Binary(op, left, right)


def select_node(expr: Expression, rng: RandomStream) -> int:
    """Preorder index of a uniformly chosen node."""
    return int(rng.integers(size(expr)))


def mutate(
    expr: Expression, rng: RandomStream, max_depth: int, features: Sequence[str]
) -> Expression:
    """
    Change the tree at one uniformly chosen node.

    A leaf becomes a fresh random terminal. An operator node either gets a
    resampled operator or is replaced by a grown depth-2 subtree, with equal
    probability; a subtree that would break ``max_depth`` is cut back to a
    terminal.
    """
    index = select_node(expr, rng)
    target = subtrees(expr)[index]
    if not isinstance(target, Binary):
        return replace_subtree(expr, index, random_terminal(features, rng))

    if rng.random() < 0.5:
        op = GP_OPERATORS[int(rng.integers(len(GP_OPERATORS)))]
        return replace_subtree(expr, index, Binary(op, target.left, target.right))

    replacement = random_tree(InitMethod.GROW, MUTATION_SUBTREE_DEPTH, rng, features)
    if node_depths(expr)[index] + depth(replacement) - 1 > max_depth:
        replacement = random_terminal(features, rng)
    return replace_subtree(expr, index, replacement)


def crossover(
    a: Expression, b: Expression, rng: RandomStream, max_depth: int
) -> Expression:
    """
    Glue a uniformly chosen subtree of ``b`` over a uniformly chosen node of ``a``.

    Splices deeper than ``max_depth`` are retried; after
    ``CROSSOVER_ATTEMPTS`` failures ``a`` is returned unchanged.
    """
    donors = subtrees(b)
    for _ in range(CROSSOVER_ATTEMPTS):
        point = select_node(a, rng)
        donor = donors[select_node(b, rng)]
        child = replace_subtree(a, point, donor)
        if depth(child) <= max_depth:
            return child
    return a
