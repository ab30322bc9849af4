import math
from collections import Counter

import numpy as np
import pytest

from exprtune.errors import EvaluationError, ExpressionSyntaxError
from exprtune.expr import (
    GP_CONSTANTS,
    Binary,
    Constant,
    Dialect,
    Feature,
    InitMethod,
    Op,
    Unary,
    canonicalize,
    crossover,
    depth,
    evaluate,
    features_of,
    format_expression,
    is_gp_tree,
    mutate,
    parse,
    random_tree,
    select_node,
    size,
    subtrees,
    to_ea_form,
    to_rls_form,
)
from exprtune.expr.tree import SATURATION, node_depths, replace_subtree
from exprtune.streams import stream

JUMP_FEATURES = ("m", "n")


def random_environment(rng):
    return {"m": float(rng.integers(2, 10)), "n": float(rng.integers(10, 1000))}


@pytest.mark.parametrize(
    "text, env, expected",
    [
        ("2/n", {"n": 10}, 0.2),
        ("1", {"n": 500}, 1.0),
        ("m/n", {"m": 3, "n": 20}, 0.15),
        ("1/(n - n)", {"n": 7}, 1.0),
        ("-2*n + 1", {"n": 4}, -7.0),
    ],
)
def test_evaluate(text, env, expected):
    """
    Test evaluation of parsed gp expressions, including protected division.
    """
    assert evaluate(parse(text), env) == pytest.approx(expected)


def test_evaluate_unbound_feature_names_symbol():
    with pytest.raises(EvaluationError, match="'m'"):
        evaluate(parse("m/n"), {"n": 10})


def test_evaluate_saturates():
    expr = parse("n*n*n*n*n*n*n*n*n*n")
    value = evaluate(expr, {"n": 1e20})
    assert value == SATURATION
    assert math.isfinite(evaluate(Binary(Op.DIV, Constant(1.0), expr), {"n": 1e20}))


@pytest.mark.parametrize(
    "text, env, expected",
    [
        ("2*e*n*ln(n)", {"n": 100}, 2503),
        ("n^m", {"m": 2, "n": 10}, 100),
        ("0.75*n^2", {"n": 10}, 75),
        ("e*n^m", {"m": 2, "n": 10}, 271),
    ],
)
def test_budget_dialect(text, env, expected):
    """
    Test that budget formulas evaluate to the expected floored evaluation counts.
    """
    assert math.floor(evaluate(parse(text, Dialect.BUDGET), env)) == expected


def test_ln_outside_domain_is_an_error():
    with pytest.raises(EvaluationError):
        evaluate(parse("ln(n - n)", Dialect.BUDGET), {"n": 5})


def test_parse_structure():
    assert parse("1/(n+1)") == Binary(
        Op.DIV, Constant(1.0), Binary(Op.ADD, Feature("n"), Constant(1.0))
    )
    assert parse("e", Dialect.BUDGET) == Constant(math.e)
    assert parse("ln(n)", Dialect.BUDGET) == Unary(Op.LN, Feature("n"))
    assert parse("-n") == Binary(Op.MUL, Constant(-1.0), Feature("n"))
    assert parse("-2") == Constant(-2.0)


@pytest.mark.parametrize("text", ["n^2", "ln(n)", "e*n", "2**n"])
def test_gp_dialect_rejects_budget_constructs(text):
    with pytest.raises(ExpressionSyntaxError):
        parse(text, Dialect.GP)


@pytest.mark.parametrize(
    "text, position",
    [
        ("1 +", 3),
        ("(n", 2),
        ("n $ 2", 2),
        ("2 n", 2),
    ],
)
def test_syntax_error_position(text, position):
    with pytest.raises(ExpressionSyntaxError) as info:
        parse(text)
    assert info.value.position == position


def test_parse_restricts_features():
    with pytest.raises(ExpressionSyntaxError, match="Unknown feature"):
        parse("m/n", features=("n",))
    assert parse("m/n", features=JUMP_FEATURES) == Binary(Op.DIV, Feature("m"), Feature("n"))


@pytest.mark.parametrize(
    "expr, text",
    [
        (parse("2/n"), "2/n"),
        (Binary(Op.ADD, Feature("n"), Constant(1.0)), "n + 1"),
        (parse("1/(n+1)"), "1/(n + 1)"),
        (parse("n - (n - 1)"), "n - (n - 1)"),
        (parse("n*(-1)"), "n*(-1)"),
        (parse("3/(2*n)"), "3/(2*n)"),
        (parse("2*e*n*ln(n)", Dialect.BUDGET), "2*e*n*ln(n)"),
        (parse("(n+1)^m", Dialect.BUDGET), "(n + 1)^m"),
        (Constant(0.5), "0.5"),
    ],
)
def test_format(expr, text):
    assert format_expression(expr) == text


def test_round_trip_on_random_trees():
    """
    Test that parsing the formatted text gives back the same tree.
    """
    rng = stream(11)
    for index in range(10_000):
        method = InitMethod.GROW if index % 2 else InitMethod.FULL
        tree = random_tree(method, int(rng.integers(1, 6)), rng, JUMP_FEATURES)
        assert parse(format_expression(tree)) == tree


@pytest.mark.parametrize(
    "text, expected",
    [("n", 1), ("1/n", 3), ("(m/n)+1", 5)],
)
def test_size(text, expected):
    assert size(parse(text)) == expected


def test_depth_and_node_depths():
    expr = parse("(m/n)+1")
    assert depth(expr) == 3
    assert node_depths(expr) == [1, 2, 3, 3, 2]
    assert [format_expression(node) for node in subtrees(expr)] == [
        "m/n + 1",
        "m/n",
        "m",
        "n",
        "1",
    ]


def test_replace_subtree():
    expr = parse("1/n")
    assert replace_subtree(expr, 2, Constant(2.0)) == parse("1/2")
    with pytest.raises(IndexError):
        replace_subtree(expr, 3, Constant(2.0))


def test_features_of():
    assert features_of(parse("m/n + 1")) == {"m", "n"}
    assert features_of(parse("2")) == set()


def test_random_tree_full_depth_one_is_terminal():
    rng = stream(1)
    for _ in range(50):
        tree = random_tree(InitMethod.FULL, 1, rng, ("n",))
        assert isinstance(tree, (Constant, Feature))


def test_random_tree_full_depth_two_has_three_nodes():
    rng = stream(2)
    for _ in range(50):
        assert size(random_tree(InitMethod.FULL, 2, rng, ("n",))) == 3


@pytest.mark.parametrize("max_depth", [1, 3, 5, 8])
def test_random_tree_shapes(max_depth):
    """
    Test that full trees have all leaves at max depth and grown trees never exceed it.
    """
    rng = stream(3, max_depth)
    for _ in range(200):
        full = random_tree(InitMethod.FULL, max_depth, rng, JUMP_FEATURES)
        leaf_depths = {
            level
            for node, level in zip(subtrees(full), node_depths(full))
            if not isinstance(node, Binary)
        }
        assert leaf_depths == {max_depth}
        grown = random_tree(InitMethod.GROW, max_depth, rng, JUMP_FEATURES)
        assert is_gp_tree(grown, JUMP_FEATURES, max_depth)


def test_random_tree_terminals_are_uniform():
    """
    Test that the six terminals of a two-feature problem are drawn with probability 1/6.
    """
    rng = stream(4)
    counts = Counter(
        random_tree(InitMethod.FULL, 1, rng, JUMP_FEATURES) for _ in range(10_000)
    )
    terminals = [Constant(value) for value in GP_CONSTANTS] + [Feature("m"), Feature("n")]
    assert set(counts) == set(terminals)
    for terminal in terminals:
        assert counts[terminal] / 10_000 == pytest.approx(1 / 6, abs=0.02)


def test_mutate_terminal_gives_terminal():
    rng = stream(5)
    allowed = {Constant(value) for value in GP_CONSTANTS} | {Feature("n")}
    for _ in range(200):
        assert mutate(Feature("n"), rng, 8, ("n",)) in allowed


def test_select_node_is_uniform():
    """
    Test that the root of a three-node tree is chosen about a third of the time.
    """
    rng = stream(6)
    expr = parse("1/n")
    hits = sum(select_node(expr, rng) == 0 for _ in range(10_000))
    assert hits / 10_000 == pytest.approx(1 / 3, abs=0.02)


def test_variation_closure():
    """
    Test that mutation and crossover always produce valid gp trees within the depth bound.
    """
    rng = stream(7)
    max_depth = 5
    pool = [random_tree(InitMethod.GROW, 4, rng, JUMP_FEATURES) for _ in range(50)]
    for _ in range(2_000):
        a = pool[int(rng.integers(len(pool)))]
        b = pool[int(rng.integers(len(pool)))]
        child = mutate(crossover(a, b, rng, max_depth), rng, max_depth, JUMP_FEATURES)
        assert size(child) >= 1
        assert is_gp_tree(child, JUMP_FEATURES, max_depth)


def test_crossover_of_single_terminal_with_itself():
    rng = stream(8)
    assert crossover(Feature("n"), Feature("n"), rng, 8) == Feature("n")


def test_crossover_outcomes():
    """
    Test that gluing 2 into 1/n yields only 2, 1/2, 2/n or 1/n.
    """
    rng = stream(9)
    expected = {parse(text) for text in ("2", "1/2", "2/n", "1/n")}
    outcomes = {crossover(parse("1/n"), Constant(2.0), rng, 8) for _ in range(500)}
    assert outcomes <= expected
    assert outcomes >= {parse(text) for text in ("2", "1/2", "2/n")}


def test_crossover_returns_first_parent_when_every_splice_is_too_deep():
    """
    Test that crossover gives back the first parent after its retries when no splice fits the depth
    limit.
    """
    rng = stream(15)
    a = parse("(n + m)*(n - m)")
    b = parse("(1 + 2)/(m*n)")
    for _ in range(50):
        assert crossover(a, b, rng, 0) is a


def test_crossover_retries_before_falling_back():
    # under a depth limit of 2, a leaf of a can only take a leaf donor
    rng = stream(16)
    a = parse("n/m")
    b = parse("(1 + 2)/(m*(n - 1))")
    outcomes = {crossover(a, b, rng, 2) for _ in range(300)}
    assert all(depth(child) <= 2 for child in outcomes)
    assert a in outcomes
    assert len(outcomes) > 1


def test_crossover_nodes_come_from_parents():
    rng = stream(10)
    a = parse("m/n + 1")
    b = parse("2*(n - m)")
    parts = set(subtrees(a)) | set(subtrees(b))
    for _ in range(200):
        child = crossover(a, b, rng, 8)
        for node in subtrees(child):
            if not isinstance(node, Binary):
                assert node in parts


@pytest.mark.parametrize(
    "text, expected",
    [
        ("n*1", "n"),
        ("2/(1+1)", "1"),
        ("n + 0", "n"),
        ("0*m", "0"),
        ("n/1", "n"),
        ("n/(n - n)", "n/(n - n)"),
        ("1/(n*2)", "1/(2*n)"),
        ("n + m", "m + n"),
    ],
)
def test_canonicalize(text, expected):
    assert canonicalize(parse(text)) == parse(expected)


def test_canonicalize_orders_commutative_operands():
    assert canonicalize(parse("n*2")) == canonicalize(parse("2*n"))
    assert canonicalize(parse("(n+1)*m")) == canonicalize(parse("m*(1+n)"))


def test_canonicalize_is_idempotent_and_value_preserving():
    """
    Test canonical forms on random trees: idempotent, and equal values on random environments.
    """
    rng = stream(12)
    for _ in range(500):
        tree = random_tree(InitMethod.GROW, 5, rng, JUMP_FEATURES)
        canonical = canonicalize(tree)
        assert canonicalize(canonical) == canonical
        for _ in range(20):
            env = random_environment(rng)
            assert evaluate(canonical, env) == pytest.approx(
                evaluate(tree, env), rel=1e-9, abs=1e-9
            )


@pytest.mark.parametrize(
    "text, expected",
    [
        ("3/2", "1"),
        ("m", "m"),
        ("2*m/4", "2*m/4"),
        ("n/2 + 1/2", "n/2"),
        ("-1/2", "-1"),
    ],
)
def test_to_rls_form(text, expected):
    assert to_rls_form(canonicalize(parse(text))) == canonicalize(parse(expected))


def test_to_rls_form_of_constant_expressions_is_integer():
    rng = stream(13)
    for _ in range(300):
        tree = random_tree(InitMethod.GROW, 4, rng, ())
        value = evaluate(to_rls_form(tree), {})
        assert float(value).is_integer()


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1/(n+1)", "1/n"),
        ("2/n", "2/n"),
        ("1/(n-2)", "1/n"),
        ("1/(2 + n)", "1/n"),
        ("3/2", "3/2"),
        ("1/(1 - n)", "1/(1 - n)"),
        ("(n + 1)/(n*2 - 1)", "n/(2*n)"),
    ],
)
def test_to_ea_form(text, expected):
    assert to_ea_form(canonicalize(parse(text))) == canonicalize(parse(expected))


def test_protected_division_is_total():
    rng = stream(14)
    for _ in range(500):
        tree = random_tree(InitMethod.FULL, 5, rng, JUMP_FEATURES)
        value = evaluate(tree, {"m": 0.0, "n": 0.0})
        assert np.isfinite(value)
