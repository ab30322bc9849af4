"""
The genetic programming tuner.

A population of parameter expressions is evolved against a training set of
problem instances. Each candidate is scored by running the target solver
with the parameter its expression yields on every instance, several times,
and normalizing the best fitness found by the instance's reference value.

Replacement is steady-state: every offspring is compared with the current
members from the worst upwards and takes the place of the first one it
beats, either significantly (rank-sum test) or, when neither is
significantly better, by being smaller. At most a fixed fraction of the
population is replaced per generation.
"""

import json
import math
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import Executor
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Any

import numpy as np

from exprtune.errors import ConfigurationError, EvaluationError, ExpressionSyntaxError
from exprtune.expr import (
    Dialect,
    Expression,
    InitMethod,
    crossover,
    evaluate,
    mutate,
    parse,
    random_tree,
    size,
)
from exprtune.problems import (
    ProblemInstance,
    ProblemKind,
    feature_names,
    optimum,
    training_set,
)
from exprtune.solvers import SolverKind, SolverSpec, run_many
from exprtune.stats import rank_sum_test
from exprtune.streams import EVALUATION_STREAM, GP_STREAM, RandomStream, derive_seed, stream
from utils.logging import log_execution_time, logger

_INT_FIELDS = {
    "generations": 0,
    "population_size": 2,
    "tournament_size": 1,
    "runs": 1,
    "seed": 0,
    "max_depth": 1,
    "init_depth": 1,
}
_UNIT_FIELDS = ("replacement_cap", "mutation_probability", "crossover_rate", "init_grow_fraction")


@dataclass(frozen=True)
class TunerConfig:
    """
    Everything one tuner run needs.

    Defaults follow the standard setup: 100 generations, 20 trees,
    tournaments of 5, at most 75% replaced per generation, crossover rate
    0.8, mutation probability 0.2, 10 solver runs per instance and a
    rank-sum threshold of 0.02.
    """

    problem: ProblemKind
    solver: SolverKind
    budget: str
    generations: int = 100
    population_size: int = 20
    tournament_size: int = 5
    replacement_cap: float = 0.75
    mutation_probability: float = 0.2
    crossover_rate: float = 0.8
    runs: int = 10
    alpha: float = 0.02
    seed: int = 0
    max_depth: int = 8
    init_depth: int = 4
    init_grow_fraction: float = 0.5
    use_known_optima: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, "problem", ProblemKind(self.problem))
            object.__setattr__(self, "solver", SolverKind(self.solver))
        except ValueError as e:
            raise ConfigurationError(str(e))
        for name, minimum in _INT_FIELDS.items():
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigurationError(f"{name} must be an integer, got {value!r}")
            if value < minimum:
                raise ConfigurationError(f"{name} must be at least {minimum}, got {value}")
        for name in (*_UNIT_FIELDS, "alpha"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigurationError(f"{name} must be a number, got {value!r}")
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        if self.crossover_rate == 0:
            raise ConfigurationError("crossover_rate must be positive")
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.tournament_size > self.population_size:
            raise ConfigurationError(
                f"tournament_size ({self.tournament_size}) exceeds "
                f"population_size ({self.population_size})"
            )
        if self.init_depth > self.max_depth:
            raise ConfigurationError(
                f"init_depth ({self.init_depth}) exceeds max_depth ({self.max_depth})"
            )
        if not isinstance(self.use_known_optima, bool):
            raise ConfigurationError("use_known_optima must be true or false")
        if not isinstance(self.budget, str):
            raise ConfigurationError(f"budget must be an expression string, got {self.budget!r}")
        try:
            self.budget_expression
        except ExpressionSyntaxError as e:
            raise ConfigurationError(f"Invalid budget expression {self.budget!r}: {e}")

    @cached_property
    def budget_expression(self) -> Expression:
        return parse(self.budget, Dialect.BUDGET, self.features)

    @property
    def features(self) -> tuple[str, ...]:
        return feature_names(self.problem)

    @property
    def solver_spec(self) -> SolverSpec:
        return SolverSpec(self.solver)

    def to_dict(self) -> dict[str, Any]:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data["problem"] = str(self.problem)
        data["solver"] = str(self.solver)
        return data

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "TunerConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"Unknown configuration keys: {', '.join(unknown)}")
        missing = [name for name in ("problem", "solver", "budget") if name not in data]
        if missing:
            raise ConfigurationError(f"Missing configuration keys: {', '.join(missing)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str) -> "TunerConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigurationError(f"Configuration file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Configuration file {path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigurationError(f"Configuration file {path} must hold a JSON object")
        return cls.from_mapping(data)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "TunerConfig":
        return self.from_mapping({**self.to_dict(), **overrides})


def evaluate_budget(budget_expression: Expression, instance: ProblemInstance) -> int:
    """
    Number of fitness evaluations allowed on ``instance``, floored.

    Raises:
        ConfigurationError: If the budget is below 1 or cannot be evaluated.
    """
    try:
        value = evaluate(budget_expression, instance.features)
    except EvaluationError as e:
        raise ConfigurationError(f"Budget cannot be evaluated on {instance.label}: {e}")
    budget = math.floor(value)
    if budget < 1:
        raise ConfigurationError(f"Budget on {instance.label} is {value}, below one evaluation")
    return budget


class ReferenceTable:
    """
    Reference value R_i per instance, used to normalize raw fitness.

    Values only ever grow. With known optima they start at the optimum;
    otherwise they start at the best fitness observed. Values below 1 are
    raised to 1 so every R_i is positive.
    """

    def __init__(self, values: Mapping[ProblemInstance, float] | None = None):
        self._values: dict[ProblemInstance, float] = {}
        for instance, value in (values or {}).items():
            self.update(instance, value)

    @classmethod
    def known_optima(cls, instances: Iterable[ProblemInstance]) -> "ReferenceTable":
        return cls({instance: optimum(instance) for instance in instances})

    def __getitem__(self, instance: ProblemInstance) -> float:
        try:
            return self._values[instance]
        except KeyError:
            raise KeyError(f"No reference value for {instance.label}") from None

    def __contains__(self, instance: ProblemInstance) -> bool:
        return instance in self._values

    def update(self, instance: ProblemInstance, value: float) -> bool:
        value = max(float(value), 1.0)
        if value > self._values.get(instance, 0.0):
            self._values[instance] = value
            return True
        return False

    def vector(self, instances: Sequence[ProblemInstance]) -> np.ndarray:
        return np.array([self[instance] for instance in instances])


@dataclass(eq=False)
class Candidate:
    """A parameter expression with its raw best-fitness table (instances x runs)."""

    expr: Expression
    instances: tuple[ProblemInstance, ...]
    raw_fitness: np.ndarray
    size: int = field(init=False)

    def __post_init__(self):
        self.size = size(self.expr)


def score(candidate: Candidate, refs: ReferenceTable) -> tuple[np.ndarray, float]:
    """
    Normalized samples and scalar score of a candidate.

    Samples are raw_fitness[i][r] / R_i, read with the current reference
    values; the score is their mean, i.e. the average over instances of the
    run-averaged normalized fitness.
    """
    samples = (candidate.raw_fitness / refs.vector(candidate.instances)[:, None]).ravel()
    return samples, float(samples.mean())


def solve_cell(job: tuple) -> np.ndarray:
    """Best fitness of every run in one (instance, parameter) cell; picklable job."""
    solver, instance, param, budget, runs, seed_base = job
    results = run_many(SolverSpec(solver), instance, param, budget, runs, seed_base)
    return np.array([result.best_fitness for result in results])


class CandidateEvaluator:
    """
    Evaluates batches of expressions on the training instances.

    Solver runs use streams derived from (seed, instance, run) only, so two
    expressions yielding the same parameter on an instance get identical
    results. Cells are therefore cached per (instance, clamped parameter),
    and the remaining ones are fanned out to ``executor`` when given.
    """

    def __init__(
        self,
        config: TunerConfig,
        instances: Sequence[ProblemInstance] | None = None,
        executor: Executor | None = None,
    ):
        self.config = config
        self.instances = tuple(instances or training_set(config.problem))
        if len(self.instances) * config.runs < 2:
            raise ConfigurationError("Each candidate needs at least two samples")
        self.spec = config.solver_spec
        self.executor = executor
        self.budgets = {
            instance: evaluate_budget(config.budget_expression, instance)
            for instance in self.instances
        }
        self.seed_bases = {
            instance: derive_seed(config.seed, EVALUATION_STREAM, *instance.seed_key)
            for instance in self.instances
        }
        if config.use_known_optima:
            self.refs = ReferenceTable.known_optima(self.instances)
        else:
            self.refs = ReferenceTable()
        self.cache: dict[tuple[ProblemInstance, float], np.ndarray] = {}

    def parameters(self, expr: Expression) -> list[float]:
        return [
            self.spec.clamp(evaluate(expr, instance.features), instance.n)
            for instance in self.instances
        ]

    def evaluate(self, exprs: Sequence[Expression]) -> list[Candidate]:
        parameters = [self.parameters(expr) for expr in exprs]
        missing = []
        for params in parameters:
            for instance, param in zip(self.instances, params):
                key = (instance, param)
                if key not in self.cache and key not in missing:
                    missing.append(key)

        jobs = [
            (
                self.spec.kind,
                instance,
                param,
                self.budgets[instance],
                self.config.runs,
                self.seed_bases[instance],
            )
            for instance, param in missing
        ]
        mapper = self.executor.map if self.executor is not None else map
        for key, samples in zip(missing, mapper(solve_cell, jobs)):
            self.cache[key] = samples
            self.refs.update(key[0], samples.max())

        return [
            Candidate(
                expr,
                self.instances,
                np.vstack(
                    [self.cache[(instance, param)] for instance, param in zip(self.instances, params)]
                ),
            )
            for expr, params in zip(exprs, parameters)
        ]


def evaluate_candidate(
    expr: Expression,
    instances: Sequence[ProblemInstance],
    config: TunerConfig,
    evaluator: CandidateEvaluator | None = None,
) -> Candidate:
    if evaluator is None:
        evaluator = CandidateEvaluator(config, instances)
    return evaluator.evaluate([expr])[0]


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_score: float
    mean_score: float
    mean_size: float
    replacements: int


@dataclass
class Population:
    members: list[Candidate]
    refs: ReferenceTable
    history: list[GenerationStats] = field(default_factory=list)

    def scores(self) -> np.ndarray:
        return np.array([score(member, self.refs)[1] for member in self.members])

    def ranked(self) -> list[Candidate]:
        """Members by score descending, then size ascending, then position."""
        scores = self.scores()
        order = sorted(
            range(len(self.members)),
            key=lambda i: (-scores[i], self.members[i].size, i),
        )
        return [self.members[i] for i in order]

    def stats(self, generation: int, replacements: int) -> GenerationStats:
        scores = self.scores()
        return GenerationStats(
            generation=generation,
            best_score=float(scores.max()),
            mean_score=float(scores.mean()),
            mean_size=float(np.mean([member.size for member in self.members])),
            replacements=replacements,
        )


def tournament_select(
    population: Population,
    rng: RandomStream,
    tournament_size: int,
    scores: np.ndarray | None = None,
) -> Candidate:
    """
    Best of ``tournament_size`` members drawn without replacement.

    Ties go to the smaller tree, then to the earlier member.
    """
    if scores is None:
        scores = population.scores()
    contenders = rng.choice(len(population.members), size=tournament_size, replace=False)
    winner = min(
        (int(i) for i in contenders),
        key=lambda i: (-scores[i], population.members[i].size, i),
    )
    return population.members[winner]


@dataclass(frozen=True)
class ReplacementDecision:
    replaced: bool
    victim_index: int | None = None


def try_replace(
    population: Population,
    newcomer: Candidate,
    replaced_so_far: int,
    config: TunerConfig,
) -> ReplacementDecision:
    """
    Put ``newcomer`` in place of the first member it beats, worst first.

    A member is replaced when the newcomer is significantly better, or when
    neither is significantly better and the newcomer is smaller. Nothing is
    replaced once ``replacement_cap`` of the population has been replaced
    this generation.
    """
    cap = math.floor(config.replacement_cap * len(population.members))
    if replaced_so_far >= cap:
        return ReplacementDecision(False)

    newcomer_samples, _ = score(newcomer, population.refs)
    scored = [score(member, population.refs) for member in population.members]
    order = sorted(range(len(scored)), key=lambda i: (scored[i][1], i))

    for index in order:
        member = population.members[index]
        member_samples = scored[index][0]
        if rank_sum_test(member_samples, newcomer_samples).p_value < config.alpha:
            population.members[index] = newcomer
            return ReplacementDecision(True, index)
        if (
            newcomer.size < member.size
            and rank_sum_test(newcomer_samples, member_samples).p_value >= config.alpha
        ):
            population.members[index] = newcomer
            return ReplacementDecision(True, index)
    return ReplacementDecision(False)


def initial_trees(
    config: TunerConfig, rng: RandomStream, features: Sequence[str]
) -> list[Expression]:
    """Ramped half-and-half: depths cycle from 2 to init_depth, grow first, then full."""
    depths = list(range(min(2, config.init_depth), config.init_depth + 1))
    grown = round(config.population_size * config.init_grow_fraction)
    trees = []
    for index in range(config.population_size):
        method = InitMethod.GROW if index < grown else InitMethod.FULL
        trees.append(random_tree(method, depths[index % len(depths)], rng, features))
    return trees


def breed(
    population: Population,
    config: TunerConfig,
    rng: RandomStream,
    features: Sequence[str],
    scores: np.ndarray,
) -> Expression:
    first = tournament_select(population, rng, config.tournament_size, scores)
    if rng.random() < config.crossover_rate:
        second = tournament_select(population, rng, config.tournament_size, scores)
        child = crossover(first.expr, second.expr, rng, config.max_depth)
    else:
        child = first.expr
    if rng.random() < config.mutation_probability:
        child = mutate(child, rng, config.max_depth, features)
    return child


@log_execution_time
def tune(config: TunerConfig, evaluator: CandidateEvaluator | None = None) -> Population:
    """
    Run the tuner and return the final population, best first.

    Args:
        config: Tuner configuration.
        evaluator: Evaluates expressions and owns the reference table;
            defaults to a sequential evaluator on the training set.
    """
    if evaluator is None:
        evaluator = CandidateEvaluator(config)
    rng = stream(config.seed, GP_STREAM)
    features = config.features
    logger.info(f"Tuning {config.solver} on {config.problem} with budget {config.budget}")

    population = Population(evaluator.evaluate(initial_trees(config, rng, features)), evaluator.refs)
    population.history.append(population.stats(0, 0))

    for generation in range(1, config.generations + 1):
        scores = population.scores()
        offspring = [
            breed(population, config, rng, features, scores)
            for _ in range(config.population_size)
        ]
        replaced = 0
        for candidate in evaluator.evaluate(offspring):
            if try_replace(population, candidate, replaced, config).replaced:
                replaced += 1

        stats = population.stats(generation, replaced)
        population.history.append(stats)
        logger.debug(
            f"generation {generation}: best {stats.best_score:.4f}, "
            f"mean size {stats.mean_size:.2f}, replaced {replaced}"
        )

    population.members = population.ranked()
    best = population.history[-1]
    logger.info(
        f"Tuning finished: best score {best.best_score:.4f}, "
        f"{len(getattr(evaluator, 'cache', ()))} cached cells"
    )
    return population
