"""
The experimental protocol around the tuner.

- ``train_protocol`` runs the tuner several times and counts how often each
  final-form expression appears among the elites
- ``evaluate_expressions`` re-runs fixed expressions 100 times per instance,
  on the training sizes or on larger unseen ones
- ``run_oracle`` measures the expected runtimes the solvers are checked against
- ``merge_reports`` collects earlier outputs into one summary
"""

import json
import os
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from enum import StrEnum
from os.path import isdir, join
from typing import Any

import numpy as np

from exprtune.engine import CandidateEvaluator, TunerConfig, evaluate_budget, solve_cell, tune
from exprtune.errors import ConfigurationError, EvaluationError, OutputError
from exprtune.expr import (
    Dialect,
    Expression,
    canonicalize,
    evaluate,
    features_of,
    format_expression,
    parse,
    to_ea_form,
    to_rls_form,
)
from exprtune.problems import ProblemInstance, ProblemKind, optimum
from exprtune.settings import Config
from exprtune.solvers import SolverKind, SolverSpec, run_many
from exprtune.stats import summarize
from exprtune.streams import EVALUATION_STREAM, PROTOCOL_STREAM, derive_seed
from utils.file import write_atomic
from utils.logging import log_execution_time, logger

ELITE_SIZE = 5
REPORTED_ENTRIES = 3

ELITE_REPORT_FILE = "elite_report.json"
EVALUATION_CSV_FILE = "evaluation.csv"
EVALUATION_SUMMARY_FILE = "evaluation_summary.json"
SUMMARY_FILE = "summary.json"


class Pool(StrEnum):
    TOP5 = "top5"
    FULL = "full"


# Budgets of the twenty tuning settings, in the budget dialect.
STANDARD_BUDGETS: dict[tuple[ProblemKind, SolverKind], tuple[str, ...]] = {
    (ProblemKind.ONEMAX, SolverKind.EA): ("0.5*e*n*ln(n)", "e*n*ln(n)", "2*e*n*ln(n)"),
    (ProblemKind.ONEMAX, SolverKind.RLS): ("n*ln(n)", "2*n*ln(n)"),
    (ProblemKind.BINVALUE, SolverKind.EA): ("0.5*e*n*ln(n)", "e*n*ln(n)", "2*e*n*ln(n)"),
    (ProblemKind.BINVALUE, SolverKind.RLS): ("0.5*n*ln(n)", "n*ln(n)", "2*n*ln(n)"),
    (ProblemKind.LEADINGONES, SolverKind.EA): ("0.5*n^2", "0.8*n^2", "0.9*n^2"),
    (ProblemKind.LEADINGONES, SolverKind.RLS): ("0.5*n^2", "0.75*n^2"),
    (ProblemKind.JUMP, SolverKind.EA): ("n^m", "e*n^m"),
    (ProblemKind.JUMP, SolverKind.RLS): ("n^m", "2*n^m"),
}

_EA_BASELINES = ("1/n", "3/(2*n)", "2/n", "5/(2*n)", "3/n", "4/n")


def dump_json(data: Any) -> str:
    # sorted keys and fixed indentation keep reports byte-identical per seed
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


@contextmanager
def worker_pool(workers: int) -> Iterator[ProcessPoolExecutor | None]:
    """A process pool for ``workers`` > 1, otherwise nothing (sequential)."""
    if workers < 1:
        raise ConfigurationError(f"workers must be at least 1, got {workers}")
    if workers == 1:
        yield None
        return
    with ProcessPoolExecutor(max_workers=workers) as executor:
        yield executor


def final_form(expr: Expression, solver: SolverKind | str) -> Expression:
    """The form an evolved expression is reported and counted in."""
    expr = canonicalize(expr)
    if SolverKind(solver) is SolverKind.RLS:
        return to_rls_form(expr)
    return to_ea_form(expr)


@dataclass
class EliteEntry:
    expression: str
    frequency: int
    scores: list[float] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "expression": self.expression,
            "frequency": self.frequency,
            "scores": summarize(self.scores),
        }


@dataclass
class EliteReport:
    """Frequency tally of final-form elite expressions over several tuner runs."""

    config: dict[str, Any]
    pool: Pool
    tuner_runs: int
    seeds: list[int]
    entries: list[EliteEntry]

    @property
    def pool_size(self) -> int:
        return sum(entry.frequency for entry in self.entries)

    def top(self, count: int = REPORTED_ENTRIES) -> list[EliteEntry]:
        return self.entries[:count]

    def to_dict(self) -> dict[str, Any]:
        return {
            "setting": {
                "problem": self.config["problem"],
                "solver": self.config["solver"],
                "budget": self.config["budget"],
            },
            "config": self.config,
            "pool": str(self.pool),
            "pool_size": self.pool_size,
            "tuner_runs": self.tuner_runs,
            "seeds": self.seeds,
            "entries": [entry.to_dict() for entry in self.entries],
        }

    def to_json(self) -> str:
        return dump_json(self.to_dict())


@log_execution_time
def train_protocol(
    config: TunerConfig,
    tuner_runs: int = 10,
    pool: Pool | str = Pool.TOP5,
    workers: int = 1,
) -> EliteReport:
    """
    Run the tuner ``tuner_runs`` times and tally the elites.

    Run r uses a seed derived from the configured seed and r. From every
    final population either the five best members (``top5``) or all of them
    (``full``) enter the pool in their final form; structurally equal forms
    are counted together. Entries are sorted by frequency, then text.
    """
    if tuner_runs < 1:
        raise ConfigurationError(f"tuner_runs must be at least 1, got {tuner_runs}")
    pool = Pool(pool)
    seeds = [derive_seed(config.seed, PROTOCOL_STREAM, index) for index in range(tuner_runs)]
    counts: Counter[str] = Counter()
    scores: dict[str, list[float]] = {}

    with worker_pool(workers) as executor:
        for index, seed in enumerate(seeds, start=1):
            logger.info(f"Tuner run {index}/{tuner_runs} (seed {seed})")
            run_config = replace(config, seed=seed)
            population = tune(run_config, CandidateEvaluator(run_config, executor=executor))
            members = population.members if pool is Pool.FULL else population.members[:ELITE_SIZE]
            member_scores = population.scores()
            for member, member_score in zip(members, member_scores):
                text = format_expression(final_form(member.expr, config.solver))
                counts[text] += 1
                scores.setdefault(text, []).append(float(member_score))

    entries = [
        EliteEntry(text, frequency, scores[text])
        for text, frequency in sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    ]
    report = EliteReport(config.to_dict(), pool, tuner_runs, seeds, entries)
    for entry in report.top():
        logger.info(f"Elite {entry.expression}: {entry.frequency}/{report.pool_size}")
    return report


def write_elite_report(report: EliteReport, output_dir: str) -> str:
    return write_atomic(join(output_dir, ELITE_REPORT_FILE), report.to_json())


def instance_label(instance: ProblemInstance) -> str:
    """Feature assignment of an instance as a CSV-safe string, e.g. ``m=2;n=10``."""
    return ";".join(f"{name}={int(value)}" for name, value in sorted(instance.features.items()))


@dataclass
class EvaluationCell:
    expression: str
    instance: ProblemInstance
    samples: np.ndarray


@dataclass
class EvaluationTable:
    solver: SolverKind
    budget: str
    runs: int
    seed: int
    cells: list[EvaluationCell]

    def rows(self) -> Iterator[tuple[str, str, int, float]]:
        for cell in self.cells:
            label = instance_label(cell.instance)
            for index, value in enumerate(cell.samples):
                yield cell.expression, label, index, float(value)

    def to_csv(self, config: dict[str, Any]) -> str:
        lines = [
            f"# config={json.dumps(config, sort_keys=True)}",
            "expression,instance_features,run_index,normalized_fitness",
        ]
        lines.extend(
            f"{expression},{label},{index},{value!r}"
            for expression, label, index, value in self.rows()
        )
        return "\n".join(lines) + "\n"

    def summary(self, config: dict[str, Any]) -> dict[str, Any]:
        return {
            "config": config,
            "solver": str(self.solver),
            "budget": self.budget,
            "runs": self.runs,
            "seed": self.seed,
            "cells": [
                {
                    "expression": cell.expression,
                    "instance": instance_label(cell.instance),
                    "problem": str(cell.instance.kind),
                    "normalized_fitness": summarize(cell.samples),
                }
                for cell in self.cells
            ],
        }


@log_execution_time
def evaluate_expressions(
    exprs: Sequence[Expression],
    instances: Sequence[ProblemInstance],
    budget: str,
    solver: SolverKind | str,
    runs: int = 100,
    seed: int = 0,
    workers: int = 1,
) -> EvaluationTable:
    """
    Run every expression ``runs`` times on every instance.

    Samples are best fitness within the budget divided by the instance's
    optimum. All expressions share the runs' random streams on an instance.

    Raises:
        EvaluationError: If an expression uses a feature an instance lacks.
        ConfigurationError: If the budget is invalid on some instance.
    """
    spec = SolverSpec(SolverKind(solver))
    budget_expression = parse(budget, Dialect.BUDGET)
    if runs < 1:
        raise ConfigurationError(f"runs must be at least 1, got {runs}")

    jobs = []
    keys = []
    for expr in exprs:
        text = format_expression(expr)
        for instance in instances:
            missing = features_of(expr) - set(instance.features)
            if missing:
                raise EvaluationError(
                    f"{text} uses {', '.join(sorted(missing))}, unknown on {instance.label}"
                )
            param = spec.clamp(evaluate(expr, instance.features), instance.n)
            seed_base = derive_seed(seed, EVALUATION_STREAM, *instance.seed_key)
            jobs.append(
                (spec.kind, instance, param, evaluate_budget(budget_expression, instance), runs, seed_base)
            )
            keys.append((text, instance))

    with worker_pool(workers) as executor:
        mapper = executor.map if executor is not None else map
        results = list(mapper(solve_cell, jobs))

    cells = [
        EvaluationCell(text, instance, samples / optimum(instance))
        for (text, instance), samples in zip(keys, results)
    ]
    return EvaluationTable(spec.kind, budget, runs, seed, cells)


def write_evaluation(
    table: EvaluationTable, config: dict[str, Any], output_dir: str
) -> tuple[str, str]:
    csv_path = write_atomic(join(output_dir, EVALUATION_CSV_FILE), table.to_csv(config))
    summary_path = write_atomic(
        join(output_dir, EVALUATION_SUMMARY_FILE), dump_json(table.summary(config))
    )
    return csv_path, summary_path


def baseline_expressions(solver: SolverKind | str, problem: ProblemKind | str) -> list[Expression]:
    """
    Hand-picked comparison parameters: mu = i/n for i in {1, 3/2, 2, 5/2, 3, 4}
    for the EA; k in {1, 2, 3, n}, plus m and 2m on Jump, for RLS.
    """
    if SolverKind(solver) is SolverKind.EA:
        texts = _EA_BASELINES
    elif ProblemKind(problem) is ProblemKind.JUMP:
        texts = ("1", "2", "3", "m", "2*m", "n")
    else:
        texts = ("1", "2", "3", "n")
    return [parse(text) for text in texts]


@dataclass(frozen=True)
class RuntimeOracle:
    """Known expected optimization time: target_factor * n^2 evaluations on LeadingOnes."""

    solver: SolverKind
    parameter: str
    target_factor: float
    n: int = 100
    tolerance: float = 0.05

    @property
    def target(self) -> float:
        return self.target_factor * self.n**2


RUNTIME_ORACLES: dict[str, RuntimeOracle] = {
    "leadingones-rls1": RuntimeOracle(SolverKind.RLS, "1", 0.5),
    "leadingones-ea1": RuntimeOracle(SolverKind.EA, "1/n", 0.86),
    "leadingones-ea159": RuntimeOracle(SolverKind.EA, "1.59/n", 0.77),
}


@dataclass(frozen=True)
class OracleResult:
    name: str
    measured: float
    target: float
    tolerance: float
    runs: int
    misses: int

    @property
    def passed(self) -> bool:
        return self.misses == 0 and abs(self.measured - self.target) <= self.tolerance * self.target

    def describe(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"{self.name}: measured mean {self.measured:.1f} over {self.runs} runs, "
            f"target {self.target:.0f} +/- {self.tolerance:.0%} -> {verdict}"
        )


@log_execution_time
def run_oracle(name: str, runs: int = 200, seed: int = 0) -> OracleResult:
    """
    Mean hitting time of one oracle setting.

    The budget is 100 * n^2, far beyond the expected time, and runs stop at
    the optimum; runs that still miss it count with the full budget.
    """
    try:
        oracle = RUNTIME_ORACLES[name]
    except KeyError:
        raise ConfigurationError(
            f"Unknown oracle {name!r}; choose from {', '.join(sorted(RUNTIME_ORACLES))}"
        )
    instance = ProblemInstance(ProblemKind.LEADINGONES, oracle.n)
    spec = SolverSpec(oracle.solver)
    param = spec.clamp(evaluate(parse(oracle.parameter), instance.features), instance.n)
    budget = 100 * oracle.n**2
    seed_base = derive_seed(seed, EVALUATION_STREAM, *instance.seed_key)
    results = run_many(spec, instance, param, budget, runs, seed_base)
    times = [result.hitting_time or budget for result in results]
    misses = sum(1 for result in results if not result.hit_optimum)
    return OracleResult(name, float(np.mean(times)), oracle.target, oracle.tolerance, runs, misses)


def _report_files(paths: Iterable[str]) -> list[str]:
    files = []
    for path in paths:
        if isdir(path):
            for name in (ELITE_REPORT_FILE, EVALUATION_SUMMARY_FILE):
                candidate = join(path, name)
                if os.path.exists(candidate):
                    files.append(candidate)
        elif os.path.exists(path):
            files.append(path)
        else:
            raise OutputError(f"No such report: {path}")
    return sorted(files)


def merge_reports(paths: Iterable[str]) -> dict[str, Any]:
    """
    Summary of earlier ``tune`` and ``eval`` outputs.

    Directories are searched for report files; each elite report contributes
    its setting, configuration and three most frequent entries, each
    evaluation summary its configuration and cells. The summary echoes the
    merged files under ``config``.
    """
    elites = []
    evaluations = []
    files = _report_files(paths)
    for path in files:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise OutputError(f"Report {path} is not valid JSON: {e}")
        if "entries" in data:
            elites.append(
                {
                    "source": path,
                    "setting": data["setting"],
                    "config": data["config"],
                    "pool": data["pool"],
                    "pool_size": data["pool_size"],
                    "top": data["entries"][:REPORTED_ENTRIES],
                }
            )
        elif "cells" in data:
            evaluations.append(
                {
                    "source": path,
                    "config": data["config"],
                    "solver": data["solver"],
                    "budget": data["budget"],
                    "cells": data["cells"],
                }
            )
        else:
            raise OutputError(f"{path} is neither an elite report nor an evaluation summary")
    if not elites and not evaluations:
        raise OutputError("No reports found to merge")
    return {
        "config": {"inputs": files, "version": Config.VERSION},
        "elite_reports": elites,
        "evaluations": evaluations,
    }


def write_summary(summary: dict[str, Any], output_dir: str) -> str:
    return write_atomic(join(output_dir, SUMMARY_FILE), dump_json(summary))
