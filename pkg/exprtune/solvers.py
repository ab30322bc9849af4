"""
Fixed-budget target algorithms.

Both algorithms are elitist hill climbers on bitstrings: start from a
uniform random point, create one offspring per step, keep it when its
fitness is at least the parent's. They differ only in how many bits a
mutation flips:

- (1+1) EA(mu): standard bit mutation, the flip count follows Bin(n, mu)
- RLS(k): exactly k distinct bits

The budget counts fitness evaluations, the initial point included.
"""

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import StrEnum

from exprtune.errors import SolverError
from exprtune.problems import ProblemInstance, make_tracker, random_bitstring
from exprtune.streams import RandomStream, stream

# Random numbers are drawn from the stream in blocks of this size.
_BLOCK = 1024


class SolverKind(StrEnum):
    EA = "ea"
    RLS = "rls"


@dataclass(frozen=True)
class SolverSpec:
    kind: SolverKind

    def __post_init__(self):
        object.__setattr__(self, "kind", SolverKind(self.kind))

    @property
    def parameter_name(self) -> str:
        return "mu" if self.kind is SolverKind.EA else "k"

    def clamp(self, value: float, n: int) -> float | int:
        """
        Map any real value onto the parameter domain.

        mu is clamped to [1/n^2, 1]; k is rounded half-up and clamped to [1, n].
        """
        if self.kind is SolverKind.EA:
            return min(max(float(value), 1.0 / n**2), 1.0)
        return min(max(math.floor(value + 0.5), 1), n)

    def check(self, param: float, n: int) -> None:
        if self.kind is SolverKind.EA:
            if not 0.0 <= param <= 1.0:
                raise SolverError(f"Mutation rate must lie in [0, 1], got {param}")
        elif param != int(param) or not 1 <= param <= n:
            raise SolverError(f"Mutation strength must be an integer in [1, {n}], got {param}")


@dataclass(frozen=True)
class RunResult:
    best_fitness: float
    evaluations_used: int
    hit_optimum: bool
    hitting_time: int | None = None


class _PositionSampler:
    """Uniform sets of distinct bit positions."""

    def __init__(self, n: int, rng: RandomStream):
        self.n = n
        self.rng = rng
        self._everything = tuple(range(n))
        self._pool: list[int] = []
        self._next = 0

    def _draw(self) -> int:
        if self._next == len(self._pool):
            self._pool = self.rng.integers(0, self.n, size=_BLOCK).tolist()
            self._next = 0
        position = self._pool[self._next]
        self._next += 1
        return position

    def sample(self, count: int) -> Sequence[int]:
        if count == 0:
            return ()
        if count == 1:
            return (self._draw(),)
        if count == self.n:
            return self._everything
        if 4 * count > self.n:
            return self.rng.choice(self.n, count, replace=False).tolist()
        chosen: list[int] = []
        seen: set[int] = set()
        while len(chosen) < count:
            position = self._draw()
            if position not in seen:
                seen.add(position)
                chosen.append(position)
        return chosen


def flip_positions(
    spec: SolverSpec, n: int, param: float, rng: RandomStream
) -> Iterator[Sequence[int]]:
    """
    Endless stream of mutations, each given as the distinct positions to flip.

    For the EA the flip count is drawn from Bin(n, mu) and that many
    distinct positions are chosen, which is distributed exactly like
    flipping every bit independently with probability mu.
    """
    sampler = _PositionSampler(n, rng)
    if spec.kind is SolverKind.RLS:
        k = int(param)
        while True:
            yield sampler.sample(k)
    while True:
        for count in rng.binomial(n, param, size=_BLOCK).tolist():
            yield sampler.sample(count)


def run(
    spec: SolverSpec,
    instance: ProblemInstance,
    param: float,
    budget: int,
    rng: RandomStream,
    *,
    stop_at_optimum: bool = True,
    trace: list[float] | None = None,
) -> RunResult:
    """
    One run of the solver within ``budget`` fitness evaluations.

    Args:
        spec: Which algorithm to run.
        instance: Problem instance.
        param: mu for the EA, k for RLS; not clamped here.
        budget: Maximum number of fitness evaluations, at least 1.
        rng: Random stream; its first draw is the initial bitstring.
        stop_at_optimum: End the run as soon as the optimum is reached.
        trace: If given, receives the best fitness after every evaluation.

    Raises:
        SolverError: On a budget below 1 or a parameter outside its domain.
    """
    if budget < 1:
        raise SolverError(f"Budget must be at least 1, got {budget}")
    n = instance.n
    spec.check(param, n)

    tracker = make_tracker(instance, random_bitstring(n, rng))
    current = tracker.value
    evaluations = 1
    hitting_time = 1 if tracker.at_optimum else None
    if trace is not None:
        trace.append(current)

    mutations = flip_positions(spec, n, param, rng)
    while evaluations < budget:
        if stop_at_optimum and hitting_time is not None:
            break
        offspring = tracker.propose(next(mutations))
        evaluations += 1
        if offspring >= current:
            tracker.accept()
            current = offspring
        else:
            tracker.reject()
        if hitting_time is None and tracker.at_optimum:
            hitting_time = evaluations
        if trace is not None:
            trace.append(current)

    return RunResult(
        best_fitness=current,
        evaluations_used=evaluations,
        hit_optimum=hitting_time is not None,
        hitting_time=hitting_time,
    )


def run_many(
    spec: SolverSpec,
    instance: ProblemInstance,
    param: float,
    budget: int,
    runs: int,
    seed_base: int,
    *,
    stop_at_optimum: bool = True,
) -> list[RunResult]:
    """``runs`` independent runs; run r uses the stream derived from (seed_base, r)."""
    if runs < 1:
        raise SolverError(f"runs must be at least 1, got {runs}")
    return [
        run(
            spec,
            instance,
            param,
            budget,
            stream(seed_base, index),
            stop_at_optimum=stop_at_optimum,
        )
        for index in range(runs)
    ]


def format_trace(trace: Sequence[float]) -> str:
    """CSV dump of a run trace: ``eval_index,best_fitness``."""
    lines = ["eval_index,best_fitness"]
    lines.extend(f"{index},{value!r}" for index, value in enumerate(trace, start=1))
    return "\n".join(lines) + "\n"
