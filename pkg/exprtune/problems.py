"""
Pseudo-Boolean benchmark problems.

Four maximisation problems over bitstrings of length n: OneMax,
BinValue, LeadingOnes and Jump(m, n). Each instance exposes its features
(``n``, plus ``m`` for Jump) to the expression language, and knows its
optimum.

Besides the reference ``fitness`` function, every problem has a
``FitnessTracker`` that updates the fitness of a bitstring from the
positions flipped by a mutation, so an offspring evaluation costs time
proportional to the number of flipped bits.
"""

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np

from exprtune.errors import ProblemError
from exprtune.streams import RandomStream

#: A bitstring: 1-d uint8 array of zeros and ones.
Bitstring = np.ndarray


class ProblemKind(StrEnum):
    ONEMAX = "onemax"
    BINVALUE = "binvalue"
    LEADINGONES = "leadingones"
    JUMP = "jump"


FEATURES: dict[ProblemKind, tuple[str, ...]] = {
    ProblemKind.ONEMAX: ("n",),
    ProblemKind.BINVALUE: ("n",),
    ProblemKind.LEADINGONES: ("n",),
    ProblemKind.JUMP: ("m", "n"),
}

TRAINING_SIZES = (10, 20, 50, 100, 200, 500)

JUMP_TRAINING_PAIRS = (
    (2, 10), (3, 10), (4, 10), (5, 10),
    (2, 20), (3, 20), (4, 20),
    (2, 50), (3, 50),
    (2, 100), (3, 100),
    (2, 200),
)  # fmt: skip

#: Larger sizes never seen during training.
EVALUATION_SIZES: dict[ProblemKind, tuple[int, ...]] = {
    ProblemKind.ONEMAX: (1000, 2000, 5000),
    ProblemKind.LEADINGONES: (750, 1000),
}


def feature_names(kind: ProblemKind | str) -> tuple[str, ...]:
    return FEATURES[ProblemKind(kind)]


@dataclass(frozen=True)
class ProblemInstance:
    kind: ProblemKind
    n: int
    m: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        if not isinstance(self.n, int) or self.n < 1:
            raise ProblemError(f"n must be a positive integer, got {self.n!r}")
        if self.kind is ProblemKind.JUMP:
            if not isinstance(self.m, int) or not 2 <= self.m < self.n:
                raise ProblemError(f"Jump needs 2 <= m < n, got m={self.m!r}, n={self.n}")
        elif self.m is not None:
            raise ProblemError(f"{self.kind} has no feature m")

    @property
    def features(self) -> dict[str, float]:
        if self.kind is ProblemKind.JUMP:
            return {"m": float(self.m), "n": float(self.n)}
        return {"n": float(self.n)}

    @property
    def seed_key(self) -> tuple[int, int, int]:
        """Integers identifying the instance in derived random streams."""
        return (list(ProblemKind).index(self.kind), self.n, self.m or 0)

    @property
    def label(self) -> str:
        if self.kind is ProblemKind.JUMP:
            return f"jump(m={self.m},n={self.n})"
        return f"{self.kind}(n={self.n})"

    def to_mapping(self) -> dict[str, Any]:
        features = {"n": self.n}
        if self.m is not None:
            features["m"] = self.m
        return {"kind": str(self.kind), "features": features}

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ProblemInstance":
        try:
            kind = ProblemKind(data["kind"])
            features = dict(data["features"])
        except (KeyError, TypeError, ValueError) as e:
            raise ProblemError(f"Invalid instance description {data!r}: {e}")
        expected = set(FEATURES[kind])
        if set(features) != expected:
            raise ProblemError(
                f"{kind} instances need exactly the features {sorted(expected)}, "
                f"got {sorted(features)}"
            )
        values = {}
        for name, value in features.items():
            if isinstance(value, bool) or not float(value).is_integer():
                raise ProblemError(f"Feature {name} must be an integer, got {value!r}")
            values[name] = int(value)
        return cls(kind, values["n"], values.get("m"))


def training_set(kind: ProblemKind | str) -> list[ProblemInstance]:
    kind = ProblemKind(kind)
    if kind is ProblemKind.JUMP:
        return [ProblemInstance(kind, n, m) for m, n in JUMP_TRAINING_PAIRS]
    return [ProblemInstance(kind, n) for n in TRAINING_SIZES]


def evaluation_set(kind: ProblemKind | str) -> list[ProblemInstance]:
    kind = ProblemKind(kind)
    if kind not in EVALUATION_SIZES:
        raise ProblemError(f"No built-in evaluation set for {kind}")
    return [ProblemInstance(kind, n) for n in EVALUATION_SIZES[kind]]


def instances_for_sizes(kind: ProblemKind | str, sizes: Iterable[int]) -> list[ProblemInstance]:
    kind = ProblemKind(kind)
    if kind is ProblemKind.JUMP:
        raise ProblemError("Jump instances need (m, n) pairs; use an instance-set file")
    return [ProblemInstance(kind, int(n)) for n in sizes]


def load_instance_set(path: str) -> list[ProblemInstance]:
    """
    Read a JSON instance-set file: a list of
    ``{"kind": "...", "features": {"n": 100, "m": 2}}`` objects.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ProblemError(f"Instance-set file not found: {path}")
    except json.JSONDecodeError as e:
        raise ProblemError(f"Instance-set file {path} is not valid JSON: {e}")
    if not isinstance(data, list) or not data:
        raise ProblemError(f"Instance-set file {path} must hold a non-empty list")
    return [ProblemInstance.from_mapping(item) for item in data]


def dump_instance_set(instances: Sequence[ProblemInstance]) -> str:
    return json.dumps([instance.to_mapping() for instance in instances], indent=2)


def random_bitstring(n: int, rng: RandomStream) -> Bitstring:
    """Uniform random bitstring; the first draw of every solver run."""
    return rng.integers(0, 2, size=n, dtype=np.uint8)


#: Significant bits of a double; BinValue keeps only this many leading bits.
BINVALUE_PRECISION = 53


def _binvalue_score(value: int, n: int) -> float:
    # truncate, never round: a carry would reach into the leading bits
    shift = n - BINVALUE_PRECISION
    if shift > 0:
        value = value >> shift << shift
    return float(value)


def _jump_value(ones: int, n: int, m: int) -> int:
    if ones <= n - m or ones == n:
        return m + ones
    return n - ones


def fitness(instance: ProblemInstance, x: Bitstring) -> float:
    """
    Objective value of ``x`` on ``instance``.

    BinValue is the exact binary value truncated to its leading 53 bits,
    which a double holds exactly; lower bits are ignored for n > 53.

    Raises:
        ProblemError: If ``len(x) != instance.n``.
    """
    x = np.asarray(x)
    if x.shape != (instance.n,):
        raise ProblemError(f"Bitstring of length {x.size} does not match n={instance.n}")
    match instance.kind:
        case ProblemKind.ONEMAX:
            return float(np.count_nonzero(x))
        case ProblemKind.LEADINGONES:
            zeros = np.flatnonzero(x == 0)
            return float(zeros[0]) if zeros.size else float(instance.n)
        case ProblemKind.BINVALUE:
            return _binvalue_score(int("".join("1" if bit else "0" for bit in x), 2), instance.n)
        case ProblemKind.JUMP:
            return float(_jump_value(int(np.count_nonzero(x)), instance.n, instance.m))
    raise ProblemError(f"Unknown problem kind {instance.kind}")


def optimum(instance: ProblemInstance) -> float:
    match instance.kind:
        case ProblemKind.ONEMAX | ProblemKind.LEADINGONES:
            return float(instance.n)
        case ProblemKind.BINVALUE:
            return _binvalue_score(2**instance.n - 1, instance.n)
        case ProblemKind.JUMP:
            return float(instance.n + instance.m)
    raise ProblemError(f"Unknown problem kind {instance.kind}")


class FitnessTracker:
    """
    Fitness of a mutable bitstring, maintained under bit flips.

    ``propose`` applies the flips in place and returns the offspring
    fitness; the caller then either ``accept``s the offspring or
    ``reject``s it, which flips the bits back.
    """

    def __init__(self, instance: ProblemInstance, bits: bytearray):
        self.n = instance.n
        self.bits = bits
        self._flips: Sequence[int] = ()
        self._state = self._initial_state()
        self._pending = self._state

    @property
    def value(self) -> float:
        return self._score(self._state)

    @property
    def at_optimum(self) -> bool:
        """Whether the current bitstring is the optimum itself, judged on the exact state."""
        return self._state == self._optimal_state()

    def propose(self, flips: Sequence[int]) -> float:
        self._flips = flips
        self._pending = self._flip(flips)
        return self._score(self._pending)

    def accept(self) -> None:
        self._state = self._pending
        self._flips = ()

    def reject(self) -> None:
        bits = self.bits
        for i in self._flips:
            bits[i] ^= 1
        self._flips = ()

    def _initial_state(self) -> int:
        raise NotImplementedError

    def _flip(self, flips: Sequence[int]) -> int:
        raise NotImplementedError

    def _score(self, state: int) -> float:
        return float(state)

    def _optimal_state(self) -> int:
        return self.n


class _OnesTracker(FitnessTracker):
    def _initial_state(self) -> int:
        return sum(self.bits)

    def _flip(self, flips: Sequence[int]) -> int:
        bits = self.bits
        ones = self._state
        for i in flips:
            if bits[i]:
                ones -= 1
            else:
                ones += 1
            bits[i] ^= 1
        return ones


class _JumpTracker(_OnesTracker):
    def __init__(self, instance: ProblemInstance, bits: bytearray):
        self.m = instance.m
        super().__init__(instance, bits)

    def _score(self, state: int) -> float:
        return float(_jump_value(state, self.n, self.m))


class _LeadingOnesTracker(FitnessTracker):
    def _initial_state(self) -> int:
        zero = self.bits.find(0)
        return self.n if zero < 0 else zero

    def _flip(self, flips: Sequence[int]) -> int:
        bits = self.bits
        for i in flips:
            bits[i] ^= 1
        if not flips:
            return self._state
        lowest = min(flips)
        if lowest < self._state:
            return lowest
        if lowest == self._state:
            zero = bits.find(0, lowest)
            return self.n if zero < 0 else zero
        return self._state


class _BinValueTracker(FitnessTracker):
    # exact integer state, truncated to a double only when scored
    def _initial_state(self) -> int:
        return int("".join("1" if bit else "0" for bit in self.bits), 2)

    def _flip(self, flips: Sequence[int]) -> int:
        bits = self.bits
        value = self._state
        top = self.n - 1
        for i in flips:
            if bits[i]:
                value -= 1 << (top - i)
            else:
                value += 1 << (top - i)
            bits[i] ^= 1
        return value

    def _score(self, state: int) -> float:
        return _binvalue_score(state, self.n)

    def _optimal_state(self) -> int:
        return (1 << self.n) - 1


_TRACKERS = {
    ProblemKind.ONEMAX: _OnesTracker,
    ProblemKind.BINVALUE: _BinValueTracker,
    ProblemKind.LEADINGONES: _LeadingOnesTracker,
    ProblemKind.JUMP: _JumpTracker,
}


def make_tracker(instance: ProblemInstance, x: Bitstring) -> FitnessTracker:
    """Start tracking a copy of ``x``."""
    bits = bytearray(np.asarray(x, dtype=np.uint8).tobytes())
    if len(bits) != instance.n:
        raise ProblemError(f"Bitstring of length {len(bits)} does not match n={instance.n}")
    return _TRACKERS[instance.kind](instance, bits)
