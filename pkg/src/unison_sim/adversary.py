"""Crash and Byzantine behavior.

A Byzantine processor writes one value to its own clock, seen identically by
both neighbors.  Whether it acts at a given step is decided first by an
:class:`ActivationPolicy`, then the strategy picks the value.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .core import CRASHED, Byzantine, Crashed, Topology, check_clock, neighbors


# -- strategies ---------------------------------------------------------------


@dataclass(frozen=True)
class Fixed:
    value: int

    def __str__(self):
        return f"fixed:{self.value}"


@dataclass(frozen=True)
class Scripted:
    """Explicit ``(step_index, value)`` writes; indices strictly increasing."""

    writes: tuple
    _lookup: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        writes = tuple((int(s), int(v)) for s, v in self.writes)
        steps = [s for s, _ in writes]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("scripted write step indices must be strictly increasing")
        object.__setattr__(self, "writes", writes)
        object.__setattr__(self, "_lookup", dict(writes))

    def value_at(self, step_index: int) -> Optional[int]:
        return self._lookup.get(step_index)

    def __str__(self):
        return "script:" + ",".join(f"{s}={v}" for s, v in self.writes)


@dataclass(frozen=True)
class RandomWalk:
    """Uniform draws from ``[lo, hi]``; draw ``k`` depends only on ``(seed, k)``."""

    lo: int
    hi: int
    seed: int = 0

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"RandomWalk needs lo <= hi, got {self.lo} > {self.hi}")

    def draw(self, k: int) -> int:
        return random.Random(f"walk:{self.seed}:{k}").randint(self.lo, self.hi)

    def __str__(self):
        return f"walk:{self.lo}:{self.hi}"


@dataclass(frozen=True)
class ChaseBelow:
    """Write ``min(neighbor clocks) - offset``."""

    offset: int = 1

    def __str__(self):
        return f"chase:{self.offset}"


@dataclass(frozen=True)
class Silent:
    def __str__(self):
        return "silent"


SILENT = Silent()
ByzantineStrategy = (Fixed, Scripted, RandomWalk, ChaseBelow, Silent)


# -- activation ---------------------------------------------------------------


@dataclass(frozen=True)
class Never:
    def active(self, step_index: int) -> bool:
        return False

    def __str__(self):
        return "never"


@dataclass(frozen=True)
class EveryK:
    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("EveryK needs k >= 1")

    def active(self, step_index: int) -> bool:
        return step_index % self.k == 0

    def __str__(self):
        return f"every:{self.k}"


@dataclass(frozen=True)
class WithProbability:
    p: Fraction
    seed: int = 0

    def __post_init__(self):
        p = Fraction(self.p)
        if not 0 <= p <= 1:
            raise ValueError("activation probability must lie in [0, 1]")
        object.__setattr__(self, "p", p)

    def active(self, step_index: int) -> bool:
        return random.Random(f"act:{self.seed}:{step_index}").random() < self.p

    def __str__(self):
        return f"prob:{self.p}"


@dataclass(frozen=True)
class ScriptedActivation:
    step_indices: tuple

    def __post_init__(self):
        idx = tuple(int(s) for s in self.step_indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("activation step indices must be strictly increasing")
        object.__setattr__(self, "step_indices", idx)
        object.__setattr__(self, "_set", frozenset(idx))

    def active(self, step_index: int) -> bool:
        return step_index in self._set

    def __str__(self):
        return "script:" + ",".join(map(str, self.step_indices))


ALWAYS = EveryK(1)


# -- the action -----------------------------------------------------------------


@dataclass(frozen=True)
class FaultState:
    draws: int = 0


def fault_action(
    role,
    state: FaultState,
    step_index: int,
    view: Sequence[int],
    self_id: int,
    topology: Topology,
    activation=ALWAYS,
) -> tuple[Optional[int], FaultState]:
    """Value written by a faulty processor at ``step_index``, or ``None``.

    ``view`` is the whole configuration, but only ``self_id``'s neighbors are
    read.
    """
    if isinstance(role, Crashed):
        return None, state
    strategy = role.strategy
    if isinstance(strategy, Silent) or not activation.active(step_index):
        return None, state
    if isinstance(strategy, Fixed):
        return check_clock(strategy.value), state
    if isinstance(strategy, Scripted):
        value = strategy.value_at(step_index)
        return (None if value is None else check_clock(value)), state
    if isinstance(strategy, ChaseBelow):
        seen = [int(view[q]) for q in neighbors(topology, self_id) if q is not None]
        return check_clock(min(seen) - strategy.offset), state
    if isinstance(strategy, RandomWalk):
        return strategy.draw(state.draws), replace(state, draws=state.draws + 1)
    raise TypeError(f"unknown Byzantine strategy {strategy!r}")


class FaultActor:
    """Engine-side holder for one faulty processor and its strategy state."""

    def __init__(self, pid: int, role, activation=ALWAYS):
        self.pid = pid
        self.role = role
        self.activation = activation
        self.state = FaultState()

    def act(self, step_index, clocks, topology, forced=False) -> Optional[int]:
        activation = ALWAYS if forced else self.activation
        value, self.state = fault_action(
            self.role, self.state, step_index, clocks, self.pid, topology, activation
        )
        return value


# -- text forms -----------------------------------------------------------------


def parse_fault(spec: str, seed: int = 0, lo: int = 0, hi: int = 0):
    """Parse ``crash`` or ``byz:<kind>[:args]`` into a role."""
    if spec == "crash":
        return CRASHED
    parts = spec.split(":")
    if parts[0] != "byz" or len(parts) < 2:
        raise ValueError(f"bad fault spec {spec!r}")
    kind, args = parts[1], parts[2:]
    try:
        if kind == "fixed" and len(args) == 1:
            return Byzantine(Fixed(int(args[0])))
        if kind == "script" and len(args) >= 1:
            return Byzantine(Scripted(load_write_script(":".join(args))))
        if kind == "walk" and len(args) == 2:
            return Byzantine(RandomWalk(int(args[0]), int(args[1]), seed))
        if kind == "walk" and not args:
            return Byzantine(RandomWalk(lo, hi, seed))
        if kind == "chase" and len(args) <= 1:
            return Byzantine(ChaseBelow(int(args[0]) if args else 1))
        if kind == "silent" and not args:
            return Byzantine(SILENT)
    except ValueError as exc:
        raise ValueError(f"bad fault spec {spec!r}: {exc}") from None
    raise ValueError(f"bad fault spec {spec!r}")


def load_write_script(path) -> tuple:
    """Byzantine write script: one ``<step> <value>`` pair per line."""
    writes = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            step, value = line.split()
            writes.append((int(step), int(value)))
    return tuple(writes)


def parse_activation(spec: str, seed: int = 0):
    if spec == "never":
        return Never()
    kind, _, arg = spec.partition(":")
    if kind == "every":
        return EveryK(int(arg))
    if kind == "prob":
        return WithProbability(Fraction(arg), seed)
    if kind == "script":
        steps = [int(tok) for tok in Path(arg).read_text().split()]
        return ScriptedActivation(tuple(steps))
    raise ValueError(f"bad activation spec {spec!r}")
