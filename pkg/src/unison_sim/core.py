"""Topologies, processor roles and configurations."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from .errors import ClockOverflow, IndexOutOfRange, SizeTooSmall, TooManyFaults

# Kernels store clocks as int64; keeping |c| below 2**62 leaves headroom for
# every guard expression (c +/- 1) and command.
CLOCK_LIMIT = 2**62

Configuration = tuple  # tuple[int, ...], one clock per processor


class TopologyKind(str, enum.Enum):
    CHAIN = "chain"
    RING = "ring"


MIN_SIZE = {TopologyKind.CHAIN: 2, TopologyKind.RING: 3}


@dataclass(frozen=True)
class Topology:
    kind: TopologyKind
    n: int

    @property
    def is_ring(self) -> bool:
        return self.kind is TopologyKind.RING

    def _check(self, p: int) -> None:
        if not 0 <= p < self.n:
            raise IndexOutOfRange(f"processor {p} not in [0, {self.n})")

    def left(self, p: int) -> Optional[int]:
        self._check(p)
        if self.is_ring:
            return (p - 1) % self.n
        return p - 1 if p > 0 else None

    def right(self, p: int) -> Optional[int]:
        self._check(p)
        if self.is_ring:
            return (p + 1) % self.n
        return p + 1 if p < self.n - 1 else None

    def degree(self, p: int) -> int:
        left, right = neighbors(self, p)
        return (left is not None) + (right is not None)

    def degrees(self) -> list[int]:
        return [self.degree(p) for p in range(self.n)]

    def edges(self) -> list[tuple[int, int]]:
        """Adjacent pairs (p, right(p)), each edge listed once."""
        last = self.n if self.is_ring else self.n - 1
        return [(p, (p + 1) % self.n) for p in range(last)]


def build_topology(kind, n: int) -> Topology:
    kind = TopologyKind(kind)
    if n < MIN_SIZE[kind]:
        raise SizeTooSmall(f"{kind.value} needs at least {MIN_SIZE[kind]} processors, got {n}")
    return Topology(kind, n)


def neighbors(t: Topology, p: int) -> tuple[Optional[int], Optional[int]]:
    """Return ``(left, right)``; a chain end has ``None`` on its open side."""
    return t.left(p), t.right(p)


@dataclass(frozen=True)
class Correct:
    def __str__(self):
        return "correct"


@dataclass(frozen=True)
class Crashed:
    def __str__(self):
        return "crash"


@dataclass(frozen=True)
class Byzantine:
    strategy: Any  # adversary.ByzantineStrategy

    def __str__(self):
        return f"byz:{self.strategy}"


CORRECT = Correct()
CRASHED = Crashed()


def is_correct(role) -> bool:
    return isinstance(role, Correct)


def all_correct(n: int) -> tuple:
    return (CORRECT,) * n


def check_roles(roles: Sequence, n: int, unchecked: bool = False) -> None:
    """Setup-time check of the single-fault regime."""
    if len(roles) != n:
        raise ValueError(f"expected {n} roles, got {len(roles)}")
    faulty = [p for p, r in enumerate(roles) if not is_correct(r)]
    if len(faulty) > 1 and not unchecked:
        raise TooManyFaults(f"at most one faulty processor allowed, got {faulty}")


def check_clock(value: int) -> int:
    value = int(value)
    if not -CLOCK_LIMIT < value < CLOCK_LIMIT:
        raise ClockOverflow(f"clock value {value} outside +/-2**62")
    return value


def make_configuration(clocks: Sequence[int], t: Optional[Topology] = None) -> Configuration:
    config = tuple(check_clock(c) for c in clocks)
    if t is not None and len(config) != t.n:
        raise ValueError(f"configuration has {len(config)} clocks, topology has {t.n}")
    return config
