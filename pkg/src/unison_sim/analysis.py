"""Predicates and metrics over configurations and traces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Topology, is_correct
from .errors import InvariantViolation, NoCycleDetected

CORRECT_KINDS = ("rule", "scripted")


def in_unison(a: int, b: int) -> bool:
    return abs(a - b) <= 1


@dataclass(frozen=True)
class IslandPartition:
    islands: tuple  # tuples of processor ids, in left-to-right traversal order

    def as_sets(self) -> list:
        return [frozenset(i) for i in self.islands]

    def widths(self) -> list:
        return [len(i) for i in self.islands]

    def label_of(self) -> dict:
        return {p: k for k, island in enumerate(self.islands) for p in island}

    def __len__(self):
        return len(self.islands)


def _correct_mask(roles, n):
    if roles is None:
        return [True] * n
    return [is_correct(r) for r in roles]


def islands(c: Sequence[int], roles, t: Topology) -> IslandPartition:
    n = t.n
    ok = _correct_mask(roles, n)

    def linked(p):  # p and right(p) in the same island
        q = t.right(p)
        return q is not None and ok[p] and ok[q] and in_unison(c[p], c[q])

    if t.is_ring:
        breaks = [p for p in range(n) if not linked(p)]
        if not breaks:
            return IslandPartition((tuple(range(n)),))
        start = (breaks[0] + 1) % n
        order = [(start + i) % n for i in range(n)]
    else:
        order = list(range(n))

    out, cur = [], []
    for p in order:
        if ok[p]:
            cur.append(p)
        if not linked(p):
            if cur:
                out.append(tuple(cur))
            cur = []
    if cur:
        out.append(tuple(cur))
    return IslandPartition(tuple(out))


@dataclass(frozen=True)
class DriftReport:
    L: int
    edges: tuple  # ((p, q), drift) for every correct-correct adjacent pair


def max_drift(c: Sequence[int], roles, t: Topology) -> DriftReport:
    ok = _correct_mask(roles, t.n)
    edges = tuple(((p, q), abs(c[p] - c[q])) for p, q in t.edges() if ok[p] and ok[q])
    return DriftReport(max((d for _, d in edges), default=0), edges)


def inv_holds(c: Sequence[int], roles, t: Topology) -> bool:
    """Every correct processor is in unison with its correct neighbors."""
    ok = _correct_mask(roles, t.n)
    return all(in_unison(c[p], c[q]) for p, q in t.edges() if ok[p] and ok[q])


def increment_count(trace, p: int, window: Optional[tuple] = None) -> int:
    """Steps in ``window`` (record index range, end exclusive) that raised ``p``'s clock."""
    records = list(trace)
    lo, hi = window if window is not None else (0, len(records))
    return sum(1 for r in records[lo:hi] if r.actor == p and r.written > r.prev)


# -- end-processor cycles --------------------------------------------------------------


@dataclass(frozen=True)
class EndCycle:
    kind: str  # "type1" | "type2" | "type3" | "other"
    cycle: tuple

    def __str__(self):
        if self.kind == "other":
            return f"Other({self.cycle})"
        return self.kind.capitalize()


def _rotations(seq):
    return {tuple(seq[i:] + seq[:i]) for i in range(len(seq))}


def end_cycle_type(trace, end: int, neighbor_clock: int, horizon: int = 64) -> EndCycle:
    """Classify the periodic clock sequence of a chain end facing a frozen neighbor.

    The first repeated clock value closes the cycle; with a fixed neighbor the
    clock alone determines the next rule.
    """
    records = list(trace)[:horizon]
    if not records:
        raise NoCycleDetected("empty trace")
    first = records[0]
    seq = [first.prev if first.actor == end else first.clocks[end]]
    seen = {seq[0]: 0}
    for r in records:
        if r.actor != end:
            continue
        v = r.clocks[end]
        if v in seen:
            cycle = tuple(seq[seen[v]:])
            b = neighbor_clock
            patterns = {
                "type1": (b, b + 1),
                "type2": (b, b - 1),
                "type3": (b, b + 1, b - 1),
            }
            for kind, pat in patterns.items():
                if len(pat) == len(cycle) and cycle in _rotations(list(pat)):
                    return EndCycle(kind, cycle)
            return EndCycle("other", cycle)
        seen[v] = len(seq)
        seq.append(v)
    raise NoCycleDetected(f"no repeated state for processor {end} within {horizon} steps")


# -- trace-level properties --------------------------------------------------------------


def clock_matrix(initial: Sequence[int], records) -> np.ndarray:
    """``(K+1, n)`` array: row 0 is ``initial``, row k+1 the clocks after record k."""
    rows = [tuple(initial)] + [r.clocks for r in records]
    return np.array(rows, dtype=np.int64)


def _edge_arrays(t: Topology, roles):
    ok = np.array(_correct_mask(roles, t.n))
    edges = np.array(t.edges(), dtype=np.int64).reshape(-1, 2)
    cc = ok[edges[:, 0]] & ok[edges[:, 1]]
    return edges, cc


def correct_drifts(X: np.ndarray, t: Topology, roles) -> np.ndarray:
    """Per-row maximum drift over correct-correct edges (0 when there are none)."""
    edges, cc = _edge_arrays(t, roles)
    if not cc.any():
        return np.zeros(X.shape[0], dtype=np.int64)
    e = edges[cc]
    return np.abs(X[:, e[:, 0]] - X[:, e[:, 1]]).max(axis=1)


def island_closure_violations(initial, records, roles, t: Topology) -> list:
    """Record indices at which two processors sharing an island were separated."""
    records = list(records)
    if not records:
        return []
    X = clock_matrix(initial, records)
    edges, cc = _edge_arrays(t, roles)
    U = (np.abs(X[:, edges[:, 0]] - X[:, edges[:, 1]]) <= 1) & cc
    broken = (U[:-1] & ~U[1:]).sum(axis=1)
    bad = broken >= 1
    if t.is_ring and cc.all():
        # a complete in-unison cycle survives the loss of a single edge
        bad &= ~(U[:-1].all(axis=1) & (broken == 1))
    return [int(k) for k in np.flatnonzero(bad)]


def drift_monotonicity_violations(initial, records, roles, t: Topology) -> list:
    """Correct steps that increased the drift to an out-of-unison neighbor."""
    records = list(records)
    idx = [k for k, r in enumerate(records) if r.kind in CORRECT_KINDS]
    if not idx:
        return []
    X = clock_matrix(initial, records)
    k = np.array(idx)
    p = np.array([records[i].actor for i in idx])
    before = X[k]
    after_p = X[k + 1, p]
    before_p = before[np.arange(len(k)), p]
    bad = np.zeros(len(k), dtype=bool)
    for q in (np.array([t.left(a) if t.left(a) is not None else -1 for a in p]),
              np.array([t.right(a) if t.right(a) is not None else -1 for a in p])):
        has = q >= 0
        cq = before[np.arange(len(k)), np.where(has, q, 0)]
        d0 = np.abs(before_p - cq)
        d1 = np.abs(after_p - cq)
        bad |= has & (d0 >= 2) & (d1 > d0)
    return [int(i) for i in k[bad]]


def check_trace(initial, records, roles, t: Topology) -> None:
    """Raise :class:`InvariantViolation` on the first closure or drift failure."""
    for name, fn in (("island-closure", island_closure_violations),
                     ("drift-monotonicity", drift_monotonicity_violations)):
        bad = fn(initial, records, roles, t)
        if bad:
            raise InvariantViolation(name, bad[0])
