"""Daemons, fairness bookkeeping, round accounting and the fairness audit."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from . import kernels
from .errors import Deadlock, ScriptViolation, TraceMissingEnabledSets
from .rules import Rule, rules_to_mask

# -- actor choices ---------------------------------------------------------------


@dataclass(frozen=True)
class CorrectMove:
    pid: int
    rule: Rule


@dataclass(frozen=True)
class FaultyMove:
    pid: int


@dataclass(frozen=True)
class Override:
    """Scripted write to a correct processor, bypassing the rules.

    Used to replay constructions stated for an arbitrary algorithm of the
    same class, where the written value is not what the local rule produces.
    """

    pid: int
    value: int


@dataclass(frozen=True)
class Batch:
    moves: tuple


ActorChoice = Union[CorrectMove, FaultyMove, Override, Batch]


# -- policies ----------------------------------------------------------------------


@dataclass(frozen=True)
class CentralStronglyFair:
    seed: int = 0

    def __str__(self):
        return "strongly-fair"


@dataclass(frozen=True)
class ScriptedCentral:
    choices: tuple = ()

    def __str__(self):
        return "scripted"


@dataclass(frozen=True)
class CentralWeaklyFairScripted(ScriptedCentral):
    """A scripted schedule the author claims is weakly fair (not verified here)."""


@dataclass(frozen=True)
class Unfair(ScriptedCentral):
    pass


@dataclass(frozen=True)
class Synchronous:
    def __str__(self):
        return "synchronous"


@dataclass(frozen=True)
class DistributedRandom:
    seed: int = 0
    subset_prob: float = 0.5

    def __str__(self):
        return f"distributed:{self.subset_prob}"


# -- ledgers -----------------------------------------------------------------------


class FairnessLedger:
    """Per-(processor, rule) count of configurations enabled since last firing.

    ``debt`` is an ``(n, 10)`` int64 array shared with the kernels; ``idle``
    counts steps since each processor last acted.
    """

    def __init__(self, n: int):
        self.n = n
        self.debt = np.zeros((n, kernels.N_RULES), dtype=np.int64)
        self.idle = np.zeros(n, dtype=np.int64)

    def enabled_since_fire(self, pid: int, rule: Rule) -> int:
        return int(self.debt[pid, int(rule)])

    def record(self, choice: ActorChoice, masks_after: np.ndarray) -> None:
        actors, fired = _flatten(choice)
        self.debt += (masks_after[:, None] >> np.arange(kernels.N_RULES)) & 1
        self.idle += 1
        for p in actors:
            self.idle[p] = 0
        for p, r in fired:
            self.debt[p, int(r)] = 0


class RoundAccounting:
    """Rounds: shortest run segments in which every correct processor acts."""

    def __init__(self, correct: Iterable[int]):
        self.correct = frozenset(correct)
        self.current_round = 0
        self.acted_this_round: set = set()
        self.round_boundaries: list = []
        self.last_step = -1

    def record(self, actor: int, step_index: int) -> bool:
        """Note that ``actor`` executed at ``step_index``; True on a round boundary."""
        self.last_step = step_index
        if actor not in self.correct:
            return False
        self.acted_this_round.add(actor)
        if len(self.acted_this_round) == len(self.correct):
            self.round_boundaries.append(step_index)
            self.current_round += 1
            self.acted_this_round = set()
            return True
        return False


def _flatten(choice):
    moves = choice.moves if isinstance(choice, Batch) else (choice,)
    actors = [m.pid for m in moves]
    fired = [(m.pid, m.rule) for m in moves if isinstance(m, CorrectMove)]
    return actors, fired


def record_and_advance(ledger: FairnessLedger, rounds: RoundAccounting, choice, enabled_after, step_index=None):
    """Update both ledgers after ``choice`` executed; returns them (updated in place)."""
    masks = as_masks(enabled_after, ledger.n)
    ledger.record(choice, masks)
    if step_index is None:
        step_index = rounds.last_step + 1
    for p in _flatten(choice)[0]:
        rounds.record(p, step_index)
    return ledger, rounds


def as_masks(enabled, n: int) -> np.ndarray:
    """Accept a mask array or a ``{pid: set of Rule}`` mapping."""
    if isinstance(enabled, np.ndarray):
        return enabled.astype(np.int64, copy=False)
    masks = np.zeros(n, dtype=np.int64)
    if isinstance(enabled, Mapping):
        for p, rules in enabled.items():
            masks[p] = rules_to_mask(rules)
    else:
        masks[:] = list(enabled)
    return masks


# -- selection ---------------------------------------------------------------------


class Selector:
    """Stateful per-run wrapper around a policy."""

    def __init__(self, policy, n: int, correct_count: Optional[int] = None):
        self.policy = policy
        self.n = n
        # strongly fair: an enabled rule with this much debt runs before any faulty write
        self.overdue = max(1, n if correct_count is None else correct_count)
        self.cursor = 0
        seed = getattr(policy, "seed", 0)
        self.rng = random.Random(f"sched:{seed}")

    @property
    def exhausted(self) -> bool:
        return isinstance(self.policy, ScriptedCentral) and self.cursor >= len(self.policy.choices)

    def select(self, enabled, faulty_ready=frozenset(), ledger: Optional[FairnessLedger] = None, step=None):
        masks = as_masks(enabled, self.n)
        policy = self.policy
        if isinstance(policy, ScriptedCentral):
            if self.exhausted:
                raise ScriptViolation("schedule exhausted", step)
            choice = policy.choices[self.cursor]
            _validate_scripted(choice, masks, faulty_ready, step)
            self.cursor += 1
            return choice
        if isinstance(policy, CentralStronglyFair):
            if ledger is None:
                ledger = FairnessLedger(self.n)
            if faulty_ready and kernels.max_enabled_debt(masks, ledger.debt) < self.overdue:
                return FaultyMove(min(faulty_ready))
            p, r = kernels.fair_select(masks, ledger.debt)
            if p < 0:
                raise Deadlock("no enabled rule and no faulty actor")
            return CorrectMove(int(p), Rule(int(r)))
        if isinstance(policy, Synchronous):
            moves = [CorrectMove(p, _lowest(masks[p])) for p in range(self.n) if masks[p]]
            moves += [FaultyMove(p) for p in sorted(faulty_ready)]
            if not moves:
                raise Deadlock("no enabled rule and no faulty actor")
            return Batch(tuple(moves))
        if isinstance(policy, DistributedRandom):
            pool = [p for p in range(self.n) if masks[p]] + sorted(faulty_ready)
            if not pool:
                raise Deadlock("no enabled rule and no faulty actor")
            chosen = [p for p in pool if self.rng.random() < policy.subset_prob]
            if not chosen:
                chosen = [self.rng.choice(pool)]
            moves = []
            for p in chosen:
                if p in faulty_ready:
                    moves.append(FaultyMove(p))
                else:
                    rules = [r for r in Rule if masks[p] >> r & 1]
                    moves.append(CorrectMove(p, self.rng.choice(rules)))
            return Batch(tuple(moves))
        raise TypeError(f"unknown scheduler policy {policy!r}")


def select(policy_state, enabled, faulty_ready=frozenset(), ledger=None, n=None):
    """One-shot selection; ``policy_state`` is a :class:`Selector` or a bare policy."""
    if not isinstance(policy_state, Selector):
        if n is None:
            n = ledger.n if ledger is not None else (max(enabled) + 1 if isinstance(enabled, Mapping) else len(enabled))
        policy_state = Selector(policy_state, n)
    return policy_state.select(enabled, faulty_ready, ledger)


def _lowest(mask: int) -> Rule:
    mask = int(mask)
    return Rule((mask & -mask).bit_length() - 1)


def _validate_scripted(choice, masks, faulty_ready, step):
    if isinstance(choice, CorrectMove):
        if not masks[choice.pid] >> int(choice.rule) & 1:
            raise ScriptViolation(f"{choice.rule.label} is not enabled at processor {choice.pid}", step)
    elif isinstance(choice, FaultyMove):
        if choice.pid not in faulty_ready:
            raise ScriptViolation(f"processor {choice.pid} is not faulty", step)
    elif not isinstance(choice, Override):
        raise ScriptViolation(f"unsupported scripted choice {choice!r}", step)


# -- script files ------------------------------------------------------------------


def parse_schedule(text: str) -> tuple:
    """Parse a schedule: ``C <pid> <ruleName>``, ``F <pid>`` or ``W <pid> <value>`` per line."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "C" and len(tok) == 3:
                out.append(CorrectMove(int(tok[1]), Rule.from_label(tok[2])))
            elif tok[0] == "F" and len(tok) == 2:
                out.append(FaultyMove(int(tok[1])))
            elif tok[0] == "W" and len(tok) == 3:
                out.append(Override(int(tok[1]), int(tok[2])))
            else:
                raise ValueError(line)
        except ValueError:
            raise ScriptViolation(f"line {lineno}: cannot parse {raw!r}") from None
    return tuple(out)


def format_schedule(choices: Sequence) -> str:
    lines = []
    for c in choices:
        if isinstance(c, CorrectMove):
            lines.append(f"C {c.pid} {c.rule.label}")
        elif isinstance(c, FaultyMove):
            lines.append(f"F {c.pid}")
        else:
            lines.append(f"W {c.pid} {c.value}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_schedule(path) -> tuple:
    return parse_schedule(Path(path).read_text())


def parse_scheduler(spec: str, seed: int = 0):
    if spec == "strongly-fair":
        return CentralStronglyFair(seed)
    if spec == "synchronous":
        return Synchronous()
    kind, _, arg = spec.partition(":")
    if kind == "distributed":
        prob = float(arg) if arg else 0.5
        if not 0 < prob <= 1:
            raise ValueError("distributed subset probability must lie in (0, 1]")
        return DistributedRandom(seed, prob)
    if kind == "scripted" and arg:
        return ScriptedCentral(load_schedule(arg))
    raise ValueError(f"bad scheduler spec {spec!r}")


# -- audit -------------------------------------------------------------------------


@dataclass(frozen=True)
class FairnessViolation:
    pid: int
    rule: Rule
    span: tuple  # (first counted step, step at which the bound was crossed)

    def to_dict(self):
        return {"pid": self.pid, "rule": self.rule.label, "span": list(self.span)}


@dataclass(frozen=True)
class AuditReport:
    bound: int
    strong: tuple = ()
    weak: tuple = ()
    max_enabled_since_fire: int = 0
    max_continuous_enabled: int = 0

    @property
    def ok(self) -> bool:
        return not self.strong and not self.weak

    @property
    def violations(self) -> tuple:
        return self.strong + self.weak

    def to_dict(self):
        return {
            "ok": self.ok,
            "bound": self.bound,
            "strong_violations": [v.to_dict() for v in self.strong],
            "weak_violations": [v.to_dict() for v in self.weak],
            "max_enabled_since_fire": self.max_enabled_since_fire,
            "max_continuous_enabled": self.max_continuous_enabled,
        }

    @classmethod
    def from_dict(cls, d):
        def viols(items):
            return tuple(FairnessViolation(v["pid"], Rule.from_label(v["rule"]), tuple(v["span"])) for v in items)

        return cls(
            d["bound"],
            viols(d["strong_violations"]),
            viols(d["weak_violations"]),
            d["max_enabled_since_fire"],
            d["max_continuous_enabled"],
        )


def enabled_since_fire_matrix(records) -> tuple:
    """Replay the ledger over a trace.

    Returns ``(counter, run, fired)``, all ``(K, n*10)``: ``counter[k]`` is the ledger
    value seen by the scheduler before record ``k``; ``run[k]`` the length of
    the current stretch of consecutive enabled configurations without a firing.
    """
    if any(r.enabled is None for r in records):
        raise TraceMissingEnabledSets("trace records carry no enabled sets")
    K = len(records)
    masks = np.array([r.enabled for r in records], dtype=np.int64)
    n = masks.shape[1]
    m = n * kernels.N_RULES
    enabled = ((masks[:, :, None] >> np.arange(kernels.N_RULES)) & 1).astype(bool).reshape(K, m)
    fired = np.zeros((K, m), dtype=bool)
    for k, r in enumerate(records):
        if r.rule is not None:
            fired[k, r.actor * kernels.N_RULES + int(r.rule)] = True
    fired_prev = np.zeros_like(fired)
    fired_prev[1:] = fired[:-1]
    inc = enabled & ~fired_prev
    inc[0] = False  # the ledger starts at zero and does not count the initial configuration
    cs = np.cumsum(inc, axis=0)
    at_fire = np.maximum.accumulate(np.where(fired, cs, 0), axis=0)
    base = np.zeros_like(cs)
    base[1:] = at_fire[:-1]
    counter = cs - base
    idx = np.arange(K)[:, None]
    last_reset = np.maximum.accumulate(np.where(inc, -1, idx), axis=0)
    run = np.where(inc, idx - last_reset, 0)
    return counter, run, fired


def audit_fairness(trace, bound: int) -> AuditReport:
    """Finite-horizon fairness surrogates over a recorded trace.

    Strong: a (processor, rule) pair whose enabled-since-fire count exceeds
    ``bound``.  Weak: a pair enabled for ``bound`` or more consecutive
    configurations without firing.
    """
    records = list(trace)
    if not records:
        return AuditReport(bound)
    counter, run, fired = enabled_since_fire_matrix(records)
    strong, weak = [], []
    for col in np.flatnonzero((counter > bound).any(axis=0)):
        k = int(np.argmax(counter[:, col] > bound))
        fires = np.flatnonzero(fired[:k, col])
        start = int(fires[-1]) + 1 if fires.size else 0
        strong.append(FairnessViolation(int(col) // kernels.N_RULES, Rule(int(col) % kernels.N_RULES), (start, k)))
    for col in np.flatnonzero((run >= bound).any(axis=0)):
        k = int(np.argmax(run[:, col] >= bound))
        weak.append(FairnessViolation(int(col) // kernels.N_RULES, Rule(int(col) % kernels.N_RULES), (k - int(run[k, col]) + 1, k)))
    return AuditReport(bound, tuple(strong), tuple(weak), int(counter.max()), int(run.max()))
