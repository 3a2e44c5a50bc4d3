"""The run loop, trace records and run statistics."""

from __future__ import annotations

import io
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import kernels
from .adversary import ALWAYS, FaultActor
from .analysis import check_trace, clock_matrix, correct_drifts
from .core import CLOCK_LIMIT, Topology, check_clock, check_roles, is_correct, make_configuration
from .errors import ClockOverflow, Deadlock, ScriptViolation
from .rules import Rule, command, mask_to_rules, rules_to_mask
from .scheduler import (
    AuditReport,
    Batch,
    CentralStronglyFair,
    CorrectMove,
    FairnessLedger,
    FaultyMove,
    Override,
    RoundAccounting,
    ScriptedCentral,
    Selector,
    audit_fairness,
)

_RULES = tuple(Rule)

# -- parameters --------------------------------------------------------------------


@dataclass(frozen=True)
class OnInv:
    def __str__(self):
        return "on-inv"


@dataclass(frozen=True)
class OnInvPlusWindow:
    w_rounds: int

    def __str__(self):
        return f"window:{self.w_rounds}"


@dataclass(frozen=True)
class Exhaust:
    def __str__(self):
        return "exhaust"


@dataclass(frozen=True)
class RandomInit:
    """Clocks uniform in ``[0, target_L]`` with one correct edge forced to drift exactly ``target_L``."""

    target_L: int
    seed: int = 0


@dataclass(frozen=True)
class RunParams:
    topology: Topology
    roles: tuple
    init: Union[tuple, RandomInit]
    policy: object = CentralStronglyFair()
    activation: object = ALWAYS
    max_rounds: int = 10_000
    max_steps: int = 1_000_000
    stop: object = OnInv()
    seed: int = 0
    unchecked: bool = False
    audit_bound: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "roles", tuple(self.roles))
        check_roles(self.roles, self.topology.n, self.unchecked)
        if not isinstance(self.init, RandomInit):
            object.__setattr__(self, "init", make_configuration(self.init, self.topology))


def resolve_init(params: RunParams) -> tuple:
    init = params.init
    if not isinstance(init, RandomInit):
        return tuple(init)
    t, L = params.topology, init.target_L
    rng = random.Random(f"init:{init.seed}")
    clocks = [rng.randint(0, L) for _ in range(t.n)]
    ok = [is_correct(r) for r in params.roles]
    edges = [(p, q) for p, q in t.edges() if ok[p] and ok[q]]
    if edges:
        p, q = rng.choice(edges)
        lo_first = rng.random() < 0.5
        clocks[p], clocks[q] = (0, L) if lo_first else (L, 0)
    return make_configuration(clocks, t)


# -- traces ------------------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    step: int
    round: int  # rounds completed once this step has executed
    actor: int
    kind: str  # "rule" | "byzantine" | "crash-noop" | "scripted"
    rule: Optional[Rule]
    written: int
    clocks: tuple
    enabled: Optional[tuple]  # per-processor rule masks in the configuration before the step
    prev: int  # actor's clock before the step
    group: int  # index of the first record of the atomic step this record belongs to


@dataclass(frozen=True)
class Trace:
    records: tuple = ()

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, k):
        return self.records[k]

    @property
    def round_boundaries(self) -> list:
        out, last = [], 0
        for r in self.records:
            if r.round > last:
                out.append(r.step)
                last = r.round
        return out

    def enabled_sets_before(self, k: int) -> dict:
        masks = self.records[k].enabled
        return {p: mask_to_rules(m) for p, m in enumerate(masks) if m}

    def initial(self) -> Optional[tuple]:
        if not self.records:
            return None
        first = self.records[0]
        c = list(first.clocks)
        c[first.actor] = first.prev
        return tuple(c)


def _record_to_obj(r: StepRecord) -> dict:
    obj = {"step": r.step, "round": r.round, "actor": r.actor, "kind": r.kind}
    if r.rule is not None:
        obj["rule"] = r.rule.label
    obj["written"] = r.written
    obj["clocks"] = list(r.clocks)
    obj["prev"] = r.prev
    obj["group"] = r.group
    if r.enabled is not None:
        obj["enabled"] = [[x.label for x in sorted(mask_to_rules(m))] for m in r.enabled]
    return obj


def _record_from_obj(obj: dict) -> StepRecord:
    enabled = obj.get("enabled")
    return StepRecord(
        step=obj["step"],
        round=obj["round"],
        actor=obj["actor"],
        kind=obj["kind"],
        rule=Rule.from_label(obj["rule"]) if "rule" in obj else None,
        written=obj["written"],
        clocks=tuple(obj["clocks"]),
        enabled=None if enabled is None else tuple(rules_to_mask(Rule.from_label(x) for x in names) for names in enabled),
        prev=obj.get("prev", obj["written"]),
        group=obj.get("group", obj["step"]),
    )


def encode_trace(trace: Trace) -> bytes:
    """JSON Lines, one object per step."""
    buf = io.StringIO()
    for r in trace:
        buf.write(json.dumps(_record_to_obj(r), separators=(",", ":")))
        buf.write("\n")
    return buf.getvalue().encode("utf-8")


def decode_trace(data: Union[bytes, str]) -> Trace:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return Trace(tuple(_record_from_obj(json.loads(line)) for line in data.splitlines() if line.strip()))


def write_trace(trace: Trace, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_trace(trace))


def read_trace(path) -> Trace:
    with open(path, "rb") as fh:
        return decode_trace(fh.read())


# -- stats -------------------------------------------------------------------------


@dataclass(frozen=True)
class RunStats:
    stabilized: bool
    rounds_to_inv: Optional[int]
    steps_to_inv: Optional[int]
    initial_L: int
    drift_by_round: tuple
    increments_post_inv: tuple
    fairness_audit: AuditReport
    steps: int = 0
    rounds: int = 0

    def to_dict(self) -> dict:
        return {
            "stabilized": self.stabilized,
            "rounds_to_inv": self.rounds_to_inv,
            "steps_to_inv": self.steps_to_inv,
            "initial_L": self.initial_L,
            "drift_by_round": list(self.drift_by_round),
            "increments_post_inv": list(self.increments_post_inv),
            "fairness_audit": self.fairness_audit.to_dict(),
            "steps": self.steps,
            "rounds": self.rounds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunStats":
        return cls(
            d["stabilized"],
            d["rounds_to_inv"],
            d["steps_to_inv"],
            d["initial_L"],
            tuple(d["drift_by_round"]),
            tuple(d["increments_post_inv"]),
            AuditReport.from_dict(d["fairness_audit"]),
            d.get("steps", 0),
            d.get("rounds", 0),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def default_audit_bound(roles) -> int:
    return 10 * max(1, sum(is_correct(r) for r in roles))


def compute_stats(trace: Trace, params: RunParams) -> RunStats:
    records = trace.records
    t, roles = params.topology, params.roles
    X = clock_matrix(resolve_init(params), records)
    drifts = correct_drifts(X, t, roles)
    inv_rows = np.flatnonzero(drifts <= 1)
    if inv_rows.size:
        j = int(inv_rows[0])
        steps_to_inv = j
        if j == 0:
            rounds_to_inv = 0
        else:
            rounds_to_inv = (records[j - 2].round if j >= 2 else 0) + 1
    else:
        j = steps_to_inv = rounds_to_inv = None
    drift_by_round = [int(drifts[0])] + [int(drifts[b + 1]) for b in trace.round_boundaries]
    increments = []
    for p, role in enumerate(roles):
        if not is_correct(role) or j is None:
            increments.append(None)
        else:
            increments.append(sum(1 for r in records[j:] if r.actor == p and r.written > r.prev))
    bound = params.audit_bound if params.audit_bound is not None else default_audit_bound(roles)
    return RunStats(
        stabilized=j is not None,
        rounds_to_inv=rounds_to_inv,
        steps_to_inv=steps_to_inv,
        initial_L=int(drifts[0]),
        drift_by_round=tuple(drift_by_round),
        increments_post_inv=tuple(increments),
        fairness_audit=audit_fairness(records, bound),
        steps=len(records),
        rounds=records[-1].round if records else 0,
    )


# -- the run loop --------------------------------------------------------------------


class _Execution:
    def __init__(self, params: RunParams):
        self.params = params
        t = self.topology = params.topology
        self.n = t.n
        self.ring = t.is_ring
        self.initial = resolve_init(params)
        self.clocks = np.array(self.initial, dtype=np.int64)
        self.correct = np.array([is_correct(r) for r in params.roles], dtype=np.bool_)
        self.masks = kernels.enabled_masks(self.clocks, self.correct, self.ring)
        self.ledger = FairnessLedger(self.n)
        self.rounds = RoundAccounting(p for p in range(self.n) if self.correct[p])
        self.faulty = {p: FaultActor(p, r, params.activation) for p, r in enumerate(params.roles) if not is_correct(r)}
        self.bad = int(kernels.bad_edges(self.clocks, self.correct, self.ring))
        self.inv_round = 0 if self.bad == 0 else None
        self.records: list = []
        self.selector = Selector(params.policy, self.n, int(self.correct.sum()))

    # bookkeeping

    def _emit(self, actor, kind, rule, prev, written, enabled, group):
        step = len(self.records)
        self.rounds.record(actor, step)
        self.records.append(
            StepRecord(step, self.rounds.current_round, actor, kind, rule, written,
                       tuple(self.clocks.tolist()), enabled, prev, group)
        )
        if self.inv_round is None and self.bad == 0:
            self.inv_round = self.rounds.current_round

    def _commit(self, p, value, fired):
        if not -CLOCK_LIMIT < value < CLOCK_LIMIT:
            raise ClockOverflow(f"processor {p} would write {value}")
        self.bad = int(kernels.commit(self.clocks, self.masks, self.ledger.debt, self.ledger.idle,
                                      self.correct, self.ring, p, value, fired))

    def _view(self, p):
        t = self.topology
        left, right = t.left(p), t.right(p)
        c = self.clocks
        return (None if left is None else int(c[left])), int(c[p]), (None if right is None else int(c[right]))

    def should_stop(self) -> bool:
        params = self.params
        if len(self.records) >= params.max_steps or self.rounds.current_round >= params.max_rounds:
            return True
        stop = params.stop
        if isinstance(stop, OnInv):
            return self.bad == 0
        if isinstance(stop, OnInvPlusWindow):
            return self.inv_round is not None and self.rounds.current_round >= self.inv_round + stop.w_rounds
        return False

    # moves

    def correct_move(self, p, rule, group=None):
        enabled = tuple(self.masks.tolist())
        cl, cp, cr = self._view(p)
        value = command(rule, cl, cp, cr)
        self._commit(p, value, int(rule))
        self._emit(p, "rule", rule, cp, value, enabled, len(self.records) if group is None else group)

    def faulty_move(self, p, forced, group=None):
        step = len(self.records)
        value = self.faulty[p].act(step, self.clocks, self.topology, forced=forced)
        if value is None and not forced:
            return False
        enabled = tuple(self.masks.tolist())
        prev = int(self.clocks[p])
        if value is None:
            self._commit(p, prev, -1)
            self._emit(p, "crash-noop", None, prev, prev, enabled, step if group is None else group)
        else:
            self._commit(p, value, -1)
            self._emit(p, "byzantine", None, prev, value, enabled, step if group is None else group)
        return True

    def override(self, p, value):
        enabled = tuple(self.masks.tolist())
        prev = int(self.clocks[p])
        value = check_clock(value)
        self._commit(p, value, -1)
        self._emit(p, "scripted", None, prev, value, enabled, len(self.records))

    # loops

    def run_strongly_fair(self):
        clocks, masks, ledger, correct, ring = self.clocks, self.masks, self.ledger, self.correct, self.ring
        overdue = self.selector.overdue
        while not self.should_stop():
            acted = False
            # a faulty write must not keep knocking out a rule that is already overdue
            if self.faulty and kernels.max_enabled_debt(masks, ledger.debt) >= overdue:
                faulty = ()
            else:
                faulty = self.faulty
            for p in faulty:
                if self.faulty_move(p, forced=False):
                    acted = True
                    if self.should_stop():
                        return
            enabled = tuple(masks.tolist())
            p, r, prev, new, bad = kernels.fair_step(clocks, masks, ledger.debt, ledger.idle, correct, ring)
            if p < 0:
                if not acted:
                    raise Deadlock(f"no enabled rule and no faulty action at step {len(self.records)}")
                continue
            if not -CLOCK_LIMIT < new < CLOCK_LIMIT:
                raise ClockOverflow(f"processor {p} would write {new}")
            self.bad = int(bad)
            self._emit(int(p), "rule", _RULES[r], int(prev), int(new), enabled, len(self.records))

    def run_scripted(self):
        faulty_ready = frozenset(self.faulty)
        while not self.should_stop() and not self.selector.exhausted:
            step = len(self.records)
            choice = self.selector.select(self.masks, faulty_ready, self.ledger, step)
            if isinstance(choice, CorrectMove):
                if not self.correct[choice.pid]:
                    raise ScriptViolation(f"processor {choice.pid} is faulty", step)
                self.correct_move(choice.pid, choice.rule)
            elif isinstance(choice, FaultyMove):
                self.faulty_move(choice.pid, forced=True)
            else:
                if not self.correct[choice.pid]:
                    raise ScriptViolation(f"override targets faulty processor {choice.pid}", step)
                self.override(choice.pid, choice.value)

    def run_batched(self):
        """Synchronous and distributed daemons: all moves in a batch read one snapshot."""
        while not self.should_stop():
            step = len(self.records)
            ready = set()
            pending = {}
            for p, actor in self.faulty.items():
                value = actor.act(step, self.clocks, self.topology)
                if value is not None:
                    ready.add(p)
                    pending[p] = value
            choice = self.selector.select(self.masks, frozenset(ready), self.ledger, step)
            enabled = tuple(self.masks.tolist())
            writes = []
            for move in choice.moves:
                if isinstance(move, CorrectMove):
                    cl, cp, cr = self._view(move.pid)
                    writes.append((move.pid, "rule", move.rule, cp, command(move.rule, cl, cp, cr)))
                else:
                    writes.append((move.pid, "byzantine", None, int(self.clocks[move.pid]), pending[move.pid]))
            for p, kind, rule, prev, value in writes:
                if not -CLOCK_LIMIT < value < CLOCK_LIMIT:
                    raise ClockOverflow(f"processor {p} would write {value}")
                self.clocks[p] = value
            self.masks[:] = kernels.enabled_masks(self.clocks, self.correct, self.ring)
            self.ledger.record(choice, self.masks)
            self.bad = int(kernels.bad_edges(self.clocks, self.correct, self.ring))
            snapshot = self.clocks.copy()
            for i, (p, kind, rule, prev, value) in enumerate(writes):
                # records show the batch applied one write at a time
                partial = snapshot.copy()
                for q, _, _, qprev, _ in writes[i + 1:]:
                    partial[q] = qprev
                self.clocks[:] = partial
                self._emit(p, kind, rule, prev, value, enabled, step)
            self.clocks[:] = snapshot

    def execute(self) -> Trace:
        if isinstance(self.params.policy, ScriptedCentral):
            self.run_scripted()
        elif isinstance(self.params.policy, CentralStronglyFair):
            self.run_strongly_fair()
        else:
            self.run_batched()
        return Trace(tuple(self.records))


def run(params: RunParams, check: bool = False) -> tuple:
    """Execute one run; returns ``(Trace, RunStats)``.

    With ``check=True`` island closure and out-of-unison drift monotonicity
    are verified over the finished trace (central daemons only) and an
    :class:`~unison_sim.errors.InvariantViolation` names the first failure.
    """
    ex = _Execution(params)
    trace = ex.execute()
    if check and isinstance(params.policy, (CentralStronglyFair, ScriptedCentral)):
        check_trace(ex.initial, trace.records, params.roles, params.topology)
    return trace, compute_stats(trace, params)
