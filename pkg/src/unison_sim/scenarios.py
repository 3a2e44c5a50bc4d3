"""Canned, self-checking experiments.

Each :class:`Scenario` carries run parameters plus named assertions; running
it yields pass/fail per assertion with the first offending step when one can
be pinned down.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .adversary import SILENT, ChaseBelow, EveryK, Fixed, RandomWalk, Scripted
from .analysis import clock_matrix, correct_drifts, increment_count
from .core import CORRECT, CRASHED, Byzantine, build_topology
from .engine import Exhaust, OnInv, OnInvPlusWindow, RandomInit, RunParams, resolve_init, run
from .rules import Rule
from .scheduler import (
    CentralStronglyFair,
    CentralWeaklyFairScripted,
    CorrectMove,
    FaultyMove,
    Override,
    ScriptedCentral,
    audit_fairness,
)

FAULT_KINDS = ("none", "crash", "byz-fixed", "byz-silent", "byz-walk", "byz-chase")


@dataclass(frozen=True)
class Assertion:
    name: str
    check: Callable  # (trace, stats) -> (ok, step or None, detail)


@dataclass(frozen=True)
class Scenario:
    name: str
    params: RunParams
    expected: tuple
    label: str = ""
    meta: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Outcome:
    name: str
    passed: bool
    step: Optional[int] = None
    detail: str = ""


@dataclass
class ScenarioResult:
    scenario: Scenario
    trace: object
    stats: object
    outcomes: list

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    @property
    def failures(self) -> list:
        return [o for o in self.outcomes if not o.passed]


def run_scenario(s: Scenario, check: bool = True) -> ScenarioResult:
    trace, stats = run(s.params, check=check)
    outcomes = []
    for a in s.expected:
        ok, step, detail = a.check(trace, stats)
        outcomes.append(Outcome(a.name, bool(ok), step, detail))
    return ScenarioResult(s, trace, stats, outcomes)


# -- assertion helpers ---------------------------------------------------------------


def _eq(name, getter, expected):
    def check(trace, stats):
        got = getter(trace, stats)
        return got == expected, None, f"expected {expected}, got {got}"

    return Assertion(name, check)


def _drift_rows(trace, params):
    X = clock_matrix(resolve_init(params), trace.records)
    return correct_drifts(X, params.topology, params.roles)


# -- lower bounds ----------------------------------------------------------------------


def lower_bound_chain(a: int = 0, t: int = 3) -> Scenario:
    """Replay of the chain lower-bound construction on processors p, q, r, s.

    ``s`` (index 3) is Byzantine and writes ``a + i`` at the end of round ``i``.
    The left end follows the type-1 cycle of the generic construction through
    scripted writes; ``q`` and ``r`` fire genuine rules, whose results
    coincide with the construction.
    """
    if t < 2:
        raise ValueError("t must be at least 2")
    choices, writes = [], []
    for i in range(1, t + 1):
        if i == 1:
            choices += [Override(0, a + 2 * t + 1), Override(0, a + 2 * t)]
        else:
            choices.append(Override(0, a + 2 * t + 1 - i))
        choices.append(CorrectMove(1, Rule.MIDDLE_LEFT_DOWN))
        choices.append(CorrectMove(2, Rule.MIDDLE_RIGHT_UP))
        writes.append((len(choices), a + i))
        choices.append(FaultyMove(3))
    roles = (CORRECT, CORRECT, CORRECT, Byzantine(Scripted(tuple(writes))))
    params = RunParams(
        build_topology("chain", 4),
        roles,
        (a + 2 * t, a + 2 * t, a, a),
        policy=ScriptedCentral(tuple(choices)),
        stop=Exhaust(),
        max_rounds=t + 1,
    )
    drifts = tuple(2 * (t - i) for i in range(t)) + (1,)
    expected = (
        _eq("initial_L == 2t", lambda tr, st: st.initial_L, 2 * t),
        _eq("drift_by_round", lambda tr, st: st.drift_by_round, drifts),
        _eq("rounds_to_inv == t", lambda tr, st: st.rounds_to_inv, t),
        _eq("rounds completed", lambda tr, st: st.rounds, t),
    )
    return Scenario(f"lower-bound-chain(a={a},t={t})", params, expected, "generic-algorithm replay", {"a": a, "t": t})


def lower_bound_ring(a: int = 0, t: int = 3) -> Scenario:
    """Replay of the ring lower-bound construction on processors p, q, r, s, t.

    ``r`` (index 2) is Byzantine and writes ``a + i`` at the end of round
    ``i``; every correct move is an ordinary rule firing.
    """
    if t < 2:
        raise ValueError("t must be at least 2")
    choices, writes = [], []
    for i in range(1, t + 1):
        choices += [
            CorrectMove(0, Rule.MIDDLE_LEFT_DOWN),
            CorrectMove(4, Rule.MIDDLE_RIGHT_DOWN),
            CorrectMove(1, Rule.MIDDLE_RIGHT_UP),
            CorrectMove(3, Rule.MIDDLE_LEFT_UP),
        ]
        writes.append((len(choices), a + i))
        choices.append(FaultyMove(2))
    roles = (CORRECT, CORRECT, Byzantine(Scripted(tuple(writes))), CORRECT, CORRECT)
    params = RunParams(
        build_topology("ring", 5),
        roles,
        (a + 2 * t, a, a, a, a + 2 * t),
        policy=ScriptedCentral(tuple(choices)),
        stop=Exhaust(),
        max_rounds=t + 1,
    )

    def floor_holds(trace, stats):
        low = [k for k, r in enumerate(trace) if min(r.clocks) < a]
        return not low, (low[0] if low else None), f"clock below {a}"

    expected = (
        _eq("initial_L == 2t", lambda tr, st: st.initial_L, 2 * t),
        _eq("drift_by_round", lambda tr, st: st.drift_by_round, tuple(2 * (t - i) for i in range(t)) + (0,)),
        _eq("rounds_to_inv == t", lambda tr, st: st.rounds_to_inv, t),
        Assertion(f"all clocks >= {a}", floor_holds),
    )
    return Scenario(f"lower-bound-ring(a={a},t={t})", params, expected, "generic-algorithm replay", {"a": a, "t": t})


# -- upper bound -----------------------------------------------------------------------


def _fault_role(kind, rng, L, seed):
    if kind == "crash":
        return CRASHED
    if kind == "byz-fixed":
        return Byzantine(Fixed(rng.randint(0, L)))
    if kind == "byz-silent":
        return Byzantine(SILENT)
    if kind == "byz-walk":
        return Byzantine(RandomWalk(0, L, seed))
    if kind == "byz-chase":
        return Byzantine(ChaseBelow(1))
    return None


def upper_bound_scenario(kind: str, n: int, L: int, fault: str, seed: int, window: int = 0) -> Scenario:
    """One strongly-fair run from an exact-drift random start.

    ``window > 0`` keeps running that many rounds after stabilization and adds
    the liveness assertion (every correct processor increments).
    """
    rng = random.Random(f"sweep:{kind}:{n}:{L}:{fault}:{seed}")
    roles = [CORRECT] * n
    role = _fault_role(fault, rng, L, rng.randrange(2**31))
    if role is not None:
        roles[rng.randrange(n)] = role
    stop = OnInvPlusWindow(window) if window else OnInv()
    params = RunParams(
        build_topology(kind, n),
        tuple(roles),
        RandomInit(L, rng.randrange(2**31)),
        policy=CentralStronglyFair(seed),
        activation=EveryK(1),
        stop=stop,
        max_rounds=4 * L + window + 20,
        max_steps=10**6,
        seed=seed,
    )

    def bound(trace, stats):
        if not stats.stabilized:
            return False, None, "did not stabilize"
        limit = 0 if L <= 1 else L
        return stats.rounds_to_inv <= limit, None, f"rounds_to_inv={stats.rounds_to_inv} > {limit}"

    t = params.topology
    has_edge = any(roles[p] == CORRECT and roles[q] == CORRECT for p, q in t.edges())
    expected = [
        _eq("initial_L exact", lambda tr, st: st.initial_L, L if has_edge else 0),
        Assertion("rounds_to_inv <= L", bound),
    ]
    if window:
        def liveness(trace, stats):
            starved = [p for p, c in enumerate(stats.increments_post_inv) if c is not None and c < 1]
            return not starved, None, f"no increments after stabilization at {starved}"

        expected.append(Assertion("post-inv increments >= 1", liveness))
    name = f"upper-bound({kind},n={n},L={L},{fault},seed={seed})"
    return Scenario(name, params, tuple(expected), "SSU", {"kind": kind, "n": n, "L": L, "fault": fault})


def upper_bound_sweep(n_range=range(3, 9), L_range=range(2, 21), trials: int = 2, seed: int = 0,
                      kinds=("chain", "ring"), window: int = 0) -> list:
    """Product over (kind, n, L, trial); the fault kind cycles through :data:`FAULT_KINDS`."""
    n_range, L_range = list(n_range), list(L_range)
    if not n_range or not L_range:
        raise ValueError("ranges must be nonempty")
    out = []
    for kind in kinds:
        k = 0
        for n in n_range:
            for L in L_range:
                for trial in range(trials):
                    fault = FAULT_KINDS[k % len(FAULT_KINDS)]
                    k += 1
                    w = window * n if window else 0
                    out.append(upper_bound_scenario(kind, n, L, fault, seed * 100_003 + k, w))
    return out


# -- weak fairness ---------------------------------------------------------------------


def weakly_fair_starvation(horizon: int = 10_000, bound: int = 100) -> Scenario:
    """Two-processor chain where only the left end is ever scheduled.

    The left end cycles 9 -> 11 -> 9 against a neighbor at 10, so each rule of
    the right end is enabled in every other configuration: never continuously
    (weak fairness is not violated) but infinitely often (strong fairness is).
    """
    cycle = (CorrectMove(0, Rule.LEFT_END_UP), CorrectMove(0, Rule.LEFT_END_DOWN))
    choices = tuple(cycle[k % 2] for k in range(horizon))
    params = RunParams(
        build_topology("chain", 2),
        (CORRECT, CORRECT),
        (9, 10),
        policy=CentralWeaklyFairScripted(choices),
        stop=Exhaust(),
        max_steps=horizon,
        max_rounds=horizon + 1,
        audit_bound=bound,
    )

    def starved(trace, stats):
        return increment_count(trace, 1) == 0, None, "processor 1 incremented"

    def frozen(trace, stats):
        moved = [k for k, r in enumerate(trace) if r.clocks[1] != 10]
        return not moved, (moved[0] if moved else None), "processor 1 clock changed"

    def inv_throughout(trace, stats):
        d = _drift_rows(trace, params)
        bad = np.flatnonzero(d > 1)
        return not bad.size, (int(bad[0]) - 1 if bad.size else None), "INV broken"

    def weak_clean(trace, stats):
        rep = audit_fairness(trace, 3)
        return not rep.weak, None, f"weak violations {rep.weak}"

    def strong_flagged(trace, stats):
        rep = audit_fairness(trace, bound)
        return any(v.pid == 1 for v in rep.strong), None, "no strong violation for processor 1"

    expected = (
        _eq("steps == horizon", lambda tr, st: len(tr), horizon),
        Assertion("increment_count(1) == 0", starved),
        Assertion("processor 1 clock constant", frozen),
        Assertion("inv holds throughout", inv_throughout),
        Assertion("weak audit clean (bound 3)", weak_clean),
        Assertion(f"strong audit flags processor 1 (bound {bound})", strong_flagged),
    )
    return Scenario("weakly-fair-starvation", params, expected, "counterexample", {"horizon": horizon})


CATALOG = {
    "lower-bound-chain": lower_bound_chain,
    "lower-bound-ring": lower_bound_ring,
    "upper-bound-sweep": upper_bound_sweep,
    "weakly-fair-starvation": weakly_fair_starvation,
}
