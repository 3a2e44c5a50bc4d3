import numpy as np
import pytest
from hypothesis import given, strategies as st

from unison_sim.adversary import SILENT, ChaseBelow, Fixed, RandomWalk
from unison_sim.core import CORRECT, CRASHED, Byzantine, build_topology
from unison_sim.engine import Exhaust, RunParams, StepRecord, Trace, run
from unison_sim.errors import Deadlock, ScriptViolation, TraceMissingEnabledSets
from unison_sim.rules import Rule
from unison_sim.scenarios import weakly_fair_starvation, run_scenario
from unison_sim.scheduler import (
    Batch, CentralStronglyFair, CorrectMove, DistributedRandom, FairnessLedger, FaultyMove, Override,
    RoundAccounting, ScriptedCentral, Selector, Synchronous, audit_fairness, enabled_since_fire_matrix,
    format_schedule, parse_schedule, parse_scheduler, record_and_advance, select,
)

R = Rule


def test_select_prefers_larger_debt():
    ledger = FairnessLedger(4)
    ledger.debt[0, R.LEFT_END_UP] = 2
    ledger.debt[3, R.RIGHT_END_UP] = 5
    enabled = {0: {R.LEFT_END_UP}, 3: {R.RIGHT_END_UP}}
    assert select(CentralStronglyFair(), enabled, ledger=ledger, n=4) == CorrectMove(3, R.RIGHT_END_UP)
    ledger.debt[0, R.LEFT_END_UP] = 5
    ledger.debt[3, R.RIGHT_END_UP] = 2
    assert select(CentralStronglyFair(), enabled, ledger=ledger, n=4) == CorrectMove(0, R.LEFT_END_UP)


def test_select_tie_goes_to_lowest_id():
    ledger = FairnessLedger(5)
    ledger.debt[1, R.MIDDLE_LEFT_UP] = 3
    ledger.debt[4, R.RIGHT_END_DOWN] = 3
    enabled = {4: {R.RIGHT_END_DOWN}, 1: {R.MIDDLE_LEFT_UP}}
    assert select(CentralStronglyFair(), enabled, ledger=ledger, n=5) == CorrectMove(1, R.MIDDLE_LEFT_UP)


def test_select_tie_within_processor_uses_rule_order():
    ledger = FairnessLedger(3)
    enabled = {1: {R.MIDDLE_RIGHT_UP, R.MIDDLE_LEFT_UP}}
    assert select(CentralStronglyFair(), enabled, ledger=ledger, n=3) == CorrectMove(1, R.MIDDLE_LEFT_UP)


def test_scripted_passthrough_and_violations():
    sel = Selector(ScriptedCentral((FaultyMove(3), CorrectMove(0, R.LEFT_END_UP), FaultyMove(2))), 4)
    assert sel.select({0: {R.LEFT_END_UP}}, frozenset({3})) == FaultyMove(3)
    assert sel.select({0: {R.LEFT_END_UP}}, frozenset({3})) == CorrectMove(0, R.LEFT_END_UP)
    with pytest.raises(ScriptViolation):
        sel.select({0: {R.LEFT_END_UP}}, frozenset({3}))
    bad = Selector(ScriptedCentral((CorrectMove(0, R.LEFT_END_DOWN),)), 4)
    with pytest.raises(ScriptViolation):
        bad.select({0: {R.LEFT_END_UP}}, frozenset())
    done = Selector(ScriptedCentral(()), 2)
    assert done.exhausted
    with pytest.raises(ScriptViolation):
        done.select({0: {R.LEFT_END_UP}})


def test_deadlock_when_no_actor():
    for policy in (CentralStronglyFair(), Synchronous(), DistributedRandom(1, 0.5)):
        with pytest.raises(Deadlock):
            Selector(policy, 3).select(np.zeros(3, dtype=np.int64), frozenset(), FairnessLedger(3))


def test_faulty_actor_goes_first_under_strong_fairness():
    assert select(CentralStronglyFair(), {0: {R.LEFT_END_UP}}, frozenset({2}), FairnessLedger(3), 3) == FaultyMove(2)


def test_synchronous_takes_every_enabled_processor():
    enabled = {0: {R.LEFT_END_UP}, 2: {R.MIDDLE_RIGHT_UP, R.MIDDLE_LEFT_UP}}
    choice = Selector(Synchronous(), 4).select(enabled, frozenset({3}))
    assert choice == Batch((CorrectMove(0, R.LEFT_END_UP), CorrectMove(2, R.MIDDLE_LEFT_UP), FaultyMove(3)))


def test_distributed_is_seeded_and_nonempty():
    enabled = {p: {R.MIDDLE_LEFT_UP} for p in range(1, 6)}
    a = [Selector(DistributedRandom(4, 0.3), 7) for _ in range(2)]
    seq = [[s.select(enabled) for _ in range(50)] for s in a]
    assert seq[0] == seq[1]
    assert all(len(c.moves) >= 1 for c in seq[0])


def test_round_boundary_example():
    ledger, rounds = FairnessLedger(3), RoundAccounting([0, 1, 2])
    for step, p in enumerate((0, 1)):
        record_and_advance(ledger, rounds, Override(p, 0), {}, step)
    assert rounds.acted_this_round == {0, 1}
    record_and_advance(ledger, rounds, Override(2, 0), {}, 2)
    assert rounds.round_boundaries == [2]
    assert rounds.acted_this_round == set()
    assert rounds.current_round == 1


def test_faulty_step_does_not_count_for_rounds():
    ledger, rounds = FairnessLedger(3), RoundAccounting([0, 1])
    record_and_advance(ledger, rounds, Override(0, 0), {})
    record_and_advance(ledger, rounds, FaultyMove(2), {})
    assert rounds.acted_this_round == {0}
    assert rounds.last_step == 1


def test_fired_counter_resets():
    ledger, rounds = FairnessLedger(2), RoundAccounting([0, 1])
    ledger.debt[0, R.LEFT_END_UP] = 9
    enabled_after = {0: {R.LEFT_END_UP}, 1: {R.RIGHT_END_DOWN}}
    record_and_advance(ledger, rounds, CorrectMove(0, R.LEFT_END_UP), enabled_after)
    assert ledger.enabled_since_fire(0, R.LEFT_END_UP) == 0
    assert ledger.enabled_since_fire(1, R.RIGHT_END_DOWN) == 1


def test_audit_empty_trace():
    rep = audit_fairness(Trace(), 5)
    assert rep.ok and rep.max_enabled_since_fire == 0


def test_audit_requires_enabled_sets():
    rec = StepRecord(0, 0, 0, "rule", R.LEFT_END_UP, 1, (1, 0), None, 0, 0)
    with pytest.raises(TraceMissingEnabledSets):
        audit_fairness(Trace((rec,)), 5)


def test_audit_flags_starved_processor():
    res = run_scenario(weakly_fair_starvation(horizon=1000), check=False)
    rep = audit_fairness(res.trace, 100)
    assert {v.pid for v in rep.strong} == {1}
    assert not rep.weak
    assert not audit_fairness(res.trace, 3).weak
    first = rep.strong[0]
    assert first.span[0] == 0 and first.span[1] > 100


def _naive_counters(records):
    debt = {}
    out = []
    for k, r in enumerate(records):
        out.append(dict(debt))
        after = records[k + 1].enabled if k + 1 < len(records) else None
        if after is not None:
            for p, m in enumerate(after):
                for s in range(10):
                    if m >> s & 1:
                        debt[(p, s)] = debt.get((p, s), 0) + 1
        if r.rule is not None:
            debt[(r.actor, int(r.rule))] = 0
    return out


fault_roles = st.sampled_from([None, CRASHED, Byzantine(Fixed(2)), Byzantine(SILENT),
                               Byzantine(ChaseBelow(1)), Byzantine(RandomWalk(0, 12, 7))])


@st.composite
def fair_runs(draw, steps=200):
    kind = draw(st.sampled_from(["chain", "ring"]))
    n = draw(st.integers(3, 8))
    c = tuple(draw(st.lists(st.integers(0, 15), min_size=n, max_size=n)))
    roles = [CORRECT] * n
    role = draw(fault_roles)
    if role is not None:
        roles[draw(st.integers(0, n - 1))] = role
    params = RunParams(build_topology(kind, n), tuple(roles), c, stop=Exhaust(), max_steps=steps)
    return params


@given(fair_runs(steps=120))
def test_audit_matrix_matches_naive_replay(params):
    trace, _ = run(params)
    records = list(trace)
    counter, _, _ = enabled_since_fire_matrix(records)
    naive = _naive_counters(records)
    for k in range(len(records)):
        for (p, s), v in naive[k].items():
            assert counter[k, p * 10 + s] == v or not records[k].enabled[p] >> s & 1


@given(fair_runs())
def test_bounded_bypass(params):
    trace, stats = run(params)
    k = sum(1 for r in params.roles if r == CORRECT)
    assert audit_fairness(trace, 10 * k).ok or not audit_fairness(trace, 10 * k).strong
    assert stats.fairness_audit.max_enabled_since_fire <= 10 * k


@given(fair_runs())
def test_round_boundaries(params):
    trace, _ = run(params)
    bounds = trace.round_boundaries
    assert bounds == sorted(set(bounds))
    correct = {p for p, r in enumerate(params.roles) if r == CORRECT}
    start = 0
    for b in bounds:
        actors = [r.actor for r in trace.records[start:b + 1] if r.actor in correct]
        counts = {p: actors.count(p) for p in correct}
        assert min(counts.values()) >= 1
        assert counts[trace.records[b].actor] == 1
        start = b + 1
    rounds = [r.round for r in trace]
    assert all(b - a in (0, 1) for a, b in zip([0] + rounds, rounds))


@given(fair_runs())
def test_strongly_fair_determinism(params):
    a, sa = run(params)
    b, sb = run(params)
    assert a == b and sa == sb


def test_schedule_text_round_trip(tmp_path):
    choices = (CorrectMove(0, R.LEFT_END_UP), FaultyMove(3), Override(1, -4))
    text = format_schedule(choices)
    assert text == "C 0 leftEndUp\nF 3\nW 1 -4\n"
    assert parse_schedule(text) == choices
    with pytest.raises(ScriptViolation):
        parse_schedule("C 0 middleAlign\n")
    f = tmp_path / "s.txt"
    f.write_text(text)
    assert parse_scheduler(f"scripted:{f}") == ScriptedCentral(choices)
    assert parse_scheduler("strongly-fair", 3) == CentralStronglyFair(3)
    assert parse_scheduler("synchronous") == Synchronous()
    assert parse_scheduler("distributed:0.25", 1) == DistributedRandom(1, 0.25)
    for bad in ("distributed:0", "distributed:2", "weakly-fair", "scripted:"):
        with pytest.raises(ValueError):
            parse_scheduler(bad)
