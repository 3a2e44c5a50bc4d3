"""Acceptance gate: one PASS/FAIL line per criterion.

Lines are printed as each test finishes and repeated in the pytest terminal
summary.  Run directly (``python tests/test_acceptance.py``) for the lines
alone.
"""

import subprocess
import sys
import time
from collections import Counter

import pytest

from unison_sim import checks
from unison_sim.adversary import SILENT
from unison_sim.analysis import EndCycle, end_cycle_type, increment_count
from unison_sim.core import CORRECT, Byzantine, build_topology
from unison_sim.engine import Exhaust, RunParams, encode_trace, run
from unison_sim.scenarios import (
    FAULT_KINDS, lower_bound_chain, lower_bound_ring, run_scenario, upper_bound_sweep, weakly_fair_starvation,
)
from unison_sim.scheduler import Override, ScriptedCentral

LINES = {}
T_RANGE = range(2, 7)
SWEEP_SECONDS = 5.0


def report(number, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} {name}: {detail}"
    LINES[number] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def sweep():
    # one throwaway run compiles the kernels so the timing below measures the sweep only
    run_scenario(upper_bound_sweep(n_range=[3], L_range=[2], trials=1)[0])
    scenarios = upper_bound_sweep(trials=2, seed=0)
    start = time.perf_counter()
    results = [run_scenario(s) for s in scenarios]
    return results, time.perf_counter() - start


@pytest.fixture(scope="module")
def lower_bounds():
    return ([run_scenario(lower_bound_chain(0, t)) for t in T_RANGE],
            [run_scenario(lower_bound_ring(0, t)) for t in T_RANGE])


def test_c1_upper_bound(sweep):
    results, elapsed = sweep
    per_kind = Counter(r.scenario.meta["kind"] for r in results)
    faults = {r.scenario.meta["fault"] for r in results}
    ns = {r.scenario.meta["n"] for r in results}
    Ls = {r.scenario.meta["L"] for r in results}
    # each scenario asserts an exact initial L and rounds_to_inv <= L
    bad = [r for r in results
           if not r.passed or not r.stats.stabilized or r.stats.rounds_to_inv > r.scenario.meta["L"]]
    shape = (min(per_kind.values()) >= 200 and set(per_kind) == {"chain", "ring"}
             and faults == set(FAULT_KINDS) and ns == set(range(3, 9)) and Ls == set(range(2, 21)))
    ok = shape and not bad and elapsed < SWEEP_SECONDS
    first = f"; first: {bad[0].scenario.name} rounds_to_inv={bad[0].stats.rounds_to_inv}" if bad else ""
    assert report(1, "upper bound rounds_to_inv <= L",
                  ok, f"{len(results) - len(bad)}/{len(results)} within bound, per kind {dict(per_kind)}, "
                      f"{elapsed:.2f}s (limit {SWEEP_SECONDS}s){first}")


def test_c2_lower_bound_chain(lower_bounds):
    chain, _ = lower_bounds
    wrong = []
    for t, r in zip(T_RANGE, chain):
        want = tuple(2 * (t - i) for i in range(t)) + (1,)
        if r.stats.drift_by_round != want or r.stats.rounds_to_inv != t or r.stats.initial_L != 2 * t:
            wrong.append((t, r.stats.drift_by_round, r.stats.rounds_to_inv))
    again = [encode_trace(run_scenario(lower_bound_chain(0, t)).trace) for t in T_RANGE]
    stable = again == [encode_trace(r.trace) for r in chain]
    assert report(2, "lower bound chain", not wrong and stable,
                  f"t=2..6 exact: {not wrong}, golden traces stable: {stable}" + (f"; first: {wrong[0]}" if wrong else ""))


def test_c3_lower_bound_ring(lower_bounds):
    _, ring = lower_bounds
    wrong = []
    for t, r in zip(T_RANGE, ring):
        want = tuple(2 * (t - i) for i in range(t)) + (0,)
        if r.stats.drift_by_round != want or r.stats.rounds_to_inv != t:
            wrong.append((t, r.stats.drift_by_round, r.stats.rounds_to_inv))
    assert report(3, "lower bound ring", not wrong,
                  f"t=2..6 exact: {not wrong}" + (f"; first: {wrong[0]}" if wrong else ""))


def test_c4_inv_closure():
    res = checks.check_inv_closure(cases=1000, seed=0, lo=-5, hi=25)
    assert report(4, "INV closure", res.passed and res.cases == 1000, res.line())


def _trace_corpus(sweep, lower_bounds):
    chain, ring = lower_bounds
    return sweep[0] + chain + ring


def test_c5_island_closure(sweep, lower_bounds):
    res = checks.check_island_closure(_trace_corpus(sweep, lower_bounds))
    assert report(5, "island closure", res.passed, res.line())


def test_c6_drift_monotonicity(sweep, lower_bounds):
    res = checks.check_drift_monotonicity(_trace_corpus(sweep, lower_bounds))
    assert report(6, "out-of-unison drift monotonicity", res.passed, res.line())


def test_c7_end_liveness():
    res = checks.check_end_liveness(width=41)
    assert report(7, "end liveness", res.passed and res.cases == 2 * 41 * 41, res.line())


def test_c8_post_stabilization_liveness():
    res = checks.check_liveness(trials=2, seed=0, window=10)
    kinds = Counter(v[0].split(",")[3] for v in res.violations)
    assert report(8, "post-stabilization liveness", res.passed,
                  res.line() + (f"; by fault {dict(kinds)}" if kinds else ""))


def test_c9_weakly_fair_starvation():
    r = run_scenario(weakly_fair_starvation(horizon=10_000))
    starved = increment_count(r.trace, 1)
    detail = f"{len(r.trace)} steps, increment_count(1)={starved}, " + ", ".join(
        f"{o.name}={'ok' if o.passed else 'FAIL'}" for o in r.outcomes)
    assert report(9, "weakly-fair starvation", r.passed and len(r.trace) == 10_000 and starved == 0, detail)


INVOCATIONS = [
    ["run", "--topology", "ring", "--size", "7", "--drift", "12", "--faulty", "3", "--fault", "byz:walk",
     "--seed", "9", "--stop", "window:5"],
    ["run", "--topology", "chain", "--size", "6", "--drift", "9", "--faulty", "0", "--fault", "byz:chase:1",
     "--activation", "prob:1/2", "--seed", "4", "--trials", "3"],
    ["run", "--topology", "ring", "--size", "6", "--drift", "8", "--scheduler", "distributed:0.4", "--seed", "2"],
    ["scenario", "lower-bound-chain", "--t", "4"],
    ["scenario", "weakly-fair-starvation"],
]


def test_c10_determinism(tmp_path):
    diverged = []
    for k, args in enumerate(INVOCATIONS):
        outputs = set()
        for rep in range(3):
            d = tmp_path / f"{k}-{rep}"
            d.mkdir()
            proc = subprocess.run([sys.executable, "-m", "unison_sim.cli", *args, "--trace", "t.jsonl",
                                   "--stats", "s.json"], cwd=d, capture_output=True)
            trace = (d / "t.jsonl").read_bytes() if (d / "t.jsonl").exists() else None
            outputs.add((proc.returncode, proc.stdout, trace, (d / "s.json").read_bytes()))
        if len(outputs) != 1:
            diverged.append(" ".join(args))
    assert report(10, "determinism", not diverged,
                  f"{len(INVOCATIONS) - len(diverged)}/{len(INVOCATIONS)} invocations byte-identical over 3 repeats"
                  + (f"; first: {diverged[0]}" if diverged else ""))


def _chain2(b, **kw):
    params = RunParams(build_topology("chain", 2), (CORRECT, Byzantine(SILENT)), (b, b), stop=Exhaust(), **kw)
    return run(params)[0]


def test_c11_end_cycle_classifier():
    b = 5
    synthetic = {
        "type1": ((b + 1, b, b + 1, b), EndCycle("type1", (b, b + 1))),
        "type2": ((b - 1, b, b - 1, b), EndCycle("type2", (b, b - 1))),
        "type3": ((b + 1, b - 1, b, b + 1), EndCycle("type3", (b, b + 1, b - 1))),
    }
    got = {}
    for name, (writes, want) in synthetic.items():
        trace = _chain2(b, policy=ScriptedCentral(tuple(Override(0, v) for v in writes)), max_rounds=10**6)
        got[name] = end_cycle_type(trace, 0, b)
    synthetic_ok = all(got[k] == synthetic[k][1] for k in synthetic)
    measured = end_cycle_type(_chain2(b, max_steps=40), 0, b)
    ssu_ok = measured == EndCycle("other", (b + 1, b - 1)) and measured.kind != "type1"
    assert report(11, "end-cycle classifier", synthetic_ok and ssu_ok,
                  f"synthetic {', '.join(f'{k}->{v}' for k, v in got.items())}; SSU measured {measured} "
                  f"(measured != Type1: {measured.kind != 'type1'})")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
