"""Property batteries shared by the ``check`` subcommand and the acceptance suite."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import kernels
from .analysis import drift_monotonicity_violations, inv_holds, island_closure_violations
from .core import CORRECT, Byzantine, build_topology, is_correct
from .adversary import Fixed
from .engine import resolve_init
from .rules import Rule, apply_rule, enabled_rules, guards
from .scenarios import lower_bound_chain, lower_bound_ring, run_scenario, upper_bound_sweep


@dataclass
class CheckResult:
    name: str
    cases: int = 0
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = f"{status} {self.name}: {self.cases} cases, {len(self.violations)} violations"
        if self.violations:
            msg += f"; first: {self.violations[0]}"
        return msg


# -- configuration-level checks ------------------------------------------------------


def random_inv_configuration(rng: random.Random, n_max=6, lo=-5, hi=25, byzantine=True):
    """A random configuration satisfying INV, optionally with one Byzantine processor."""
    kind = rng.choice(("chain", "ring"))
    n = rng.randint(3, n_max) if kind == "ring" else rng.randint(2, n_max)
    t = build_topology(kind, n)
    roles = [CORRECT] * n
    if byzantine and rng.random() < 0.75:
        roles[rng.randrange(n)] = Byzantine(Fixed(0))
    while True:
        start = rng.randint(lo, hi)
        clocks = [start]
        for _ in range(n - 1):
            clocks.append(min(hi, max(lo, clocks[-1] + rng.choice((-1, 0, 1)))))
        for p, r in enumerate(roles):
            if not is_correct(r):
                clocks[p] = rng.randint(lo, hi)
        if inv_holds(clocks, roles, t):
            return t, tuple(roles), tuple(clocks)


def check_inv_closure(cases=1000, seed=0, lo=-5, hi=25) -> CheckResult:
    """Every enabled correct rule and every Byzantine write preserves INV."""
    rng = random.Random(f"inv-closure:{seed}")
    res = CheckResult("inv-closure")
    for case in range(cases):
        t, roles, c = random_inv_configuration(rng, lo=lo, hi=hi)
        res.cases += 1
        for p, role in enumerate(roles):
            if is_correct(role):
                for rule in enabled_rules(c, t, p, roles):
                    after = apply_rule(c, t, p, rule)
                    if not inv_holds(after, roles, t):
                        res.violations.append((case, t.kind.value, c, p, rule.label))
            else:
                for v in range(lo - 2, hi + 3):
                    after = c[:p] + (v,) + c[p + 1:]
                    if not inv_holds(after, roles, t):
                        res.violations.append((case, t.kind.value, c, p, f"byz:{v}"))
    return res


def check_end_liveness(width=41) -> CheckResult:
    """Each chain end has exactly one end rule enabled, over a ``width x width`` window."""
    res = CheckResult("end-liveness")
    half = width // 2
    for cp in range(-half, half + 1):
        for cn in range(-half, half + 1):
            for side, g in (("left", guards(None, cp, cn)), ("right", guards(cn, cp, None))):
                res.cases += 1
                jit = kernels.guard_mask(side == "right", cn, cp, side == "left", cn)
                if len(g) != 1 or not g <= {Rule.LEFT_END_UP, Rule.LEFT_END_DOWN, Rule.RIGHT_END_UP, Rule.RIGHT_END_DOWN}:
                    res.violations.append((side, cp, cn, sorted(r.label for r in g)))
                elif jit != next(iter(g)).bit:
                    res.violations.append((side, cp, cn, "kernel disagrees", jit))
    return res


# -- trace-level checks ----------------------------------------------------------------


def corpus(trials=2, seed=0, lower_bound_ts=range(2, 7)):
    """Scenario results from the upper-bound sweep and both lower-bound replays."""
    out = [run_scenario(s, check=False) for s in upper_bound_sweep(trials=trials, seed=seed)]
    for t in lower_bound_ts:
        out.append(run_scenario(lower_bound_chain(0, t), check=False))
        out.append(run_scenario(lower_bound_ring(0, t), check=False))
    return out


def _trace_check(name, fn, results) -> CheckResult:
    res = CheckResult(name)
    for r in results:
        params = r.scenario.params
        res.cases += len(r.trace)
        bad = fn(resolve_init(params), r.trace.records, params.roles, params.topology)
        res.violations += [(r.scenario.name, k) for k in bad]
    return res


def check_island_closure(results) -> CheckResult:
    return _trace_check("island-closure", island_closure_violations, results)


def check_drift_monotonicity(results) -> CheckResult:
    return _trace_check("drift-monotonicity", drift_monotonicity_violations, results)


def check_upper_bound(results) -> CheckResult:
    res = CheckResult("upper-bound")
    for r in results:
        if r.scenario.label != "SSU":
            continue
        res.cases += 1
        res.violations += [(r.scenario.name, o.name, o.detail) for o in r.failures]
    return res


def check_liveness(trials=2, seed=0, window=10) -> CheckResult:
    """Criterion-1 runs extended ``window * n`` rounds past stabilization."""
    res = CheckResult("post-inv-liveness")
    for s in upper_bound_sweep(trials=trials, seed=seed, window=window):
        r = run_scenario(s, check=False)
        res.cases += 1
        for o in r.failures:
            res.violations.append((s.name, o.name, o.detail))
    return res


def check_bounded_bypass(results) -> CheckResult:
    """Strongly-fair traces never let a rule's enabled-since-fire count exceed 10 per correct processor."""
    res = CheckResult("bounded-bypass")
    for r in results:
        if r.scenario.label != "SSU":
            continue
        res.cases += 1
        audit = r.stats.fairness_audit
        if audit.strong:
            res.violations.append((r.scenario.name, audit.max_enabled_since_fire, audit.bound))
    return res
