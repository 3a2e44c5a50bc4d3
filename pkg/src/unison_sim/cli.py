"""Command-line front end: ``unison-sim run | scenario <name> | check <battery>``.

Exit codes: 0 stabilized or all assertions passed, 1 usage error, 2 not
stabilized within the round budget, 3 invariant or assertion violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from . import checks
from .adversary import parse_activation, parse_fault
from .analysis import check_trace
from .core import CORRECT, build_topology
from .engine import Exhaust, OnInv, OnInvPlusWindow, RandomInit, RunParams, resolve_init, run, write_trace
from .errors import InvariantViolation, UnisonError, UsageError
from .scenarios import CATALOG, run_scenario, upper_bound_sweep
from .scheduler import CentralStronglyFair, ScriptedCentral, parse_scheduler

EXIT_OK, EXIT_USAGE, EXIT_UNSTABLE, EXIT_VIOLATION = 0, 1, 2, 3

CHECKS = ("closure", "islands", "drift", "liveness", "fairness", "all")

# config-file key -> (accepted python types, default)
OPTIONS = {
    "topology": ((str,), "chain"),
    "size": ((int,), None),
    "init": ((str,), "random"),
    "drift": ((int,), 4),
    "faulty": ((list, int), []),
    "fault": ((str,), "crash"),
    "activation": ((str,), "every:1"),
    "scheduler": ((str,), "strongly-fair"),
    "seed": ((int,), None),
    "max_rounds": ((int,), 10_000),
    "max_steps": ((int,), 1_000_000),
    "stop": ((str,), "on-inv"),
    "trace": ((str,), None),
    "stats": ((str,), None),
    "trials": ((int,), 1),
    "unchecked": ((bool,), False),
    "t": ((int,), 3),
    "a": ((int,), 0),
    "verbosity": ((int,), 0),
}


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    target: Optional[str] = None
    topology: str = "chain"
    size: int = 4
    init: str = "random"
    drift: int = 4
    faulty: tuple = ()
    fault: str = "crash"
    activation: str = "every:1"
    scheduler: str = "strongly-fair"
    seed: int = 0
    max_rounds: int = 10_000
    max_steps: int = 1_000_000
    stop: str = "on-inv"
    trace: Optional[str] = None
    stats: Optional[str] = None
    trials: int = 1
    unchecked: bool = False
    t: int = 3
    a: int = 0
    verbosity: int = 0
    params: Optional[RunParams] = field(default=None, compare=False, repr=False)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError([message])


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with snake_case keys; flags win")
    p.add_argument("--topology", choices=("chain", "ring"), default=S)
    p.add_argument("--size", type=int, default=S)
    p.add_argument("--init", default=S, help="comma-separated clocks or 'random'")
    p.add_argument("--drift", type=int, default=S, help="exact initial drift for --init random")
    p.add_argument("--faulty", type=int, action="append", default=S, metavar="PID")
    p.add_argument("--fault", default=S, help="crash | byz:fixed:V | byz:script:PATH | byz:walk[:LO:HI] | byz:chase[:D] | byz:silent")
    p.add_argument("--activation", default=S, help="never | every:K | prob:P | script:PATH")
    p.add_argument("--scheduler", default=S, help="strongly-fair | synchronous | distributed[:P] | scripted:PATH")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--max-rounds", dest="max_rounds", type=int, default=S)
    p.add_argument("--max-steps", dest="max_steps", type=int, default=S)
    p.add_argument("--stop", default=S, help="on-inv | exhaust | window:W")
    p.add_argument("--trace", default=S, metavar="PATH")
    p.add_argument("--stats", default=S, metavar="PATH")
    p.add_argument("--trials", type=int, default=S)
    p.add_argument("--unchecked", action="store_true", default=S)
    p.add_argument("--t", type=int, default=S, help="lower-bound scenario length")
    p.add_argument("--a", type=int, default=S, help="lower-bound scenario offset")
    p.add_argument("-v", "--verbose", dest="verbosity", action="count", default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="unison-sim", description="Minimal self-stabilizing unison simulator.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    _common(sub.add_parser("run", help="run one simulation"))
    sc = sub.add_parser("scenario", help="run a canned scenario")
    sc.add_argument("target", metavar="NAME", choices=sorted(CATALOG))
    _common(sc)
    ck = sub.add_parser("check", help="run a property battery")
    ck.add_argument("target", metavar="BATTERY", choices=CHECKS)
    _common(ck)
    return parser


def _load_file(raw: bytes, problems: list) -> dict:
    try:
        data = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        problems.append(f"config file is not valid JSON: {exc}")
        return {}
    if not isinstance(data, dict):
        problems.append("config file must hold a JSON object")
        return {}
    out = {}
    for key, value in data.items():
        if key not in OPTIONS:
            problems.append(f"unknown config key {key!r}")
            continue
        types = OPTIONS[key][0]
        if isinstance(value, bool) and bool not in types or not isinstance(value, types):
            problems.append(f"config key {key!r} has the wrong type")
            continue
        out[key] = value
    return out


def _stop(spec: str):
    if spec == "on-inv":
        return OnInv()
    if spec == "exhaust":
        return Exhaust()
    kind, _, arg = spec.partition(":")
    if kind == "window" and arg.isdigit():
        return OnInvPlusWindow(int(arg))
    raise ValueError(f"bad stop spec {spec!r}")


def _build_params(v: dict, problems: list) -> Optional[RunParams]:
    before = len(problems)
    init_spec = v["init"]
    clocks = None
    if init_spec != "random":
        try:
            clocks = tuple(int(x) for x in init_spec.split(","))
        except ValueError:
            problems.append(f"--init must be 'random' or comma-separated integers, got {init_spec!r}")
    size = v["size"]
    if size is None:
        size = len(clocks) if clocks is not None else 4
        v["size"] = size
    topology = None
    try:
        topology = build_topology(v["topology"], size)
    except (UnisonError, ValueError) as exc:
        problems.append(f"--size: {exc}")
    if clocks is not None and len(clocks) != size:
        problems.append(f"--init lists {len(clocks)} clocks but --size is {size}")
    if v["drift"] < 0:
        problems.append("--drift must be nonnegative")

    faulty = v["faulty"]
    if len(set(faulty)) != len(faulty):
        problems.append("--faulty repeats a processor")
    if len(faulty) > 1 and not v["unchecked"]:
        problems.append(f"{len(faulty)} faulty processors given; at most 1 without --unchecked")
    bad_ids = [p for p in faulty if not 0 <= p < size]
    if bad_ids:
        problems.append(f"--faulty ids {bad_ids} outside 0..{size - 1}")

    roles = [CORRECT] * size
    try:
        for p in faulty:
            if 0 <= p < size:
                roles[p] = parse_fault(v["fault"], seed=v["seed"] * 1_000 + p, lo=0, hi=v["drift"])
    except (ValueError, OSError) as exc:
        problems.append(f"--fault: {exc}")
    for key, fn in (("activation", lambda s: parse_activation(s, v["seed"])),
                    ("scheduler", lambda s: parse_scheduler(s, v["seed"])),
                    ("stop", _stop)):
        try:
            v[f"_{key}"] = fn(v[key])
        except (UnisonError, ValueError, OSError) as exc:
            problems.append(f"--{key}: {exc}")
    for key in ("max_rounds", "max_steps", "trials"):
        if v[key] < 0 or key == "trials" and v[key] < 1:
            problems.append(f"--{key.replace('_', '-')} out of range: {v[key]}")
    if len(problems) > before or topology is None:
        return None
    init = RandomInit(v["drift"], v["seed"]) if clocks is None else clocks
    try:
        return RunParams(
            topology, tuple(roles), init,
            policy=v["_scheduler"], activation=v["_activation"],
            max_rounds=v["max_rounds"], max_steps=v["max_steps"], stop=v["_stop"],
            seed=v["seed"], unchecked=v["unchecked"],
        )
    except (UnisonError, ValueError) as exc:
        problems.append(str(exc))
        return None


def parse_invocation(argv: Sequence[str], config_file: Optional[bytes] = None) -> CliConfig:
    """Validate ``argv`` (plus an optional JSON config) into a :class:`CliConfig`.

    Raises :class:`UsageError` listing every problem found.
    """
    ns = vars(build_parser().parse_args(list(argv)))
    problems: list = []
    if config_file is None and "config" in ns:
        try:
            config_file = Path(ns["config"]).read_bytes()
        except OSError as exc:
            problems.append(f"cannot read config file: {exc}")
    ns.pop("config", None)
    from_file = _load_file(config_file, problems) if config_file is not None else {}

    v = {k: default for k, (_, default) in OPTIONS.items()}
    v.update(from_file)
    v.update({k: ns[k] for k in OPTIONS if k in ns})
    if isinstance(v["faulty"], int):
        v["faulty"] = [v["faulty"]]
    v["faulty"] = list(v["faulty"])
    if v["seed"] is None:
        env = os.environ.get("UNISON_SEED")
        try:
            v["seed"] = int(env) if env is not None else 0
        except ValueError:
            problems.append(f"UNISON_SEED is not an integer: {env!r}")
            v["seed"] = 0

    params = None
    if ns["subcommand"] == "run":
        params = _build_params(v, problems)
    elif ns["subcommand"] == "scenario" and ns["target"].startswith("lower-bound") and v["t"] < 2:
        problems.append("--t must be at least 2")
    if v["trials"] < 1:
        problems.append("--trials must be at least 1")
    if problems:
        raise UsageError(problems)
    fields = {k: val for k, val in v.items() if not k.startswith("_")}
    fields["faulty"] = tuple(fields["faulty"])
    if fields["size"] is None:
        fields["size"] = 4
    return CliConfig(ns["subcommand"], ns.get("target"), params=params, **fields)


# -- execution -------------------------------------------------------------------------


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def _violation(prop, step, detail="") -> dict:
    return {"property": prop, "step": step, "detail": detail}


def _report_violation(v: dict) -> None:
    msg = f"violation: {v['property']} at step {v['step']}"
    if v["detail"]:
        msg += f": {v['detail']}"
    print(msg, file=sys.stderr)


def _run_one(params: RunParams):
    """Returns ``(trace, stats, violation or None)``."""
    try:
        trace, stats = run(params)
    except UnisonError as exc:
        return None, None, _violation(type(exc).__name__, getattr(exc, "step", None), str(exc))
    violation = None
    if isinstance(params.policy, (CentralStronglyFair, ScriptedCentral)):
        try:
            check_trace(resolve_init(params), trace.records, params.roles, params.topology)
        except InvariantViolation as exc:
            violation = _violation(exc.prop, exc.step, exc.detail)
    if violation is None and isinstance(params.policy, CentralStronglyFair) and not stats.fairness_audit.ok:
        first = stats.fairness_audit.violations[0]
        violation = _violation("fairness", None, f"processor {first.pid} rule {first.rule}")
    return trace, stats, violation


def _execute_run(cfg: CliConfig) -> int:
    results, code = [], EXIT_OK
    for k in range(cfg.trials):
        params = cfg.params
        if k:
            init = params.init
            if isinstance(init, RandomInit):
                init = RandomInit(init.target_L, cfg.seed + k)
            params = replace(params, init=init, seed=cfg.seed + k, policy=_reseed(params.policy, cfg.seed + k))
        trace, stats, violation = _run_one(params)
        entry = stats.to_dict() if stats is not None else {}
        if violation is not None:
            entry["violation"] = violation
            _report_violation(violation)
            code = EXIT_VIOLATION
        elif not stats.stabilized:
            code = max(code, EXIT_UNSTABLE)
        if k == 0 and cfg.trace and trace is not None:
            write_trace(trace, cfg.trace)
        if stats is not None:
            print(f"trial {k}: stabilized={stats.stabilized} rounds_to_inv={stats.rounds_to_inv} "
                  f"initial_L={stats.initial_L} steps={stats.steps}")
        results.append(entry)
    if cfg.stats:
        _write_json(cfg.stats, results[0] if cfg.trials == 1 else {"trials": results})
    return code


def _reseed(policy, seed):
    return CentralStronglyFair(seed) if isinstance(policy, CentralStronglyFair) else policy


def _scenario_entry(res) -> dict:
    return {
        "scenario": res.scenario.name,
        "passed": res.passed,
        "assertions": [
            {"name": o.name, "passed": o.passed, "step": o.step, "detail": "" if o.passed else o.detail}
            for o in res.outcomes
        ],
        "stats": res.stats.to_dict(),
    }


def _execute_scenario(cfg: CliConfig) -> int:
    if cfg.target == "upper-bound-sweep":
        scenarios = upper_bound_sweep(trials=cfg.trials, seed=cfg.seed)
    elif cfg.target == "weakly-fair-starvation":
        scenarios = [CATALOG[cfg.target]()]
    else:
        scenarios = [CATALOG[cfg.target](cfg.a, cfg.t)]
    entries, failed = [], 0
    for s in scenarios:
        try:
            res = run_scenario(s, check=True)
        except InvariantViolation as exc:
            v = _violation(exc.prop, exc.step, exc.detail)
            _report_violation(v)
            entries.append({"scenario": s.name, "passed": False, "violation": v})
            failed += 1
            continue
        entry = _scenario_entry(res)
        entries.append(entry)
        if not res.passed:
            failed += 1
            for o in res.failures:
                _report_violation(_violation(f"{s.name}: {o.name}", o.step, o.detail))
        if cfg.verbosity or len(scenarios) == 1:
            st = res.stats
            print(f"{s.name}: {'PASS' if res.passed else 'FAIL'} rounds_to_inv={st.rounds_to_inv} "
                  f"drift_by_round={list(st.drift_by_round)}")
        if cfg.trace and len(scenarios) == 1:
            write_trace(res.trace, cfg.trace)
    print(f"{cfg.target}: {len(scenarios) - failed}/{len(scenarios)} passed")
    if cfg.stats:
        _write_json(cfg.stats, entries[0] if len(entries) == 1 else {"scenario": cfg.target, "runs": entries})
    return EXIT_VIOLATION if failed else EXIT_OK


def _execute_check(cfg: CliConfig) -> int:
    wanted = CHECKS[:-1] if cfg.target == "all" else (cfg.target,)
    corpus = None
    results = []
    for name in wanted:
        if name in ("islands", "drift", "fairness") and corpus is None:
            corpus = checks.corpus(trials=max(2, cfg.trials), seed=cfg.seed)
        if name == "closure":
            results += [checks.check_inv_closure(seed=cfg.seed), checks.check_end_liveness()]
        elif name == "islands":
            results.append(checks.check_island_closure(corpus))
        elif name == "drift":
            results.append(checks.check_drift_monotonicity(corpus))
        elif name == "liveness":
            results.append(checks.check_liveness(trials=max(2, cfg.trials), seed=cfg.seed))
        elif name == "fairness":
            results.append(checks.check_bounded_bypass(corpus))
    for r in results:
        print(r.line())
        if not r.passed:
            first = r.violations[0]
            step = first[1] if len(first) == 2 and isinstance(first[1], int) else None
            _report_violation(_violation(r.name, step, repr(first)))
    if cfg.stats:
        _write_json(cfg.stats, {
            "check": cfg.target,
            "results": [
                {"name": r.name, "passed": r.passed, "cases": r.cases,
                 "violations": len(r.violations), "first": repr(r.violations[0]) if r.violations else None}
                for r in results
            ],
        })
    return EXIT_OK if all(r.passed for r in results) else EXIT_VIOLATION


def execute(cfg: CliConfig) -> int:
    if cfg.subcommand == "run":
        return _execute_run(cfg)
    if cfg.subcommand == "scenario":
        return _execute_scenario(cfg)
    return _execute_check(cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_invocation(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        for problem in exc.problems:
            print(f"usage error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
