"""Compare the numba and pure-numpy kernel backends.

Each backend runs in its own interpreter (the backend is fixed at import
time by ``UNISON_SIM_NO_JIT``).  Two workloads are timed after a warm-up:

* ``fair_step``: raw strongly-fair steps on a ring with a large initial drift
* ``sweep``: the full upper-bound scenario sweep through the engine

Usage: python benchmarks/bench_kernels.py [--n 64] [--steps 20000] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from unison_sim import kernels
from unison_sim.scenarios import run_scenario, upper_bound_sweep

n, steps, repeat = map(int, sys.argv[1:4])

def raw():
    rng = np.random.default_rng(0)
    clocks = rng.integers(0, 10 * n, n).astype(np.int64)
    correct = np.ones(n, dtype=np.bool_)
    masks = kernels.enabled_masks(clocks, correct, True)
    debt = np.zeros((n, kernels.N_RULES), dtype=np.int64)
    idle = np.zeros(n, dtype=np.int64)
    for _ in range(steps):
        kernels.fair_step(clocks, masks, debt, idle, correct, True)

def sweep():
    for s in upper_bound_sweep(trials=2, seed=0):
        run_scenario(s, check=False)

def best(fn):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)

print(json.dumps({"backend": kernels.BACKEND, "fair_step": best(raw), "sweep": best(sweep)}))
"""


def measure(no_jit: bool, n: int, steps: int, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("UNISON_SIM_NO_JIT", None)
    if no_jit:
        env["UNISON_SIM_NO_JIT"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKER, str(n), str(steps), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64, help="ring size for the raw fair_step workload")
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    rows = [measure(flag, args.n, args.steps, args.repeat) for flag in (False, True)]
    print(f"{'backend':<8} {'fair_step (s)':>14} {'sweep (s)':>10}")
    for r in rows:
        print(f"{r['backend']:<8} {r['fair_step']:>14.3f} {r['sweep']:>10.3f}")
    jit, py = rows
    print(f"speedup  {py['fair_step'] / jit['fair_step']:>14.1f}x {py['sweep'] / jit['sweep']:>9.1f}x")


if __name__ == "__main__":
    main()
