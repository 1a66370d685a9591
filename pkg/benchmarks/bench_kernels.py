#!/usr/bin/env python3
"""Compare the numba-compiled kernels against the pure-numpy fallback.

Each mode runs in its own interpreter (the JIT switch is read at import):

    python benchmarks/bench_kernels.py [--solves 2000] [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from thevenin import _accel, kernels
from thevenin.change_detect import WindowConfig, sliding_estimate
from thevenin.circuit import LoadSchedule, NoiseSpec, SourceSpec, StepEvent, run_schedule
from thevenin.phasor import ComplexImpedance, TheveninParams

n_solves, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
problems = []
for _ in range(n_solves):
    x = np.array([rng.uniform(10, 500), rng.uniform(-3, 3), rng.uniform(0.01, 10), rng.uniform(0.001, 5)])
    a, b = rng.uniform(-20, 20, 6), rng.uniform(-20, 20, 6)
    y = kernels.model_eval(x, a, b) + rng.normal(0, 1e-3 * x[0], 12)
    x0 = np.array([x[0] * rng.uniform(0.5, 2), rng.uniform(-3, 3), rng.uniform(0, 10), rng.uniform(0, 10)])
    problems.append((x0, y, a, b))
empty = np.empty(0)

def solve_all():
    for x0, y, a, b in problems:
        kernels.lm_solve(x0, y, a, b, 8000, 5000, 1e-10, 1e-12, 1e-3, 10.0, 0.1, empty)

def timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0

first = timed(solve_all)
best = min(timed(solve_all) for _ in range(repeat))

cycle = [ComplexImpedance(r, 0.2 * r) for r in (4.0, 8.0, 12.0)]
sched = LoadSchedule(tuple((0.0 if k == 0 else round(0.01 * k - 0.005, 5), cycle[k % 3]) for k in range(961)))
src = SourceSpec("s", TheveninParams(70.7107, 0.0, 1.0, 0.377), StepEvent(5.0, 2.0, 0.755))
stream = run_schedule([src], sched, NoiseSpec(1e-3, 1e-3, 1), 0.01, 9.6)
window = timed(lambda: sliding_estimate(stream, WindowConfig(window_size=8)))
print(json.dumps({"numba": _accel.USING_NUMBA, "first_pass_s": first, "best_pass_s": best, "sliding_s": window}))
"""


def run(disable: bool, solves: int, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("THEVENIN_DISABLE_JIT", None)
    if disable:
        env["THEVENIN_DISABLE_JIT"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKER, str(solves), str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--solves", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    results = {"numpy": run(True, args.solves, args.repeat), "numba": run(False, args.solves, args.repeat)}
    print(f"{args.solves} damped Gauss-Newton solves (6 snapshots each), best of {args.repeat}")
    print(f"{'mode':<8}{'first pass':>14}{'best pass':>14}{'per solve':>14}{'961-sample window':>20}")
    for mode, r in results.items():
        print(f"{mode:<8}{r['first_pass_s']:>13.3f}s{r['best_pass_s']:>13.3f}s"
              f"{1e6 * r['best_pass_s'] / args.solves:>12.1f}us{r['sliding_s']:>19.3f}s")
    print(f"speedup (best pass): {results['numpy']['best_pass_s'] / results['numba']['best_pass_s']:.1f}x")


if __name__ == "__main__":
    main()
