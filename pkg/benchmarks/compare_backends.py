"""Time the jit kernels against the plain interpreter path.

Runs each workload in this process, then re-executes itself with
FDPROF_NO_NUMBA=1 in a child process and prints both timings side by side.
Compilation happens during an untimed warmup, so the table compares steady
state throughput, not first-call latency.

The end-to-end solves spend most of their time in the vectorized local
stage, which is identical numpy on both paths; the stepper-only workload is
the one that isolates the compiled kernel.

    python3 benchmarks/compare_backends.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import fdprof
from fdprof import OdeState, advance_f
from fdprof.analysis import find_anomalous_beta


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    p = fdprof.derive_params(4, 1.0 / 3.0, rho1=1.0, beta=0.25)
    cf = fdprof.derive_params(4, 1.0 / 3.0, rho1=1.0, beta=0.0)
    f0 = (1.0 + 0.5 ** 2 / 16.0) ** -3.0
    seam = OdeState(0.5, f0, 0.5 ** 3 * f0 ** (cf.m - 1.0)
                    * (-3.0 / 8.0 * 0.5 * (1.0 + 0.5 ** 2 / 16.0) ** -4.0))

    def stepper_only():
        for _ in range(50):
            advance_f(cf, seam, 100.0, 1e-12)

    return [
        ("stepper only, 50 advances at tol 1e-12", stepper_only),
        ("origin solve, rmax 100",
         lambda: fdprof.solve_origin_profile(p, 1.0, 100.0, tol=1e-9)),
        ("far-field solve, eta 4096",
         lambda: fdprof.solve_farfield_profile(cf, 4096.0, 100.0, tol=1e-9)),
        ("exponent search, 12 probes",
         lambda: find_anomalous_beta(4, 1.0 / 3.0, 1.0, 1.0, (-0.4, 0.4))),
    ]


def run_suite(repeat):
    items = workloads()
    items[0][1]()          # warmup: triggers compilation on the jit path
    return {name: timed(fn, repeat) for name, fn in items}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--emit-json", action="store_true",
                    help=argparse.SUPPRESS)
    args = ap.parse_args()

    results = run_suite(args.repeat)
    if args.emit_json:
        json.dump({"enabled": fdprof.NUMBA_ENABLED, "times": results},
                  sys.stdout)
        return

    env = dict(os.environ, FDPROF_NO_NUMBA="1")
    child = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--emit-json",
         "--repeat", str(args.repeat)],
        env=env, capture_output=True, text=True, check=True)
    other = json.loads(child.stdout)
    assert other["enabled"] is False

    here = "jit" if fdprof.NUMBA_ENABLED else "interpreter"
    print(f"this process: {here}; child: interpreter "
          f"(best of {args.repeat})")
    width = max(len(name) for name in results)
    print(f"{'workload':<{width}}  {'jit (s)':>10}  {'plain (s)':>10}  "
          f"{'speedup':>8}")
    for name, t in results.items():
        tp = other["times"][name]
        print(f"{name:<{width}}  {t:>10.3f}  {tp:>10.3f}  {tp / t:>7.1f}x")


if __name__ == "__main__":
    main()
