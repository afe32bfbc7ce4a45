"""Benchmark the jitted kernels against their pure-numpy twins.

Two views:
  * microbenchmarks of each kernel pair in-process (both paths are
    importable regardless of GENOPT_JIT), and
  * one end-to-end adaptive run executed in subprocesses with
    GENOPT_JIT=1 and GENOPT_JIT=0 so the dispatch itself is exercised.

Usage:
    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 16384] [--d 8]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from genopt import kernels  # noqa: E402


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench_scalar_pairs(repeat):
    rng = np.random.default_rng(0)
    pts = rng.uniform(-3.0, 3.0, size=(200, 2))
    pairs = [
        ("rosenbrock loss", kernels.rosenbrock_loss_py,
         getattr(kernels, "rosenbrock_loss_jit", None)),
        ("rosenbrock grad", kernels.rosenbrock_grad_py,
         getattr(kernels, "rosenbrock_grad_jit", None)),
        ("beale loss", kernels.beale_loss_py,
         getattr(kernels, "beale_loss_jit", None)),
        ("beale grad", kernels.beale_grad_py,
         getattr(kernels, "beale_grad_jit", None)),
    ]
    rows = []
    for name, py_fn, jit_fn in pairs:
        def run_py():
            for x, y in pts:
                py_fn(x, y)

        t_py = best_of(run_py, repeat, 20) / len(pts)
        if jit_fn is None:
            rows.append((name, t_py, None))
            continue

        def run_jit():
            for x, y in pts:
                jit_fn(x, y)

        t_jit = best_of(run_jit, repeat, 20) / len(pts)
        rows.append((name, t_py, t_jit))
    return rows


def bench_logreg(repeat, n, d):
    rng = np.random.default_rng(1)
    x = rng.standard_normal((n, d))
    y = (rng.random(n) < 0.5).astype(np.float64)
    w = rng.standard_normal(d)
    rows = []
    specs = [
        ("logreg loss", kernels.logreg_loss_py,
         getattr(kernels, "logreg_loss_jit", None)),
        ("logreg loss+grad", kernels.logreg_loss_grad_py,
         getattr(kernels, "logreg_loss_grad_jit", None)),
    ]
    for name, py_fn, jit_fn in specs:
        t_py = best_of(lambda: py_fn(x, y, w, 0.01), repeat, 20)
        t_jit = (best_of(lambda: jit_fn(x, y, w, 0.01), repeat, 20)
                 if jit_fn is not None else None)
        rows.append((f"{name} ({n}x{d})", t_py, t_jit))
    return rows


def print_table(rows):
    print(f"{'kernel':<28} {'numpy':>12} {'numba':>12} {'speedup':>9}")
    for name, t_py, t_jit in rows:
        if t_jit is None:
            print(f"{name:<28} {t_py * 1e6:>10.2f}us {'n/a':>12} {'':>9}")
        else:
            print(f"{name:<28} {t_py * 1e6:>10.2f}us {t_jit * 1e6:>10.2f}us "
                  f"{t_py / t_jit:>8.1f}x")


END_TO_END = """
import time
import genopt
from genopt.harness import run_experiment, spec_from_dict

genopt.warmup()
spec = spec_from_dict({
    "name": "bench",
    "problem": {"kind": "logreg", "seed": 7, "n": 8192, "d": 8},
    "optimizer": {"kind": "sgd"},
    "iterations": 300,
    "gen": {"eta0": 0.1, "gamma": 0.9, "phi": 1},
})
t0 = time.perf_counter()
result = run_experiment(spec)
print(f"{time.perf_counter() - t0:.3f}s final_loss={result.final_loss:.6e}")
"""


def bench_end_to_end():
    print("\nend-to-end adaptive run (logreg 8192x8, 300 iterations):")
    for flag, label in (("1", "numba"), ("0", "numpy")):
        env = dict(os.environ, GENOPT_JIT=flag)
        env["PYTHONPATH"] = os.pathsep.join(
            [os.path.join(os.path.dirname(__file__), "..", "src"),
             env.get("PYTHONPATH", "")])
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env,
                             capture_output=True, text=True, check=True)
        print(f"  GENOPT_JIT={flag} ({label + ')':<7} {out.stdout.strip()}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--n", type=int, default=16384,
                        help="logreg dataset rows")
    parser.add_argument("--d", type=int, default=8,
                        help="logreg dataset columns")
    args = parser.parse_args()

    if kernels.HAS_NUMBA:
        kernels.warmup()
        print(f"numba available; active path: "
              f"{'numba' if kernels.JIT_ENABLED else 'numpy (GENOPT_JIT=0)'}\n")
    else:
        print("numba not installed; timing the numpy path only\n")

    rows = bench_scalar_pairs(args.repeat)
    rows += bench_logreg(args.repeat, args.n, args.d)
    print_table(rows)
    bench_end_to_end()


if __name__ == "__main__":
    main()
