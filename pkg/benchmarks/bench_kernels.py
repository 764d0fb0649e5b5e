"""Benchmark the compiled kernel core against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 200000] [--reps 5]

Times the three hot kernels (hard labels, hard masses, soft masses) for a
range of dimensions. These kernels dominate solver runtime: one objective
evaluation is one masses call, and a finite-difference solve performs
thousands of them.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from conepart._kernels import _fallback  # noqa: E402

try:
    from conepart._kernels import _core
except ImportError:
    _core = None


def make_case(n, d, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, d))
    wts = np.full(n, 1.0 / n)
    dirs = rng.standard_normal((2 * d, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    shift = rng.standard_normal(d) * 0.1
    return pts, wts, dirs, shift


def best_of(fn, reps):
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000, help="points per case")
    ap.add_argument("--reps", type=int, default=5, help="repetitions, best kept")
    args = ap.parse_args()

    if _core is None:
        print("compiled core not built (python3 setup.py build_ext --inplace); "
              "timing the fallback only")

    backends = [("numpy", _fallback)] + ([("cython", _core)] if _core else [])
    kernels = [
        ("hard_labels", lambda m, c: m.hard_labels(c[0], c[2], c[3])),
        ("hard_masses", lambda m, c: m.hard_masses(*c)),
        ("soft_masses", lambda m, c: m.soft_masses(*c, 300.0)),
    ]

    header = f"{'kernel':<12} {'d':>3} {'n':>8}" + "".join(
        f" {name + ' (ms)':>13}" for name, _ in backends)
    if _core is not None:
        header += f" {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for d in (3, 5, 9):
        case = make_case(args.n, d)
        for kname, call in kernels:
            times = [best_of(lambda m=mod: call(m, case), args.reps)
                     for _, mod in backends]
            row = f"{kname:<12} {d:>3} {args.n:>8}" + "".join(
                f" {1e3 * t:>13.2f}" for t in times)
            if _core is not None:
                row += f" {times[0] / times[1]:>7.2f}x"
            print(row)

    # agreement check while we are here
    case = make_case(50_000, 5, seed=1)
    if _core is not None:
        hm = np.abs(_core.hard_masses(*case) - _fallback.hard_masses(*case)).max()
        sm = np.abs(_core.soft_masses(*case, 300.0)
                    - _fallback.soft_masses(*case, 300.0)).max()
        print(f"\nmax backend disagreement: hard {hm:.2e}, soft {sm:.2e}")


if __name__ == "__main__":
    main()
