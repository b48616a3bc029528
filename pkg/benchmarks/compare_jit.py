"""Time the compiled kernels against the plain-numpy fallback.

The three kernels are the per-replicate hot spots of the simulator and
the design evaluator: region weights from a threshold rule, a weighted
Gram matrix, and the z-dependent Gram block with both right-hand sides.
Run from the repository root:

    python3 benchmarks/compare_jit.py
    python3 benchmarks/compare_jit.py --sizes 10000,1000000 --dims 2,4

The same fallback is what TIEBREAK_DISABLE_JIT=1 selects at runtime, so
the table shows exactly what that switch costs on this machine.
"""

import argparse
import time

import numpy as np

from tiebreak import _kernels


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def problem(rng, n, d):
    f = rng.normal(size=(n, d))
    f[:, 0] = 1.0
    z = rng.choice([-1.0, 1.0], size=n)
    y = rng.standard_normal(n)
    w = rng.uniform(-1.0, 1.0, size=n)
    return np.ascontiguousarray(f), z, y, w


def main():
    parser = argparse.ArgumentParser(
        description="compare compiled and numpy kernel paths")
    parser.add_argument("--sizes", default="2000,20000,200000",
                        help="comma-separated row counts")
    parser.add_argument("--dims", default="2,3",
                        help="comma-separated feature counts")
    parser.add_argument("--repeats", type=int, default=7,
                        help="timing repeats; the best is kept")
    opts = parser.parse_args()
    sizes = [int(s) for s in opts.sizes.split(",")]
    dims = [int(s) for s in opts.dims.split(",")]

    plain = _kernels.kernels(jit=False)
    fast = _kernels.kernels(jit=True)
    if not fast.jitted:
        print("note: compiled path unavailable, both columns run numpy")

    rng = np.random.default_rng(0)
    warm = problem(rng, 256, max(dims))
    for ker in (plain, fast):
        ker.region_weights(warm[0][:, 1].copy(), 0.5, 0.5)
        ker.weighted_gram(warm[0], warm[3])
        ker.z_gram_rhs(warm[0], warm[1], warm[2])

    header = (f"{'kernel':<15}{'n':>9}{'d':>4}"
              f"{'numpy ms':>12}{'compiled ms':>13}{'speedup':>9}")
    print(header)
    print("-" * len(header))
    for n in sizes:
        for d in dims:
            f, z, y, w = problem(rng, n, d)
            x = np.ascontiguousarray(f[:, 1])
            cases = [
                ("region_weights", (x, 0.5, 0.5),
                 plain.region_weights, fast.region_weights),
                ("weighted_gram", (f, w),
                 plain.weighted_gram, fast.weighted_gram),
                ("z_gram_rhs", (f, z, y),
                 plain.z_gram_rhs, fast.z_gram_rhs),
            ]
            for name, args, slow_fn, fast_fn in cases:
                t_np = best_of(slow_fn, args, opts.repeats)
                t_jit = best_of(fast_fn, args, opts.repeats)
                print(f"{name:<15}{n:>9}{d:>4}"
                      f"{1e3 * t_np:>12.3f}{1e3 * t_jit:>13.3f}"
                      f"{t_np / t_jit:>9.2f}")


if __name__ == "__main__":
    main()
