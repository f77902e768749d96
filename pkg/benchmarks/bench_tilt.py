"""Compare the compiled and numpy tilted-bank kernels.

    python benchmarks/bench_tilt.py [--sizes 10000 100000 1000000] [--k 5]

Times one ``tilt_stats`` + ``tilt_means`` evaluation (the work done per beta
during root finding) and a full constrained solve on the same bank.
"""

import argparse
import time

import numpy as np

from mediv import _tilt_py
from mediv.simplex import SpeciesCounts, draw_bank
from mediv.solver import SolverConfig, solve_beta

try:
    from mediv import _tilt
except ImportError:  # extension not built
    _tilt = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def solve_with(kernel, g, target):
    def objective(beta):
        _, mean, var, _, _, _ = kernel.tilt_stats(g, beta)
        return mean, var

    return solve_beta(objective, target, SolverConfig(tolerance=1e-10))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[10_000, 100_000, 1_000_000])
    parser.add_argument("--k", type=int, default=5)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = {"python": _tilt_py}
    if _tilt is not None:
        backends["cython"] = _tilt
    rng = np.random.default_rng(0)
    counts = SpeciesCounts.from_counts(rng.integers(1, 10, args.k))
    f = np.zeros(args.k)
    f[1], f[-1] = 1.0, -2.0

    print(f"{'N':>9}  {'backend':>8}  {'eval ms':>9}  {'solve ms':>9}  {'beta':>12}")
    for n in args.sizes:
        bank = draw_bank(counts, None, n, seed=1)
        g = bank.projections(f)
        target = float(np.quantile(g, 0.4))
        base = None
        for name, kernel in backends.items():
            t_eval = best_of(lambda: (kernel.tilt_stats(g, 0.8),
                                      kernel.tilt_means(bank.points, g, 0.8)), args.repeat)
            t_solve = best_of(lambda: solve_with(kernel, g, target), args.repeat)
            beta = solve_with(kernel, g, target).beta
            speed = "" if base is None else f"  ({base / t_eval:.1f}x eval)"
            base = base or t_eval
            print(f"{n:>9}  {name:>8}  {1e3 * t_eval:>9.2f}  {1e3 * t_solve:>9.2f}  "
                  f"{beta:>12.8f}{speed}")


if __name__ == "__main__":
    main()
