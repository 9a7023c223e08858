"""Compare the compiled orbit kernel with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--points N] [--steps H] [--repeat R]

Prints best-of-R wall time per backend for a few bundled systems and checks
that both backends return identical arrays.
"""

import argparse
import time

import numpy as np

from nads import kernels
from nads.config import load_system
from nads.orbits import orbit_batch

SYSTEMS = ("doubling", "f-system", "g-system", "scaled-tent", "rotation")


def _start_points(space, n, rng):
    lo, hi = space.bounds
    if space.kind == "real":
        lo, hi = -1.0, 1.0  # keeps most orbits inside the windows
    return rng.uniform(lo, hi, n)


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    rng = np.random.default_rng(0)
    print(f"{'system':<12} " + " ".join(f"{name:>10}" for name in backends) + "   speedup  identical")
    for name in SYSTEMS:
        system = load_system(f"bundled:{name}")
        xs = _start_points(system.space, args.points, rng)
        times, outs = {}, {}
        for bname, mod in backends.items():
            outs[bname] = orbit_batch(system.sequence, xs, args.steps, backend=mod)
            times[bname] = best_of(lambda: orbit_batch(system.sequence, xs, args.steps, backend=mod), args.repeat)
        ref = outs["python"]
        same = all(
            np.array_equal(o[0], ref[0], equal_nan=True) and np.array_equal(o[1], ref[1]) for o in outs.values()
        )
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        cols = " ".join(f"{times[b] * 1e3:>8.2f}ms" for b in backends)
        print(f"{name:<12} {cols}   {speed:>6.1f}x  {same}")


if __name__ == "__main__":
    main()
