"""Compare the compiled and pure-Python permutation kernels.

Usage: python benchmarks/bench_kernels.py [--sizes 28,100,500] [--permutations 999] [--repeat 3]
"""

import argparse
import time

import numpy as np

from spverdoorn import kernels
from spverdoorn.esda import global_moran, local_moran_lisa
from spverdoorn.weights import Region, build_weights


def lattice_weights(n, seed=0):
    rng = np.random.default_rng(seed)
    side = int(np.ceil(np.sqrt(n)))
    regions = [
        Region(f"r{k}", "", 38.0 + (k // side + rng.uniform(-0.2, 0.2)) * 0.45,
               -9.0 + (k % side + rng.uniform(-0.2, 0.2)) * 0.57)
        for k in range(n)
    ]
    return build_weights(regions, cutoff_km=75.0)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="28,100,500")
    ap.add_argument("--permutations", type=int, default=999)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}; permutations = {args.permutations}")
    print(f"{'n':>5}  {'task':<7}" + "".join(f"{b:>12}" for b in backends) + "   speedup")
    previous = kernels.BACKEND
    try:
        for n in (int(s) for s in args.sizes.split(",")):
            w = lattice_weights(n)
            x = np.random.default_rng(n).normal(size=n)
            for task, fn in (("moran", lambda: global_moran(x, w, args.permutations, seed=1)),
                             ("lisa", lambda: local_moran_lisa(x, w, args.permutations, seed=1))):
                timings = {}
                for b in backends:
                    kernels.use_backend(b)
                    timings[b] = best_of(fn, args.repeat)
                speed = (f"{timings['python'] / timings['compiled']:8.1f}x"
                         if "compiled" in timings else "       n/a")
                print(f"{n:>5}  {task:<7}" + "".join(f"{timings[b] * 1e3:10.2f}ms" for b in backends) + speed)
    finally:
        kernels.use_backend(previous)


if __name__ == "__main__":
    main()
