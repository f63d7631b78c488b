"""Compare the numba and numpy multistart Newton kernels on the Shabat system.

Both backends run the same random starts; the script checks that they agree on
which starts converge and reports wall time per backend.

    python benchmarks/bench_newton.py --degree 7 --batch 4096 --repeat 3
"""

import argparse
import time

import numpy as np

from lame_dessins._kernels import HAVE_NUMBA, newton_batch
from lame_dessins.belyi import system_shape


def run(N, s, batch, seed, use_numba):
    shape = system_shape(N, s)
    rng = np.random.default_rng(seed)
    n = shape.n_unknowns
    U0 = 2.0 * np.sqrt(rng.random((batch, n))) * np.exp(2j * np.pi * rng.random((batch, n)))
    t = time.perf_counter()
    U, done, res = newton_batch(U0, N, *shape.degrees, use_numba=use_numba)
    return time.perf_counter() - t, U, done


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--degree", type=int, default=7)
    ap.add_argument("--signature", type=int, default=0)
    ap.add_argument("--batch", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"degree {args.degree}, signature {args.signature}, {args.batch} starts, best of {args.repeat}")
    backends = [("numpy", False)] + ([("numba", True)] if HAVE_NUMBA else [])
    if HAVE_NUMBA:
        run(args.degree, args.signature, 8, args.seed, True)   # compile outside the timing
    results = {}
    for name, flag in backends:
        times = []
        for _ in range(args.repeat):
            dt, U, done = run(args.degree, args.signature, args.batch, args.seed, flag)
            times.append(dt)
        results[name] = (min(times), U, done)
        print(f"  {name:6s} {min(times):8.3f} s   converged {int(done.sum())}/{args.batch}")
    if len(results) == 2:
        (tn, Un, dn), (tj, Uj, dj) = results["numpy"], results["numba"]
        both = dn & dj
        agree = np.max(np.abs(Un[both] - Uj[both])) if both.any() else 0.0
        print(f"  speedup numba/numpy: {tn / tj:.1f}x")
        print(f"  convergence flags agree on {int((dn == dj).sum())}/{args.batch} starts; "
              f"max difference on common roots {agree:.1e}")


if __name__ == "__main__":
    main()
