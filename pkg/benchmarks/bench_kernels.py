"""Time the compiled and pure-Python event kernels on the same inputs.

    python benchmarks/bench_kernels.py [--events 2000000]
"""

import argparse
import timeit

import numpy as np

from fockflow import kernels


def _inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    period = 6_500_000  # fs
    ta = np.sort(rng.integers(0, n * period // 10, n // 2)).astype(np.int64)
    tb = np.sort(rng.integers(0, n * period // 10, n // 2)).astype(np.int64)
    return ta, tb


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--events", type=int, default=2_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    ta, tb = _inputs(args.events)
    bw = 50_000
    n_bins = 910
    lo = -(n_bins * bw) // 2
    jobs = {
        "cross_correlate": lambda k: k.cross_correlate(ta, tb, lo, bw, n_bins),
        "dead_time_filter": lambda k: k.dead_time_filter(ta, 20_000_000),
        "coincidence_mask": lambda k: k.coincidence_mask(ta, tb, 3_000_000),
    }
    backends = [("python", kernels.python)]
    if kernels.compiled is not None:
        backends.append(("cython", kernels.compiled))
    else:
        print("compiled kernels not built; timing the python backend only")

    print(f"{args.events} events, best of {args.repeat}")
    print(f"{'kernel':<18}" + "".join(f"{name:>12}" for name, _ in backends) + ("   speed-up" if len(backends) == 2 else ""))
    for job, run in jobs.items():
        times = [min(timeit.repeat(lambda: run(mod), number=1, repeat=args.repeat)) for _, mod in backends]
        line = f"{job:<18}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2:
            line += f"{times[0] / times[1]:>10.1f}x"
        print(line)


if __name__ == "__main__":
    main()
