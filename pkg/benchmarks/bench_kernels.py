"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Reports the best-of-N wall time per call and the speedup. Both backends are
checked to agree before timing.
"""

import argparse
import timeit

import numpy as np

from distlayer._kernels import backends
from distlayer.rng import Stream


def spd(d, seed):
    a = Stream(seed).normal((d, d))
    return a @ a.T + d * np.eye(d)


def cases():
    for d in (4, 16, 64):
        a = spd(d, d)
        yield f"jacobi_eigh d={d}", "jacobi_eigh", (a, 1e-12, 100)
    for n, k, d in ((1000, 8, 4), (10_000, 16, 8), (50_000, 32, 16)):
        s = Stream(n, k)
        yield f"assign_nearest n={n} k={k} d={d}", "assign_nearest", (s.normal((n, d)), s.normal((k, d)))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    impls = backends()
    if "cython" not in impls:
        print("compiled extension not built; only the fallback is available")
    print(f"{'case':<36}" + "".join(f"{name:>14}" for name in impls) + ("    speedup" if len(impls) > 1 else ""))
    for label, fn, inputs in cases():
        results = {name: getattr(mod, fn)(*inputs) for name, mod in impls.items()}
        ref = results["python"]
        for name, res in results.items():
            for x, y in zip(res, ref):
                assert np.array_equal(np.asarray(x), np.asarray(y)), f"{name} disagrees on {label}"
        times = {}
        for name, mod in impls.items():
            f = getattr(mod, fn)
            n = max(1, int(0.2 / max(timeit.timeit(lambda: f(*inputs), number=1), 1e-6)))
            times[name] = min(timeit.repeat(lambda: f(*inputs), number=n, repeat=args.repeat)) / n
        row = f"{label:<36}" + "".join(f"{times[name] * 1e3:>12.3f}ms" for name in impls)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>10.1f}x"
        print(row)


if __name__ == "__main__":
    main()
