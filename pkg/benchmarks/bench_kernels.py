"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from sbls.kernels import available_backends


def cases(rng):
    for n, k in ((3_000, 2), (3_000, 6), (50_000, 3)):
        scores = np.ascontiguousarray(np.round(rng.normal(size=(n, k)), 2))
        labels = rng.integers(0, k, size=n).astype(np.intp)
        yield f"rank sums  N={n:>6} K={k}", "class_rank_sums", (scores, labels, k)
    for k in (3, 6, 12):
        w = np.ascontiguousarray(rng.random((k, k)))
        yield f"hungarian  K={k}", "hungarian_max", (w,)
    for n in (3_000, 50_000):
        true = rng.integers(0, 3, size=n).astype(np.intp)
        pred = rng.integers(0, 3, size=n).astype(np.intp)
        yield f"confusion  N={n:>6}", "confusion_counts", (true, pred, 3)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = available_backends()
    names = sorted(backends)
    print(f"{'case':<28}" + "".join(f"{n:>14}" for n in names) + "   speedup")
    for label, fn, inputs in cases(np.random.default_rng(0)):
        times = {}
        for name in names:
            f = getattr(backends[name], fn)
            number = 20
            times[name] = min(timeit.repeat(lambda: f(*inputs), number=number,
                                            repeat=args.repeat)) / number
        row = f"{label:<28}" + "".join(f"{times[n] * 1e3:>11.3f} ms" for n in names)
        if len(names) == 2:
            row += f"   {times['python'] / times[[n for n in names if n != 'python'][0]]:>6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
