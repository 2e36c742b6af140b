"""Time the compiled and pure-Python kernel backends on representative sizes.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on identical inputs under both backends; the table reports
the best-of-N wall time and the speedup of the compiled version. Outputs are
compared too, so a divergence shows up here as well as in the test suite.
"""

import argparse
import timeit

import numpy as np

from msdgr import _backend


def cases(rng):
    x = rng.normal(size=(48, 32, 64))
    w = rng.normal(size=(64, 48, 5, 5))
    b = rng.normal(size=64)
    fmap = rng.normal(size=(96, 32, 64))
    coords = np.column_stack([rng.uniform(0, 31, 4096), rng.uniform(0, 63, 4096)])
    a = rng.normal(size=(4096, 256))
    c = rng.normal(size=(4096, 256))
    return [
        ("conv2d 48->64 5x5 on 32x64", "conv2d", (x, w, b, 1, 1, 2, 2)),
        ("max_pool2x2 96x32x64", "max_pool2x2", (fmap,)),
        ("bilinear_sample 4096 pts, 96 ch", "bilinear_sample", (fmap, coords)),
        ("row_cosines 4096 x 256", "row_cosines", (a, c)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    py = _backend.get("python")
    try:
        cy = _backend.get("cython")
    except ImportError:
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<34s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s} {'max |diff|':>11s}")
    for label, name, argv in cases(rng):
        fp, fc = getattr(py, name), getattr(cy, name)
        tp = min(timeit.repeat(lambda: fp(*argv), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: fc(*argv), number=1, repeat=args.repeat))
        diff = float(np.abs(fp(*argv) - fc(*argv)).max())
        print(f"{label:<34s} {tp * 1e3:10.2f} {tc * 1e3:10.2f} {tp / tc:7.1f}x {diff:11.1e}")


if __name__ == "__main__":
    main()
