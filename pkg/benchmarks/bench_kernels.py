"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from nstsim import _kernels_py as py

try:
    from nstsim import _kernels as cy
except ImportError:
    cy = None


def cases(rng):
    img = rng.random((256, 256))
    codes = rng.integers(0, 32, (512, 512)).astype(np.intp)
    patches = rng.random((64, 32 * 32))
    return [
        ("pm_diffuse 256x256, 50 steps", "pm_diffuse", (img, 50, 0.1, 0.2, py.COND_EXP)),
        ("glcm_counts 512x512, 32 levels", "glcm_counts", (codes, 32, 3, 2)),
        ("patch_mi 64 patches 32x32, 256 bins", "patch_mi", (patches, 256)),
    ]


def best_of(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<38} {'numpy [s]':>10} {'compiled [s]':>13} {'speedup':>8}")
    for label, name, fargs in cases(rng):
        t_py = best_of(getattr(py, name), fargs, args.repeat)
        if cy is None:
            print(f"{label:<38} {t_py:>10.4f} {'n/a':>13} {'':>8}")
            continue
        t_cy = best_of(getattr(cy, name), fargs, args.repeat)
        print(f"{label:<38} {t_py:>10.4f} {t_cy:>13.4f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
