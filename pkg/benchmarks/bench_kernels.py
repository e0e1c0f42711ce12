"""Time the numba and numpy kernel backends on representative inputs.

    python benchmarks/bench_kernels.py [--size 512] [--repeat 5]

Each kernel is called once untimed (JIT compile), then timed as the best of
``--repeat`` runs.  Outputs of the two backends are compared as a sanity
check.
"""

import argparse
import timeit

import numpy as np

from skyfdr import kernels
from skyfdr.io import float_to_rgbe
from skyfdr.segmentation import disk_offsets


def cases(size, rng):
    n = 3
    px = size * size * 3
    x = 2.0 ** rng.uniform(0, 15, (n, px))
    w = rng.uniform(0, 1, (n, px)) * (rng.uniform(size=(n, px)) > 0.1)
    dt = 2.0 ** np.array([0.0, -8.0, -15.0])
    fb = rng.uniform(size=px)

    src = rng.uniform(size=(size, size, 3))
    valid = np.ones((size, size), dtype=bool)
    rows = rng.uniform(0, size - 1, size * size)
    cols = rng.uniform(0, size - 1, size * size)

    vals = 2.0 ** rng.uniform(-20, 20, size * size)
    mask = rng.uniform(size=(size, size)) < 0.5
    offs = disk_offsets(15)

    rgbe = float_to_rgbe(np.repeat(rng.uniform(size=(size, size // 8, 3)), 8, axis=1))
    payloads = {name: impl.rle_encode(rgbe) for name, impl in kernels.implementations().items()}

    return {
        "weighted_merge": lambda m: m.weighted_merge(x, w, dt, fb),
        "bilinear_sample": lambda m: m.bilinear_sample(src, valid, rows, cols, False),
        "compensated_sum": lambda m: m.compensated_sum(vals),
        "erode (15 px disk)": lambda m: m.erode(mask, offs),
        "rle_encode": lambda m: m.rle_encode(rgbe),
        "rle_decode": lambda m: m.rle_decode(payloads["numpy"], size, size),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, (bytes, bytearray, int)):
        return a == b
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-12)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    impls = kernels.implementations()
    if "numba" not in impls:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"size {args.size}, best of {args.repeat}")
    print(f"{'kernel':<20}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}  match")
    for name, fn in cases(args.size, rng).items():
        res, best = {}, {}
        for impl_name in ("numpy", "numba"):
            m = impls[impl_name]
            res[impl_name] = fn(m)
            best[impl_name] = min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat))
        speedup = best["numpy"] / best["numba"]
        print(f"{name:<20}{best['numpy'] * 1e3:>12.2f}{best['numba'] * 1e3:>12.2f}"
              f"{speedup:>9.1f}x  {same(res['numpy'], res['numba'])}")


if __name__ == "__main__":
    main()
