"""Billiard kernel timings: compiled vs pure-Python backend.

    python3 benchmarks/bench_kernels.py [--rays 20] [--bounces 500]

Traces the same rays on the running example with both backends, checks the
outputs are bit-identical and reports bounces per second.
"""
import argparse
import time
import warnings

import numpy as np

from isolab.billiards import _pykernels, geom_array, random_rays
from isolab.geometry import running_example

try:
    from isolab.billiards import _kernels
except ImportError:
    _kernels = None


def bench(mod, rays, n, g):
    out = []
    t0 = time.perf_counter()
    for r in rays:
        (px, py), (dx, dy) = r.origin, r.direction
        out.append(mod.trace(px, py, dx, dy, n, g))
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--rays", type=int, default=20)
    ap.add_argument("--bounces", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        om = running_example().omega1
    g = geom_array(om)
    rays = random_rays(om, a.rays, a.seed)
    total = a.rays * a.bounces
    tp, outp = bench(_pykernels, rays, a.bounces, g)
    print(f"python  {tp:8.3f} s  {total / tp:12.0f} bounces/s")
    if _kernels is None:
        print("cython  not built")
        return
    bench(_kernels, rays[:1], 10, g)   # warm-up
    tc, outc = bench(_kernels, rays, a.bounces, g)
    same = all(np.array_equal(np.asarray(u), np.asarray(v))
               for ro, rc in zip(outp, outc) for u, v in zip(ro, rc))
    print(f"cython  {tc:8.3f} s  {total / tc:12.0f} bounces/s")
    print(f"speedup {tp / tc:.1f}x, outputs bit-identical: {same}")


if __name__ == "__main__":
    main()
