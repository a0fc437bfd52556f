"""Compare the compiled kernel backend against the NumPy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats N]

Each hot kernel is timed on a realistic workload (the quadrature grid an
actual solve would use) with both backends, and the best-of-N wall times are
reported side by side. The two backends must agree numerically; the final
column shows the largest observed deviation as a sanity check.
"""

import argparse
import math
import time

import numpy as np

from cecap import Channel, build_polar_grid
from cecap._kernels import _ref

try:
    from cecap._kernels import _fast
except ImportError:
    _fast = None


def best_of(repeats, fn, *args):
    best = math.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_dev(a, b):
    if isinstance(a, tuple):
        return max(max_dev(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5, help="best-of-N timing")
    ns = ap.parse_args()

    if _fast is None:
        print("compiled extension not available; nothing to compare")
        return

    ch = Channel(lam=2.0, radius=math.sqrt(2.0))
    grid = build_polar_grid(ch)
    rng = np.random.default_rng(0)
    thetas = np.array([0.0, 1.0969, math.pi - 1.0969, 0.5 * math.pi,
                       math.pi, math.pi + 1.0969, 2.0 * math.pi - 1.0969,
                       1.5 * math.pi])
    probs = np.full(8, 0.125)
    eval_angles = np.linspace(0.0, 2.0 * math.pi, 512, endpoint=False)
    f, logf = _ref.mixture_log_pdf_grid(
        grid.u_nodes, grid.psi_nodes, thetas, probs, ch.lam, ch.radius
    )
    y1 = rng.normal(0.0, 3.0, 200000)
    y2 = rng.normal(0.0, 3.0, 200000)
    y3 = rng.normal(0.0, 3.0, (200000, 3))
    mu, wmu = np.polynomial.legendre.leggauss(48)

    cases = [
        ("mixture_log_pdf_grid",
         (grid.u_nodes, grid.psi_nodes, thetas, probs, ch.lam, ch.radius)),
        ("entropy_profile",
         (grid.u_nodes, grid.v_weights, grid.psi_nodes, grid.psi_weights,
          logf, eval_angles, ch.lam, ch.radius)),
        ("grid_entropy", (grid.v_weights, grid.psi_weights, f, logf)),
        ("sphere_log_pdf_2", (y1, y2, 2.0, 1.0, 10.0, 1024)),
        ("sphere_log_pdf_3", (y3, (2.0, 1.5, 1.0), 5.0, mu, wmu, 96)),
    ]

    print(f"grid {grid.n_radial} x {grid.n_angular}, best of {ns.repeats}")
    print(f"{'kernel':24} {'ref':>10} {'fast':>10} {'speedup':>8} {'max dev':>10}")
    for name, args in cases:
        t_ref, out_ref = best_of(ns.repeats, getattr(_ref, name), *args)
        t_fast, out_fast = best_of(ns.repeats, getattr(_fast, name), *args)
        dev = max_dev(out_ref, out_fast)
        print(
            f"{name:24} {t_ref * 1e3:9.2f}ms {t_fast * 1e3:9.2f}ms "
            f"{t_ref / t_fast:7.2f}x {dev:10.2e}"
        )


if __name__ == "__main__":
    main()
