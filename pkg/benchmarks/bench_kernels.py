"""Time the compiled kernels against the numpy fallback and check they agree.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel: best wall time for each backend, the speed-up and
the largest absolute difference between the two results.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from frontlab import _pykernels
from frontlab.front import _LAUNCH, _SHOOT_STEP, _STALL, _rates
from frontlab.potential import make_cubic

try:
    from frontlab import _kernels
except ImportError:  # extension not built
    _kernels = None


def _best(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def case_leapfrog(k, n=8001, steps=400):
    p = make_cubic(0.25)
    x = np.linspace(-200.0, 200.0, n)
    dx = x[1] - x[0]
    coeffs = np.asarray(p.dV_coeffs, dtype=float)

    def go():
        u = np.where(x < 0.0, 1.0, 0.0)
        ut = np.zeros(n)
        force = np.zeros(n)
        force[1:-1] = (u[:-2] - 2 * u[1:-1] + u[2:]) / dx**2 - p.dV(u[1:-1])
        k.leapfrog_advance(u, ut, force, steps, 0.9 * dx, dx, 1.0, coeffs, 1.0, 0.0)
        return u

    return go


def case_split(k, n=8001, steps=400):
    p = make_cubic(0.25)
    x = np.linspace(-200.0, 200.0, n)
    dx = x[1] - x[0]
    coeffs = np.asarray(p.dV_coeffs, dtype=float)

    def go():
        u = 1.0 / (1.0 + np.exp(x / np.sqrt(2.0)))
        th = np.clip(1.0 + (x - 5.0) / 4.0, 0.0, 1.0)
        r, v = th * u, (1.0 - th) * u
        vt, rt = np.zeros(n), np.zeros(n)
        fv, fr = np.zeros(n), np.zeros(n)
        k.split_advance(v, vt, fv, r, rt, fr, steps, 0.9 * dx, dx, 1.0, coeffs,
                        1.0, 0.0, 0.0, 0.0)
        return v + r

    return go


def case_bisect(k, n=4000, count=5):
    rng = np.random.default_rng(0)
    d = rng.uniform(-2.0, 0.0, n)
    e2 = rng.uniform(0.0, 1.0, n - 1)

    def go():
        lo, hi = -5.0, 2.0
        return np.array([k.bisect_eigenvalue(d, e2, n - 1 - i, lo, hi, 1e-12, 1e-300, 200)[0]
                         for i in range(count)])

    return go


def case_shoot(k, count=40):
    p = make_cubic(0.25)
    coeffs = np.asarray(p.dV_coeffs, dtype=float)
    speeds = np.linspace(0.2, 0.5, count)

    def go():
        out = []
        for c in speeds:
            lam, _ = _rates(c, p.beta0, p.beta1)
            out.append(k.shoot_classify(c, coeffs, 1.0 - _LAUNCH, -_LAUNCH * lam, 0.05,
                                        _SHOOT_STEP, 400.0, _STALL))
        return np.array(out, dtype=float)

    return go


CASES = {
    "leapfrog_advance": case_leapfrog,
    "split_advance": case_split,
    "bisect_eigenvalue": case_bisect,
    "shoot_classify": case_shoot,
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not available; run `pip install -e . --no-build-isolation`")
    print(f"{'kernel':<20}{'cython [s]':>12}{'python [s]':>12}{'speed-up':>10}{'max diff':>12}")
    for name, make in CASES.items():
        t_py, out_py = _best(make(_pykernels), args.repeat)
        if _kernels is None:
            print(f"{name:<20}{'-':>12}{t_py:>12.4f}{'-':>10}{'-':>12}")
            continue
        t_cy, out_cy = _best(make(_kernels), args.repeat)
        diff = float(np.max(np.abs(np.asarray(out_cy) - np.asarray(out_py))))
        print(f"{name:<20}{t_cy:>12.4f}{t_py:>12.4f}{t_py / t_cy:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
