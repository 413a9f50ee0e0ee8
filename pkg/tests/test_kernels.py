import os
import subprocess
import sys

import numpy as np
import pytest

from frontlab import BACKEND, _pykernels
from frontlab.potential import make_cubic

compiled = pytest.importorskip("frontlab._kernels")

COEFFS = np.asarray(make_cubic(0.25).dV_coeffs, dtype=float)


def _front_data(n=801, L=40.0):
    x = np.linspace(-L, L, n)
    return x, x[1] - x[0], 1.0 / (1.0 + np.exp(x / np.sqrt(2.0)))


def test_backend_is_compiled_when_built():
    assert BACKEND == "cython"


def test_leapfrog_backends_agree():
    x, dx, u0 = _front_data()
    outs = []
    for k in (compiled, _pykernels):
        u, ut, f = u0.copy(), -0.1 * np.gradient(u0, dx), np.zeros_like(u0)
        k.leapfrog_advance(u, ut, f, 200, 0.9 * dx, dx, 1.0, COEFFS, 1.0, 0.0)
        outs.append((u, ut))
    assert np.allclose(outs[0][0], outs[1][0], rtol=0, atol=1e-13)
    assert np.allclose(outs[0][1], outs[1][1], rtol=0, atol=1e-12)


def test_split_backends_agree():
    x, dx, u0 = _front_data()
    th = np.clip(1.0 + (x - 5.0) / 4.0, 0.0, 1.0)
    outs = []
    for k in (compiled, _pykernels):
        v, r = (1 - th) * u0, th * u0
        vt, rt, fv, fr = (np.zeros_like(u0) for _ in range(4))
        k.split_advance(v, vt, fv, r, rt, fr, 200, 0.9 * dx, dx, 1.0, COEFFS, 1.0, 0.0, 0.0, 0.0)
        outs.append(np.concatenate([v, vt, r, rt]))
    assert np.allclose(outs[0], outs[1], rtol=0, atol=1e-12)


def test_sturm_backends_agree():
    rng = np.random.default_rng(2)
    n = 300
    d = rng.uniform(-2, 0, n)
    e2 = rng.uniform(0, 1, n - 1)
    for x in np.linspace(-5, 2, 15):
        assert compiled.sturm_count(d, e2, x, 1e-300) == _pykernels.sturm_count(d, e2, x, 1e-300)
    for idx in (n - 1, n - 2, 0):
        a = compiled.bisect_eigenvalue(d, e2, idx, -5.0, 2.0, 1e-12, 1e-300, 200)
        b = _pykernels.bisect_eigenvalue(d, e2, idx, -5.0, 2.0, 1e-12, 1e-300, 200)
        assert a[0] == pytest.approx(b[0], abs=1e-12)


def test_shoot_backends_agree():
    from frontlab.front import _LAUNCH, _SHOOT_STEP, _STALL, _rates
    p = make_cubic(0.25)
    for c in np.linspace(0.2, 0.5, 7):
        lam, _ = _rates(c, p.beta0, p.beta1)
        args = (c, COEFFS, 1.0 - _LAUNCH, -_LAUNCH * lam, 0.05, _SHOOT_STEP, 400.0, _STALL)
        assert compiled.shoot_classify(*args) == _pykernels.shoot_classify(*args)


def test_pure_python_switch():
    env = dict(os.environ, FRONTLAB_PURE_PYTHON="1")
    code = ("import frontlab; from frontlab.front import solve_front; "
            "from frontlab.potential import make_cubic; "
            "print(frontlab.BACKEND, round(solve_front(make_cubic(0.25), 1e-8).c_star, 6))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out[0] == "python"
    assert float(out[1]) == pytest.approx(1 / (2 * np.sqrt(2)), abs=1e-6)
