"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same in-place semantics, same floating-point recurrences
(results agree with the compiled path to rounding).
"""

import numpy as np

_EPS = np.finfo(float).eps


def _dpot(u, coeffs):
    c0, c1, c2, c3 = coeffs
    return c0 + u * (c1 + u * (c2 + u * c3))


def _laplacian(u, inv_dx2):
    return (u[:-2] - 2.0 * u[1:-1] + u[2:]) * inv_dx2


def leapfrog_advance(u, ut, force, nsteps, dt, dx, alpha, coeffs, left, right):
    h = 0.5 / alpha
    inv_dx2 = 1.0 / (dx * dx)
    denom = 1.0 + dt * h
    coeffs = tuple(float(c) for c in coeffs)
    ui, uti, fi = u[1:-1], ut[1:-1], force[1:-1]
    for _ in range(int(nsteps)):
        uti += dt * h * (fi - uti)
        ui += dt * uti
        u[0] = left
        u[-1] = right
        fi[:] = _laplacian(u, inv_dx2) - _dpot(ui, coeffs)
        uti += dt * h * fi
        uti /= denom
        ut[0] = 0.0
        ut[-1] = 0.0


def split_advance(v, vt, fv, r, rt, fr, nsteps, dt, dx, alpha, coeffs,
                  v_left, v_right, r_left, r_right):
    h = 0.5 / alpha
    inv_dx2 = 1.0 / (dx * dx)
    denom = 1.0 + dt * h
    coeffs = tuple(float(c) for c in coeffs)
    vi, vti, fvi = v[1:-1], vt[1:-1], fv[1:-1]
    ri, rti, fri = r[1:-1], rt[1:-1], fr[1:-1]
    for _ in range(int(nsteps)):
        rti += dt * h * (fri - rti)
        ri += dt * rti
        vti += dt * h * (fvi - vti)
        vi += dt * vti
        r[0], r[-1] = r_left, r_right
        v[0], v[-1] = v_left, v_right
        dr = _dpot(ri, coeffs)
        fri[:] = _laplacian(r, inv_dx2) - dr
        fvi[:] = _laplacian(v, inv_dx2) - _dpot(vi + ri, coeffs) + dr
        rti += dt * h * fri
        rti /= denom
        vti += dt * h * fvi
        vti /= denom
        rt[0] = rt[-1] = 0.0
        vt[0] = vt[-1] = 0.0


def sturm_count(d, e2, x, pivmin):
    n = len(d)
    d = d.tolist() if isinstance(d, np.ndarray) else list(d)
    e2 = e2.tolist() if isinstance(e2, np.ndarray) else list(e2)
    cnt = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        cnt += 1
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            cnt += 1
    return cnt


def bisect_eigenvalue(d, e2, index, lo, hi, tol, pivmin, maxiter):
    d = d.tolist() if isinstance(d, np.ndarray) else list(d)
    e2 = e2.tolist() if isinstance(e2, np.ndarray) else list(e2)
    it = 0
    while it < maxiter:
        if hi - lo <= max(tol, 4.0 * _EPS * max(abs(lo), abs(hi))):
            break
        mid = 0.5 * (lo + hi)
        if sturm_count(d, e2, mid, pivmin) > index:
            hi = mid
        else:
            lo = mid
        it += 1
    return 0.5 * (lo + hi), it


def shoot_classify(c, coeffs, h0, q0, eps0, dy, y_max, stall_ratio):
    c0, c1, c2, c3 = (float(x) for x in coeffs)

    def rhs(h, q):
        return q, c0 + h * (c1 + h * (c2 + h * c3)) - c * q

    h, q, y = float(h0), float(q0), 0.0
    half, sixth = 0.5 * dy, dy / 6.0
    while y < y_max:
        k1h, k1q = rhs(h, q)
        k2h, k2q = rhs(h + half * k1h, q + half * k1q)
        k3h, k3q = rhs(h + half * k2h, q + half * k2q)
        k4h, k4q = rhs(h + dy * k3h, q + dy * k3q)
        h = h + sixth * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
        q = q + sixth * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        y += dy
        if h < -0.5 * eps0:
            return -1
        if q > 0.0 or (h > eps0 and q > -stall_ratio * (1.0 - h)):
            return 1
    return 0
