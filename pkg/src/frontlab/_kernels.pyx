# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Three hot paths dominate the runtime of the package:

* stepping the damped leapfrog scheme for a polynomial nonlinearity
  (single field, or the split pair ``u = v + r``);
* Sturm-sequence bisection for eigenvalues of a symmetric tridiagonal matrix;
* the phase-plane shooting verdict used to bisect on the front speed.

``_pykernels`` implements the same functions on top of numpy; the two modules
must stay call-compatible.
"""

from libc.math cimport fabs, fmax


cdef inline double _dpot(double u, double c0, double c1, double c2, double c3) noexcept nogil:
    return c0 + u * (c1 + u * (c2 + u * c3))


def leapfrog_advance(double[::1] u, double[::1] ut, double[::1] force,
                     Py_ssize_t nsteps, double dt, double dx, double alpha,
                     double[::1] coeffs, double left, double right):
    """Advance ``(u, ut)`` in place by ``nsteps`` damped leapfrog steps.

    ``force`` must hold ``u_xx - V'(u)`` at the interior nodes on entry and is
    kept consistent on exit.  ``coeffs`` are the power-series coefficients of
    ``V'`` (constant term first, degree <= 3).
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, k
    cdef double h = 0.5 / alpha
    cdef double inv_dx2 = 1.0 / (dx * dx)
    cdef double denom = 1.0 + dt * h
    cdef double c0 = coeffs[0], c1 = coeffs[1], c2 = coeffs[2], c3 = coeffs[3]
    cdef double w
    with nogil:
        for k in range(nsteps):
            for i in range(1, n - 1):
                w = ut[i] + dt * h * (force[i] - ut[i])
                u[i] = u[i] + dt * w
                ut[i] = w
            u[0] = left
            u[n - 1] = right
            for i in range(1, n - 1):
                force[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_dx2 - _dpot(u[i], c0, c1, c2, c3)
                ut[i] = (ut[i] + dt * h * force[i]) / denom
            ut[0] = 0.0
            ut[n - 1] = 0.0


def split_advance(double[::1] v, double[::1] vt, double[::1] fv,
                  double[::1] r, double[::1] rt, double[::1] fr,
                  Py_ssize_t nsteps, double dt, double dx, double alpha,
                  double[::1] coeffs, double v_left, double v_right,
                  double r_left, double r_right):
    """Advance the split pair in place.

    ``r`` obeys the full equation, ``v`` obeys it with the forcing
    ``-V'(v + r) + V'(r)``, so that ``v + r`` follows the full equation.
    """
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t i, k
    cdef double h = 0.5 / alpha
    cdef double inv_dx2 = 1.0 / (dx * dx)
    cdef double denom = 1.0 + dt * h
    cdef double c0 = coeffs[0], c1 = coeffs[1], c2 = coeffs[2], c3 = coeffs[3]
    cdef double w, dr
    with nogil:
        for k in range(nsteps):
            for i in range(1, n - 1):
                w = rt[i] + dt * h * (fr[i] - rt[i])
                r[i] = r[i] + dt * w
                rt[i] = w
                w = vt[i] + dt * h * (fv[i] - vt[i])
                v[i] = v[i] + dt * w
                vt[i] = w
            r[0] = r_left
            r[n - 1] = r_right
            v[0] = v_left
            v[n - 1] = v_right
            for i in range(1, n - 1):
                dr = _dpot(r[i], c0, c1, c2, c3)
                fr[i] = (r[i - 1] - 2.0 * r[i] + r[i + 1]) * inv_dx2 - dr
                fv[i] = ((v[i - 1] - 2.0 * v[i] + v[i + 1]) * inv_dx2
                         - _dpot(v[i] + r[i], c0, c1, c2, c3) + dr)
                rt[i] = (rt[i] + dt * h * fr[i]) / denom
                vt[i] = (vt[i] + dt * h * fv[i]) / denom
            rt[0] = 0.0
            rt[n - 1] = 0.0
            vt[0] = 0.0
            vt[n - 1] = 0.0


cdef Py_ssize_t _count_below(const double[::1] d, const double[::1] e2,
                             double x, double pivmin) noexcept nogil:
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t i
    cdef Py_ssize_t cnt = 0
    cdef double q = d[0] - x
    if fabs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        cnt += 1
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if fabs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            cnt += 1
    return cnt


def sturm_count(const double[::1] d, const double[::1] e2, double x, double pivmin):
    """Number of eigenvalues strictly below ``x`` (``e2`` = squared off-diagonal)."""
    return _count_below(d, e2, x, pivmin)


def bisect_eigenvalue(const double[::1] d, const double[::1] e2, Py_ssize_t index,
                      double lo, double hi, double tol, double pivmin, Py_ssize_t maxiter):
    """Bisection for the eigenvalue of ascending rank ``index`` inside ``[lo, hi]``.

    Returns ``(value, iterations)``; ``iterations == maxiter`` signals failure.
    """
    cdef Py_ssize_t it = 0
    cdef double mid
    with nogil:
        while it < maxiter:
            if hi - lo <= fmax(tol, 4.0 * 2.220446049250313e-16 * fmax(fabs(lo), fabs(hi))):
                break
            mid = 0.5 * (lo + hi)
            if _count_below(d, e2, mid, pivmin) > index:
                hi = mid
            else:
                lo = mid
            it += 1
    return 0.5 * (lo + hi), it


cdef inline void _front_rhs(double h, double q, double c, double c0, double c1, double c2,
                            double c3, double* dh, double* dq) noexcept nogil:
    dh[0] = q
    dq[0] = _dpot(h, c0, c1, c2, c3) - c * q


def shoot_classify(double c, double[::1] coeffs, double h0, double q0, double eps0,
                   double dy, double y_max, double stall_ratio):
    """Shooting verdict for the trial speed ``c`` (classical RK4, fixed step ``dy``).

    Returns ``-1`` when ``h`` falls below ``-eps0/2`` (speed too small), ``+1``
    when ``q`` turns positive or the orbit stalls with ``h > eps0`` and
    ``q > -stall_ratio (1 - h)`` (speed too large), ``0`` if undecided by ``y_max``.
    Along the heteroclinic ``|q|`` is comparable to ``1 - h``, so a small
    ``stall_ratio`` only catches orbits settling onto an interior rest point.
    """
    cdef double c0 = coeffs[0], c1 = coeffs[1], c2 = coeffs[2], c3 = coeffs[3]
    cdef double h = h0, q = q0, y = 0.0
    cdef double k1h, k1q, k2h, k2q, k3h, k3q, k4h, k4q
    cdef double half = 0.5 * dy, sixth = dy / 6.0
    cdef int verdict = 0
    with nogil:
        while y < y_max:
            _front_rhs(h, q, c, c0, c1, c2, c3, &k1h, &k1q)
            _front_rhs(h + half * k1h, q + half * k1q, c, c0, c1, c2, c3, &k2h, &k2q)
            _front_rhs(h + half * k2h, q + half * k2q, c, c0, c1, c2, c3, &k3h, &k3q)
            _front_rhs(h + dy * k3h, q + dy * k3q, c, c0, c1, c2, c3, &k4h, &k4q)
            h = h + sixth * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
            q = q + sixth * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
            y += dy
            if h < -0.5 * eps0:
                verdict = -1
                break
            if q > 0.0 or (h > eps0 and q > -stall_ratio * (1.0 - h)):
                verdict = 1
                break
    return verdict
