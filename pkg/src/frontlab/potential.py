"""Bistable potentials V and their structural constants.

A potential carries vectorised evaluators for V and its first three
derivatives.  Two constructors are provided: the cubic-derivative family
``V'(u) = u (u - 1)(u - theta)`` and an explicit construction whose front
``(1 + exp(x - s t))**-1`` is an exact, possibly supersonic, solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

__all__ = [
    "BistablePotential",
    "PotentialValidation",
    "PotentialError",
    "make_cubic",
    "tabulated",
    "supersonic_example",
    "validate",
    "min_V",
    "compute_epsilon0",
]

Evaluator = Callable[[np.ndarray], np.ndarray]

# tolerance for the exact equalities V(0) = V'(0) = V'(1) = 0
_EXACT_TOL = 1e-12


class PotentialError(ValueError):
    """Raised for parameters outside a potential family's domain."""


@dataclass(frozen=True)
class BistablePotential:
    """Smooth scalar potential with evaluators for V, V', V'', V'''.

    ``dV_coeffs`` holds the power-series coefficients of V' (constant term
    first) when V' is a polynomial of degree <= 3; the compiled stepper uses
    them.  ``None`` means V' is only available through ``dV``.
    """

    kind: str
    V: Evaluator = field(repr=False)
    dV: Evaluator = field(repr=False)
    d2V: Evaluator = field(repr=False)
    d3V: Evaluator = field(repr=False)
    theta: Optional[float] = None
    params: dict = field(default_factory=dict)
    dV_coeffs: Optional[tuple] = None
    notes: tuple = ()

    @property
    def beta0(self) -> float:
        return float(self.d2V(np.array(0.0)))

    @property
    def beta1(self) -> float:
        return float(self.d2V(np.array(1.0)))

    @property
    def m(self) -> float:
        return min(self.beta0, self.beta1)


@dataclass(frozen=True)
class PotentialValidation:
    ok: bool
    a: float
    b: float
    beta0: float
    beta1: float
    m: float
    epsilon0: float
    critical_points: list
    failure: Optional[str] = None


def _poly_potential(kind, dv_coeffs, theta=None, params=None, notes=()):
    """Build a potential from the coefficients of V' (V(0) = 0)."""
    c = np.asarray(dv_coeffs, dtype=float)
    c = np.pad(c, (0, 4 - len(c)))
    dV = np.polynomial.Polynomial(c)
    V = dV.integ()
    d2V = dV.deriv()
    d3V = dV.deriv(2)
    return BistablePotential(
        kind=kind,
        V=lambda u: V(np.asarray(u, dtype=float)),
        dV=lambda u: dV(np.asarray(u, dtype=float)),
        d2V=lambda u: d2V(np.asarray(u, dtype=float)),
        d3V=lambda u: d3V(np.asarray(u, dtype=float)),
        theta=theta,
        params=dict(params or {}),
        dV_coeffs=tuple(float(x) for x in c),
        notes=tuple(notes),
    )


def make_cubic(theta: float) -> BistablePotential:
    """Cubic-derivative family ``V'(u) = u(u - 1)(u - theta)``, ``0 < theta < 1/2``.

    ``V(u) = u**4/4 - (1 + theta) u**3/3 + theta u**2/2`` and
    ``V(1) = (2 theta - 1)/12 < 0``.
    """
    theta = float(theta)
    if not 0.0 < theta < 0.5:
        raise PotentialError(
            f"theta={theta} outside (0, 1/2): V(1) = {(2 * theta - 1) / 12:.6g} "
            "must be negative and V''(0) = theta positive"
        )
    # snap theta so that 1 + theta is exact; then V'(1) evaluates to exactly 0
    theta = (1.0 + theta) - 1.0
    # u (u - 1)(u - theta) = theta u - (1 + theta) u^2 + u^3
    return _poly_potential("cubic", (0.0, theta, -(1.0 + theta), 1.0), theta=theta,
                           params={"theta": theta})


def tabulated(V: Evaluator, dV: Evaluator, d2V: Evaluator, d3V: Evaluator,
              name: str = "tabulated", params: Optional[dict] = None) -> BistablePotential:
    """Wrap caller-supplied evaluators.  No derivative is computed numerically."""
    return BistablePotential(kind=name, V=V, dV=dV, d2V=d2V, d3V=d3V, params=dict(params or {}))


def supersonic_example(s: float, alpha: float) -> BistablePotential:
    """Potential for which ``u = (1 + exp(x - s t))**-1`` solves the damped equation.

    ``-V'(u) = u (1 - u)(s + gamma (1 - 2u))`` with ``gamma = alpha s**2 - 1``.
    When ``gamma > 0`` the front is supersonic and ``V''(0) = -(s + gamma) < 0``,
    i.e. the potential lies outside the bistable class.
    """
    s = float(s)
    alpha = float(alpha)
    gamma = alpha * s * s - 1.0
    # V'(u) = -(s + gamma) u + (s + 3 gamma) u^2 - 2 gamma u^3
    notes = []
    if s + gamma > 0:
        notes.append("V''(0) = -(s + gamma) < 0: u = 0 is unstable (outside hypotheses)")
    return _poly_potential(
        "supersonic",
        (0.0, -(s + gamma), s + 3.0 * gamma, -2.0 * gamma),
        params={"s": s, "alpha": alpha, "gamma": gamma},
        notes=notes,
    )


def compute_epsilon0(p: BistablePotential, rtol: float = 1e-10, samples: int = 2001,
                     upper: float = 0.5) -> float:
    """Largest ``eps`` with ``beta0/2 <= V'' <= 2 beta0`` on ``[-eps, eps]``.

    Bisection on ``eps``; each trial checks the bounds at the end points and on a
    uniform sample of the interval.
    """
    beta0 = p.beta0
    if not beta0 > 0:
        raise PotentialError(f"V''(0) = {beta0} is not positive; eps0 undefined")

    def feasible(eps):
        u = np.linspace(-eps, eps, samples)
        g = p.d2V(u)
        return bool(np.all(g >= 0.5 * beta0) and np.all(g <= 2.0 * beta0))

    if feasible(upper):
        return upper
    lo, hi = 0.0, upper
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _critical_points(p: BistablePotential, lo: float, hi: float, step: float):
    u = np.arange(lo, hi + 0.5 * step, step)
    d = p.dV(u)
    roots = [float(x) for x in u[d == 0.0]]
    sign_change = np.nonzero(d[:-1] * d[1:] < 0)[0]
    for i in sign_change:
        roots.append(bisect(p.dV, u[i], u[i + 1], xtol=1e-14, rtol=1e-14))
    roots.sort()
    return [(r, float(p.V(np.array(r)))) for r in roots]


def validate(p: BistablePotential, search_interval: Sequence[float] = (-2.0, 3.0),
             grid_step: float = 1e-3) -> PotentialValidation:
    """Check the bistable hypotheses and compute the structural constants.

    Returns a result object; a violated hypothesis is reported in
    ``failure`` rather than raised.
    """
    lo, hi = float(search_interval[0]), float(search_interval[1])
    if lo > -1.0 or hi < 2.0:
        raise ValueError("search_interval must contain [-1, 2]")
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")

    at = lambda f, x: float(f(np.array(x)))  # noqa: E731
    beta0, beta1 = at(p.d2V, 0.0), at(p.d2V, 1.0)
    m = min(beta0, beta1)
    a = beta0 / 4.0
    crit = _critical_points(p, lo, hi, grid_step)

    def result(failure, eps0=float("nan"), b=float("nan")):
        return PotentialValidation(ok=failure is None, a=a, b=b, beta0=beta0, beta1=beta1, m=m,
                                   epsilon0=eps0, critical_points=crit, failure=failure)

    if abs(at(p.V, 0.0)) > _EXACT_TOL:
        return result("V(0) = 0 violated")
    if abs(at(p.dV, 0.0)) > _EXACT_TOL:
        return result("V'(0) = 0 violated")
    if not beta0 > 0:
        return result("V''(0) > 0 violated")
    if not at(p.V, 1.0) < 0:
        return result("V(1) < 0 violated")
    if abs(at(p.dV, 1.0)) > _EXACT_TOL:
        return result("V'(1) = 0 violated")
    if not beta1 > 0:
        return result("V''(1) > 0 violated")

    for u, val in crit:
        if val <= 0 and min(abs(u), abs(u - 1.0)) > 1e-8:
            return result(f"critical value V({u:.6g}) = {val:.6g} <= 0 outside {{0, 1}}")

    # coercivity witnesses: a = beta0/4, b = max(a u^2 - u V'(u)) over the sample
    u = np.arange(min(lo, -10.0), max(hi, 10.0) + 0.5 * grid_step, grid_step)
    gap = a * u * u - u * p.dV(u)
    b = max(float(np.max(gap)), 0.0)
    for end in (u[0], u[-1]):
        if end * at(p.dV, end) < a * end * end:
            return result("coercivity u V'(u) >= a u^2 - b violated", b=b)

    eps0 = compute_epsilon0(p)
    return result(None, eps0=eps0, b=b)


def min_V(p: BistablePotential, search_interval: Sequence[float] = (-10.0, 10.0),
          grid_step: float = 1e-3) -> float:
    """Global minimum of V, which equals V(1) under the bistable hypotheses."""
    v1 = float(p.V(np.array(1.0)))
    u = np.arange(search_interval[0], search_interval[1] + 0.5 * grid_step, grid_step)
    vmin = float(np.min(p.V(u)))
    if vmin < v1 - 1e-12 * max(1.0, abs(v1)):
        raise PotentialError(f"grid search found V = {vmin:.6g} below V(1) = {v1:.6g}")
    return v1
