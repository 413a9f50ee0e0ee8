"""Travelling-front profiles ``h`` and speeds ``c*``.

``h'' + c h' - V'(h) = 0`` with ``h(-inf) = 1``, ``h(+inf) = 0`` is solved by
phase-plane shooting: the unstable manifold of the saddle ``(1, 0)`` is
followed for trial speeds ``c`` and ``c`` is bisected on the
overshoot/undershoot verdict.  The damped-wave fronts are
``u(x, t) = h(sqrt(1 + alpha c*^2) x - c* t - x0)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from ._backend import kernels
from .grid import Grid1D, WaveState
from .potential import BistablePotential, PotentialError, compute_epsilon0, make_cubic

__all__ = [
    "FrontProfile",
    "FrontError",
    "DecayData",
    "solve_front",
    "analytic_cubic_front",
    "hyperbolic_front_state",
    "decay_data",
    "physical_speed",
]

log = logging.getLogger(__name__)

_LAUNCH = 1e-8  # distance from the saddle along the eigenvector
_RTOL = 1e-12
_ATOL = 1e-15
_SHOOT_STEP = 0.01  # RK4 step of the compiled classifier; c* error ~1e-11
_STALL = 1e-3  # q > -_STALL (1 - h) with h > eps0: the orbit is settling onto a rest point


class FrontError(RuntimeError):
    """Shooting failure: no bracket, or a non-monotone profile."""


def physical_speed(c: float, alpha: float) -> float:
    return c / math.sqrt(1.0 + alpha * c * c)


@dataclass(frozen=True)
class FrontProfile:
    """Sampled front ``h`` on a uniform ``y`` grid, normalised so ``h(0) = epsilon0``.

    ``decay_left`` and ``decay_right`` are the exponential rates of ``1 - h`` at
    ``-inf`` and of ``h`` at ``+inf``; ``c_h`` is the weight threshold above which
    ``h`` leaves the weighted space ``H^1_c``.
    """

    y: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    hprime: np.ndarray = field(repr=False)
    c_star: float
    epsilon0: float
    decay_right: float
    decay_left: float
    c_h: float
    alpha: float = 1.0

    @property
    def s_star(self) -> float:
        return physical_speed(self.c_star, self.alpha)

    @property
    def stretch(self) -> float:
        return math.sqrt(1.0 + self.alpha * self.c_star ** 2)

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    def with_alpha(self, alpha: float) -> "FrontProfile":
        return replace(self, alpha=float(alpha))

    @cached_property
    def _spline(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.y, self.h, self.hprime)

    def evaluate(self, z, method: str = "linear", extrapolate: bool = False):
        """Return ``(h(z), h'(z))``.

        Outside the sampled range the values are clamped to the asymptotic
        states ``(1, 0)`` / ``(0, 0)``, or continued along the exponential tails
        when ``extrapolate`` is true.
        """
        z = np.asarray(z, dtype=float)
        y, h, hp = self.y, self.h, self.hprime
        if method == "linear":
            hv = np.interp(z, y, h)
            hpv = np.interp(z, y, hp)
        elif method == "hermite":
            zc = np.clip(z, y[0], y[-1])
            hv = self._spline(zc)
            hpv = self._spline(zc, 1)
        else:
            raise ValueError(f"unknown interpolation method {method!r}")
        left = z < y[0]
        right = z > y[-1]
        if extrapolate:
            dl = (1.0 - h[0]) * np.exp(self.decay_left * (z[left] - y[0]))
            hv = np.where(left, 0.0, hv)
            hpv = np.where(left, 0.0, hpv)
            hv[left] = 1.0 - dl
            hpv[left] = -self.decay_left * dl
            tail = h[-1] * np.exp(-self.decay_right * (z[right] - y[-1]))
            hv[right] = tail
            hpv[right] = -self.decay_right * tail
        else:
            hv = np.where(left, 1.0, np.where(right, 0.0, hv))
            hpv = np.where(left | right, 0.0, hpv)
        return hv, hpv


class DecayData(NamedTuple):
    decay_right: float
    c_h: float
    fitted_slope: float
    rel_agreement: float


def _rates(c: float, beta0: float, beta1: float):
    """(rate of 1 - h at -inf, rate of h at +inf) from the saddle linearisations."""
    left = 0.5 * (-c + math.sqrt(c * c + 4.0 * beta1))
    right = 0.5 * (c + math.sqrt(c * c + 4.0 * beta0))
    return left, right


def _rhs(p: BistablePotential, c: float):
    dV = p.dV

    def f(_y, z):
        return (z[1], float(dV(z[0])) - c * z[1])

    return f


def _classify(p: BistablePotential, c: float, eps0: float, y_max: float = 400.0) -> int:
    """+1 if ``c`` is too large (orbit turns back or stalls), -1 if too small (crosses 0)."""
    lam, _ = _rates(c, p.beta0, p.beta1)
    h0, q0 = 1.0 - _LAUNCH, -_LAUNCH * lam
    if p.dV_coeffs is not None:
        return int(kernels.shoot_classify(c, np.asarray(p.dV_coeffs, dtype=float), h0, q0, eps0,
                                          _SHOOT_STEP, y_max, _STALL))

    def undershoot(_y, z):
        return z[0] + 0.5 * eps0

    undershoot.terminal = True
    undershoot.direction = -1

    def turn_back(_y, z):
        return z[1]

    turn_back.terminal = True
    turn_back.direction = 1

    def stall(_y, z):
        # only armed outside the well of 0; negative (inactive) inside it
        return z[1] + _STALL * (1.0 - z[0]) if z[0] > eps0 else -1.0

    stall.terminal = True
    stall.direction = 1

    sol = solve_ivp(_rhs(p, c), (0.0, y_max), (h0, q0), method="DOP853", rtol=_RTOL, atol=_ATOL,
                    events=(undershoot, turn_back, stall))
    if sol.t_events[0].size:
        return -1
    if sol.t_events[1].size or sol.t_events[2].size:
        return 1
    return 0


def _bisect_speed(p, eps0, tol, bracket):
    lo, hi = bracket
    if _classify(p, lo, eps0) != -1:
        raise FrontError(f"lower bracket c={lo} does not overshoot")
    for _ in range(20):
        if _classify(p, hi, eps0) == 1:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise FrontError("no sign change of the shooting classifier found")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        verdict = _classify(p, mid, eps0)
        if verdict == 0:
            break  # trajectory sits on the heteroclinic for the whole horizon
        if verdict > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _default_bracket(p: BistablePotential):
    u = np.linspace(0.0, 1.0, 1001)
    gmax = float(np.max(p.d2V(u)))
    return 0.0, 2.0 * math.sqrt(2.0 * max(gmax, 1e-12))


def _branch(p, c, start, direction, h_stop):
    """Integrate from ``start`` until ``h == h_stop``; returns the dense solution and stop point."""

    def stop(_y, z):
        return z[0] - h_stop

    stop.terminal = True
    sol = solve_ivp(_rhs(p, c), (0.0, direction * 400.0), start, method="DOP853", rtol=_RTOL,
                    atol=_ATOL, events=stop, dense_output=True)
    if not sol.t_events[0].size:
        raise FrontError("profile branch never reached the matching level")
    return sol, float(sol.t_events[0][0])


def _assemble(p, c, eps0, dy, h_min, alpha):
    beta0, beta1 = p.beta0, p.beta1
    lam_l, lam_r = _rates(c, beta0, beta1)
    # unstable manifold of (1, 0) forward, stable manifold of (0, 0) backward, matched at h = 1/2
    fwd, y_f = _branch(p, c, (1.0 - _LAUNCH, -_LAUNCH * lam_l), 1.0, 0.5)
    bwd, y_b = _branch(p, c, (_LAUNCH, -_LAUNCH * lam_r), -1.0, 0.5)
    # backward-branch coordinate yb maps to forward coordinate yb + (y_f - y_b)
    offset = y_f - y_b
    # y where h = eps0 on the backward branch
    y_eps = brentq(lambda s: bwd.sol(s)[0] - eps0, y_b, 0.0, xtol=1e-14) + offset
    # forward coordinates shifted so h(0) = eps0
    y_launch_l = 0.0 - y_eps  # left launch point
    y_launch_r = offset - y_eps  # right launch point
    y_lo = y_launch_l - math.log(_LAUNCH / h_min) / lam_l
    y_hi = y_launch_r + math.log(_LAUNCH / h_min) / lam_r
    y = dy * np.arange(math.floor(y_lo / dy), math.ceil(y_hi / dy) + 1)
    h = np.empty_like(y)
    hp = np.empty_like(y)

    mid = y_f - y_eps
    zone_l = y < y_launch_l
    zone_f = (y >= y_launch_l) & (y <= mid)
    zone_b = (y > mid) & (y <= y_launch_r)
    zone_r = y > y_launch_r

    d = _LAUNCH * np.exp(lam_l * (y[zone_l] - y_launch_l))
    h[zone_l], hp[zone_l] = 1.0 - d, -lam_l * d
    zf = fwd.sol(y[zone_f] + y_eps)
    h[zone_f], hp[zone_f] = zf[0], zf[1]
    zb = bwd.sol(y[zone_b] + y_eps - offset)
    h[zone_b], hp[zone_b] = zb[0], zb[1]
    e = _LAUNCH * np.exp(-lam_r * (y[zone_r] - y_launch_r))
    h[zone_r], hp[zone_r] = e, -lam_r * e

    if np.any(hp >= 0):
        raise FrontError("non-monotone profile: h' >= 0 detected")
    return FrontProfile(y=y, h=h, hprime=hp, c_star=float(c), epsilon0=float(eps0),
                        decay_right=lam_r, decay_left=lam_l, c_h=lam_r, alpha=float(alpha))


def solve_front(p: BistablePotential, tol: float = 1e-10, *, epsilon0: Optional[float] = None,
                bracket: Optional[tuple] = None, dy: float = 0.005, h_min: float = 1e-12,
                alpha: float = 1.0) -> FrontProfile:
    """Speed ``c*`` and profile ``h`` of the bistable front by shooting.

    ``epsilon0`` defaults to the potential's small-amplitude radius; the profile
    is translated so that ``h(0) = epsilon0``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    eps0 = compute_epsilon0(p) if epsilon0 is None else float(epsilon0)
    c = _bisect_speed(p, eps0, tol, bracket or _default_bracket(p))
    return _assemble(p, c, eps0, dy, h_min, alpha)


def analytic_cubic_front(theta: float, *, epsilon0: Optional[float] = None, dy: float = 0.005,
                         h_min: float = 1e-12, alpha: float = 1.0) -> FrontProfile:
    """Closed-form front of the cubic family.

    ``h(y) = 1/(1 + exp((y - y_shift)/sqrt(2)))`` with ``c* = (1 - 2 theta)/sqrt(2)``.
    """
    if not 0.0 < theta < 0.5:
        raise PotentialError(f"theta={theta} outside (0, 1/2)")
    p = make_cubic(theta)
    eps0 = compute_epsilon0(p) if epsilon0 is None else float(epsilon0)
    r2 = math.sqrt(2.0)
    c = (1.0 - 2.0 * theta) / r2
    shift = -r2 * math.log((1.0 - eps0) / eps0)
    span = r2 * math.log(1.0 / h_min)
    y = dy * np.arange(math.floor((shift - span) / dy), math.ceil((shift + span) / dy) + 1)
    s = (y - shift) / r2
    # h = 1/(1 + e^s) written to avoid overflow on either side
    h = np.where(s > 0, np.exp(-np.abs(s)) / (1.0 + np.exp(-np.abs(s))),
                 1.0 / (1.0 + np.exp(-np.abs(s))))
    hp = -h * (1.0 - h) / r2
    lam_l, lam_r = _rates(c, p.beta0, p.beta1)
    return FrontProfile(y=y, h=h, hprime=hp, c_star=c, epsilon0=eps0, decay_right=lam_r,
                        decay_left=lam_l, c_h=lam_r, alpha=float(alpha))


def decay_data(fp: FrontProfile, p: BistablePotential, lo: float = 1e-7,
               hi: float = 1e-5) -> DecayData:
    """Right decay rate from the linearisation at 0, checked against a tail fit of ``log h``."""
    c = fp.c_star
    rate = 0.5 * (c + math.sqrt(c * c + 4.0 * p.beta0))
    sel = (fp.h >= lo) & (fp.h <= hi)
    if fp.h.min() > lo or np.count_nonzero(sel) < 3:
        raise FrontError("profile tail too short for a two-decade fit")
    slope = np.polyfit(fp.y[sel], np.log(fp.h[sel]), 1)[0]
    fitted = -float(slope)
    return DecayData(rate, rate, fitted, abs(fitted - rate) / rate)


def hyperbolic_front_state(fp: FrontProfile, alpha: float, x0: float, t: float, g: Grid1D,
                           method: str = "linear") -> WaveState:
    """Sample ``u = h(sqrt(1 + alpha c*^2) x - c* t - x0)`` and ``u_t = -c* h'(...)`` on ``g``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    c = fp.c_star
    z = math.sqrt(1.0 + alpha * c * c) * g.x - c * t - x0
    hv, hpv = fp.evaluate(z, method=method)
    clamped = int(np.count_nonzero((z < fp.y[0]) | (z > fp.y[-1])))
    if clamped:
        log.debug("front state: %d nodes clamped to the asymptotic states", clamped)
    return WaveState(g, hv, -c * hpv, t=float(t))
