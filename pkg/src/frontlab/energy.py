"""Galilean frames, weighted energies and the diagnostics built on them.

A frame with parabolic speed ``c`` moves at the physical speed
``s = c / sqrt(1 + alpha c**2)``; its coordinate is ``y = stretch * x - c t``
with ``stretch = sqrt(1 + alpha c**2)``.  Every weighted quantity is evaluated
directly in lab coordinates,

    E = stretch * int exp(c stretch (x - a)) (alpha/2 (u_t + s u_x)**2
                                             + u_x**2 / (2 stretch**2) + V(u)) dx,

where the lab anchor ``a`` is the image of the frame anchor ``y0`` at time
``t``: ``a = (y0 + c t) / stretch``.  This avoids interpolating into the
moving frame, and anchoring keeps the exponential weight finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .evolve import FitError, InvasionTrace, SplitState, interaction
from .front import FrontProfile
from .grid import MAX_EXPONENT, Grid1D, WaveState, derivative, ul_l2, ul_norm
from .potential import BistablePotential

__all__ = [
    "FrameSpec",
    "FrameError",
    "frame",
    "frame_from_speed",
    "lab_anchor",
    "frame_energy",
    "dissipation",
    "remainder_term",
    "k3_envelope",
    "lower_bound",
    "PoincareResult",
    "poincare_check",
    "invasion_energy_series",
    "classify_series",
    "invasion_speed",
    "increment_check",
    "basin_divergence",
    "repair_check",
    "energy_balance",
    "BalanceReport",
]


class FrameError(ValueError):
    pass


@dataclass(frozen=True)
class FrameSpec:
    c: float
    s: float
    stretch: float
    alpha: float

    @property
    def rate(self) -> float:
        """Exponent of the lab-frame weight, ``c * stretch``."""
        return self.c * self.stretch


def frame(c: float, alpha: float) -> FrameSpec:
    if c < 0:
        raise FrameError("c must be non-negative")
    if not alpha > 0:
        raise FrameError("alpha must be positive")
    stretch = math.sqrt(1.0 + alpha * c * c)
    return FrameSpec(float(c), c / stretch, stretch, float(alpha))


def frame_from_speed(s: float, alpha: float) -> FrameSpec:
    """Frame with physical speed ``s``; requires ``0 <= s < 1/sqrt(alpha)``."""
    if not alpha > 0:
        raise FrameError("alpha must be positive")
    if s < 0 or alpha * s * s >= 1.0:
        raise FrameError(f"s={s:g} is not subsonic (1/sqrt(alpha)={1 / math.sqrt(alpha):g})")
    c = s / math.sqrt(1.0 - alpha * s * s)
    return FrameSpec(c, float(s), math.sqrt(1.0 + alpha * c * c), float(alpha))


def lab_anchor(fr: FrameSpec, y0: float, t: float) -> float:
    """Lab position of the frame point ``y0`` at time ``t``."""
    return (y0 + fr.c * t) / fr.stretch


def _weight(grid: Grid1D, fr: FrameSpec, anchor_x: float, f: np.ndarray) -> np.ndarray:
    expo = fr.rate * (grid.x - anchor_x)
    big = expo > MAX_EXPONENT
    if np.any(big):
        if np.any(f[big] != 0.0):
            raise OverflowError(
                f"weight exp({float(np.max(expo)):.1f}) overflows where the integrand is nonzero")
        out = np.zeros_like(f)
        out[~big] = np.exp(expo[~big]) * f[~big]
        return out
    return np.exp(expo) * f


def _integral(grid, fr, anchor_x, f):
    return fr.stretch * float(np.trapezoid(_weight(grid, fr, anchor_x, f), dx=grid.dx))


def _frame_velocity(s: WaveState, fr: FrameSpec):
    ux = derivative(s.u, s.grid.dx)
    return s.ut + fr.s * ux, ux


def frame_energy(v: WaveState, fr: FrameSpec, anchor_x: float, p: BistablePotential) -> float:
    """Anchored energy of ``v`` in the frame ``fr`` (lab-frame identity)."""
    w, ux = _frame_velocity(v, fr)
    dens = 0.5 * fr.alpha * w * w + ux * ux / (2.0 * fr.stretch ** 2) + p.V(v.u)
    return _integral(v.grid, fr, anchor_x, dens)


def dissipation(v: WaveState, fr: FrameSpec, anchor_x: float) -> float:
    """``(1 + alpha c**2) int e^{c(y - y0)} |d_t v_c|**2 dy``, using the stored velocity."""
    w, _ = _frame_velocity(v, fr)
    return fr.stretch ** 2 * _integral(v.grid, fr, anchor_x, w * w)


def remainder_term(ss: SplitState, fr: FrameSpec, anchor_x: float, p: BistablePotential) -> float:
    """``int e^{c(y - y0)} f(v_c, r_c) d_t v_c dy``; zero when either part vanishes."""
    w, _ = _frame_velocity(ss.v, fr)
    return _integral(ss.v.grid, fr, anchor_x, interaction(ss.v.u, ss.r.u, p) * w)


def lower_bound(fr: FrameSpec, eps0: float, min_v: float, xbar: float, anchor_x: float) -> float:
    """``e^{c(ybar - y0)} (min V / c + c eps0**2 / 2)`` with ``ybar - y0 = stretch (xbar - anchor)``."""
    if not fr.c > 0:
        raise FrameError("the lower bound needs c > 0")
    return math.exp(fr.rate * (xbar - anchor_x)) * (min_v / fr.c + 0.5 * fr.c * eps0 ** 2)


class Envelope(NamedTuple):
    K3: float
    envelope: np.ndarray
    covered: float


def k3_envelope(times, R, E, weight_mass, c: float, mu: float) -> Envelope:
    """Smallest ``K3`` with ``|R| <= K3 e^{-mu t} (E + K3/c * weight_mass)`` at all samples.

    ``weight_mass`` is ``e^{c(ybar - y0)}``.  For each sample the bound is a
    quadratic in ``K3`` with a unique positive root; ``K3`` is their maximum.
    ``covered`` is the fraction of samples satisfying the bound (1 by
    construction, reported as a check).
    """
    t = np.asarray(times, dtype=float)
    R = np.abs(np.asarray(R, dtype=float))
    E = np.asarray(E, dtype=float)
    w = np.asarray(weight_mass, dtype=float)
    a = w / c
    rhs = R * np.exp(mu * t)
    k = np.where(a > 0, (-E + np.sqrt(E * E + 4.0 * a * rhs)) / (2.0 * np.where(a > 0, a, 1.0)),
                 np.where(E > 0, rhs / np.where(E > 0, E, 1.0), 0.0))
    K3 = float(np.max(k)) if k.size else 0.0
    env = K3 * np.exp(-mu * t) * (E + K3 * a)
    covered = float(np.mean(R <= env * (1.0 + 1e-12) + 1e-300)) if k.size else 1.0
    return Envelope(K3, env, covered)


# ---------------------------------------------------------------------------
# weighted Poincare inequalities


class PoincareResult(NamedTuple):
    lhs: float
    rhs: float
    lhs2: float
    rhs2: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs and self.lhs2 <= self.rhs2


def poincare_check(v: np.ndarray, grid: Grid1D, c: float, y1: float,
                   dv: Optional[np.ndarray] = None) -> PoincareResult:
    """Both weighted Poincare inequalities on ``[y1, x_right]``, all scaled by ``e^{-c y1}``.

    ``y1`` is snapped to the nearest node.  ``dv`` defaults to second-order
    finite differences of ``v``.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    v = np.asarray(v, dtype=float)
    dv = derivative(v, grid.dx) if dv is None else np.asarray(dv, dtype=float)
    i = grid.index_of(y1)
    x = grid.x[i:]
    w = np.exp(c * (x - x[0]))
    lhs = 0.25 * c * c * float(np.trapezoid(w * v[i:] ** 2, dx=grid.dx))
    rhs = float(np.trapezoid(w * dv[i:] ** 2, dx=grid.dx))
    return PoincareResult(lhs, rhs, c * float(v[i]) ** 2, rhs)


# ---------------------------------------------------------------------------
# series along a trajectory


def invasion_energy_series(states: Sequence[WaveState], xbars: Sequence[float],
                           c_list: Iterable[float], alpha: float,
                           p: BistablePotential) -> dict:
    """``{c: array of E_c(ybar_c(t), t)}`` with each energy anchored at the invasion point."""
    xbars = np.asarray(xbars, dtype=float)
    if not np.all(np.isfinite(xbars)):
        raise FrameError("invasion point undefined (no node reaches eps0)")
    out = {}
    for c in c_list:
        fr = frame(c, alpha)
        out[float(c)] = np.array([frame_energy(s, fr, xb, p) for s, xb in zip(states, xbars)])
    return out


def classify_series(series, tail: float = 0.5, growth_factor: float = 10.0) -> str:
    """``'bounded'`` or ``'growing'`` from the tail of a time series.

    Growing means either ``max |E| > growth_factor * median |E|`` on the tail,
    or a tail along which ``|E|`` increases at 90% of the samples and ends at
    least twice its starting size.
    """
    e = np.abs(np.asarray(series, dtype=float))
    if not np.all(np.isfinite(e)):
        return "growing"
    tail_e = e[int(len(e) * (1.0 - tail)):]
    if tail_e.size < 3:
        raise FitError("series too short to classify")
    med = float(np.median(tail_e))
    if float(np.max(tail_e)) > growth_factor * med:
        return "growing"
    inc = np.diff(tail_e)
    if np.mean(inc > 0) >= 0.9 and tail_e[-1] >= 2.0 * tail_e[0]:
        return "growing"
    return "bounded"


def invasion_speed(trace: InvasionTrace, alpha: float):
    """``(s_inf, subsonic)`` from the fitted tail slope of the invasion point."""
    s = trace.s_fit
    if not math.isfinite(s):
        raise FitError("invasion speed undefined")
    return s, bool(0.0 < s < 1.0 / math.sqrt(alpha))


def increment_check(times, xbar, s_star: float, T: float) -> float:
    """``sup_{|tau| <= T} |xbar(t + tau) - xbar(t) - s_star tau|`` with ``t = t_end - T``."""
    times = np.asarray(times, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    t_mid = times[-1] - T
    if t_mid - T < times[0] - 1e-9:
        raise FitError("trace shorter than 2T")
    sel = np.abs(times - t_mid) <= T + 1e-9
    x_mid = float(np.interp(t_mid, times, xbar))
    tau = times[sel] - t_mid
    return float(np.max(np.abs(xbar[sel] - x_mid - s_star * tau)))


def basin_divergence(ss: SplitState, c_list: Iterable[float], alpha: float,
                     p: BistablePotential) -> np.ndarray:
    """``E_c(0, 0)`` of the principal part ``v`` for each ``c`` (frame anchor at the origin)."""
    return np.array([frame_energy(ss.v, frame(c, alpha), 0.0, p) for c in c_list])


def repair_check(states: Sequence[WaveState], xbars: Sequence[float], fp: FrontProfile,
                 alpha: float, window: float = 1.0) -> np.ndarray:
    """Uniformly local distance to the front placed at the invasion point.

    For each snapshot: ``||u - v*||_{H1_ul} + ||u_t + s* v*'||_{L2_ul}`` with
    ``v*(x) = h(stretch (x - xbar))``.
    """
    fr = frame(fp.c_star, alpha)
    out = []
    for s, xb in zip(states, xbars):
        h, hp = fp.evaluate(fr.stretch * (s.grid.x - xb), method="hermite")
        du = s.u - h
        dut = s.ut + fr.s * fr.stretch * hp
        out.append(ul_norm(du, s.grid.dx, window).h1ul + ul_l2(dut, s.grid.dx, window))
    return np.array(out)


class BalanceReport(NamedTuple):
    times: np.ndarray
    E: np.ndarray
    D: np.ndarray
    R: np.ndarray
    window_residuals: np.ndarray
    max_increase: float


def energy_balance(states: Sequence, fr: FrameSpec, y0: float, p: BistablePotential,
                   window: float = 1.0) -> BalanceReport:
    """Integrated balance ``E(t+w) - E(t) + int D - int R`` over consecutive windows.

    ``states`` are WaveStates (``r = 0``) or SplitStates, closely spaced in
    time; the time integrals use the trapezoid rule over the samples.
    ``max_increase`` is the largest increase of ``E`` between consecutive samples.
    """
    times, E, D, R = [], [], [], []
    for st in states:
        split = isinstance(st, SplitState)
        v = st.v if split else st
        a = lab_anchor(fr, y0, v.t)
        times.append(v.t)
        E.append(frame_energy(v, fr, a, p))
        D.append(dissipation(v, fr, a))
        R.append(remainder_term(st, fr, a, p) if split else 0.0)
    times, E, D, R = map(np.array, (times, E, D, R))
    cumD = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(times) * (D[1:] + D[:-1]))))
    cumR = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(times) * (R[1:] + R[:-1]))))
    res = []
    t0 = times[0]
    while t0 + window <= times[-1] + 1e-9:
        i = int(np.argmin(np.abs(times - t0)))
        j = int(np.argmin(np.abs(times - (t0 + window))))
        res.append(E[j] - E[i] + (cumD[j] - cumD[i]) - (cumR[j] - cumR[i]))
        t0 += window
    inc = float(np.max(np.diff(E))) if E.size > 1 else 0.0
    return BalanceReport(times, E, D, R, np.array(res), inc)
