"""Time stepping for ``alpha u_tt + u_t = u_xx - V'(u)`` on a clamped interval.

The scheme is the damping-implicit leapfrog

    alpha (u+ - 2u + u-)/dt**2 + (u+ - u-)/(2 dt) = D2 u - V'(u),

carried in the equivalent one-step velocity form (``ut`` is the centred
difference ``(u+ - u-)/(2 dt)``), which needs no separate start-up step: the
first step coincides with the Taylor bootstrap
``u1 = u0 + dt ut0 + dt**2/(2 alpha) (D2 u0 - V'(u0) - ut0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from ._backend import kernels
from .grid import Grid1D, WaveState, energy_space_norm2
from .potential import BistablePotential

__all__ = [
    "EvolveParams",
    "CFLError",
    "BlowUpError",
    "BoundaryContaminationError",
    "FitError",
    "Stepper",
    "SplitState",
    "SplitStepper",
    "InvasionTrace",
    "step",
    "simulate",
    "trajectory",
    "split_initial",
    "evolve_split",
    "ramp",
    "interaction",
    "interaction_excess",
    "invasion_point",
    "fit_slope",
    "remainder_decay",
    "remainder_trace",
]

CFL_SAFETY = 0.9


class CFLError(ValueError):
    pass


class BlowUpError(FloatingPointError):
    pass


class BoundaryContaminationError(RuntimeError):
    pass


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvolveParams:
    alpha: float
    dt: float
    dx: float
    T: float
    boundary: str = "clamped"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not (self.dt > 0 and self.dx > 0):
            raise ValueError("dt and dx must be positive")
        if self.boundary != "clamped":
            raise ValueError(f"unsupported boundary {self.boundary!r}")
        limit = CFL_SAFETY * math.sqrt(self.alpha) * self.dx
        if self.dt > limit * (1.0 + 1e-12):
            raise CFLError(f"CFL violated: dt={self.dt:g} > 0.9*sqrt(alpha)*dx={limit:g}")

    @classmethod
    def auto(cls, alpha: float, dx: float, T: float) -> "EvolveParams":
        return cls(alpha, CFL_SAFETY * math.sqrt(alpha) * dx, dx, T)

    @property
    def wave_speed(self) -> float:
        return 1.0 / math.sqrt(self.alpha)

    def nsteps(self, duration: float) -> int:
        return int(round(duration / self.dt))


def _interior_force(u: np.ndarray, dx: float, dV) -> np.ndarray:
    f = np.zeros_like(u)
    f[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / (dx * dx) - dV(u[1:-1])
    return f


def _advance_generic(u, ut, force, nsteps, dt, dx, alpha, dV, left, right):
    """Same recurrence as the compiled kernel for potentials without coefficients."""
    h = 0.5 / alpha
    denom = 1.0 + dt * h
    ui, uti, fi = u[1:-1], ut[1:-1], force[1:-1]
    for _ in range(nsteps):
        uti += dt * h * (fi - uti)
        ui += dt * uti
        u[0], u[-1] = left, right
        fi[:] = (u[:-2] - 2.0 * ui + u[2:]) / (dx * dx) - dV(ui)
        uti += dt * h * fi
        uti /= denom
        ut[0] = ut[-1] = 0.0


def _blowup_bound(u0: np.ndarray) -> float:
    return 10.0 * (1.0 + max(1.0, float(np.max(np.abs(u0)))))


class Stepper:
    """Mutable integrator state for one trajectory."""

    def __init__(self, s: WaveState, p: BistablePotential, prm: EvolveParams):
        if abs(s.grid.dx - prm.dx) > 1e-12 * prm.dx:
            raise ValueError("grid spacing differs from EvolveParams.dx")
        self.grid = s.grid
        self.p = p
        self.prm = prm
        self.u = np.array(s.u, dtype=float)
        self.ut = np.array(s.ut, dtype=float)
        self.far_left = s.far_left
        self.far_right = s.far_right
        self.force = _interior_force(self.u, prm.dx, p.dV)
        self.nstep = 0
        self.t0 = s.t
        self.bound = _blowup_bound(self.u)
        self._coeffs = None if p.dV_coeffs is None else np.asarray(p.dV_coeffs, dtype=float)

    @property
    def t(self) -> float:
        return self.t0 + self.nstep * self.prm.dt

    def advance(self, nsteps: int) -> None:
        prm = self.prm
        if self._coeffs is not None:
            kernels.leapfrog_advance(self.u, self.ut, self.force, nsteps, prm.dt, prm.dx,
                                     prm.alpha, self._coeffs, self.far_left, self.far_right)
        else:
            _advance_generic(self.u, self.ut, self.force, nsteps, prm.dt, prm.dx, prm.alpha,
                             self.p.dV, self.far_left, self.far_right)
        self.nstep += nsteps
        self._check()

    def _check(self):
        peak = float(np.max(np.abs(self.u)))
        if not math.isfinite(peak) or not np.all(np.isfinite(self.ut)):
            raise BlowUpError(f"non-finite values at t={self.t:g}")
        if peak > self.bound:
            raise BlowUpError(f"|u| = {peak:.3g} exceeds {self.bound:.3g} at t={self.t:g}")

    def state(self) -> WaveState:
        return WaveState(self.grid, self.u, self.ut, t=self.t, far_left=self.far_left,
                         far_right=self.far_right)


def step(s: WaveState, p: BistablePotential, prm: EvolveParams) -> WaveState:
    """One time step."""
    st = Stepper(s, p, prm)
    st.advance(1)
    return st.state()


def trajectory(s: WaveState, p: BistablePotential, prm: EvolveParams,
               every: float) -> Iterator[WaveState]:
    """Yield snapshots at ``t0, t0 + every, ...`` up to ``t0 + prm.T``."""
    st = Stepper(s, p, prm)
    chunk = max(1, prm.nsteps(every))
    total = prm.nsteps(prm.T)
    yield st.state()
    while st.nstep < total:
        st.advance(min(chunk, total - st.nstep))
        yield st.state()


def simulate(s: WaveState, p: BistablePotential, prm: EvolveParams,
             observer: Optional[Callable[[WaveState], None]] = None,
             every: Optional[float] = None) -> WaveState:
    """Integrate to ``t0 + prm.T``; ``observer`` sees every snapshot."""
    last = s
    for last in trajectory(s, p, prm, every or prm.T):
        if observer is not None:
            observer(last)
    return last


# ---------------------------------------------------------------------------
# decomposition u = v + r


def ramp(x: np.ndarray) -> np.ndarray:
    """``min(1, (1 + x/4)_+)``: 0 for ``x <= -4``, 1 for ``x >= 0``."""
    return np.minimum(1.0, np.maximum(0.0, 1.0 + np.asarray(x, dtype=float) / 4.0))


@dataclass(frozen=True)
class SplitState:
    """``v`` carries the invading part, ``r`` the small right tail; ``u = v + r``."""

    v: WaveState
    r: WaveState
    xi0: float

    @property
    def t(self) -> float:
        return self.v.t

    def total(self) -> WaveState:
        return self.v.replace(u=self.v.u + self.r.u, ut=self.v.ut + self.r.ut,
                              far_right=self.v.far_right + self.r.far_right,
                              far_left=self.v.far_left + self.r.far_left)


def split_initial(s: WaveState, xi0: float) -> SplitState:
    g = s.grid
    if not g.x_left <= xi0 <= g.x_right:
        raise ValueError("xi0 outside the grid")
    th = ramp(g.x - xi0)
    r = s.replace(u=th * s.u, ut=th * s.ut, far_left=0.0, far_right=s.far_right)
    v = s.replace(u=s.u - r.u, ut=s.ut - r.ut, far_left=s.far_left, far_right=0.0)
    return SplitState(v, r, float(xi0))


def interaction(v: np.ndarray, r: np.ndarray, p: BistablePotential) -> np.ndarray:
    """``f(v, r) = V'(v) + V'(r) - V'(v + r)``."""
    return p.dV(v) + p.dV(r) - p.dV(v + r)


def interaction_excess(v: np.ndarray, r: np.ndarray, p: BistablePotential):
    """Check ``|f(v, r)| <= K2 |v||r|`` with ``K2 = max |V'''|`` over the attained range.

    Returns ``(excess, K2)``: ``excess`` is the largest ``|f| - K2 |v||r|`` after
    allowing for the cancellation error of forming ``f`` from three ``V'``
    values, so ``excess <= 0`` means the bound holds at every node.
    """
    v = np.asarray(v, dtype=float)
    r = np.asarray(r, dtype=float)
    lo = min(float(np.min(v)), float(np.min(r)), float(np.min(v + r)), 0.0)
    hi = max(float(np.max(v)), float(np.max(r)), float(np.max(v + r)), 0.0)
    k2 = float(np.max(np.abs(p.d3V(np.linspace(lo, hi, 1001)))))
    dv, dr, dvr = p.dV(v), p.dV(r), p.dV(v + r)
    f = dv + dr - dvr
    slack = 8.0 * np.finfo(float).eps * (np.abs(dv) + np.abs(dr) + np.abs(dvr))
    return float(np.max(np.abs(f) - k2 * np.abs(v) * np.abs(r) - slack)), k2


class SplitStepper:
    def __init__(self, ss: SplitState, p: BistablePotential, prm: EvolveParams):
        if p.dV_coeffs is None:
            raise NotImplementedError("split stepping needs a polynomial V'")
        self.grid = ss.v.grid
        self.p, self.prm, self.xi0 = p, prm, ss.xi0
        self.v, self.vt = np.array(ss.v.u), np.array(ss.v.ut)
        self.r, self.rt = np.array(ss.r.u), np.array(ss.r.ut)
        self.v_far = (ss.v.far_left, ss.v.far_right)
        self.r_far = (ss.r.far_left, ss.r.far_right)
        dx = prm.dx
        self.fr = _interior_force(self.r, dx, p.dV)
        self.fv = np.zeros_like(self.v)
        self.fv[1:-1] = (_interior_force(self.v, dx, lambda z: 0.0 * z)[1:-1]
                         - p.dV(self.v[1:-1] + self.r[1:-1]) + p.dV(self.r[1:-1]))
        self.nstep = 0
        self.t0 = ss.t
        self.bound = _blowup_bound(self.v + self.r)
        self._coeffs = np.asarray(p.dV_coeffs, dtype=float)

    @property
    def t(self) -> float:
        return self.t0 + self.nstep * self.prm.dt

    def advance(self, nsteps: int) -> None:
        prm = self.prm
        kernels.split_advance(self.v, self.vt, self.fv, self.r, self.rt, self.fr, nsteps,
                              prm.dt, prm.dx, prm.alpha, self._coeffs, self.v_far[0],
                              self.v_far[1], self.r_far[0], self.r_far[1])
        self.nstep += nsteps
        peak = float(np.max(np.abs(self.v + self.r)))
        if not math.isfinite(peak):
            raise BlowUpError(f"non-finite values at t={self.t:g}")
        if peak > self.bound:
            raise BlowUpError(f"|u| = {peak:.3g} exceeds {self.bound:.3g} at t={self.t:g}")

    def state(self) -> SplitState:
        t = self.t
        v = WaveState(self.grid, self.v, self.vt, t=t, far_left=self.v_far[0],
                      far_right=self.v_far[1])
        r = WaveState(self.grid, self.r, self.rt, t=t, far_left=self.r_far[0],
                      far_right=self.r_far[1])
        return SplitState(v, r, self.xi0)


def evolve_split(ss: SplitState, p: BistablePotential, prm: EvolveParams,
                 every: Optional[float] = None,
                 observer: Optional[Callable[[SplitState], None]] = None) -> SplitState:
    st = SplitStepper(ss, p, prm)
    total = prm.nsteps(prm.T)
    chunk = max(1, prm.nsteps(every)) if every else total
    if observer is not None:
        observer(st.state())
    while st.nstep < total:
        st.advance(min(chunk, total - st.nstep))
        if observer is not None:
            observer(st.state())
    return st.state()


# ---------------------------------------------------------------------------
# invasion point and fits


@dataclass(frozen=True)
class InvasionTrace:
    times: np.ndarray
    xbar: np.ndarray
    s_fit: float
    fit_window: tuple

    @classmethod
    def from_series(cls, times, xbar, tail: float = 0.5) -> "InvasionTrace":
        times = np.asarray(times, dtype=float)
        xbar = np.asarray(xbar, dtype=float)
        ok = np.isfinite(xbar)
        t_ok = times[ok]
        if t_ok.size < 2:
            return cls(times, xbar, float("nan"), (float("nan"), float("nan")))
        start = t_ok[0] + (1.0 - tail) * (t_ok[-1] - t_ok[0])
        slope, _ = fit_slope(times, xbar, start)
        return cls(times, xbar, slope, (float(start), float(t_ok[-1])))


def invasion_point(v, eps0: float, grid: Optional[Grid1D] = None, margin: float = 1.0) -> float:
    """Rightmost ``x`` with ``|v(x)| >= eps0``, linearly interpolated.

    ``v`` is a WaveState or an array on ``grid``.  Returns ``-inf`` if no node
    reaches ``eps0``; raises if the crossing lies within ``margin`` of the
    right boundary.
    """
    if isinstance(v, WaveState):
        grid, vals = v.grid, v.u
    else:
        vals = np.asarray(v, dtype=float)
        if grid is None:
            raise ValueError("grid required with a bare array")
    a = np.abs(vals)
    hits = np.nonzero(a >= eps0)[0]
    if hits.size == 0:
        return float("-inf")
    i = int(hits[-1])
    x = grid.x_left + i * grid.dx
    if i < grid.n - 1:
        x += grid.dx * (a[i] - eps0) / (a[i] - a[i + 1])
    if x > grid.x_right - margin:
        raise BoundaryContaminationError(
            f"|v| >= eps0 at x={x:.4g}, within {margin} of the right boundary")
    return float(x)


def fit_slope(times, values, t_start: float):
    """Least-squares ``(slope, intercept)`` of finite ``values`` with ``times >= t_start``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = (times >= t_start) & np.isfinite(values)
    if np.count_nonzero(sel) < 2:
        raise FitError("fewer than two samples in the fit window")
    slope, icpt = np.polyfit(times[sel], values[sel], 1)
    return float(slope), float(icpt)


def remainder_trace(r_states, window: float = 1.0):
    """``(times, ||(r, r_t)||_X**2)`` for a sequence of WaveStates."""
    times, norms = [], []
    for s in r_states:
        times.append(s.t)
        norms.append(energy_space_norm2(s.u, s.ut, s.grid.dx, window))
    return np.array(times), np.array(norms)


def remainder_decay(times, norms2, tail: float = 0.5):
    """Fit ``norms2 ~ K exp(-mu t)`` on the tail fraction of the trace; returns ``(K, mu)``.

    An identically zero trace gives ``(0, inf)``.
    """
    times = np.asarray(times, dtype=float)
    norms2 = np.asarray(norms2, dtype=float)
    if np.all(norms2 == 0.0):
        return 0.0, float("inf")
    start = times[0] + (1.0 - tail) * (times[-1] - times[0])
    sel = (times >= start) & (norms2 > 0)
    if np.count_nonzero(sel) < 3:
        raise FitError("too few positive samples in the tail")
    slope, icpt = np.polyfit(times[sel], np.log(norms2[sel]), 1)
    if not slope < 0:
        raise FitError(f"remainder norm is not decreasing (log-slope {slope:.3g})")
    return float(np.exp(icpt)), float(-slope)
