"""Experiment orchestration: single runs, shift fits and parameter sweeps."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .config import ConfigError, RunConfig, auto_bounds, check_config, write_config
from .energy import frame, frame_energy, repair_check
from .evolve import (BlowUpError, BoundaryContaminationError, EvolveParams, FitError,
                     InvasionTrace, SplitStepper, invasion_point, split_initial)
from .front import FrontProfile, hyperbolic_front_state, solve_front
from .grid import Grid1D, WaveState, read_state_csv, write_state_csv
from .potential import (BistablePotential, PotentialError, make_cubic, supersonic_example,
                        validate)
from .spectrum import perturbation, spectral_report

__all__ = [
    "ConvergenceReport",
    "ShiftFit",
    "fit_shift",
    "setup",
    "run",
    "sweep",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_NUMERICAL",
    "EXIT_VERDICT",
]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERDICT = 4

# invasion level for potentials outside the bistable class (eps0 undefined there)
SUPERSONIC_LEVEL = 0.5


@dataclass
class ConvergenceReport:
    s_inf: float
    s_star: float
    subsonic: bool
    x0: float
    sup_err: float
    x0_earlier: float
    nu_hat: float
    nu: float
    mu_alpha: float
    c_star: float
    errors: np.ndarray = field(repr=False)
    verdict: str = "pass"
    reasons: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.verdict == "pass" else EXIT_VERDICT

    def rows(self):
        keys = ("verdict", "s_inf", "s_star", "subsonic", "c_star", "x0", "x0_earlier",
                "sup_err", "nu_hat", "nu", "mu_alpha")
        for k in keys:
            v = getattr(self, k)
            yield k, (f"{v:.17g}" if isinstance(v, float) else str(v))
        yield "reasons", "; ".join(self.reasons)


@dataclass(frozen=True)
class ShiftFit:
    x0: float
    sup_err: float
    bracket_ok: bool


def _sup_distance(s: WaveState, fp: FrontProfile, alpha: float, x0: float) -> float:
    z = fp.stretch * s.grid.x - fp.c_star * s.t - x0
    h, _ = fp.evaluate(z, method="hermite")
    return float(np.max(np.abs(s.u - h)))


def fit_shift(s: WaveState, fp: FrontProfile, alpha: float, guess: Optional[float] = None,
              eps0: Optional[float] = None, width: float = 4.0) -> ShiftFit:
    """Golden-section fit of ``x0`` minimising ``sup |u - h(stretch x - c* t - x0)|``.

    The bracket has the given width around ``guess`` (default: the shift that
    puts ``h = eps0`` at the invasion point).  If the error is not unimodal in
    the bracket, the best point of a uniform scan is returned with
    ``bracket_ok = False``.
    """
    fp = fp.with_alpha(alpha)
    if guess is None:
        level = fp.epsilon0 if eps0 is None else eps0
        xb = invasion_point(s, level, margin=0.0)
        if not math.isfinite(xb):
            raise FitError("no invasion point: cannot place the bracket")
        guess = fp.stretch * xb - fp.c_star * s.t
    f = lambda x0: _sup_distance(s, fp, alpha, x0)  # noqa: E731
    a, b = guess - 0.5 * width, guess + 0.5 * width
    try:
        res = minimize_scalar(f, bracket=(a, guess, b), method="golden",
                              options={"xtol": 1e-10})
        if not a <= res.x <= b:
            raise ValueError("minimiser left the bracket")
        return ShiftFit(float(res.x), float(res.fun), True)
    except ValueError:
        xs = np.linspace(a, b, 401)
        vals = np.array([f(x) for x in xs])
        i = int(np.argmin(vals))
        return ShiftFit(float(xs[i]), float(vals[i]), False)


# ---------------------------------------------------------------------------


@dataclass
class Setup:
    cfg: RunConfig
    potential: BistablePotential
    profile: Optional[FrontProfile]
    level: float
    state: WaveState
    xi0: float
    prm: EvolveParams


def _potential(cfg: RunConfig):
    if cfg.kind == "cubic":
        p = make_cubic(cfg.theta)
        val = validate(p)
        if not val.ok:
            raise ConfigError(f"potential rejected: {val.failure}")
        return p, val.epsilon0
    return supersonic_example(cfg.speed, cfg.alpha), SUPERSONIC_LEVEL


def _initial(cfg: RunConfig, g: Grid1D, fp: Optional[FrontProfile], p) -> WaveState:
    if cfg.initial == "step" and cfg.kind == "cubic":
        u = np.where(g.x < cfg.x0, 1.0, 0.0)
        u[np.isclose(g.x, cfg.x0, atol=1e-12 * g.dx)] = 0.5
        return WaveState(g, u, np.zeros(g.n))
    if cfg.kind == "supersonic":
        # exact solution (1 + exp(x - x0 - s t))**-1 at t = 0
        z = np.clip(g.x - cfg.x0, -700.0, 700.0)
        u = 1.0 / (1.0 + np.exp(z))
        return WaveState(g, u, cfg.speed * u * (1.0 - u))
    base = hyperbolic_front_state(fp, cfg.alpha, cfg.x0, 0.0, g, method="hermite")
    if cfg.initial == "front":
        return base
    rng = np.random.default_rng(cfg.seed)
    y = fp.stretch * g.x - cfg.x0
    up, vp = perturbation(fp, p, cfg.alpha, y, rng, cfg.amplitude)
    dup = np.gradient(up, g.dx, edge_order=2) / fp.stretch
    return base.replace(u=base.u + up, ut=base.ut + vp - fp.c_star * dup)


def _xi0_rule(s: WaveState, threshold: float) -> float:
    """Rightmost node with ``|u| > threshold``, plus 5."""
    big = np.nonzero(np.abs(s.u) > threshold)[0]
    anchor = s.grid.x[big[-1]] if big.size else s.grid.x_left
    return float(anchor + 5.0)


def setup(cfg: RunConfig) -> Setup:
    check_config(cfg)
    try:
        p, level = _potential(cfg)
    except PotentialError as exc:
        raise ConfigError(str(exc)) from None
    fp = None
    if cfg.kind == "cubic":
        fp = solve_front(p, 1e-10, epsilon0=level, alpha=cfg.alpha)
    reach = cfg.T / math.sqrt(cfg.alpha)
    if cfg.initial == "csv":
        s0 = read_state_csv(cfg.csv)
        g = s0.grid
        if abs(g.dx - cfg.dx) > 1e-9 * cfg.dx:
            raise ConfigError(f"csv grid spacing {g.dx:g} differs from dx={cfg.dx:g}")
    else:
        lo, hi = auto_bounds(cfg)
        lo = lo if cfg.x_left is None else cfg.x_left
        hi = hi if cfg.x_right is None else cfg.x_right
        g = Grid1D.from_bounds(lo, hi, cfg.dx)
        s0 = _initial(cfg, g, fp, p)
    # 0 is unstable for the supersonic example, so the split cannot separate a small tail there
    xi_thr = 2.0 * level if cfg.kind == "cubic" else level
    xi0 = _xi0_rule(s0, xi_thr) if cfg.xi0 is None else cfg.xi0
    xbar0 = invasion_point(s0, level, margin=0.0)
    if not math.isfinite(xbar0) and not np.any(np.abs(s0.u) > xi_thr):
        # nothing invades: the sizing rule has no front to protect
        prm = EvolveParams(cfg.alpha, cfg.dt_effective, cfg.dx, cfg.T)
        return Setup(cfg, p, fp, level, s0, xi0, prm)
    # sizing rule against the actual data; auto bounds grow to satisfy it
    need_hi = xi0 + reach + 20.0
    need_lo = (xbar0 if math.isfinite(xbar0) else xi0) - reach - 20.0
    if g.x_right < need_hi - 1e-9 or g.x_left > need_lo + 1e-9:
        if cfg.initial == "csv" or cfg.x_left is not None or cfg.x_right is not None:
            raise ConfigError(
                f"domain sizing rule: need x_left <= {need_lo:g} and x_right >= {need_hi:g}, "
                f"have [{g.x_left:g}, {g.x_right:g}]")
        g = Grid1D.from_bounds(min(g.x_left, need_lo), max(g.x_right, need_hi), cfg.dx)
        s0 = _initial(cfg, g, fp, p)
    prm = EvolveParams(cfg.alpha, cfg.dt_effective, cfg.dx, cfg.T)
    return Setup(cfg, p, fp, level, s0, xi0, prm)


def _snap_name(t: float) -> str:
    return f"{t:.6g}".replace("-", "m")


def run(cfg: RunConfig, out: Optional[Path] = None, write: bool = True,
        with_spectrum: bool = True) -> ConvergenceReport:
    """Simulate the configured experiment, write artifacts and return the report.

    Raises ConfigError, BlowUpError or BoundaryContaminationError; the CLI maps
    them to exit codes.
    """
    st = setup(cfg)
    p, fp, level, prm = st.potential, st.profile, st.level, st.prm
    out = Path(cfg.out if out is None else out)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        write_config(cfg, out / "effective.cfg")

    alpha = cfg.alpha
    c_star = fp.c_star if fp is not None else float("nan")
    s_star = fp.s_star if fp is not None else cfg.speed
    fr_star = frame(c_star, alpha) if fp is not None else None

    ss = split_initial(st.state, st.xi0)
    stepper = SplitStepper(ss, p, prm)
    chunk = max(1, prm.nsteps(cfg.trace_every))
    snap_every = max(1, int(round(cfg.snapshot_every / cfg.trace_every)))
    total = prm.nsteps(cfg.T)
    rows, times, xbars = [], [], []
    states_for_fit = {}
    k = 0
    while True:
        cur = stepper.state()
        u = cur.total()
        xb = invasion_point(cur.v if fp is not None else u, level, margin=cfg.margin)
        if fp is not None and math.isfinite(xb):
            # distance to the front placed at the invasion point of the full solution
            xu = invasion_point(u, level, margin=0.0)
            err = float(repair_check([u], [xu], fp, alpha)[0])
            e_star = frame_energy(cur.v, fr_star, xb, p)
        else:
            err, e_star = float("nan"), float("nan")
        times.append(cur.t)
        xbars.append(xb)
        rows.append((cur.t, xb, err, e_star))
        if write and k % snap_every == 0:
            name = _snap_name(cur.t)
            write_state_csv(out / f"state_t{name}.csv", u)
            _write_split(out / f"split_t{name}.csv", cur)
        states_for_fit[k] = u
        # keep only what the shift fits need: the last sample and the one 10 time units back
        back = k - int(round(10.0 / cfg.trace_every))
        for key in [q for q in states_for_fit if q not in (k, back) and q < back]:
            del states_for_fit[key]
        if stepper.nstep >= total:
            break
        stepper.advance(min(chunk, total - stepper.nstep))
        k += 1

    times = np.array(times)
    xbars = np.array(xbars)
    errs = np.array([r[2] for r in rows])
    if write:
        with (out / "trace.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "xbar", "ul_err", "E_cstar"])
            for r in rows:
                w.writerow([f"{v:.17g}" for v in r])

    report = _assess(cfg, st, times, xbars, errs, states_for_fit, k, c_star, s_star,
                     with_spectrum)
    if write:
        with (out / "report.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["key", "value"])
            w.writerows(report.rows())
    return report


def _write_split(path: Path, ss) -> None:
    with path.open("w", newline="") as fh:
        fh.write(f"# t={ss.t:.17g} xi0={ss.xi0:.17g} x_left={ss.v.grid.x_left:.17g} "
                 f"dx={ss.v.grid.dx:.17g}\n")
        w = csv.writer(fh)
        w.writerow(["x", "v", "vt", "r", "rt"])
        for row in zip(ss.v.grid.x, ss.v.u, ss.v.ut, ss.r.u, ss.r.ut):
            w.writerow([f"{v:.17g}" for v in row])


def _fit_rate(times, errs, floor_factor: float = 10.0):
    """Log-slope of the error between 0.1 and ``floor_factor`` times its final (floor) value."""
    ok = np.isfinite(errs) & (errs > 0)
    if np.count_nonzero(ok) < 5:
        return float("nan")
    t, e = times[ok], errs[ok]
    floor = float(np.min(e[-max(3, len(e) // 10):]))
    sel = (e < 0.1) & (e > floor_factor * floor)
    if np.count_nonzero(sel) < 5 or e[sel].max() < 10.0 * e[sel].min():
        return float("nan")  # less than one decade above the discretisation floor
    slope, _ = np.polyfit(t[sel], np.log(e[sel]), 1)
    return float(-slope)


def _assess(cfg, st, times, xbars, errs, states, k_last, c_star, s_star, with_spectrum):
    alpha = cfg.alpha
    fp = st.profile
    reasons = []
    if not math.isfinite(xbars[-1]):
        return ConvergenceReport(float("nan"), s_star, False, float("nan"), float("nan"),
                                 float("nan"), float("nan"), float("nan"), float("nan"),
                                 c_star, errs, "not in basin",
                                 ["no invasion point: the solution did not invade 0"])
    trace = InvasionTrace.from_series(times, xbars)
    s_inf = trace.s_fit
    subsonic = bool(0.0 < s_inf < 1.0 / math.sqrt(alpha))
    x0 = sup_err = x0_prev = float("nan")
    nu = ma = float("nan")
    nu_hat = _fit_rate(times, errs)
    if fp is not None:
        fit = fit_shift(states[k_last], fp, alpha, eps0=st.level)
        x0, sup_err = fit.x0, fit.sup_err
        back = k_last - int(round(10.0 / cfg.trace_every))
        if back in states:
            x0_prev = fit_shift(states[back], fp, alpha, eps0=st.level).x0
        if with_spectrum:
            rep = spectral_report(fp, st.potential, alpha, k=3)
            nu, ma = rep.nu, rep.mu_alpha
    verdict = "pass"
    if abs(s_inf - s_star) > cfg.speed_tol * abs(s_star):
        verdict = "fail"
        reasons.append(f"speed {s_inf:.6g} differs from {s_star:.6g} by more than "
                       f"{100 * cfg.speed_tol:g}%")
    if math.isfinite(nu_hat) and math.isfinite(nu) and not 0.5 * nu <= nu_hat <= 2.0 * nu:
        verdict = "fail"
        reasons.append(f"rate {nu_hat:.4g} outside [nu/2, 2 nu] with nu={nu:.4g}")
    if fp is not None and not math.isfinite(nu_hat):
        reasons.append("rate not fitted: error within one decade of the discretisation floor")
    if cfg.kind == "cubic" and not subsonic:
        verdict = "fail"
        reasons.append("measured speed is not subsonic")
    if cfg.kind == "supersonic" and not subsonic:
        reasons.append("flagged supersonic: s_inf >= 1/sqrt(alpha), potential outside the "
                       "bistable class")
    return ConvergenceReport(s_inf, s_star, subsonic, x0, sup_err, x0_prev, nu_hat, nu, ma,
                             c_star, errs, verdict, reasons)


# ---------------------------------------------------------------------------


SWEEP_COLUMNS = ("alpha", "theta", "c_star", "s_star", "s_measured", "nu", "nu_measured",
                 "mu_alpha", "status")


def _sweep_cell(args):
    cfg, out = args
    try:
        rep = run(cfg, out=out, write=True)
        status = rep.verdict
        vals = (cfg.alpha, cfg.theta, rep.c_star, rep.s_star, rep.s_inf, rep.nu, rep.nu_hat,
                rep.mu_alpha)
    except (ConfigError, BlowUpError, BoundaryContaminationError, FitError, RuntimeError,
            ValueError) as exc:
        status = f"error: {type(exc).__name__}: {exc}"
        nan = float("nan")
        vals = (cfg.alpha, cfg.theta, nan, nan, nan, nan, nan, nan)
    return tuple(f"{v:.17g}" for v in vals) + (status,)


def sweep(template: RunConfig, alphas: Sequence[float], thetas: Sequence[float], out: Path,
          jobs: Optional[int] = None) -> Path:
    """Run every ``(alpha, theta)`` cell concurrently; write ``sweep.csv`` in ``out``.

    Each cell owns ``out/cell_<i>``; failed cells are recorded with their error
    and the sweep continues.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cells = []
    for a in alphas:
        for th in thetas:
            i = len(cells)
            cfg = replace(template, alpha=float(a), theta=float(th), x_left=None, x_right=None,
                          out=str(out / f"cell_{i}"))
            cells.append((cfg, out / f"cell_{i}"))
    if jobs is None:
        jobs = int(os.environ.get("FRONTLAB_JOBS", "1") or 1)
    jobs = max(1, min(jobs, len(cells)))
    if jobs == 1:
        rows = [_sweep_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_cell, cells))
    path = out / "sweep.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        w.writerows(rows)
    return path
