"""Linear stability of the front in its comoving frame.

Eigenfunctions ``(u, lambda u)`` of the linearisation satisfy
``u'' + c(1 + 2 alpha lambda) u' - g u = lambda (1 + alpha lambda) u`` with
``g = V''(h)``.  The substitution ``u = exp(-c(1 + 2 alpha lambda) y / 2) U``
turns this into the self-adjoint problem ``L U = mu U`` with

    L = d^2/dy^2 - (g + c^2/4),      mu = lambda (1 + alpha lambda)(1 + alpha c^2),

so a single symmetric operator serves every ``alpha``; ``alpha`` enters only
through the scalar map ``mu -> lambda``.  ``L`` is discretised by the
three-point Laplacian with Dirichlet ends and its top eigenvalues are found
by Sturm-sequence bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ._backend import kernels
from .evolve import EvolveParams, FitError, Stepper
from .front import FrontProfile, hyperbolic_front_state
from .grid import Grid1D, derivative, ul_l2, ul_norm
from .potential import BistablePotential

__all__ = [
    "mu_alpha",
    "map_mu_to_lambda",
    "map_lambda_to_mu",
    "Tridiagonal",
    "build_L",
    "spectral_grid",
    "top_eigs",
    "sturm_count",
    "EigenError",
    "spectral_gap",
    "projection_weights",
    "projection_coefficient",
    "SpectralReport",
    "spectral_report",
    "DecayExperiment",
    "decay_rate_experiment",
]


class EigenError(RuntimeError):
    pass


def mu_alpha(alpha: float, m: float) -> float:
    """``(-1 + Re sqrt(1 - 4 alpha m)) / (2 alpha)``, the edge of the essential spectrum."""
    if not (alpha > 0 and m > 0):
        raise ValueError("alpha and m must be positive")
    d = 1.0 - 4.0 * alpha * m
    if d < 0:
        return -0.5 / alpha
    # cancellation-free form of (sqrt(d) - 1) / (2 alpha)
    return -2.0 * m / (1.0 + math.sqrt(d))


def map_mu_to_lambda(mu: float, alpha: float, c: float):
    """Root with larger real part of ``alpha lambda**2 + lambda = mu / (1 + alpha c**2)``.

    Returns ``(lambda, real)``.  On the complex branch only the common real
    part ``-1/(2 alpha)`` is returned and ``real`` is False.
    """
    k = 1.0 + alpha * c * c
    d = 1.0 + 4.0 * alpha * mu / k
    if d < 0:
        return -0.5 / alpha, False
    return 2.0 * mu / (k * (1.0 + math.sqrt(d))), True


def map_lambda_to_mu(lam: float, alpha: float, c: float) -> float:
    return lam * (1.0 + alpha * lam) * (1.0 + alpha * c * c)


@dataclass(frozen=True)
class Tridiagonal:
    """Symmetric tridiagonal matrix: ``diag`` (n) and ``off`` (n - 1)."""

    diag: np.ndarray
    off: np.ndarray
    y: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.diag.size

    def matvec(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        out[:-1] += self.off * u[1:]
        out[1:] += self.off * u[:-1]
        return out

    def gershgorin(self):
        a = np.abs(self.off)
        rad = np.zeros_like(self.diag)
        rad[:-1] += a
        rad[1:] += a
        return float(np.min(self.diag - rad)), float(np.max(self.diag + rad))


def spectral_grid(fp: FrontProfile, p: BistablePotential, dx: float,
                  tail_tol: float = 1e-10) -> np.ndarray:
    """Uniform ``y`` grid long enough for the kernel element and the projection weights.

    Both ``exp(c y/2) h'`` and ``exp(c y) h'`` must fall below ``tail_tol``
    relative to their size at the interface.
    """
    c = fp.c_star
    right = min(math.sqrt(0.25 * c * c + p.beta0), fp.c_h - c)
    left = min(math.sqrt(0.25 * c * c + p.beta1), fp.decay_left + c)
    if not right > 0:
        raise EigenError("c >= c_h: projection weight does not decay")
    span = math.log(1.0 / tail_tol)
    y_mid = float(np.interp(0.5, fp.h[::-1], fp.y[::-1]))
    lo = y_mid - span / left - 2.0
    hi = y_mid + span / right + 2.0
    n = int(math.ceil((hi - lo) / dx)) + 1
    return lo + dx * np.arange(n)


def build_L(fp: FrontProfile, p: BistablePotential, dx: float = 0.02,
            y: Optional[np.ndarray] = None, tail_tol: float = 1e-10) -> Tridiagonal:
    """``D2 - (V''(h) + c**2/4)`` with Dirichlet truncation at the grid ends."""
    if y is None:
        y = spectral_grid(fp, p, dx, tail_tol)
    else:
        dx = float(y[1] - y[0])
    h, _ = fp.evaluate(y, method="hermite", extrapolate=True)
    c = fp.c_star
    g = p.d2V(h)
    diag = -2.0 / (dx * dx) - (g + 0.25 * c * c)
    off = np.full(y.size - 1, 1.0 / (dx * dx))
    return Tridiagonal(np.ascontiguousarray(diag), off, y)


def top_eigs(op: Tridiagonal, k: int, tol: float = 1e-12, maxiter: int = 200) -> np.ndarray:
    """The ``k`` largest eigenvalues, descending, by Sturm-count bisection."""
    if k < 1 or k > op.n:
        raise ValueError("k out of range")
    e2 = np.ascontiguousarray(op.off ** 2)
    lo, hi = op.gershgorin()
    pivmin = np.finfo(float).tiny * max(1.0, float(np.max(e2)))
    out = []
    for idx in range(op.n - 1, op.n - 1 - k, -1):
        val, it = kernels.bisect_eigenvalue(op.diag, e2, idx, lo, hi, tol, pivmin, maxiter)
        if it >= maxiter:
            raise EigenError(f"bisection for eigenvalue {idx} did not converge")
        out.append(val)
        hi = val + tol  # the next eigenvalue lies below this one
    return np.array(out)


def sturm_count(op: Tridiagonal, x: float) -> int:
    """Number of eigenvalues below ``x``."""
    e2 = np.ascontiguousarray(op.off ** 2)
    pivmin = np.finfo(float).tiny * max(1.0, float(np.max(e2)))
    return int(kernels.sturm_count(op.diag, e2, x, pivmin))


def spectral_gap(mus, alpha: float, c: float, m: float):
    """``(nu, lambda_1)`` with ``nu = min(-lambda_1, -mu_alpha)``.

    ``mus`` are the top eigenvalues of ``L`` (descending; ``mus[0]`` is the
    translation mode).  Values at or below the essential edge ``-(m + c**2/4)``
    of ``L`` belong to the discretised continuum; if no ``mus[1]`` lies above
    it, ``lambda_1`` is None and ``nu = -mu_alpha``.
    """
    edge = -(m + 0.25 * c * c)
    ma = mu_alpha(alpha, m)
    if len(mus) < 2 or mus[1] <= edge:
        return -ma, None
    lam1, _ = map_mu_to_lambda(float(mus[1]), alpha, c)
    return min(-lam1, -ma), lam1


# ---------------------------------------------------------------------------
# spectral projection


class Projection(NamedTuple):
    y: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    N: float
    hprime: np.ndarray


def projection_weights(fp: FrontProfile, alpha: float, c: Optional[float] = None,
                       y: Optional[np.ndarray] = None, p: Optional[BistablePotential] = None,
                       dx: float = 0.02) -> Projection:
    """``psi2 = e^{cy} h'``, ``psi1 = psi2/alpha + 2c psi2'`` and ``N`` with ``N int psi1 h' = 1``.

    With the potential available, ``psi2' = e^{cy}(h'' + c h') = e^{cy} V'(h)``
    follows from the front equation; otherwise ``h'`` is differentiated numerically.
    """
    c = fp.c_star if c is None else float(c)
    if y is None:
        if p is None:
            raise ValueError("pass either y or the potential")
        y = spectral_grid(fp, p, dx)
    h, hp = fp.evaluate(y, method="hermite", extrapolate=True)
    ecy = np.exp(c * y)
    psi2 = ecy * hp
    if p is not None:
        dpsi2 = ecy * p.dV(h)
    else:
        dpsi2 = derivative(psi2, float(y[1] - y[0]))
    psi1 = psi2 / alpha + 2.0 * c * dpsi2
    denom = float(np.trapezoid(psi1 * hp, y))
    if abs(denom) < 1e-14 * float(np.trapezoid(np.abs(psi1 * hp), y)) or denom == 0.0:
        raise EigenError("projection normalisation vanishes")
    return Projection(y, psi1, psi2, 1.0 / denom, hp)


def projection_coefficient(pr: Projection, u: np.ndarray, v: np.ndarray) -> float:
    """``N int (psi1 u + psi2 v) dy``; ``Pi(u, v) = coefficient * (h', 0)``."""
    return pr.N * float(np.trapezoid(pr.psi1 * u + pr.psi2 * v, pr.y))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpectralReport:
    mu_alpha: float
    mus: np.ndarray
    lambdas: np.ndarray
    real: np.ndarray
    nu: float
    lambda1: Optional[float]
    edge: float
    psi1: np.ndarray = field(repr=False)
    psi2: np.ndarray = field(repr=False)
    N: float = 0.0
    y: np.ndarray = field(default=None, repr=False)
    c: float = 0.0
    alpha: float = 1.0
    cluster: np.ndarray = field(default=None, repr=False)


def spectral_report(fp: FrontProfile, p: BistablePotential, alpha: float, k: int = 5,
                    dx: float = 0.02, tail_tol: float = 1e-10) -> SpectralReport:
    if k < 2:
        raise ValueError("k must be at least 2")
    c = fp.c_star
    m = p.m
    op = build_L(fp, p, dx, tail_tol=tail_tol)
    mus = top_eigs(op, k)
    mapped = [map_mu_to_lambda(float(mu), alpha, c) for mu in mus]
    nu, lam1 = spectral_gap(mus, alpha, c, m)
    pr = projection_weights(fp, alpha, c, y=op.y, p=p)
    edge = -(m + 0.25 * c * c)
    return SpectralReport(
        mu_alpha=mu_alpha(alpha, m),
        mus=mus,
        lambdas=np.array([lam for lam, _ in mapped]),
        real=np.array([ok for _, ok in mapped]),
        nu=nu,
        lambda1=lam1,
        edge=edge,
        psi1=pr.psi1,
        psi2=pr.psi2,
        N=pr.N,
        y=op.y,
        c=c,
        alpha=float(alpha),
        cluster=mus <= edge,
    )


# ---------------------------------------------------------------------------
# decay-rate experiment


class DecayExperiment(NamedTuple):
    rate: float
    times: np.ndarray
    errors: np.ndarray
    shifts: np.ndarray
    fit_window: tuple


def _bump(z):
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
    return out


def perturbation(fp: FrontProfile, p: BistablePotential, alpha: float, y: np.ndarray,
                 rng: np.random.Generator, amplitude: float, translation: bool = False):
    """Smooth perturbation ``(w, 0)`` in frame variables with its translation part removed.

    ``w`` is a sum of three compact bumps with centres in ``[-6, 4]``, widths in
    ``[1.5, 4]`` and signed weights, scaled to sup-norm ``amplitude``.  With
    ``translation=True`` the pure kernel direction ``amplitude * h'/max|h'|``
    is returned instead.
    """
    pr = projection_weights(fp, alpha, y=y, p=p)
    if translation:
        return amplitude * pr.hprime / np.max(np.abs(pr.hprime)), np.zeros_like(y)
    centres = rng.uniform(-6.0, 4.0, 3)
    widths = rng.uniform(1.5, 4.0, 3)
    weights = rng.uniform(-1.0, 1.0, 3)
    w = sum(a * _bump((y - x0) / wd) for a, x0, wd in zip(weights, centres, widths))
    w *= amplitude / np.max(np.abs(w))
    kappa = projection_coefficient(pr, w, np.zeros_like(w))
    return w - kappa * pr.hprime, np.zeros_like(y)


def decay_rate_experiment(fp: FrontProfile, p: BistablePotential, alpha: float, seed: int = 0,
                          amplitude: float = 1e-3, dx: float = 0.05, T: float = 40.0,
                          fit_start: Optional[float] = None, every: float = 0.5,
                          translation: bool = False) -> DecayExperiment:
    """Measured exponential rate of return to the front family.

    The perturbed and unperturbed fronts are evolved side by side with the
    same stepper.  At each snapshot the difference ``d`` is split into a
    translation ``a * d_x u_ref`` (least squares) and a remainder; the rate is
    the fitted log-slope of ``||remainder||_{H1_ul} + ||remainder_t||_{L2_ul}``.
    Comparing with the unperturbed discrete run removes the O(dx**2)
    mismatch between the discrete travelling wave and ``h``.
    """
    fp = fp.with_alpha(alpha)
    c = fp.c_star
    sigma = fp.stretch
    reach = T / math.sqrt(alpha) + 25.0
    g = Grid1D.from_bounds(-reach, reach + fp.s_star * T, dx)
    prm = EvolveParams.auto(alpha, dx, T)
    base = hyperbolic_front_state(fp, alpha, 0.0, 0.0, g, method="hermite")
    y = sigma * g.x
    rng = np.random.default_rng(seed)
    up, vp = perturbation(fp, p, alpha, y, rng, amplitude, translation)
    # lab velocity: u_t = (frame time derivative) - s u_x, with u_x = sigma d_y
    dup = derivative(up, dx) / sigma
    pert = base.replace(u=base.u + up, ut=base.ut + vp - c * dup)

    ref = Stepper(base, p, prm)
    run = Stepper(pert, p, prm)
    chunk = max(1, prm.nsteps(every))
    total = prm.nsteps(T)
    times, errs, shifts = [], [], []
    while True:
        d = run.u - ref.u
        dt_ = run.ut - ref.ut
        ux = derivative(ref.u, dx)
        uxt = derivative(ref.ut, dx)
        a = float(np.dot(d, ux) / np.dot(ux, ux))
        e = d - a * ux
        et = dt_ - a * uxt
        times.append(ref.t)
        shifts.append(a)
        errs.append(ul_norm(e, dx).h1ul + ul_l2(et, dx))
        if ref.nstep >= total:
            break
        n = min(chunk, total - ref.nstep)
        ref.advance(n)
        run.advance(n)
    times, errs, shifts = np.array(times), np.array(errs), np.array(shifts)
    start = T / 3.0 if fit_start is None else fit_start
    sel = (times >= start) & (errs > 0)
    if np.count_nonzero(sel) < 3:
        raise FitError("not enough samples in the fit window")
    if errs[sel][-1] > 0.1 * errs[sel][0]:
        raise FitError("error decayed by less than one decade over the fit window")
    slope, _ = np.polyfit(times[sel], np.log(errs[sel]), 1)
    return DecayExperiment(float(-slope), times, errs, shifts, (float(start), float(T)))
