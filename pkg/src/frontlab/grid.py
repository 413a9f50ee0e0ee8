"""Uniform 1-D grids, wave states, quadrature and uniformly local norms."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = [
    "Grid1D",
    "WaveState",
    "UlNorm",
    "trapezoid",
    "derivative",
    "ul_l2",
    "ul_norm",
    "energy_space_norm2",
    "pinching_defect",
    "weighted_integral",
    "write_state_csv",
    "read_state_csv",
]

# exp(700) is close to the largest finite double
MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class Grid1D:
    x_left: float
    dx: float
    n: int

    def __post_init__(self):
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if self.n < 3:
            raise ValueError("a grid needs at least 3 nodes")

    @classmethod
    def from_bounds(cls, x_left: float, x_right: float, dx: float) -> "Grid1D":
        n = int(round((x_right - x_left) / dx)) + 1
        return cls(float(x_left), float(dx), n)

    @property
    def x_right(self) -> float:
        return self.x_left + (self.n - 1) * self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x_left + self.dx * np.arange(self.n)

    @property
    def length(self) -> float:
        return (self.n - 1) * self.dx

    def index_of(self, x: float) -> int:
        """Nearest node index, clipped to the grid."""
        return int(np.clip(round((x - self.x_left) / self.dx), 0, self.n - 1))


@dataclass(frozen=True)
class WaveState:
    """Displacement ``u`` and velocity ``ut`` sampled on ``grid`` at time ``t``."""

    grid: Grid1D
    u: np.ndarray = field(repr=False)
    ut: np.ndarray = field(repr=False)
    t: float = 0.0
    far_left: float = 1.0
    far_right: float = 0.0

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        ut = np.array(self.ut, dtype=float)
        if u.shape != (self.grid.n,) or ut.shape != (self.grid.n,):
            raise ValueError(f"arrays must have length {self.grid.n}")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(ut))):
            raise ValueError("state contains non-finite values")
        u.flags.writeable = False
        ut.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "ut", ut)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def replace(self, **changes) -> "WaveState":
        kw = dict(grid=self.grid, u=self.u, ut=self.ut, t=self.t,
                  far_left=self.far_left, far_right=self.far_right)
        kw.update(changes)
        return WaveState(**kw)


@dataclass(frozen=True)
class UlNorm:
    l2ul: float
    h1ul: float
    window: float = 1.0


def trapezoid(f: np.ndarray, dx: float) -> float:
    return float(np.trapezoid(f, dx=dx))


def derivative(f: np.ndarray, dx: float) -> np.ndarray:
    """Second-order centred differences, one-sided second order at the ends."""
    return np.gradient(np.asarray(f, dtype=float), dx, edge_order=2)


def _window_integrals(f2: np.ndarray, dx: float, window: float) -> np.ndarray:
    """Trapezoid integrals of ``f2`` over every window of ``window`` length (one-cell sliding)."""
    w = int(round(window / dx))
    if w < 1:
        raise ValueError("window must be at least one grid cell")
    if w > len(f2) - 1:
        raise ValueError("window exceeds the domain length")
    cum = np.concatenate(([0.0], np.cumsum(0.5 * dx * (f2[1:] + f2[:-1]))))
    return cum[w:] - cum[:-w]


def ul_l2(f: np.ndarray, dx: float, window: float = 1.0) -> float:
    """Uniformly local L2 norm: sup over windows of the local L2 norm."""
    f = np.asarray(f, dtype=float)
    return float(np.sqrt(max(np.max(_window_integrals(f * f, dx, window)), 0.0)))


def ul_norm(f: np.ndarray, dx: float, window: float = 1.0) -> UlNorm:
    """Both uniformly local norms of a sampled function (H1 uses ``f**2 + f_x**2``)."""
    f = np.asarray(f, dtype=float)
    fx = derivative(f, dx)
    l2 = ul_l2(f, dx, window)
    h1 = float(np.sqrt(max(np.max(_window_integrals(f * f + fx * fx, dx, window)), 0.0)))
    return UlNorm(l2ul=l2, h1ul=max(h1, l2), window=window)


def energy_space_norm2(u: np.ndarray, ut: np.ndarray, dx: float, window: float = 1.0) -> float:
    """``||u||_{H1_ul}**2 + ||ut||_{L2_ul}**2``."""
    return ul_norm(u, dx, window).h1ul ** 2 + ul_l2(ut, dx, window) ** 2


def pinching_defect(s: WaveState, margin: float, window: float = 1.0) -> tuple[float, float]:
    """Finite-domain surrogate for the far-field conditions on ``(u, ut)``.

    Returns ``(left, right)``: the largest integral of
    ``(u - 1)**2 + u_x**2 + ut**2`` (left) or ``u**2 + u_x**2 + ut**2`` (right)
    over unit windows lying within ``margin`` of the corresponding boundary.
    """
    g = s.grid
    if not margin < 0.5 * g.length:
        raise ValueError("margin must be less than half the domain length")
    dx = g.dx
    ux = derivative(s.u, dx)
    w = int(round(window / dx))
    m = int(round(margin / dx))
    right_density = s.u ** 2 + ux ** 2 + s.ut ** 2
    left_density = (s.u - 1.0) ** 2 + ux ** 2 + s.ut ** 2
    right = _window_integrals(right_density, dx, window)
    left = _window_integrals(left_density, dx, window)
    # window k covers nodes [k, k + w]
    start_right = min(max(g.n - 1 - m, 0), g.n - 1 - w)
    last_left = max(m - w, 0)
    return float(np.max(left[: last_left + 1])), float(np.max(right[start_right:]))


def weighted_integral(f: np.ndarray, grid: Grid1D, c: float, anchor: float) -> float:
    """Trapezoid value of ``int exp(c (y - anchor)) f(y) dy``.

    The exponent is taken relative to ``anchor``; nodes whose exponent would
    overflow must carry ``f == 0`` there.
    """
    if c < 0:
        raise ValueError("weight exponent must be non-negative")
    f = np.asarray(f, dtype=float)
    expo = c * (grid.x - anchor)
    big = expo > MAX_EXPONENT
    if np.any(big):
        if np.any(f[big] != 0.0):
            raise OverflowError(
                f"weight exp({float(np.max(expo)):.1f}) overflows where the integrand is nonzero"
            )
        weighted = np.zeros_like(f)
        ok = ~big
        weighted[ok] = np.exp(expo[ok]) * f[ok]
    else:
        weighted = np.exp(expo) * f
    return trapezoid(weighted, grid.dx)


def write_state_csv(path, s: WaveState, extra: Optional[dict] = None) -> None:
    """CSV with columns ``x,u,ut`` (17 significant digits) and a ``#`` metadata line."""
    path = Path(path)
    meta = {"t": s.t, "far_left": s.far_left, "far_right": s.far_right,
            "x_left": s.grid.x_left, "dx": s.grid.dx}
    if extra:
        meta.update(extra)
    with path.open("w", newline="") as fh:
        fh.write("# " + " ".join(f"{k}={_fmt(v)}" for k, v in meta.items()) + "\n")
        w = csv.writer(fh)
        w.writerow(["x", "u", "ut"])
        for row in zip(s.grid.x, s.u, s.ut):
            w.writerow([_fmt(v) for v in row])


def read_state_csv(path) -> WaveState:
    path = Path(path)
    meta = {}
    with path.open() as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for tok in line[1:].split():
                k, _, v = tok.partition("=")
                meta[k] = v
        else:
            body.append(line)
    rows = list(csv.reader(body))
    if rows[0] != ["x", "u", "ut"]:
        raise ValueError(f"{path}: expected header x,u,ut")
    data = np.array(rows[1:], dtype=float)
    x = data[:, 0]
    grid = Grid1D(float(meta.get("x_left", x[0])), float(meta.get("dx", x[1] - x[0])), len(x))
    return WaveState(grid, data[:, 1], data[:, 2], t=float(meta.get("t", 0.0)),
                     far_left=float(meta.get("far_left", 1.0)),
                     far_right=float(meta.get("far_right", 0.0)))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"
