"""Plain-text ``key = value`` run configuration.

Lines starting with ``#`` and blank lines are ignored.  Keys may carry the
section prefix used in the documentation (``potential.theta``) or the short
form (``theta``).  Unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

__all__ = ["RunConfig", "ConfigError", "load_config", "parse_config", "dump_config",
           "write_config", "auto_bounds", "check_config"]

RECIPES = ("front", "step", "front+perturbation", "csv")
KINDS = ("cubic", "supersonic")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is the offending line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class RunConfig:
    kind: str = "cubic"
    theta: float = 0.25
    speed: float = 2.0  # only for kind = supersonic
    alpha: float = 1.0
    dx: float = 0.05
    dt: Optional[float] = None  # None: 0.9 sqrt(alpha) dx
    T: float = 200.0
    x_left: Optional[float] = None
    x_right: Optional[float] = None
    initial: str = "step"
    x0: float = 0.0
    amplitude: float = 1e-3
    csv: Optional[str] = None
    xi0: Optional[float] = None
    trace_every: float = 0.5
    snapshot_every: float = 50.0
    c_list: tuple = (0.25, 0.3535, 0.5, 0.8)
    margin: float = 1.0
    speed_tol: float = 0.01
    out: str = "out"
    seed: int = 0

    @property
    def dt_effective(self) -> float:
        return 0.9 * math.sqrt(self.alpha) * self.dx if self.dt is None else self.dt


_ALIASES = {
    "potential.kind": "kind",
    "potential.theta": "theta",
    "potential.s": "speed",
    "potential.speed": "speed",
    "grid.x_left": "x_left",
    "grid.x_right": "x_right",
    "grid.dx": "dx",
    "initial.recipe": "initial",
    "initial.x0": "x0",
    "initial.amplitude": "amplitude",
    "initial.csv": "csv",
    "energy.c_list": "c_list",
}

_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(name: str, raw: str):
    raw = raw.strip()
    if name in ("kind", "initial", "out"):
        return raw
    if name == "csv":
        return raw or None
    if name == "seed":
        return int(raw)
    if name == "c_list":
        return tuple(float(tok) for tok in raw.replace(" ", "").split(",") if tok)
    if name in ("dt", "xi0", "x_left", "x_right") and raw.lower() in ("auto", "none", ""):
        return None
    return float(raw)


def parse_config(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, raw = stripped.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {stripped!r}", lineno)
        key = key.strip()
        name = _ALIASES.get(key, key)
        if name not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        try:
            values[name] = _convert(name, raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
    cfg = replace(base or RunConfig(), **values)
    check_config(cfg)
    return cfg


def check_config(cfg: RunConfig) -> None:
    """Validate ranges, the CFL rule and the domain sizing rule."""
    if cfg.kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}")
    if cfg.initial not in RECIPES:
        raise ConfigError(f"initial must be one of {RECIPES}")
    if cfg.initial == "csv" and not cfg.csv:
        raise ConfigError("initial = csv needs csv = <path>")
    if cfg.kind == "cubic" and not 0.0 < cfg.theta < 0.5:
        raise ConfigError(f"theta={cfg.theta} outside (0, 1/2)")
    if not cfg.alpha > 0:
        raise ConfigError("alpha must be positive")
    if not (cfg.dx > 0 and cfg.T > 0):
        raise ConfigError("dx and T must be positive")
    if cfg.dt is not None:
        limit = 0.9 * math.sqrt(cfg.alpha) * cfg.dx
        if not 0 < cfg.dt <= limit * (1.0 + 1e-12):
            raise ConfigError(f"CFL rule violated: dt={cfg.dt:g} > 0.9*sqrt(alpha)*dx={limit:g}")
    if not (cfg.trace_every > 0 and cfg.snapshot_every > 0):
        raise ConfigError("trace_every and snapshot_every must be positive")
    if not cfg.c_list or any(not c > 0 for c in cfg.c_list):
        raise ConfigError("c_list must contain positive values")
    if cfg.initial != "csv":
        lo, hi = auto_bounds(cfg)
        if cfg.x_left is not None and cfg.x_left > lo + 1e-9:
            raise ConfigError(f"domain sizing rule: x_left={cfg.x_left:g} must be <= {lo:g}")
        if cfg.x_right is not None and cfg.x_right < hi - 1e-9:
            raise ConfigError(f"domain sizing rule: x_right={cfg.x_right:g} must be >= {hi:g}")


def default_xi0(cfg: RunConfig) -> float:
    """Cutoff location for the built-in recipes (front / step placed at ``x0``)."""
    return cfg.x0 + 5.0 if cfg.xi0 is None else cfg.xi0


def auto_bounds(cfg: RunConfig):
    """Smallest domain obeying the sizing rule for the built-in recipes.

    ``x_right >= xi0 + T/sqrt(alpha) + 20`` and ``x_left <= x0 - T/sqrt(alpha) - 20``.
    For the supersonic potential the right end also outruns the exact
    solution's front and the information cone of the clamped boundary.
    """
    reach = cfg.T / math.sqrt(cfg.alpha)
    hi = default_xi0(cfg) + reach + 20.0
    if cfg.kind == "supersonic":
        hi = max(hi, cfg.x0 + cfg.speed * cfg.T + reach + 20.0)
    return cfg.x0 - reach - 20.0, hi


def load_config(path, **overrides) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    cfg = parse_config(text)
    if overrides:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
        check_config(cfg)
    return cfg


def _fmt(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, tuple):
        return ",".join(f"{x:.17g}" for x in v)
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    lines = ["# effective configuration"]
    for k, v in asdict(cfg).items():
        if k == "csv" and v is None:
            continue
        lines.append(f"{k} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


def write_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))
