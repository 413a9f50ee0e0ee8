"""Command-line interface: ``frontlab <subcommand> [options]``.

Exit codes: 0 pass, 2 configuration error, 3 numerical failure
(blow-up, boundary contamination, failed fit), 4 verdict fail.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import BACKEND
from .config import ConfigError, RunConfig, load_config, parse_config
from .energy import (dissipation, frame, frame_energy, lower_bound, remainder_term)
from .evolve import (BlowUpError, BoundaryContaminationError, CFLError, FitError,
                     SplitState, invasion_point)
from .front import FrontError, solve_front
from .grid import Grid1D, WaveState
from .potential import PotentialError, make_cubic, min_V, supersonic_example, validate
from .runner import (EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_VERDICT, SUPERSONIC_LEVEL,
                     run, sweep)
from .spectrum import spectral_report

log = logging.getLogger("frontlab")


def _floats(text: str) -> tuple:
    try:
        vals = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _g(v: float) -> str:
    return f"{v:.17g}"


def _config(args) -> RunConfig:
    """Config file, then ``--set key=value`` overrides, then the global flags."""
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.set:
        cfg = parse_config("\n".join(args.set), base=cfg)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = str(args.out)
    if changes:
        cfg = parse_config("", base=replace(cfg, **changes))
    return cfg


# ---------------------------------------------------------------------------


def cmd_validate_potential(args) -> int:
    if args.kind == "supersonic":
        p = supersonic_example(args.speed, args.alpha)
    else:
        p = make_cubic(args.theta)
    res = validate(p)
    print(f"kind={p.kind}")
    for key in ("a", "b", "beta0", "beta1", "m", "epsilon0"):
        print(f"{key}={_g(getattr(res, key))}")
    for note in p.notes:
        print(f"note: {note}")
    if not res.ok:
        print(f"FAIL: {res.failure}")
        return EXIT_VERDICT
    print("OK")
    return EXIT_OK


def cmd_front(args) -> int:
    p = make_cubic(args.theta)
    fp = solve_front(p, args.tol, alpha=args.alpha)
    out = Path(args.out or "front.csv")
    with out.open("w", newline="") as fh:
        fh.write(f"# c_star={_g(fp.c_star)} s_star={_g(fp.s_star)} c_h={_g(fp.c_h)}\n")
        w = csv.writer(fh)
        w.writerow(["y", "h", "hprime"])
        for row in zip(fp.y, fp.h, fp.hprime):
            w.writerow([_g(v) for v in row])
    print(f"c_star={_g(fp.c_star)} s_star={_g(fp.s_star)} -> {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    rep = run(cfg, with_spectrum=False)
    print(f"s_measured={_g(rep.s_inf)} s_star={_g(rep.s_star)} -> {cfg.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    rep = run(cfg)
    for k, v in rep.rows():
        print(f"{k}={v}")
    return rep.exit_code


def _read_split(path: Path) -> SplitState:
    meta = {}
    with path.open() as fh:
        head = fh.readline()
        for tok in head.lstrip("#").split():
            k, _, v = tok.partition("=")
            meta[k] = float(v)
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    g = Grid1D(meta["x_left"], meta["dx"], data.shape[0])
    t = meta["t"]
    v = WaveState(g, data[:, 1], data[:, 2], t=t, far_left=1.0, far_right=0.0)
    r = WaveState(g, data[:, 3], data[:, 4], t=t, far_left=0.0, far_right=0.0)
    return SplitState(v, r, meta["xi0"])


def cmd_energy(args) -> int:
    traj = Path(args.traj)
    cfg_path = traj / "effective.cfg"
    if not cfg_path.exists():
        raise ConfigError(f"{cfg_path} not found: --traj must be a simulate/run output directory")
    cfg = load_config(cfg_path)
    files = sorted(traj.glob("split_t*.csv"), key=lambda f: _read_split_time(f))
    if not files:
        raise ConfigError(f"no split_t*.csv snapshots in {traj}")
    if cfg.kind == "cubic":
        p = make_cubic(cfg.theta)
        eps0 = validate(p).epsilon0
    else:
        p = supersonic_example(cfg.speed, cfg.alpha)
        eps0 = SUPERSONIC_LEVEL
    vmin = min_V(p) if cfg.kind == "cubic" else float(np.min(p.V(np.linspace(-2, 3, 5001))))
    c_list = args.c_list or cfg.c_list
    out = Path(args.out or traj / "energy.csv")
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "c", "E_at_invasion", "D", "R", "lower_bound"])
        for f in files:
            ss = _read_split(f)
            xb = invasion_point(ss.v, eps0, margin=0.0)
            for c in c_list:
                fr = frame(c, cfg.alpha)
                if math.isfinite(xb):
                    vals = (frame_energy(ss.v, fr, xb, p), dissipation(ss.v, fr, xb),
                            remainder_term(ss, fr, xb, p), lower_bound(fr, eps0, vmin, xb, xb))
                else:
                    vals = (float("nan"),) * 4
                w.writerow([_g(ss.t), _g(c)] + [_g(v) for v in vals])
    print(f"{len(files)} snapshots x {len(c_list)} speeds -> {out}")
    return EXIT_OK


def _read_split_time(path: Path) -> float:
    with path.open() as fh:
        for tok in fh.readline().lstrip("#").split():
            if tok.startswith("t="):
                return float(tok[2:])
    return math.inf


def cmd_spectrum(args) -> int:
    p = make_cubic(args.theta)
    fp = solve_front(p, 1e-10, alpha=args.alpha)
    rep = spectral_report(fp, p, args.alpha, k=args.k, dx=args.dx)
    out = Path(args.out or "spectrum.csv")
    with out.open("w", newline="") as fh:
        fh.write(f"# mu_alpha={_g(rep.mu_alpha)} nu={_g(rep.nu)} c_star={_g(rep.c)}\n")
        w = csv.writer(fh)
        w.writerow(["index", "mu", "lambda"])
        # for a complex pair the lambda column holds the common real part
        for i, (mu, lam) in enumerate(zip(rep.mus, rep.lambdas)):
            w.writerow([i, _g(mu), _g(lam)])
    print(f"mu_alpha={_g(rep.mu_alpha)} nu={_g(rep.nu)} -> {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = Path(args.out or cfg.out)
    path = sweep(cfg, args.alphas, args.thetas, out, jobs=args.jobs)
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    bad = [r for r in rows if r["status"] != "pass"]
    print(f"{len(rows)} cells, {len(bad)} not passing -> {path}")
    if any(r["status"].startswith("error") for r in bad):
        return EXIT_NUMERICAL
    return EXIT_VERDICT if bad else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value configuration file")
    common.add_argument("--out", type=Path, help="output file or directory")
    common.add_argument("--seed", type=int, help="seed for randomized perturbations")
    common.add_argument("--jobs", type=int, help="worker processes (default: $FRONTLAB_JOBS or 1)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one configuration entry (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="frontlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"frontlab ({BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate-potential", parents=[common],
                        help="check the bistable hypotheses and print the constants")
    sp.add_argument("--kind", choices=("cubic", "supersonic"), default="cubic")
    sp.add_argument("--theta", type=float, default=0.25)
    sp.add_argument("--speed", type=float, default=2.0)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.set_defaults(func=cmd_validate_potential)

    sp = sub.add_parser("front", parents=[common], help="compute the travelling front")
    sp.add_argument("--theta", type=float, default=0.25)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_front)

    sp = sub.add_parser("simulate", parents=[common], help="evolve and write the trajectory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("run", parents=[common], help="simulate and judge convergence")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("energy", parents=[common], help="energy diagnostics of a trajectory")
    sp.add_argument("--traj", type=Path, required=True)
    sp.add_argument("--c-list", type=_floats, default=None)
    sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("spectrum", parents=[common], help="spectrum of the linearised operator")
    sp.add_argument("--theta", type=float, default=0.25)
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--k", type=int, default=5)
    sp.add_argument("--dx", type=float, default=0.02)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("sweep", parents=[common], help="runs over an (alpha, theta) grid")
    sp.add_argument("--alphas", type=_floats, default=(0.25, 1.0, 4.0))
    sp.add_argument("--thetas", type=_floats, default=(0.25,))
    sp.set_defaults(func=cmd_sweep)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, CFLError, PotentialError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, BoundaryContaminationError, FitError, FrontError) as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
