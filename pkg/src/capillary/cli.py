"""Command-line entry point: `cap <command> [flags]`.

Commands: solve, stability, minmax, constants, barrier, verify.  Flags may
also be given in a flat key=value config file (--config); explicit flags
override file values.  All angles are radians.  Reports land in the output
directory as report.json plus OFF/CAPREG/CSV artifacts; floating-point values
are printed at 12 significant digits so identical configs give byte-identical
outputs.  Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ambient import domain_from_config
from .energy import EnergyParams
from .errors import CapillaryError, ConfigError

log = logging.getLogger("cap")


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _setup_logging():
    level = {"quiet": logging.WARNING, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("CAP_LOG", "info"), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")


def _read_config(path: str) -> dict:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line: {raw!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"cap {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--domain", type=str, default="halfspace",
                       choices=["halfspace", "ball", "slab"])
        p.add_argument("--slab-height", type=float, default=1.0)
        p.add_argument("--theta", type=float, default=np.pi / 2)
        p.add_argument("--c", type=float, default=0.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", type=str, default="cap_out")

    p = sub.add_parser("solve", help="relax a seed cap to a capillary critical point")
    common(p)
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--seed-cap", type=float, default=1.0, help="seed cap radius")
    p.add_argument("--perturb", type=float, default=0.0, help="radial noise amplitude")
    p.add_argument("--max-iter", type=int, default=4000)
    p.add_argument("--tol-grad", type=float, default=None)
    p.add_argument("--volume-lock", action="store_true", default=True)
    p.add_argument("--no-volume-lock", dest="volume_lock", action="store_false")

    p = sub.add_parser("stability", help="Jacobi spectrum of a critical mesh")
    common(p)
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--surface", type=str, default="cap", choices=["cap", "disk"])
    p.add_argument("--seed-cap", type=float, default=1.0)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--morse-tol", type=float, default=None)
    p.add_argument("--volume-constrained", action="store_true")

    p = sub.add_parser("minmax", help="mountain-pass width over a sweepout")
    common(p)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--nodes", type=int, default=33)
    p.add_argument("--height", type=str, default="x3", choices=["x3", "radial"])
    p.add_argument("--outer-iters", type=int, default=60)

    p = sub.add_parser("constants", help="stable-Bernstein constants over a theta grid")
    common(p)
    p.add_argument("--n", type=int, default=3, choices=[2, 3, 4, 5])
    p.add_argument("--theta-grid", type=int, default=64,
                   help="number of grid intervals; the midpoint pi/2 is a row")
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)

    p = sub.add_parser("barrier", help="cap-barrier foliation table")
    common(p)
    p.add_argument("--s-min", type=float, default=0.05)
    p.add_argument("--s-max", type=float, default=0.5)
    p.add_argument("--s-count", type=int, default=10)
    p.add_argument("--gamma-count", type=int, default=9)
    p.add_argument("--mu", type=float, default=None)

    p = sub.add_parser("verify", help="fast built-in sanity battery")
    common(p)
    p.add_argument("--level", type=int, default=3)
    return ap


def _apply_config(args):
    if getattr(args, "config", None):
        file_vals = _read_config(args.config)
        defaults = _build_parser().parse_args([args.command])
        for key, val in file_vals.items():
            if not hasattr(args, key):
                raise ConfigError(f"unknown config key {key!r}")
            cur = getattr(args, key)
            if cur == getattr(defaults, key, None):
                kind = type(cur) if cur is not None else str
                if kind is bool:
                    setattr(args, key, val.lower() in ("1", "true", "yes"))
                elif kind is type(None):
                    setattr(args, key, float(val))
                else:
                    setattr(args, key, kind(val))
    if not 0.0 < args.theta < np.pi:
        raise ConfigError("theta must lie in (0, pi)")
    if getattr(args, "level", 0) > 7:
        raise ConfigError("mesh level capped at 7")
    if getattr(args, "grid", 0) > 128:
        raise ConfigError("grid capped at 128^3")
    return args


def _write_report(outdir: Path, payload: dict) -> None:
    outdir.mkdir(parents=True, exist_ok=True)

    def conv(x):
        if isinstance(x, (np.floating, float)):
            return float(f"{float(x):.12g}")
        if isinstance(x, (np.integer,)):
            return int(x)
        if isinstance(x, np.ndarray):
            return [conv(v) for v in x.tolist()]
        if isinstance(x, dict):
            return {k: conv(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [conv(v) for v in x]
        return x

    (outdir / "report.json").write_text(json.dumps(conv(payload), indent=2,
                                                   sort_keys=True) + "\n")


def _cmd_solve(args) -> int:
    from .mesh import make_spherical_cap, write_off
    from .solver import RelaxOptions, relax

    domain = domain_from_config(args.domain, args.slab_height)
    params = EnergyParams(c=args.c, theta=args.theta)
    mesh = make_spherical_cap(domain, args.theta, args.seed_cap, level=args.level)
    if args.perturb:
        rng = np.random.default_rng(args.seed)
        xi = rng.standard_normal(len(mesh.vertices))
        adj = mesh.adjacency()
        for _ in range(3):
            xi = np.array([0.5 * xi[i] + 0.5 * xi[nb].mean() if len(nb) else xi[i]
                           for i, nb in enumerate(adj)])
        xi *= args.perturb / np.abs(xi).max()
        center = np.array([0.0, 0.0, args.seed_cap * np.cos(args.theta)])
        v = center + (mesh.vertices - center) * (1.0 + xi)[:, None]
        v[mesh.wall_vertices] = domain.project_to_wall(v[mesh.wall_vertices])
        mesh = mesh.replace_vertices(v)
    rep = relax(mesh, domain, params,
                RelaxOptions(max_iter=args.max_iter, tol_grad=args.tol_grad,
                             volume_lock=args.volume_lock))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_off(rep.final_mesh, out / "surface.off")
    payload = {
        "command": "solve",
        "finalEnergy": rep.final_energy,
        "gradNorm": rep.gradient_norm,
        "hResidual": rep.residuals.max_mean_curvature_residual,
        "angleResidual": rep.residuals.max_angle_residual,
        "densityClasses": rep.residuals.boundary_density_class,
        "iterations": rep.iterations,
        "converged": bool(rep.converged),
    }
    _write_report(out, payload)
    log.info("solve: E=%s gradNorm=%s hResidual=%s angleResidual=%s",
             _fmt(rep.final_energy), _fmt(rep.gradient_norm),
             _fmt(rep.residuals.max_mean_curvature_residual),
             _fmt(rep.residuals.max_angle_residual))
    return 0 if rep.converged else 3


def _cmd_stability(args) -> int:
    import warnings

    from .mesh import make_flat_disk, make_spherical_cap
    from .stability import jacobi_form, spectrum

    domain = domain_from_config(args.domain, args.slab_height)
    params = EnergyParams(c=args.c, theta=args.theta)
    if args.surface == "disk":
        if domain.kind != "ball":
            raise ConfigError("the disk surface lives in the ball domain")
        mesh = make_flat_disk(domain, level=args.level)
    else:
        mesh = make_spherical_cap(domain, args.theta, args.seed_cap, level=args.level)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        form = jacobi_form(mesh, domain, params)
    rep = spectrum(form, k=args.k, tol=args.morse_tol,
                   volume_constrained=args.volume_constrained)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "spectrum.csv", "w") as fh:
        fh.write("index,eigenvalue\n")
        for i, lam in enumerate(rep.eigenvalues):
            fh.write(f"{i},{_fmt(lam)}\n")
    _write_report(out, {
        "command": "stability",
        "eigenvalues": list(rep.eigenvalues),
        "morseIndex": rep.morse_index,
        "tol": rep.tol,
    })
    log.info("stability: lambda1=%s morseIndex=%d", _fmt(rep.eigenvalues[0]),
             rep.morse_index)
    return 0


def _cmd_minmax(args) -> int:
    from .mesh import write_off
    from .minmax import MountainPassOptions, mountain_pass, sweep_from_morse
    from .region import write_capreg

    domain = domain_from_config(args.domain, args.slab_height)
    params = EnergyParams(c=args.c, theta=args.theta)
    sweep = sweep_from_morse(domain, args.height, m=args.nodes, grid=args.grid)
    rep = mountain_pass(sweep, domain, params,
                        MountainPassOptions(outer_iters=args.outer_iters))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "history.csv", "w") as fh:
        fh.write("iter,width,argmax\n")
        for row in rep.history:
            fh.write(f"{row[0]},{_fmt(row[1])},{row[2]}\n")
    write_capreg(rep.critical_region, out / "critical.capreg")
    if rep.extracted_mesh is not None:
        write_off(rep.extracted_mesh, out / "critical.off")
    payload = {
        "command": "minmax",
        "width": rep.width,
        "argmaxIndex": rep.argmax_index,
    }
    if rep.residuals is not None:
        payload["hResidual"] = rep.residuals.max_mean_curvature_residual
        payload["angleResidual"] = rep.residuals.max_angle_residual
    _write_report(out, payload)
    log.info("minmax: width=%s argmax=%d", _fmt(rep.width), rep.argmax_index)
    return 0


def _cmd_constants(args) -> int:
    from .bernstein import SSYInput, admissible_range, constants

    rng = admissible_range(args.n)
    lo, hi = rng.theta_interval
    g = args.theta_grid
    margin = 0.02
    thetas = [margin + (np.pi - 2 * margin) * k / g for k in range(g + 1)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "constants.csv", "w") as fh:
        fh.write("theta,Ctheta,cNtheta,B,admissible\n")
        for th in thetas:
            cs = constants(SSYInput(args.n, th, args.q, args.a, args.b))
            adm = int(lo < th < hi)
            fh.write(f"{_fmt(th)},{_fmt(cs.c_theta)},{_fmt(cs.c_n_theta)},"
                     f"{_fmt(cs.b_value)},{adm}\n")
    _write_report(out, {
        "command": "constants",
        "n": args.n,
        "thetaInterval": [lo, hi],
        "witness": {"q": rng.witness_q, "a": rng.witness_a, "b": rng.witness_b,
                    "p": rng.witness_p},
        "cThreshold": rng.c_threshold,
    })
    log.info("constants: n=%d interval=(%s, %s)", args.n, _fmt(lo), _fmt(hi))
    return 0


def _cmd_barrier(args) -> int:
    from .foliation import barrier_report, cap_barrier, default_mu

    domain = domain_from_config("halfspace")
    params = EnergyParams(c=args.c, theta=args.theta)
    mu = args.mu if args.mu is not None else default_mu(args.theta)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    with open(out / "barrier.csv", "w") as fh:
        fh.write("s,gamma,alpha,hBound,maxAngle\n")
        for s in np.linspace(args.s_min, args.s_max, args.s_count):
            for g in np.linspace(args.theta, np.pi / 2, args.gamma_count):
                b = cap_barrier(s, g, mu, np.zeros(3), domain, theta=args.theta)
                rep = barrier_report(b, params)
                fh.write(f"{_fmt(s)},{_fmt(g)},{_fmt(b.alpha)},{_fmt(b.h_bound)},"
                         f"{_fmt(rep.max_contact_angle)}\n")
                rows.append((s, g, b.h_bound, rep.foliation_ordered))
    _write_report(out, {
        "command": "barrier",
        "mu": mu,
        "rows": len(rows),
        "allOrdered": bool(all(r[3] for r in rows)),
    })
    return 0


def _cmd_verify(args) -> int:
    """Small smoke battery: one line per check."""
    from .mesh import make_spherical_cap, measures
    from .oracles import CapOracle
    from .bernstein import constants, SSYInput
    from .region import make_region, region_energy

    checks = []
    domain = domain_from_config("halfspace")
    m = make_spherical_cap(domain, np.pi / 2, 1.0, level=args.level)
    mm = measures(m, domain)
    checks.append(("hemisphere area 2pi", abs(mm.area / (2 * np.pi) - 1) < 0.01))
    o = CapOracle(np.pi / 3, 1.0)
    p3 = EnergyParams(c=2.0, theta=np.pi / 3)
    m3 = make_spherical_cap(domain, np.pi / 3, 1.0, level=args.level)
    from .energy import capillary_energy

    checks.append(("cap energy oracle", abs(capillary_energy(m3, domain, p3)
                                            / o.energy_at(2.0) - 1) < 0.01))
    checks.append(("B(3, pi/2) = 2/3",
                   abs(constants(SSYInput(3, np.pi / 2)).b_value - 2.0 / 3.0) < 1e-12))
    ball = domain_from_config("ball")
    r = make_region(ball, n=32)
    r.occupancy[:] = r.mask
    re = region_energy(r, ball, EnergyParams(c=0.0, theta=np.pi / 3))
    checks.append(("region wall area 4pi", abs(re.split.wall_area / (4 * np.pi) - 1) < 0.01))
    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok &= passed
    _write_report(Path(args.out), {"command": "verify",
                                   "passed": int(sum(p for _, p in checks)),
                                   "total": len(checks)})
    return 0 if ok else 3


_COMMANDS = {
    "solve": _cmd_solve,
    "stability": _cmd_stability,
    "minmax": _cmd_minmax,
    "constants": _cmd_constants,
    "barrier": _cmd_barrier,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = _build_parser().parse_args(argv)
        args = _apply_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapillaryError as exc:
        out = Path(getattr(args, "out", "cap_out"))
        _write_report(out, {"command": args.command, "error": type(exc).__name__,
                            "message": str(exc)})
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
