"""Command-line front end: profile configs in, CSV/JSON/gnuplot artifacts out.

Commands
--------
simulate     integrate one run and dump the full trajectory table
phases       phase budget for a quasi-stationary run (prints the 2x diagnostic)
convergence  truncation-order study over a list of adiabaticity scales
stokes       line-vs-surface holonomy table for parameter-plane loops
timescale    first breakdown time of the second-order phase

Exit codes: 0 success, 2 usage, 3 config, 4 I/O, 5 numerical failure.
Numbers are serialized with 17 significant digits; CSV is the machine
interface, the gnuplot script the human one.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import verification
from .errors import ConfigError, IoError, SpinPhaseError
from .exact_dynamics import (
    IntegratorConfig,
    bloch_series,
    bloch_to_spinor,
    extract_total_phase,
    integrate_bloch,
    integrate_schrodinger,
    spinor_to_bloch,
)
from .field_profiles import (
    FieldProfile,
    is_in_plane,
    profile_from_dict,
    profile_to_dict,
    sample,
)
from . import field_profiles
from .adiabatic_engine import tracked_eigenvector
from .geometric_phases import loop_from_profile

OUT_DIR_ENV = "SPINPHASE_OUT_DIR"
FORMATS = ("csv", "json", "gnuplot")
_KIND_ALIASES = {
    "sinusoidal": "sinusoidal_angle",
    "polynomial": "polynomial_angle",
    "cone": "cone_3d",
}


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class RunConfig:
    """Validated description of one CLI run; JSON round-trippable."""

    command: str
    profile: FieldProfile | None
    integrator: IntegratorConfig
    output_dir: str
    formats: tuple[str, ...]
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "command": self.command,
            "integrator": {
                "rel_tol": self.integrator.rel_tol,
                "abs_tol": self.integrator.abs_tol,
            },
            "output_dir": self.output_dir,
            "formats": list(self.formats),
            "params": dict(self.params),
        }
        if math.isfinite(self.integrator.max_step):
            d["integrator"]["max_step"] = self.integrator.max_step
        if self.profile is not None:
            d["profile"] = profile_to_dict(self.profile)
        return d

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        try:
            command = d["command"]
        except (KeyError, TypeError):
            raise ConfigError("run config must name a command") from None
        if command not in ("simulate", "phases", "convergence", "stokes", "timescale"):
            raise ConfigError(f"unknown command {command!r}")
        integ = d.get("integrator", {})
        integrator = IntegratorConfig(
            rel_tol=float(integ.get("rel_tol", 1e-10)),
            abs_tol=float(integ.get("abs_tol", 1e-12)),
            max_step=float(integ.get("max_step", math.inf)),
        )
        formats = tuple(d.get("formats", ("csv", "json")))
        for f in formats:
            if f not in FORMATS:
                raise ConfigError(f"unknown output format {f!r}")
        profile = profile_from_dict(d["profile"]) if "profile" in d else None
        return RunConfig(
            command=command,
            profile=profile,
            integrator=integrator,
            output_dir=str(d.get("output_dir", _default_out_dir())),
            formats=formats,
            params=dict(d.get("params", {})),
        )


def _default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV, ".")


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="JSON run configuration file")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument(
        "--formats", default="csv,json", help="comma list from csv,json,gnuplot ('' for none)"
    )
    sub.add_argument("--rel-tol", type=float, default=1e-10)
    sub.add_argument("--abs-tol", type=float, default=1e-12)
    sub.add_argument("--max-step", type=float, default=math.inf)


def _add_profile_flags(sub: argparse.ArgumentParser):
    sub.add_argument("--profile", default="uniform_rotation", help="field profile kind")
    sub.add_argument("--B0", type=float, default=1.0)
    sub.add_argument("--omega", type=float, default=0.1, help="rotation rate (uniform_rotation)")
    sub.add_argument("--theta0", type=float, default=0.3, help="angle amplitude (sinusoidal)")
    sub.add_argument("--Omega", type=float, default=0.05, help="angle frequency (sinusoidal)")
    sub.add_argument("--theta-init", type=float, default=0.0)
    sub.add_argument("--theta-c", type=float, default=math.pi / 3, help="cone polar angle")
    sub.add_argument("--omega-phi", type=float, default=0.05, help="cone azimuth rate")
    sub.add_argument("--coeffs", default="0,0.1", help="polynomial angle coefficients c0,c1,...")
    sub.add_argument("--epsilon", type=float, default=1.0, help="adiabaticity scale")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spinphase",
        description="Spin-1/2 evolution in a slowly varying magnetic field: "
        "solutions, phase corrections, and verification runs.",
    )
    subs = p.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="integrate and export one trajectory")
    _add_common(sim)
    _add_profile_flags(sim)
    sim.add_argument("--t-start", type=float, default=0.0)
    sim.add_argument("--t-end", type=float, default=None)
    sim.add_argument("--grid-n", type=int, default=None, help="output grid size")

    ph = subs.add_parser("phases", help="phase budget on the quasi-stationary branch")
    _add_common(ph)
    _add_profile_flags(ph)
    ph.add_argument("--t-start", type=float, default=0.0)
    ph.add_argument("--t-end", type=float, default=None)

    cv = subs.add_parser("convergence", help="truncation-order study")
    _add_common(cv)
    cv.add_argument("--eps", default="0.16,0.08,0.04,0.02", help="comma list of scales")
    cv.add_argument("--profile", default="sinusoidal")
    cv.add_argument("--theta0", type=float, default=0.3)
    cv.add_argument("--Omega", type=float, default=1.0)
    cv.add_argument("--B0", type=float, default=1.0)
    cv.add_argument("--horizon", type=float, default=2.0 * math.pi, help="fixed eps*t span")

    st = subs.add_parser("stokes", help="holonomy identity table")
    _add_common(st)
    st.add_argument("--theta0", type=float, default=0.3)
    st.add_argument("--Omega", type=float, default=0.05)
    st.add_argument("--B", default="1.0", help="comma list of field strengths")
    st.add_argument("--n-nodes", type=int, default=801)

    ts = subs.add_parser("timescale", help="second-order phase breakdown time")
    _add_common(ts)
    ts.add_argument("--B", type=float, default=1.0)
    ts.add_argument("--omega", type=float, default=0.05)
    return p


def _profile_from_args(args) -> FieldProfile:
    kind = _KIND_ALIASES.get(args.profile, args.profile)
    eps = getattr(args, "epsilon", 1.0)
    if kind == "constant":
        return field_profiles.constant(args.B0, theta0=args.theta_init, epsilon=eps)
    if kind == "uniform_rotation":
        return field_profiles.uniform_rotation(
            args.B0, args.omega, theta_init=args.theta_init, epsilon=eps
        )
    if kind == "sinusoidal_angle":
        return field_profiles.sinusoidal_angle(
            args.B0, theta0=args.theta0, Omega=args.Omega, epsilon=eps
        )
    if kind == "polynomial_angle":
        coeffs = _float_list(args.coeffs, "--coeffs")
        return field_profiles.polynomial_angle(args.B0, coeffs, epsilon=eps)
    if kind == "cone_3d":
        return field_profiles.cone_3d(
            args.B0, theta_c=args.theta_c, omega_phi=args.omega_phi, epsilon=eps
        )
    raise ConfigError(f"unknown profile kind {args.profile!r}")


def _float_list(text: str, flag: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {text!r}") from exc


def parse_cli(argv) -> RunConfig:
    """Turn an argv list into a validated RunConfig (usage errors exit 2)."""
    args = _build_parser().parse_args(argv)
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                d = json.load(fh)
        except OSError as exc:
            raise IoError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {args.config}: {exc}") from exc
        d.setdefault("command", args.command)
        if d["command"] != args.command:
            raise ConfigError(
                f"config file is for {d['command']!r} but {args.command!r} was invoked"
            )
        return RunConfig.from_dict(d)

    integrator = IntegratorConfig(
        rel_tol=args.rel_tol, abs_tol=args.abs_tol, max_step=args.max_step
    )
    formats = tuple(f for f in args.formats.split(",") if f)
    for f in formats:
        if f not in FORMATS:
            raise ConfigError(f"unknown output format {f!r}")
    out_dir = args.out if args.out is not None else _default_out_dir()

    params: dict = {}
    profile = None
    if args.command in ("simulate", "phases"):
        if args.t_end is None:
            raise ConfigError(f"{args.command} requires --t-end")
        profile = _profile_from_args(args)
        params = {"t_start": args.t_start, "t_end": args.t_end}
        if args.command == "simulate" and args.grid_n is not None:
            if args.grid_n < 2:
                raise ConfigError("--grid-n must be at least 2")
            params["grid_n"] = args.grid_n
    elif args.command == "convergence":
        eps = _float_list(args.eps, "--eps")
        if len(eps) < 2:
            raise ConfigError("--eps needs at least two values")
        params = {
            "eps_list": eps,
            "theta0": args.theta0,
            "Omega": args.Omega,
            "B0": args.B0,
            "horizon": args.horizon,
        }
    elif args.command == "stokes":
        params = {
            "theta0": args.theta0,
            "Omega": args.Omega,
            "B_list": _float_list(args.B, "--B"),
            "n_nodes": args.n_nodes,
        }
    elif args.command == "timescale":
        params = {"B": args.B, "omega": args.omega}
    return RunConfig(
        command=args.command,
        profile=profile,
        integrator=integrator,
        output_dir=out_dir,
        formats=formats,
        params=params,
    )


# ---------------------------------------------------------------------------
# Command bodies
# ---------------------------------------------------------------------------

def _cmd_simulate(rc: RunConfig) -> dict:
    from .exact_dynamics import default_grid

    profile = rc.profile
    t_span = (float(rc.params["t_start"]), float(rc.params["t_end"]))
    if "grid_n" in rc.params:
        grid = np.linspace(t_span[0], t_span[1], int(rc.params["grid_n"]))
    else:
        grid = default_grid(profile, t_span)
    cfg = IntegratorConfig(
        rel_tol=rc.integrator.rel_tol,
        abs_tol=rc.integrator.abs_tol,
        max_step=rc.integrator.max_step,
        dense_output_grid=grid,
    )
    in_plane = is_in_plane(profile)
    if in_plane:
        psi0 = tracked_eigenvector(profile, t_span[0])
        reference = "tracked_eigenvector"
    else:
        psi0 = bloch_to_spinor(sample(profile, t_span[0]).B_vec / sample(profile, t_span[0]).B_mag)
        reference = "initial_state"
    traj = integrate_schrodinger(profile, psi0, t_span, cfg)
    phases = extract_total_phase(traj, reference)
    s_traj = integrate_bloch(profile, spinor_to_bloch(psi0), t_span, cfg)
    spins = bloch_series(s_traj)

    samples = [sample(profile, float(t)) for t in traj.times]
    b_mags = np.array([s.B_mag for s in samples])
    td2_over_b = np.array([s.theta_dot**2 / s.B_mag for s in samples])
    dt = np.diff(traj.times)
    phi0_series = np.concatenate(
        [[0.0], np.cumsum(-0.5 * 0.5 * (b_mags[1:] + b_mags[:-1]) * dt)]
    )
    phi2_series = np.concatenate(
        [[0.0], np.cumsum(-0.25 * 0.5 * (td2_over_b[1:] + td2_over_b[:-1]) * dt)]
    )

    rows = ["t,Bx,By,Bz,Sx,Sy,Sz,re_up,im_up,re_dn,im_dn,phase_total,phi0,phi2"]
    for i, t in enumerate(traj.times):
        b = samples[i].B_vec
        up, dn = traj.states[i]
        s = spins[i]
        rows.append(
            ",".join(
                _fmt(v)
                for v in (
                    t, b[0], b[1], b[2], s[0], s[1], s[2],
                    up.real, up.imag, dn.real, dn.imag,
                    phases[i], phi0_series[i], phi2_series[i],
                )
            )
        )
    summary = {
        "command": "simulate",
        "profile": profile_to_dict(profile),
        "t_span": list(t_span),
        "reference": reference,
        "phase_total_end": float(phases[-1]),
        "norm_drift": traj.metadata["norm_drift"],
        "spin_norm_drift": s_traj.metadata["norm_drift"],
    }
    gnuplot = "\n".join(
        [
            "set datafile separator ','",
            "set key autotitle columnhead",
            "set xlabel 't'",
            "plot 'traj.csv' using 1:5 with lines, \\",
            "     'traj.csv' using 1:6 with lines, \\",
            "     'traj.csv' using 1:7 with lines",
            "pause -1",
        ]
    ) + "\n"
    return {
        "csv": {"traj.csv": "\n".join(rows) + "\n"},
        "json": {"summary.json": summary},
        "gnuplot": {"plot.gp": gnuplot},
        "stdout": [f"phase_total({t_span[1]:g}) = {phases[-1]:.12g}"],
    }


def _cmd_phases(rc: RunConfig) -> dict:
    t_span = (float(rc.params["t_start"]), float(rc.params["t_end"]))
    budget = verification.run_phase_budget(rc.profile, t_span, rc.integrator)
    payload = budget.as_dict()
    payload["metadata"] = budget.metadata
    return {
        "csv": {},
        "json": {"phases.json": payload},
        "gnuplot": {},
        "stdout": budget.report_lines(),
    }


def _cmd_convergence(rc: RunConfig) -> dict:
    p = rc.params
    family = verification.sinusoidal_family(
        theta0=float(p["theta0"]), Omega=float(p["Omega"]), B0=float(p["B0"])
    )
    report = verification.run_convergence(
        family, [float(e) for e in p["eps_list"]], float(p["horizon"])
    )
    lines = [
        f"order-{k} slope = {s:.4f} (stderr {se:.4f})"
        for k, (s, se) in enumerate(report.slopes)
    ]
    return {
        "csv": {"convergence.csv": report.to_csv()},
        "json": {"summary.json": report.summary()},
        "gnuplot": {
            "plot.gp": "set datafile separator ','\nset logscale xy\n"
            "set key autotitle columnhead\n"
            "plot 'convergence.csv' using 1:2 with linespoints, \\\n"
            "     'convergence.csv' using 1:3 with linespoints, \\\n"
            "     'convergence.csv' using 1:4 with linespoints\npause -1\n"
        },
        "stdout": lines,
    }


def _cmd_stokes(rc: RunConfig) -> dict:
    p = rc.params
    profile = field_profiles.sinusoidal_angle(
        B0=float(p["B_list"][0]), theta0=float(p["theta0"]), Omega=float(p["Omega"])
    )
    period = 2.0 * math.pi / float(p["Omega"])
    n = int(p["n_nodes"])
    loops = [
        ("ellipse_forward", loop_from_profile(profile, (0.0, period), n)),
        ("ellipse_reversed", loop_from_profile(profile, (0.0, period), n, reverse=True)),
    ]
    rows = verification.run_stokes_check(loops, [float(b) for b in p["B_list"]])
    worst = max(r.abs_diff for r in rows)
    return {
        "csv": {"stokes.csv": verification.stokes_csv(rows)},
        "json": {
            "summary.json": {
                "rows": [r.__dict__ for r in rows],
                "worst_abs_diff": worst,
            }
        },
        "gnuplot": {},
        "stdout": [f"{r.loop_id}: line={r.line_integral:.10g} surface={r.surface_integral:.10g}"
                   for r in rows],
    }


def _cmd_timescale(rc: RunConfig) -> dict:
    demo = verification.run_timescale_demo(float(rc.params["B"]), float(rc.params["omega"]))
    return {
        "csv": {},
        "json": {"timescale.json": demo.as_dict()},
        "gnuplot": {},
        "stdout": [
            f"t1 = {demo.t1:g}",
            f"phi2(t1) = {demo.phi2_at_t1:g}",
            f"t2 = {demo.t2:g}",
        ],
    }


_COMMANDS = {
    "simulate": _cmd_simulate,
    "phases": _cmd_phases,
    "convergence": _cmd_convergence,
    "stokes": _cmd_stokes,
    "timescale": _cmd_timescale,
}


# ---------------------------------------------------------------------------
# Output writing and entry point
# ---------------------------------------------------------------------------

def write_outputs(results: dict, config: RunConfig) -> list[str]:
    """Write the selected formats into the output directory; returns paths.

    With an empty format list nothing is written and the JSON summaries go
    to standard output instead.
    """
    paths = []
    if not config.formats:
        for name, payload in results.get("json", {}).items():
            sys.stdout.write(json.dumps({name: payload}, sort_keys=True, default=float))
            sys.stdout.write("\n")
        return paths
    try:
        os.makedirs(config.output_dir, exist_ok=True)
        for fmt in config.formats:
            for name, payload in results.get(fmt, {}).items():
                path = os.path.join(config.output_dir, name)
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    if fmt == "json":
                        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
                        fh.write("\n")
                    else:
                        fh.write(payload)
                paths.append(path)
    except OSError as exc:
        raise IoError(f"cannot write outputs under {config.output_dir}: {exc}") from exc
    return paths


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        rc = parse_cli(argv)
        results = _COMMANDS[rc.command](rc)
        paths = write_outputs(results, rc)
        for line in results.get("stdout", []):
            print(line)
        for path in paths:
            print(f"wrote {path}")
        return 0
    except SpinPhaseError as exc:
        print(f"spinphase: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"spinphase: I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
