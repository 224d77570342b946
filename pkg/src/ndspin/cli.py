"""Batch command-line front end.

Every verb reads one JSON scenario config and writes deterministic CSV/JSON
artifacts into the output directory; plots are left to external tools, so
each figure-style command also emits a small manifest describing its axes.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .coherent import branch_state, classical_position, expectation_xp, ramsey_phase
from .config import ConfigError, ScenarioConfig, load_config
from .core import FieldConfig, derive_oscillator, equilibrium_positions, max_separation
from .decoupling import DDConfig, FlipScheme, dd_expectation
from .coils import field_jacobian, field_map
from .protocol import (
    SURFACE_CSV_HEADER,
    casimir_polder_separation,
    min_distance,
    optimize_tmin,
    protocol_duration,
)
from .tables import write_csv, write_json
from .trajectory import FlipSchedule, IntegrationError, delta_scan, sensitivity_scan

TRAJECTORY_CSV_HEADER = ("t_s", "x_m", "y_m", "z_m", "vx_mps", "vy_mps",
                         "vz_mps", "spin")


def _out(args, name: str) -> str:
    return os.path.join(args.out, name)


def cmd_derive(cfg: ScenarioConfig, args) -> int:
    osc = derive_oscillator(cfg.nanodiamond, cfg.field, cfg.constants)
    x0p, x0m = equilibrium_positions(cfg.nanodiamond, cfg.field, cfg.constants)
    report = {
        "mass_kg": cfg.nanodiamond.mass,
        "volume_m3": cfg.nanodiamond.volume,
        "omega_rad_per_s": osc.omega,
        "period_s": osc.period,
        "x_zpf_m": osc.x_zpf,
        "p_zpf_kg_m_per_s": osc.p_zpf,
        "lambda_rad_per_s": osc.lam,
        "lambda0_rad_per_s": osc.lambda0,
        "lambda_g_rad_per_s": osc.lambda_g,
        "x0_plus_m": x0p,
        "x0_minus_m": x0m,
        "delta_x_max_m": max_separation(cfg.nanodiamond, cfg.field, cfg.constants),
        "delta_cp_m": casimir_polder_separation(cfg.nanodiamond, cfg.constants),
        "d_min_m": min_distance(cfg.nanodiamond, cfg.field, cfg.constants),
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    write_json(_out(args, "derive.json"), report)
    return 0


def cmd_trajectory(cfg: ScenarioConfig, args) -> int:
    osc = derive_oscillator(cfg.nanodiamond, cfg.field, cfg.constants)
    times = np.linspace(0.0, osc.period, cfg.trajectory_n_samples)
    rows = []
    for b0 in cfg.trajectory_B0_values:
        fld = FieldConfig(B0=b0, Bprime=cfg.field.Bprime,
                          tilt_theta_g=cfg.field.tilt_theta_g)
        for t in times:
            rows.append((b0, float(t),
                         classical_position(float(t), 1, cfg.nanodiamond, fld,
                                            cfg.constants),
                         classical_position(float(t), -1, cfg.nanodiamond, fld,
                                            cfg.constants)))
    write_csv(_out(args, "trajectory.csv"),
              ("B0_T", "t_s", "x_plus_m", "x_minus_m"), rows)
    write_json(_out(args, "trajectory_manifest.json"), {
        "generated_by": "ndspin trajectory",
        "x_axis": "t_s",
        "y_axis": ["x_plus_m", "x_minus_m"],
        "family_axis": "B0_T",
        "description": "one oscillation period of both spin branches per bias value",
    })
    return 0


def cmd_dd(cfg: ScenarioConfig, args) -> int:
    osc = derive_oscillator(cfg.nanodiamond, cfg.field, cfg.constants)
    times = np.linspace(0.0, osc.period, cfg.dd_n_samples)
    rows = []
    for spin in (1, -1):
        states = [branch_state(float(t), spin, cfg.nanodiamond, cfg.field,
                               cfg.constants, osc) for t in times]
        for t, s in zip(times, states):
            x, p = expectation_xp(s, osc)
            rows.append((0, spin, float(t), x, p))
    for n in cfg.dd_n_values:
        dd = DDConfig(n=n, scheme=FlipScheme.GRADIENT_ONLY_FLIP)
        for spin in (1, -1):
            xp = dd_expectation(times, spin, cfg.nanodiamond, cfg.field, dd,
                                cfg.constants)
            for t, (x, p) in zip(times, xp):
                rows.append((n, spin, float(t), float(x), float(p)))
    write_csv(_out(args, "dd_phase_space.csv"),
              ("n_flip", "spin", "t_s", "x_m", "p_kg_m_per_s"), rows)
    write_json(_out(args, "dd_manifest.json"), {
        "generated_by": "ndspin dd",
        "x_axis": "x_m",
        "y_axis": "p_kg_m_per_s",
        "family_axis": ["n_flip", "spin"],
        "note": "n_flip = 0 rows are the undecoupled reference",
    })
    return 0


def cmd_ramsey(cfg: ScenarioConfig, args) -> int:
    rows = []
    for theta in cfg.ramsey_theta_values:
        dtheta = ramsey_phase(theta, cfg.nanodiamond, cfg.field, cfg.constants)
        rows.append((theta, dtheta))
    write_csv(_out(args, "ramsey.csv"),
              ("theta_g_rad", "delta_theta_rad"), rows)
    write_json(_out(args, "ramsey_manifest.json"), {
        "generated_by": "ndspin ramsey",
        "x_axis": "theta_g_rad",
        "y_axis": "delta_theta_rad",
        "description": "branch phase difference after one period vs tilt angle",
    })
    return 0


def cmd_fieldmap(cfg: ScenarioConfig, args) -> int:
    if cfg.coil is None:
        raise ConfigError("$.coil", "fieldmap requires a coil section")
    x0, x1, nx = cfg.fieldmap_x
    y0, y1, ny = cfg.fieldmap_y
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    samples = field_map(cfg.coil, cfg.fieldmap_z, xs, ys, cfg.constants)
    rows = [(s.position[0], s.position[1], s.position[2], *s.B) for s in samples]
    write_csv(_out(args, "fieldmap.csv"),
              ("x_m", "y_m", "z_m", "Bx_T", "By_T", "Bz_T"), rows)
    grad = field_jacobian((0.0, 0.0, 0.0), cfg.coil, constants=cfg.constants)
    write_json(_out(args, "fieldmap_manifest.json"), {
        "generated_by": "ndspin fieldmap",
        "plane_z_m": cfg.fieldmap_z,
        "grid": {"nx": nx, "ny": ny},
        "central_gradient_T_per_m": float(grad[0, 0]),
        "description": "field components on a z = const plane, row-major in x then y",
    })
    return 0


def cmd_sensitivity(cfg: ScenarioConfig, args) -> int:
    if cfg.coil is None:
        raise ConfigError("$.coil", "sensitivity requires a coil section")
    grad = field_jacobian((0.0, 0.0, 0.0), cfg.coil, constants=cfg.constants)
    omega_eff = grad[0, 0] * math.sqrt(
        cfg.nanodiamond.chi_magnitude * cfg.nanodiamond.volume
        / (cfg.constants.mu0 * cfg.nanodiamond.mass))
    period = 2.0 * math.pi / omega_eff
    schedule = FlipSchedule(omega_dd=cfg.sensitivity_n_flip * omega_eff)
    records = sensitivity_scan(
        cfg.sensitivity_radius, cfg.sensitivity_theta, cfg.sensitivity_phi,
        cfg.coil, cfg.nanodiamond, schedule, period, cfg.integrator,
        cfg.sensitivity_n_samples, cfg.constants)
    summary = []
    for i, rec in enumerate(records):
        for spin, traj in rec["trajectories"].items():
            rows = [(float(t), *map(float, q), *map(float, v), int(s))
                    for t, q, v, s in zip(traj.t, traj.q, traj.v, traj.spin)]
            name = f"sensitivity_start{i:02d}_spin{'p' if spin > 0 else 'm'}.csv"
            write_csv(_out(args, name), TRAJECTORY_CSV_HEADER, rows)
        summary.append({
            "theta_rad": rec["theta"], "phi_rad": rec["phi"],
            "start_m": list(rec["start"]),
            "y_overlap_rel": rec["y_overlap"],
            "z_overlap_rel": rec["z_overlap"],
            "x_separation_max_m": rec["x_separation_max"],
        })
    deltas = delta_scan(cfg.sensitivity_delta, cfg.coil, cfg.nanodiamond,
                        cfg.sensitivity_n_flip, omega_eff, cfg.integrator,
                        cfg.sensitivity_n_samples, cfg.constants)
    write_json(_out(args, "sensitivity_summary.json"), {
        "generated_by": "ndspin sensitivity",
        "omega_rad_per_s": float(omega_eff),
        "period_s": float(period),
        "shell_radius_m": cfg.sensitivity_radius,
        "starts": summary,
        "delta_scan": deltas,
    })
    return 0


def cmd_protocol_opt(cfg: ScenarioConfig, args) -> int:
    result = optimize_tmin(
        cfg.protocol.scenario, cfg.mass_range, cfg.bprime_range,
        grid_shape=cfg.grid_shape, refine=cfg.refine,
        template=cfg.nanodiamond, target_delta_phi=cfg.protocol.target_delta_phi,
        constants=cfg.constants, threads=args.threads)
    write_csv(_out(args, "protocol_surface.csv"), SURFACE_CSV_HEADER,
              result.surface_rows())
    write_json(_out(args, "protocol_opt.json"), {
        "generated_by": "ndspin protocol-opt",
        "scenario": cfg.protocol.scenario.value,
        "m_opt_kg": result.m_opt,
        "Bprime_opt_T_per_m": result.Bprime_opt,
        "t_min_s": result.t_min,
        "t_hold_s": result.result.t_hold,
        "period_s": result.result.period,
        "delta_phi_bd_rad": result.result.delta_phi_bd,
        "d_min_m": result.result.d_used,
        "on_mass_boundary": result.on_mass_boundary,
        "on_gradient_boundary": result.on_gradient_boundary,
    })
    summary = protocol_duration(cfg.nanodiamond, cfg.field, cfg.protocol,
                                cfg.constants)
    write_json(_out(args, "protocol_point.json"), {
        "generated_by": "ndspin protocol-opt",
        "note": "protocol timing at the configured (nanodiamond, field) point",
        "t_total_s": summary.t_total,
        "t_hold_s": summary.t_hold,
        "period_s": summary.period,
        "delta_phi_bd_rad": summary.delta_phi_bd,
        "delta_phi_hold_rad": summary.delta_phi_hold,
        "d_used_m": summary.d_used,
    })
    return 0


_COMMANDS = {
    "derive": cmd_derive,
    "trajectory": cmd_trajectory,
    "dd": cmd_dd,
    "ramsey": cmd_ramsey,
    "fieldmap": cmd_fieldmap,
    "sensitivity": cmd_sensitivity,
    "protocol-opt": cmd_protocol_opt,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ndspin",
        description="nanodiamond spin-interferometer simulation toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON scenario config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for grid scans")
        p.add_argument("--seed", type=int, default=0,
                       help="reserved; all computations are deterministic")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
