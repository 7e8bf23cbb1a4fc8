"""Command-line interface: run simulations and emit plain CSV outputs.

Subcommands
-----------
run            integrate a scenario; writes a time-series CSV and a final
               state profile CSV next to it
props          tabulate every material/mechanics property over a
               (temperature, pressure-or-RH) grid
flux-analysis  material-point moisture-flux dominance map over a
               (temperature, relative humidity) grid

All outputs are RFC-4180-style CSV with a '#'-prefixed metadata preamble,
deterministic for a given scenario and settings.  Exit codes: 0 ok,
1 solver failure, 2 input error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, materials, mechanics, transport
from .materials import FluidState
from .scenarios import Scenario, ScenarioError, resolve_scenario, validate, with_overrides
from .solver import SolverAbort, TimeSeries, run

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_INPUT = 2


def _num(x) -> str:
    return format(float(x), ".10g")


def _probe_num(x) -> str:
    # probes outside the ablated wall carry the removal sentinel
    if np.isnan(x):
        return "spalled"
    return _num(x)


def _preamble(lines: list[str]) -> str:
    return "".join(f"# {line}\r\n" for line in lines)


def write_timeseries_csv(ts: TimeSeries, path: Path) -> None:
    meta = [
        f"spallsim timeseries schema={SCHEMA_VERSION} version={__version__}",
        f"scenario={ts.scenario_name}",
        f"dt={_num(ts.dt)} gamma={_num(ts.gamma)}",
        f"probe_depths_m={','.join(_num(d) for d in ts.probe_depths)}",
        "mass_loss_fraction = 1 - moisture/(initial moisture + dehydrated)",
        "probe depths are measured from the current heated face",
    ]
    for d, t_spall in sorted(ts.spall_times.items()):
        meta.append(f"probe at depth {_num(d)} m removed by spalling at t={_num(t_spall)} s")
    cols = ["t_s", "ell_m", "max_F", "total_moisture_kg_m2", "mass_loss_fraction"]
    cols += [f"theta_{int(round(d * 1000))}mm_K" for d in ts.probe_depths]
    cols += [f"P_{int(round(d * 1000))}mm_Pa" for d in ts.probe_depths]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_preamble(meta))
        fh.write(",".join(cols) + "\r\n")
        for i, t in enumerate(ts.times):
            row = [
                _num(t),
                _num(ts.ell[i]),
                _num(ts.max_F[i]),
                _num(ts.total_moisture[i]),
                _num(ts.mass_loss_fraction[i]),
            ]
            row += [_probe_num(v) for v in ts.probe_theta[i]]
            row += [_probe_num(v) for v in ts.probe_P[i]]
            fh.write(",".join(row) + "\r\n")


def write_profile_csv(ts: TimeSeries, path: Path) -> None:
    st = ts.final_state
    meta = [
        f"spallsim final-state profile schema={SCHEMA_VERSION} version={__version__}",
        f"scenario={ts.scenario_name} t={_num(st.t)} ell={_num(st.ell)}",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_preamble(meta))
        fh.write("x_m,P_Pa,theta_K,m_kg_m3,m_d_kg_m3\r\n")
        for i, x in enumerate(st.mesh.nodes):
            fh.write(
                ",".join(
                    [_num(x), _num(st.P[i]), _num(st.theta[i]), _num(st.m[i]), _num(st.m_d[i])]
                )
                + "\r\n"
            )


def _profile_path(out: Path) -> Path:
    return out.with_name(out.stem + "_profile" + out.suffix)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
        scenario = with_overrides(scenario, dt=args.dt, gamma=args.gamma, duration=args.duration)
        if args.output_every is not None:
            scenario = replace(scenario, output_every=args.output_every)
        if args.probes is not None:
            depths = tuple(float(tok) for tok in args.probes.split(",") if tok.strip())
            scenario = replace(scenario, probe_depths=depths)
        report = validate(scenario)
        if not report.ok:
            for finding in report.findings:
                print(f"error: {finding}", file=sys.stderr)
            return EXIT_INPUT
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    print(
        f"running {scenario.name}: duration {scenario.duration:.0f} s, "
        f"dt {scenario.settings.dt} s, gamma {scenario.settings.gamma} s, "
        f"initial S_w {report.S_w0:.3f}"
    )
    try:
        ts = run(scenario)
    except SolverAbort as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    out = Path(args.out)
    write_timeseries_csv(ts, out)
    write_profile_csv(ts, _profile_path(out))
    removed = scenario.ell_0 - ts.final_state.ell
    print(
        f"done: final thickness {ts.final_state.ell:.5f} m "
        f"(removed {removed * 1000:.1f} mm), peak pressure "
        f"{np.nanmax(ts.probe_P) if ts.probe_P.size else float('nan'):.4g} Pa, "
        f"wrote {out} and {_profile_path(out)}"
    )
    return EXIT_OK


def cmd_props(args: argparse.Namespace) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
        thetas = np.linspace(args.theta_min, args.theta_max, args.theta_steps)
        if args.rh is not None:
            pressures = None
            rh = args.rh
        else:
            pressures = args.pressure
            rh = None
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    mat = scenario.material
    out = Path(args.out)
    meta = [
        f"spallsim property table schema={SCHEMA_VERSION} version={__version__}",
        f"scenario={scenario.name}",
        f"grid theta=[{_num(args.theta_min)},{_num(args.theta_max)}] n={args.theta_steps} "
        + (f"rh={_num(rh)}" if rh is not None else f"P={_num(pressures)}"),
    ]
    cols = [
        "theta_K", "P_Pa", "P_s_Pa", "rho_v_kg_m3", "rho_w_kg_m3", "phi", "eta_w", "S_w",
        "K_rw", "K_rg", "mu_w_Pa_s", "mu_g_Pa_s", "lambda_c_W_mK", "rho_cp_J_m3K",
        "rho_kg_m3", "h_e_J_kg", "m_d_eq_kg_m3", "f_c_Pa", "f_t_Pa", "E_c_Pa", "nu",
        "eps_th", "sigma_ht_Pa", "sigma_tm_Pa", "failure_F", "damage_D",
    ]
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(_preamble(meta))
        fh.write(",".join(cols) + "\r\n")
        for theta in thetas:
            Ps = float(materials.saturation_vapour_pressure(theta))
            P = rh * Ps if rh is not None else pressures
            P = max(float(P), 1e-3)
            s = FluidState(P=P, theta=float(theta))
            eta_w, S_w = materials.sorption(mat, s)
            K_rw, K_rg = materials.relative_permeabilities(mat, s)
            mu_w, mu_g = materials.viscosities(s)
            rho_cp, rho = materials.mixture_heat_capacity(mat, s)
            h_e, _ = materials.enthalpies(theta)
            rho_w = (
                float(materials.water_density(theta)) if theta <= mat.theta_cr else float("nan")
            )
            th_mech = float(np.clip(theta, 293.15, 1460.0))
            f_c, _, _ = mechanics.strength_parameters(mat, th_mech)
            f_t = mechanics.tensile_strength(th_mech, mat.f_t_ref)
            E_c, nu = mechanics.elastic_properties(mat, th_mech)
            eps_th = mechanics.free_thermal_strain(th_mech, mat.aggregate)
            s_mech = FluidState(P=P, theta=th_mech)
            sigma_ht = mechanics.hygro_thermal_stress(mat, s_mech)
            sigma_tm = mechanics.thermo_mechanical_stress(mat, th_mech)
            F = mechanics.failure_function(mat, s_mech)
            D, _, _ = mechanics.damage(mat, s_mech)
            vals = [
                theta, P, Ps, materials.vapour_density(s), rho_w, materials.porosity(mat, theta),
                eta_w, S_w, K_rw, K_rg, mu_w, mu_g, materials.thermal_conductivity(mat, s),
                rho_cp, rho, h_e, materials.dehydration_equilibrium(mat, theta), f_c, f_t,
                E_c, nu, eps_th, sigma_ht, sigma_tm, F, D,
            ]
            fh.write(",".join(_num(v) for v in vals) + "\r\n")
    print(f"wrote {out} ({len(thetas)} rows)")
    return EXIT_OK


def cmd_flux_analysis(args: argparse.Namespace) -> int:
    try:
        scenario = resolve_scenario(args.scenario)
        thetas = np.linspace(args.theta_min, args.theta_max, args.theta_steps)
        rhs = np.linspace(args.rh_min, args.rh_max, args.rh_steps)
        params = transport.FluxParams(
            K_intrinsic=args.k_intrinsic,
            S_ssp=args.s_ssp,
            D_B=args.d_b,
        )
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    mat = scenario.material
    out = Path(args.out)
    meta = [
        f"spallsim flux dominance map schema={SCHEMA_VERSION} version={__version__}",
        f"scenario={scenario.name} P_a={_num(args.pa)} K={_num(params.K_intrinsic)} "
        f"S_ssp={_num(params.S_ssp)} D_B={_num(params.D_B)}",
        "coefficients multiply grad(P_v); J = -c grad(P_v)",
    ]
    cols = [
        "theta_K", "RH", "P_v_Pa", "vapour_flow", "vapour_diffusion",
        "liquid_water_flow", "adsorbed_water_diffusion", "dominant",
    ]
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(_preamble(meta))
        fh.write(",".join(cols) + "\r\n")
        for theta in thetas:
            Ps = float(materials.saturation_vapour_pressure(theta))
            for rh in rhs:
                P_v = max(rh * Ps, 1e-3)
                br = transport.flux_decomposition(mat, P_v, args.pa, float(theta), params)
                dom = str(br.dominant_dP())
                fh.write(
                    ",".join(
                        [
                            _num(theta), _num(rh), _num(P_v),
                            _num(br.vapour_flow_dP), _num(br.vapour_diffusion_dP),
                            _num(br.liquid_water_flow_dP), _num(br.adsorbed_water_diffusion_dP),
                            dom,
                        ]
                    )
                    + "\r\n"
                )
    print(f"wrote {out} ({len(thetas) * len(rhs)} rows)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spallsim",
        description="1D hygro-thermo-mechanical simulation of heated concrete walls",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a scenario and write time-series CSV")
    p_run.add_argument("--scenario", required=True, help="built-in name or config file path")
    p_run.add_argument("--out", default="run.csv", help="output CSV path")
    p_run.add_argument("--dt", type=float, default=None, help="time step override [s]")
    p_run.add_argument("--gamma", type=float, default=None, help="spalling time override [s]")
    p_run.add_argument("--duration", type=float, default=None, help="duration override [s]")
    p_run.add_argument("--output-every", type=float, default=None, help="output cadence [s]")
    p_run.add_argument("--probes", default=None, help="comma-separated probe depths [m]")
    p_run.set_defaults(func=cmd_run)

    p_props = sub.add_parser("props", help="tabulate material properties over a grid")
    p_props.add_argument("--scenario", required=True)
    p_props.add_argument("--out", default="props.csv")
    p_props.add_argument("--theta-min", type=float, default=293.15)
    p_props.add_argument("--theta-max", type=float, default=873.15)
    p_props.add_argument("--theta-steps", type=int, default=59)
    group = p_props.add_mutually_exclusive_group()
    group.add_argument("--rh", type=float, default=None, help="fixed relative humidity")
    group.add_argument("--pressure", type=float, default=None, help="fixed vapour pressure [Pa]")
    p_props.set_defaults(func=cmd_props)

    p_flux = sub.add_parser("flux-analysis", help="moisture-flux mechanism dominance map")
    p_flux.add_argument("--scenario", required=True)
    p_flux.add_argument("--out", default="flux_map.csv")
    p_flux.add_argument("--theta-min", type=float, default=293.15)
    p_flux.add_argument("--theta-max", type=float, default=633.15)
    p_flux.add_argument("--theta-steps", type=int, default=35)
    p_flux.add_argument("--rh-min", type=float, default=0.02)
    p_flux.add_argument("--rh-max", type=float, default=0.98)
    p_flux.add_argument("--rh-steps", type=int, default=25)
    p_flux.add_argument("--pa", type=float, default=101325.0, help="dry air pressure [Pa]")
    p_flux.add_argument("--k-intrinsic", type=float, default=transport.FluxParams.K_intrinsic)
    p_flux.add_argument("--s-ssp", type=float, default=transport.FluxParams.S_ssp)
    p_flux.add_argument("--d-b", type=float, default=transport.FluxParams.D_B)
    p_flux.set_defaults(func=cmd_flux_analysis)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "props" and args.rh is None and args.pressure is None:
        args.rh = 0.5
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
