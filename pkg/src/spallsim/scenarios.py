"""Scenario definitions: boundary conditions, fire curves, built-in tests.

A scenario bundles everything one simulation needs: material parameters,
two boundary specifications, initial conditions, mesh grading, solver
settings and probe locations.  The three built-ins reproduce published
validation experiments:

* kalifa_ptm1        pressure/temperature/mass-loss test of an M100-type
                     high strength concrete slab (0.12 m) under a 600 degC
                     radiant heater for 6 h; no spalling observed.
* mindeguia_ptm2     the same protocol on a B60-type concrete for 5 h.
* mindeguia_spalling B60-type wall (0.15 m) under the ISO 834 fire for
                     60 min; surface spalling observed.

Scenarios serialize to a flat INI-style key-value text format (see
save_scenario) so runs are reproducible and diffable.  Every type here is
a frozen dataclass: immutable after load and shareable across threads.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import CONST
from .materials import Aggregate, ConcreteClass, FluidState, MaterialParams
from .solver import SolverSettings
from .transport import moisture_content
from . import materials

CONFIG_VERSION = 1


@dataclass(frozen=True)
class FireCurve:
    """Ambient temperature programme theta_inf(t).

    kind:
      constant      theta = theta_start
      ramp_plateau  theta_start + rate1*t up to t_break, then continues
                    from the break value with slope rate2
      iso834        theta_start + 345 log10(8 t_min + 1), t_min in minutes
    """

    kind: str = "constant"
    theta_start: float = 293.15
    rate1: float = 0.0
    t_break: float = 0.0
    rate2: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "ramp_plateau", "iso834"):
            raise ValueError(f"unknown fire curve kind {self.kind!r}")
        if self.theta_start < 273.15:
            raise ValueError("fire curve must stay above 273.15 K")


def fire_curve_value(curve: FireCurve, t):
    """Evaluate the ambient temperature [K] at time t [s] (scalar or array)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("time must be non-negative")
    if curve.kind == "constant":
        out = np.full_like(t, curve.theta_start)
    elif curve.kind == "ramp_plateau":
        ramp = curve.theta_start + curve.rate1 * t
        after = curve.theta_start + curve.rate1 * curve.t_break + curve.rate2 * (t - curve.t_break)
        out = np.where(t <= curve.t_break, ramp, after)
    else:  # iso834, time in minutes inside the log
        out = curve.theta_start + 345.0 * np.log10(8.0 * t / 60.0 + 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class BoundarySpec:
    """Convective/radiative heat and convective mass exchange on one face.

    side     "x=0" (unexposed) or "x=ell" (exposed)
    P_inf    ambient vapour pressure [Pa] (held constant; the ambient
             vapour density still varies through theta_inf(t))
    fire     ambient temperature programme
    alpha_c  convective heat transfer coefficient [W m^-2 K^-1]
    e_sigma  emissivity times Stefan-Boltzmann constant [W m^-2 K^-4]
    beta_c   convective mass transfer coefficient [m s^-1]
    """

    side: str
    P_inf: float
    fire: FireCurve
    alpha_c: float
    e_sigma: float
    beta_c: float

    def __post_init__(self):
        if self.side not in ("x=0", "x=ell"):
            raise ValueError("side must be 'x=0' or 'x=ell'")
        for name in ("alpha_c", "e_sigma", "beta_c"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        if self.P_inf <= 0.0:
            raise ValueError("P_inf must be positive")

    def ambient(self, t: float) -> tuple[float, float]:
        """(theta_inf, rho_v_inf) at time t; vapour density via perfect gas."""
        theta_inf = float(fire_curve_value(self.fire, t))
        rho_v_inf = self.P_inf * CONST.M_w / (theta_inf * CONST.R)
        return theta_inf, rho_v_inf


@dataclass(frozen=True)
class Scenario:
    """Complete description of one wall simulation."""

    name: str
    material: MaterialParams
    boundary_unexposed: BoundarySpec
    boundary_exposed: BoundarySpec
    P_0: float
    theta_0: float
    ell_0: float
    grading: tuple[int, int, int]
    settings: SolverSettings
    duration: float
    probe_depths: tuple[float, ...] = (0.01, 0.02, 0.03, 0.04, 0.05)
    output_every: float = 10.0
    # Optional manufactured-solution volume sources [per m^3]; callables of
    # position, not serialized.
    source_m: object = None
    source_theta: object = None

    def initial_fluid_state(self) -> FluidState:
        return FluidState(P=self.P_0, theta=self.theta_0)


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[str, ...]
    S_w0: float
    initial_moisture: float

    @property
    def ok(self) -> bool:
        return not self.findings


def validate(scenario: Scenario) -> ValidationReport:
    """Check scenario invariants; returns findings plus the implied S_w,0."""
    f: list[str] = []
    sc = scenario
    if sc.P_0 <= 0.0:
        f.append("initial pressure P_0 must be positive")
    if sc.theta_0 < 273.15:
        f.append("initial temperature theta_0 below 273.15 K")
    if sc.ell_0 <= 0.0:
        f.append("initial thickness ell_0 must be positive")
    if sc.duration < 0.0:
        f.append("duration must be non-negative")
    if sc.output_every <= 0.0:
        f.append("output_every must be positive")
    if len(sc.grading) != 3 or any(int(n) < 1 for n in sc.grading):
        f.append("grading must contain three element counts >= 1")
    if sc.settings.dt <= 0.0:
        f.append("time step dt must be positive")
    if sc.settings.gamma <= 0.0:
        f.append("spalling characteristic time gamma must be positive")
    if sc.settings.newton_max_iter < 1:
        f.append("newton_max_iter must be at least 1")
    for d in sc.probe_depths:
        if not 0.0 < d < sc.ell_0:
            f.append(f"probe depth {d} outside (0, ell_0)")
    if sc.boundary_unexposed.side != "x=0" or sc.boundary_exposed.side != "x=ell":
        f.append("boundary sides must be x=0 (unexposed) and x=ell (exposed)")

    for label, bc in (("unexposed", sc.boundary_unexposed), ("exposed", sc.boundary_exposed)):
        t = np.linspace(0.0, max(sc.duration, 1.0), 512)
        theta = np.asarray(fire_curve_value(bc.fire, t))
        if np.any(np.diff(theta) < -1e-9):
            f.append(f"{label} fire curve is decreasing within the run duration")
        if np.any(theta < 273.15):
            f.append(f"{label} fire curve falls below 273.15 K")

    s0 = sc.initial_fluid_state()
    _, S_w0 = materials.sorption(sc.material, s0)
    m0 = moisture_content(sc.material, s0)
    return ValidationReport(findings=tuple(f), S_w0=float(S_w0), initial_moisture=float(m0))


# ---------------------------------------------------------------------------
# Built-in validation scenarios
# ---------------------------------------------------------------------------

_E_SIGMA = 0.7 * CONST.sigma_SB


def _kalifa_material() -> MaterialParams:
    return MaterialParams(
        f_c_ref=91.8e6,
        f_t_ref=4.9e6,
        cement_mass=414.8,
        phi_ref=0.0897,
        A_phi=2.4457e-5,
        rho_s=2660.0,
        lambda_d_ref=1.9759,
        A_lambda=-6.4215e-4,
        K_ref=1.3e-20,
        concrete_class=ConcreteClass.HSC2,
        aggregate=Aggregate.CALCAREOUS,
    )


def _mindeguia_material(K_ref: float = 4.0e-20) -> MaterialParams:
    return MaterialParams(
        f_c_ref=61.0e6,
        f_t_ref=3.76e6,
        cement_mass=550.0,
        phi_ref=0.1027,
        A_phi=1.0624e-4,
        rho_s=2660.0,
        lambda_d_ref=2.0153,
        A_lambda=-9.8533e-4,
        K_ref=K_ref,
        concrete_class=ConcreteClass.HSC1,
        aggregate=Aggregate.CALCAREOUS,
    )


def _boundaries(P_0: float, theta_0: float, exposed_fire: FireCurve, alpha_exposed: float):
    unexposed = BoundarySpec(
        side="x=0",
        P_inf=P_0,
        fire=FireCurve(kind="constant", theta_start=theta_0),
        alpha_c=4.0,
        e_sigma=_E_SIGMA,
        beta_c=0.009,
    )
    exposed = BoundarySpec(
        side="x=ell",
        P_inf=P_0,
        fire=exposed_fire,
        alpha_c=alpha_exposed,
        e_sigma=_E_SIGMA,
        beta_c=0.019,
    )
    return unexposed, exposed


def builtin_scenarios() -> dict[str, Scenario]:
    """The three built-in validation scenarios, fully populated."""
    # Radiant-heater ambient curves: fast initial ramp over 300 s, then a
    # slow drift for the rest of the heating period.
    heater_kalifa = FireCurve(
        kind="ramp_plateau", theta_start=293.15, rate1=410.0 / 300.0, t_break=300.0,
        rate2=35.0 / 21300.0,
    )
    heater_mindeguia = FireCurve(
        kind="ramp_plateau", theta_start=293.15, rate1=380.0 / 300.0, t_break=300.0,
        rate2=50.0 / 17700.0,
    )

    un_k, ex_k = _boundaries(1.9039e3, 293.15, heater_kalifa, alpha_exposed=20.0)
    kalifa = Scenario(
        name="kalifa_ptm1",
        material=_kalifa_material(),
        boundary_unexposed=un_k,
        boundary_exposed=ex_k,
        P_0=1.9039e3,
        theta_0=293.15,
        ell_0=0.12,
        grading=(30, 30, 60),
        settings=SolverSettings(dt=1.0, gamma=10.0),
        duration=6 * 3600.0,
    )

    un_m, ex_m = _boundaries(1.9194e3, 293.15, heater_mindeguia, alpha_exposed=20.0)
    mindeguia = Scenario(
        name="mindeguia_ptm2",
        material=_mindeguia_material(),
        boundary_unexposed=un_m,
        boundary_exposed=ex_m,
        P_0=1.9194e3,
        theta_0=293.15,
        ell_0=0.12,
        grading=(30, 30, 60),
        settings=SolverSettings(dt=1.0, gamma=10.0),
        duration=5 * 3600.0,
    )

    un_s, ex_s = _boundaries(
        1.9194e3, 293.15, FireCurve(kind="iso834", theta_start=293.15), alpha_exposed=25.0
    )
    spalling = Scenario(
        name="mindeguia_spalling",
        material=_mindeguia_material(),
        boundary_unexposed=un_s,
        boundary_exposed=ex_s,
        P_0=1.9194e3,
        theta_0=293.15,
        ell_0=0.15,
        grading=(40, 40, 80),
        settings=SolverSettings(dt=1.0, gamma=10.0),
        duration=3600.0,
    )
    return {s.name: s for s in (kalifa, mindeguia, spalling)}


# ---------------------------------------------------------------------------
# Configuration text format
# ---------------------------------------------------------------------------

class ScenarioError(ValueError):
    """Malformed scenario configuration."""


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def save_scenario(scenario: Scenario) -> str:
    """Serialize a scenario to the flat key-value configuration text."""
    cp = configparser.ConfigParser()
    sc = scenario
    cp["scenario"] = {
        "config_version": str(CONFIG_VERSION),
        "name": sc.name,
        "duration": _fmt(sc.duration),
        "output_every": _fmt(sc.output_every),
        "probe_depths": ", ".join(repr(d) for d in sc.probe_depths),
    }
    m = sc.material
    cp["material"] = {
        "f_c_ref": _fmt(m.f_c_ref),
        "f_t_ref": _fmt(m.f_t_ref),
        "cement_mass": _fmt(m.cement_mass),
        "theta_ref": _fmt(m.theta_ref),
        "phi_ref": _fmt(m.phi_ref),
        "a_phi": _fmt(m.A_phi),
        "rho_s": _fmt(m.rho_s),
        "lambda_d_ref": _fmt(m.lambda_d_ref),
        "a_lambda": _fmt(m.A_lambda),
        "k_ref": _fmt(m.K_ref),
        "concrete_class": m.concrete_class.value,
        "aggregate": m.aggregate.value,
        "e_f": _fmt(m.e_F),
        "tau": _fmt(m.tau),
        "m_eq_378": _fmt(m.m_eq_378),
        "theta_cr": _fmt(m.theta_cr),
    }
    cp["initial"] = {
        "p_0": _fmt(sc.P_0),
        "theta_0": _fmt(sc.theta_0),
        "ell_0": _fmt(sc.ell_0),
    }
    cp["mesh"] = {"grading": ", ".join(str(n) for n in sc.grading)}
    st = sc.settings
    cp["solver"] = {
        "dt": _fmt(st.dt),
        "gamma": _fmt(st.gamma),
        "newton_tol": _fmt(st.newton_tol),
        "newton_max_iter": str(st.newton_max_iter),
        "fd_jacobian": str(st.fd_jacobian).lower(),
    }
    for label, bc in (("unexposed", sc.boundary_unexposed), ("exposed", sc.boundary_exposed)):
        section = {
            "alpha_c": _fmt(bc.alpha_c),
            "e_sigma": _fmt(bc.e_sigma),
            "beta_c": _fmt(bc.beta_c),
            "p_inf": _fmt(bc.P_inf),
            "fire": bc.fire.kind,
            "theta_start": _fmt(bc.fire.theta_start),
        }
        if bc.fire.kind == "ramp_plateau":
            section.update(
                rate1=_fmt(bc.fire.rate1),
                t_break=_fmt(bc.fire.t_break),
                rate2=_fmt(bc.fire.rate2),
            )
        cp[f"boundary.{label}"] = section
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _get(cp: configparser.ConfigParser, section: str, key: str, cast, default=None):
    if not cp.has_option(section, key):
        if default is not None:
            return default
        raise ScenarioError(f"[{section}] missing required key '{key}'")
    raw = cp.get(section, key)
    try:
        if cast is bool:
            return cp.getboolean(section, key)
        return cast(raw)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"[{section}] {key}: cannot parse {raw!r}: {exc}") from exc


def _parse_fire(cp: configparser.ConfigParser, section: str) -> FireCurve:
    kind = _get(cp, section, "fire", str)
    theta_start = _get(cp, section, "theta_start", float)
    if kind == "ramp_plateau":
        return FireCurve(
            kind=kind,
            theta_start=theta_start,
            rate1=_get(cp, section, "rate1", float),
            t_break=_get(cp, section, "t_break", float),
            rate2=_get(cp, section, "rate2", float, default=0.0),
        )
    if kind in ("constant", "iso834"):
        return FireCurve(kind=kind, theta_start=theta_start)
    raise ScenarioError(f"[{section}] unknown fire curve kind {kind!r}")


def load_scenario(text: str) -> Scenario:
    """Parse a scenario from configuration text; raises ScenarioError with
    section/field diagnostics on malformed input."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ScenarioError(f"configuration parse error: {exc}") from exc

    for section in ("scenario", "material", "initial", "mesh", "solver",
                    "boundary.unexposed", "boundary.exposed"):
        if not cp.has_section(section):
            raise ScenarioError(f"missing [{section}] section")

    version = _get(cp, "scenario", "config_version", int, default=CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ScenarioError(f"unsupported config_version {version}")

    try:
        material = MaterialParams(
            f_c_ref=_get(cp, "material", "f_c_ref", float),
            f_t_ref=_get(cp, "material", "f_t_ref", float),
            cement_mass=_get(cp, "material", "cement_mass", float),
            theta_ref=_get(cp, "material", "theta_ref", float, default=293.15),
            phi_ref=_get(cp, "material", "phi_ref", float),
            A_phi=_get(cp, "material", "a_phi", float),
            rho_s=_get(cp, "material", "rho_s", float),
            lambda_d_ref=_get(cp, "material", "lambda_d_ref", float),
            A_lambda=_get(cp, "material", "a_lambda", float),
            K_ref=_get(cp, "material", "k_ref", float),
            concrete_class=ConcreteClass(_get(cp, "material", "concrete_class", str)),
            aggregate=Aggregate(_get(cp, "material", "aggregate", str)),
            e_F=_get(cp, "material", "e_f", float, default=0.505),
            tau=_get(cp, "material", "tau", float, default=10800.0),
            m_eq_378=_get(cp, "material", "m_eq_378", float, default=210.0),
            theta_cr=_get(cp, "material", "theta_cr", float, default=materials.THETA_CR),
        )
    except ValueError as exc:
        raise ScenarioError(f"[material] {exc}") from exc

    def _bc(label: str, side: str) -> BoundarySpec:
        section = f"boundary.{label}"
        try:
            return BoundarySpec(
                side=side,
                P_inf=_get(cp, section, "p_inf", float),
                fire=_parse_fire(cp, section),
                alpha_c=_get(cp, section, "alpha_c", float),
                e_sigma=_get(cp, section, "e_sigma", float),
                beta_c=_get(cp, section, "beta_c", float),
            )
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"[{section}] {exc}") from exc

    grading_raw = _get(cp, "mesh", "grading", str)
    try:
        grading = tuple(int(tok.strip()) for tok in grading_raw.split(","))
    except ValueError as exc:
        raise ScenarioError(f"[mesh] grading: cannot parse {grading_raw!r}") from exc
    if len(grading) != 3:
        raise ScenarioError("[mesh] grading must list three element counts")

    depths_raw = _get(cp, "scenario", "probe_depths", str, default="")
    try:
        depths = tuple(float(tok.strip()) for tok in depths_raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ScenarioError(f"[scenario] probe_depths: cannot parse {depths_raw!r}") from exc

    settings = SolverSettings(
        dt=_get(cp, "solver", "dt", float),
        gamma=_get(cp, "solver", "gamma", float),
        newton_tol=_get(cp, "solver", "newton_tol", float, default=1e-8),
        newton_max_iter=_get(cp, "solver", "newton_max_iter", int, default=25),
        fd_jacobian=_get(cp, "solver", "fd_jacobian", bool, default=True),
    )

    try:
        return Scenario(
            name=_get(cp, "scenario", "name", str),
            material=material,
            boundary_unexposed=_bc("unexposed", "x=0"),
            boundary_exposed=_bc("exposed", "x=ell"),
            P_0=_get(cp, "initial", "p_0", float),
            theta_0=_get(cp, "initial", "theta_0", float),
            ell_0=_get(cp, "initial", "ell_0", float),
            grading=grading,
            settings=settings,
            duration=_get(cp, "scenario", "duration", float),
            probe_depths=depths or Scenario.probe_depths,
            output_every=_get(cp, "scenario", "output_every", float, default=10.0),
        )
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc)) from exc


def resolve_scenario(source: str) -> Scenario:
    """Look up a built-in scenario by name or load one from a file path."""
    builtins = builtin_scenarios()
    if source in builtins:
        return builtins[source]
    try:
        with open(source, "r", encoding="utf-8") as fh:
            return load_scenario(fh.read())
    except FileNotFoundError:
        raise ScenarioError(
            f"{source!r} is neither a built-in scenario ({', '.join(sorted(builtins))}) "
            "nor a readable file"
        ) from None


def with_overrides(scenario: Scenario, dt: float | None = None, gamma: float | None = None,
                   duration: float | None = None) -> Scenario:
    """Copy a scenario with solver overrides applied."""
    settings = scenario.settings
    if dt is not None:
        settings = replace(settings, dt=dt)
    if gamma is not None:
        settings = replace(settings, gamma=gamma)
    out = replace(scenario, settings=settings)
    if duration is not None:
        out = replace(out, duration=duration)
    return out
