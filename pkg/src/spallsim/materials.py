"""Thermal and hygral properties of moist concrete and its pore fluids.

Every function here is a pure map from a fluid state (vapour pore pressure
P [Pa], absolute temperature theta [K]) and a set of material parameters to
an SI property value.  All functions accept scalars or numpy arrays and
broadcast; none keeps hidden state, so they are safe to call concurrently.

Conventions
-----------
* Temperatures are Kelvin at every interface.  Source correlations written
  for Celsius are converted internally.
* Above the critical point of water (THETA_CR) there is no liquid phase:
  the sorption volume fraction is zero and liquid-only properties
  (water_density, the liquid heat capacity) refuse to evaluate.
* Dry-air partial pressure is not a model unknown; where a correlation
  needs it we use P_a = max(P_atm - P, 0), which recovers atmospheric
  conditions at low vapour pressure and vanishes once vapour dominates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Union

import numpy as np

from .constants import CONST, THETA_CR, PhysicalConstants

ArrayLike = Union[float, np.ndarray]

# Reference temperature of the sorption isotherm (fixed by the isotherm
# fit, independent of the per-material reference temperature).
THETA_REF_SORPTION = 298.15

# Knots of the sorption isotherm in relative humidity P/P_s.
_RH_KNOT_LO = 0.96
_RH_KNOT_HI = 1.00

# Porosity is a linear fit; clamp to keep it physical far outside the
# calibration range.
_PHI_MIN = 1e-4
_PHI_MAX = 0.99

# Floor for the dry thermal conductivity [W/m/K]; the linear fit crosses
# zero around 1300-1800 K depending on the material.
_LAMBDA_FLOOR = 1e-2

# Pressure floor inside the Kelvin logarithm [Pa].
_P_KELVIN_FLOOR = 1.0


class ConcreteClass(str, Enum):
    """Strength-reduction table selector (EN 1992-1-2 Tables 3.1 / 6.1N)."""

    NSC_SILICEOUS = "nsc-s"
    NSC_CALCAREOUS = "nsc-c"
    HSC1 = "hsc1"
    HSC2 = "hsc2"
    HSC3 = "hsc3"


class Aggregate(str, Enum):
    """Aggregate type; selects the free-thermal-strain curve."""

    SILICEOUS = "siliceous"
    CALCAREOUS = "calcareous"


@dataclass(frozen=True)
class FluidState:
    """A (vapour pore pressure, temperature) pair at a material point.

    P      vapour pore pressure [Pa], > 0
    theta  absolute temperature [K], >= 273.15 (model not exercised below
           freezing)

    Both fields may be numpy arrays of equal shape.
    """

    P: ArrayLike
    theta: ArrayLike

    def __post_init__(self):
        if not np.all(np.asarray(self.P) > 0.0):
            raise ValueError("pore pressure must be positive")
        if not np.all(np.asarray(self.theta) >= 273.15):
            raise ValueError("temperature below 273.15 K is out of the model range")


@dataclass(frozen=True)
class MaterialParams:
    """Scenario-specific concrete parameters.

    f_c_ref      reference compressive strength at room temperature [Pa]
    f_t_ref      reference tensile strength at room temperature [Pa]
    cement_mass  mass of cement per unit volume of concrete [kg m^-3]
    theta_ref    reference temperature of the porosity/conductivity fits [K]
    phi_ref      reference porosity at theta_ref [-]
    A_phi        porosity temperature coefficient [K^-1]
    rho_s        density of the solid skeleton (constant) [kg m^-3]
    lambda_d_ref reference dry thermal conductivity at theta_ref [W m^-1 K^-1]
    A_lambda     conductivity temperature coefficient [K^-1]
    K_ref        reference intrinsic permeability of undamaged concrete [m^2]
    concrete_class  strength-reduction table selector
    aggregate    aggregate type for the free thermal strain
    e_F          eccentricity of the triaxial failure surface [-]
    tau          characteristic time of the dehydration relaxation [s]
    m_eq_378     equilibrium dehydrated mass at 378.15 K [kg m^-3]
    theta_cr     critical point of water [K]
    """

    f_c_ref: float
    f_t_ref: float
    cement_mass: float
    phi_ref: float
    A_phi: float
    rho_s: float
    lambda_d_ref: float
    A_lambda: float
    K_ref: float
    concrete_class: ConcreteClass
    aggregate: Aggregate
    theta_ref: float = 293.15
    e_F: float = 0.505
    tau: float = 10800.0
    m_eq_378: float = 210.0
    theta_cr: float = THETA_CR
    constants: PhysicalConstants = field(default=CONST)

    def __post_init__(self):
        positive = {
            "f_c_ref": self.f_c_ref,
            "f_t_ref": self.f_t_ref,
            "cement_mass": self.cement_mass,
            "theta_ref": self.theta_ref,
            "phi_ref": self.phi_ref,
            "rho_s": self.rho_s,
            "lambda_d_ref": self.lambda_d_ref,
            "K_ref": self.K_ref,
            "tau": self.tau,
            "m_eq_378": self.m_eq_378,
            "theta_cr": self.theta_cr,
        }
        for name, value in positive.items():
            if not value > 0.0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if not 0.0 < self.phi_ref < 1.0:
            raise ValueError("phi_ref must lie in (0, 1)")
        if not 0.5 < self.e_F <= 1.0:
            raise ValueError("e_F must lie in (0.5, 1.0]")


# ---------------------------------------------------------------------------
# Fluid-phase state relations
# ---------------------------------------------------------------------------

def saturation_vapour_pressure(theta: ArrayLike) -> ArrayLike:
    """Water vapour saturation pressure [Pa].

    P_s(theta) = exp(23.5771 - 4042.9 / (theta - 37.58)); strictly
    increasing in theta.  The exponent has a pole at 37.58 K; refuse
    anything within 50 K of it.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 37.58 + 50.0):
        raise ValueError("temperature too close to the saturation-formula pole")
    return np.exp(23.5771 - 4042.9 / (theta - 37.58))


def _dPs_dtheta(theta: ArrayLike) -> ArrayLike:
    theta = np.asarray(theta, dtype=float)
    return saturation_vapour_pressure(theta) * 4042.9 / (theta - 37.58) ** 2


def vapour_density(s: FluidState) -> ArrayLike:
    """Vapour density from the perfect-gas law: rho_v = P M_w / (theta R)."""
    c = CONST
    return np.asarray(s.P, dtype=float) * c.M_w / (np.asarray(s.theta, dtype=float) * c.R)


def air_density(s: FluidState) -> ArrayLike:
    """Dry-air density [kg m^-3] with P_a = max(P_atm - P, 0)."""
    c = CONST
    P_a = np.maximum(c.P_atm - np.asarray(s.P, dtype=float), 0.0)
    return P_a * c.M_a / (np.asarray(s.theta, dtype=float) * c.R)


# Liquid water density: two quintic polynomials in Celsius temperature.
_RHO_W_A = (4.8863e-7, -1.6528e-9, 1.8621e-12, 2.4266e-13, -1.5996e-15, 3.3703e-18)
_RHO_W_B = (1.0213e3, -7.7377e-1, 8.7696e-3, -9.2118e-5, 3.3534e-7, -4.4034e-10)


def _horner(x, coeffs):
    out = coeffs[-1]
    for c in coeffs[-2::-1]:
        out = out * x + c
    return out


def _rho_w_unchecked(theta: ArrayLike) -> ArrayLike:
    tc = np.asarray(theta, dtype=float) - 273.15
    return _horner(tc, _RHO_W_A) * (-1e7) + _horner(tc, _RHO_W_B)


_RHO_W_DA = tuple(i * c for i, c in enumerate(_RHO_W_A))[1:]
_RHO_W_DB = tuple(i * c for i, c in enumerate(_RHO_W_B))[1:]


def _drho_w_dtheta(theta: ArrayLike) -> ArrayLike:
    tc = np.asarray(theta, dtype=float) - 273.15
    return _horner(tc, _RHO_W_DA) * (-1e7) + _horner(tc, _RHO_W_DB)


def water_density(theta: ArrayLike) -> ArrayLike:
    """Liquid water density [kg m^-3], defined only up to the critical point.

    Experimental quintic fit in Celsius temperature.  Note the fit reads
    about 1004 kg/m^3 at 20 degC, roughly 0.6% above steam-table water; the
    coefficients are kept as published rather than re-calibrated.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta > THETA_CR):
        raise ValueError("liquid water does not exist above the critical point")
    return _rho_w_unchecked(theta)


def capillary_pressure(s: FluidState) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Kelvin capillary pressure and its partial derivatives.

    P_c = -rho_w(theta) (theta R / M_w) ln(P / P_s(theta))

    Returns (P_c [Pa], dP_c/dP [-], dP_c/dtheta [Pa/K]).  Above the
    critical point there is no liquid phase and all three are zero.  P is
    floored at 1 Pa inside the logarithm to avoid -inf at numerically zero
    pressure.
    """
    P = np.asarray(s.P, dtype=float)
    theta = np.asarray(s.theta, dtype=float)
    if np.any(P <= 0.0):
        raise ValueError("pore pressure must be positive")
    c = CONST

    liquid = theta <= THETA_CR
    th = np.where(liquid, theta, THETA_CR)
    Pc_arg = np.maximum(P, _P_KELVIN_FLOOR)
    Ps = saturation_vapour_pressure(th)
    rho = _rho_w_unchecked(th)
    drho = _drho_w_dtheta(th)
    logh = np.log(Pc_arg / Ps)

    Pc = -rho * th * c.R / c.M_w * logh
    dPc_dP = -rho * th * c.R / (c.M_w * Pc_arg)
    dPc_dth = -(c.R / c.M_w) * ((drho * th + rho) * logh - rho * th * _dPs_dtheta(th) / Ps)

    zero = np.zeros_like(Pc)
    return (
        np.where(liquid, Pc, zero),
        np.where(liquid, dPc_dP, zero),
        np.where(liquid, dPc_dth, zero),
    )


# Gas/liquid dynamic viscosity fit constants.
_MU_GV_REF = 8.85e-6     # Pa s at 273.15 K
_ALPHA_V = 3.53e-8       # Pa s / K
_MU_GA_REF = 17.17e-6    # Pa s at 273.15 K
_ALPHA_A = 4.73e-8       # Pa s / K
_BETA_A = 2.22e-11       # Pa s / K^2
_THETA_REF_MU = 273.15


def _mu_gv(theta: ArrayLike) -> ArrayLike:
    return _MU_GV_REF + _ALPHA_V * (np.asarray(theta, dtype=float) - _THETA_REF_MU)


def _mu_ga(theta: ArrayLike) -> ArrayLike:
    dt = np.asarray(theta, dtype=float) - _THETA_REF_MU
    return _MU_GA_REF + _ALPHA_A * dt + _BETA_A * dt * dt


def gas_viscosity(P_v: ArrayLike, P_a: ArrayLike, theta: ArrayLike) -> ArrayLike:
    """Moist-gas dynamic viscosity [Pa s] for explicit vapour/air pressures.

    mu_g = mu_gv + (mu_ga - mu_gv) (P_a / (P_v + P_a))^0.608
    """
    P_v = np.asarray(P_v, dtype=float)
    P_a = np.asarray(P_a, dtype=float)
    mu_gv = _mu_gv(theta)
    frac = np.where(P_v + P_a > 0.0, P_a / np.maximum(P_v + P_a, 1e-300), 0.0)
    return mu_gv + (_mu_ga(theta) - mu_gv) * frac ** 0.608


def viscosities(s: FluidState) -> tuple[ArrayLike, ArrayLike]:
    """(liquid water, moist gas) dynamic viscosities [Pa s].

    mu_w = 0.6612 (theta - 229)^-1.532; the gas mixture uses the implied
    dry-air pressure P_a = max(P_atm - P, 0).
    """
    theta = np.asarray(s.theta, dtype=float)
    if np.any(theta <= 229.0):
        raise ValueError("liquid viscosity undefined at or below 229 K")
    mu_w = 0.6612 * (theta - 229.0) ** -1.532
    P_a = np.maximum(CONST.P_atm - np.asarray(s.P, dtype=float), 0.0)
    return mu_w, gas_viscosity(s.P, P_a, theta)


# ---------------------------------------------------------------------------
# Pore structure and moisture storage
# ---------------------------------------------------------------------------

def porosity(mat: MaterialParams, theta: ArrayLike) -> ArrayLike:
    """Linear-in-temperature porosity, clamped to a physical range."""
    phi = mat.phi_ref + mat.A_phi * (np.asarray(theta, dtype=float) - mat.theta_ref)
    return np.clip(phi, _PHI_MIN, _PHI_MAX)


def _dphi_dtheta(mat: MaterialParams, theta: ArrayLike) -> ArrayLike:
    phi = mat.phi_ref + mat.A_phi * (np.asarray(theta, dtype=float) - mat.theta_ref)
    inside = (phi > _PHI_MIN) & (phi < _PHI_MAX)
    return np.where(inside, mat.A_phi, 0.0)


def _sorption_exponent(theta: ArrayLike) -> ArrayLike:
    """Temperature exponent m(theta) of the unsaturated isotherm branch."""
    u = np.asarray(theta, dtype=float) - 263.15
    v = THETA_REF_SORPTION - 263.15
    return 1.04 - u * u / (22.34 * v * v + u * u)


def _dm_dtheta(theta: ArrayLike) -> ArrayLike:
    u = np.asarray(theta, dtype=float) - 263.15
    k = 22.34 * (THETA_REF_SORPTION - 263.15) ** 2
    return -2.0 * u * k / (k + u * u) ** 2


@lru_cache(maxsize=32)
def _saturation_content_ratio(mat: MaterialParams) -> float:
    """phi(theta_ref,sorption) * rho_w(theta_ref,sorption) / cement_mass."""
    phi_ref = float(porosity(mat, THETA_REF_SORPTION))
    return phi_ref * float(_rho_w_unchecked(THETA_REF_SORPTION)) / mat.cement_mass


def _eta_w_power(mat: MaterialParams, h: ArrayLike, theta: ArrayLike) -> ArrayLike:
    """Unsaturated isotherm branch evaluated at relative humidity h."""
    m = _sorption_exponent(theta)
    W = _saturation_content_ratio(mat)
    return mat.cement_mass / _rho_w_unchecked(theta) * (W * h) ** (1.0 / m)


def _spline_coefficients(mat: MaterialParams, theta: ArrayLike):
    """Cubic coefficients bridging the isotherm knots in h = P/P_s.

    The bridge matches value and d(eta_w)/dh on both sides: the power
    branch at h = 0.96 and the flat saturated branch eta_w = phi(theta) at
    h = 1.00, so the isotherm is C^1 in relative humidity across both
    knots.
    """
    dh = _RH_KNOT_HI - _RH_KNOT_LO
    eta_96 = _eta_w_power(mat, _RH_KNOT_LO, theta)
    slope_96 = eta_96 / (_RH_KNOT_LO * _sorption_exponent(theta))
    eta_100 = porosity(mat, theta)
    slope_100 = np.zeros_like(eta_100)

    xi0 = eta_96
    xi1 = slope_96
    xi2 = 3.0 * (eta_100 - eta_96) / dh**2 - (2.0 * slope_96 + slope_100) / dh
    xi3 = 2.0 * (eta_96 - eta_100) / dh**3 + (slope_96 + slope_100) / dh**2
    return xi0, xi1, xi2, xi3


def _eta_w(mat: MaterialParams, P: ArrayLike, theta: ArrayLike) -> ArrayLike:
    P = np.asarray(P, dtype=float)
    theta = np.asarray(theta, dtype=float)
    liquid = theta <= mat.theta_cr
    th = np.where(liquid, theta, mat.theta_cr)

    h = P / saturation_vapour_pressure(th)
    h_pow = np.minimum(h, _RH_KNOT_LO)
    eta = _eta_w_power(mat, h_pow, th)

    spline = (h > _RH_KNOT_LO) & (h < _RH_KNOT_HI)
    if np.any(spline):
        u = np.where(spline, h - _RH_KNOT_LO, 0.0)
        xi0, xi1, xi2, xi3 = _spline_coefficients(mat, th)
        eta_sp = xi0 + u * (xi1 + u * (xi2 + u * xi3))
        eta = np.where(spline, eta_sp, eta)

    eta = np.where(h >= _RH_KNOT_HI, porosity(mat, th), eta)
    return np.where(liquid, eta, 0.0)


def sorption(mat: MaterialParams, s: FluidState) -> tuple[ArrayLike, ArrayLike]:
    """Volume fraction of liquid water and degree of saturation.

    Three-branch isotherm in relative humidity h = P/P_s(theta): a power
    law below 0.96, a C^1 cubic bridge on (0.96, 1.00), and the porosity
    at or above saturation.  Above the critical point eta_w = 0.

    Returns (eta_w [-], S_w = eta_w / phi(theta) [-]).
    """
    eta = _eta_w(mat, s.P, s.theta)
    S_w = np.clip(eta / porosity(mat, s.theta), 0.0, 1.0)
    return eta, S_w


def sorption_with_partials(
    mat: MaterialParams, s: FluidState
) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
    """eta_w and its partial derivatives w.r.t. P and theta.

    The P-derivative is analytic on every branch.  The theta-derivative is
    analytic on the power and saturated branches and falls back to a
    central finite difference (relative step 1e-6) inside the cubic bridge,
    whose temperature dependence enters through all four coefficients.
    """
    P = np.asarray(s.P, dtype=float)
    theta = np.asarray(s.theta, dtype=float)
    eta = _eta_w(mat, P, theta)

    liquid = theta <= mat.theta_cr
    th = np.where(liquid, theta, mat.theta_cr)
    Ps = saturation_vapour_pressure(th)
    h = P / Ps
    m = _sorption_exponent(th)
    W = _saturation_content_ratio(mat)

    power = liquid & (h <= _RH_KNOT_LO)
    spline = liquid & (h > _RH_KNOT_LO) & (h < _RH_KNOT_HI)
    saturated = liquid & (h >= _RH_KNOT_HI)

    # d/dP
    deta_dP = np.zeros_like(eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        deta_dP = np.where(power, eta / (m * np.maximum(P, 1e-300)), deta_dP)
    if np.any(spline):
        xi0, xi1, xi2, xi3 = _spline_coefficients(mat, th)
        u = np.where(spline, h - _RH_KNOT_LO, 0.0)
        deta_dh = xi1 + u * (2.0 * xi2 + 3.0 * u * xi3)
        deta_dP = np.where(spline, deta_dh / Ps, deta_dP)

    # d/dtheta
    deta_dth = np.zeros_like(eta)
    dlog = (
        -_drho_w_dtheta(th) / _rho_w_unchecked(th)
        - _dm_dtheta(th) / m**2 * np.log(np.maximum(W * h, 1e-300))
        - _dPs_dtheta(th) / (Ps * m)
    )
    deta_dth = np.where(power, eta * dlog, deta_dth)
    deta_dth = np.where(saturated, _dphi_dtheta(mat, th), deta_dth)
    if np.any(spline):
        step = 1e-6 * th
        up = _eta_w(mat, P, np.where(spline, th + step, th))
        dn = _eta_w(mat, P, np.where(spline, th - step, th))
        fd = (up - dn) / (2.0 * step)
        deta_dth = np.where(spline, fd, deta_dth)

    return eta, deta_dP, deta_dth


def relative_permeabilities(mat: MaterialParams, s: FluidState) -> tuple[ArrayLike, ArrayLike]:
    """Saturation-dependent relative permeabilities (K_rw, K_rg), both in [0, 1].

    K_rg = 10^(S_w psi) - 10^psi S_w,  K_rw = 10^((1-S_w) psi) - 10^psi (1-S_w),
    with psi(theta) = 0.05 - 22.5 phi(theta).
    """
    _, S_w = sorption(mat, s)
    psi = 0.05 - 22.5 * porosity(mat, s.theta)
    K_rg = 10.0 ** (S_w * psi) - 10.0**psi * S_w
    K_rw = 10.0 ** ((1.0 - S_w) * psi) - 10.0**psi * (1.0 - S_w)
    return np.clip(K_rw, 0.0, 1.0), np.clip(K_rg, 0.0, 1.0)


def intrinsic_permeability(mat: MaterialParams, D: ArrayLike) -> ArrayLike:
    """Damage-amplified intrinsic permeability K = K_ref 10^(4D) [m^2]."""
    D = np.asarray(D, dtype=float)
    if np.any((D < 0.0) | (D > 1.0)):
        raise ValueError("damage parameter must lie in [0, 1]")
    return mat.K_ref * 10.0 ** (4.0 * D)


# ---------------------------------------------------------------------------
# Heat transport properties
# ---------------------------------------------------------------------------

def dry_conductivity(mat: MaterialParams, theta: ArrayLike) -> ArrayLike:
    """Dry-concrete conductivity, linear in temperature, floored positive."""
    lam = mat.lambda_d_ref * (1.0 + mat.A_lambda * (np.asarray(theta, dtype=float) - mat.theta_ref))
    return np.maximum(lam, _LAMBDA_FLOOR)


def thermal_conductivity(mat: MaterialParams, s: FluidState) -> ArrayLike:
    """Effective conductivity of moist concrete [W m^-1 K^-1].

    lambda_c = lambda_d(theta) (1 + 4 phi rho_w S_w / ((1 - phi) rho_s));
    the moisture correction vanishes in the dry state and above the
    critical point.
    """
    theta = np.asarray(s.theta, dtype=float)
    lam_d = dry_conductivity(mat, theta)
    phi = porosity(mat, theta)
    _, S_w = sorption(mat, s)
    th_liq = np.minimum(theta, mat.theta_cr)
    corr = 4.0 * phi * _rho_w_unchecked(th_liq) * S_w / ((1.0 - phi) * mat.rho_s)
    return lam_d * (1.0 + corr)


# Specific heat capacity fit constants.
_CPA = (-9.84936701814735e-8, 3.56436257769861e-4, -1.21617923987757e-1, 1.01250255216324e3)
_CPW_A = 1.08542631988638
_CPW_B = 31.4447657616636
_CPV_A = 1.13771502228162
_CPV_B = 29.4435287521143
_CPV_SUPERCRITICAL = 45821.01


def air_heat_capacity(theta: ArrayLike) -> ArrayLike:
    """Dry air c_p [J kg^-1 K^-1], cubic fit."""
    th = np.asarray(theta, dtype=float)
    a, b, c, d = _CPA
    return ((a * th + b) * th + c) * th + d


def _cp_w_unchecked(theta: ArrayLike) -> ArrayLike:
    th = np.asarray(theta, dtype=float)
    return (2.4768 * th + 3368.2) + (_CPW_A * th / 513.15) ** _CPW_B


def water_heat_capacity(theta: ArrayLike) -> ArrayLike:
    """Liquid water c_p [J kg^-1 K^-1]; domain error above the critical point."""
    th = np.asarray(theta, dtype=float)
    if np.any(th > THETA_CR):
        raise ValueError("liquid heat capacity undefined above the critical point")
    return _cp_w_unchecked(th)


def vapour_heat_capacity(theta: ArrayLike) -> ArrayLike:
    """Water vapour c_p [J kg^-1 K^-1]; constant above the critical point."""
    th = np.asarray(theta, dtype=float)
    sub = np.minimum(th, THETA_CR)
    cp = (7.1399 * sub - 443.0) + (_CPV_A * sub / 513.15) ** _CPV_B
    return np.where(th <= THETA_CR, cp, _CPV_SUPERCRITICAL)


def solid_heat_capacity(theta: ArrayLike) -> ArrayLike:
    """Solid skeleton c_p [J kg^-1 K^-1], quadratic in Celsius/120."""
    z = (np.asarray(theta, dtype=float) - 273.15) / 120.0
    return 900.0 + 80.0 * z - 4.0 * z * z


def heat_capacities(s: FluidState) -> tuple[ArrayLike, ArrayLike, ArrayLike, ArrayLike]:
    """(c_p^w, c_p^v, c_p^a, c_p^s); the liquid entry raises above theta_cr."""
    return (
        water_heat_capacity(s.theta),
        vapour_heat_capacity(s.theta),
        air_heat_capacity(s.theta),
        solid_heat_capacity(s.theta),
    )


def enthalpies(theta: ArrayLike) -> tuple[ArrayLike, ArrayLike]:
    """(evaporation enthalpy h_e, dehydration enthalpy h_d) [J kg^-1].

    h_e follows the Watson form 2.672e5 (theta_cr - theta)^0.38 up to the
    critical point and is zero above; h_d is the constant 2.4e6.
    """
    th = np.asarray(theta, dtype=float)
    he = np.where(th <= THETA_CR, 2.672e5 * np.maximum(THETA_CR - th, 0.0) ** 0.38, 0.0)
    return he, np.full_like(th, 2.4e6)


def _dhe_dtheta(theta: ArrayLike) -> ArrayLike:
    # The Watson form has an integrable (theta_cr - theta)^-0.62 divergence
    # at the critical point; cap the gap at 1 K so advective coefficients
    # sampling the crossing stay bounded.
    th = np.asarray(theta, dtype=float)
    gap = np.maximum(THETA_CR - th, 1.0)
    return np.where(th < THETA_CR, -0.38 * 2.672e5 * gap ** (0.38 - 1.0), 0.0)


def dehydration_equilibrium(mat: MaterialParams, theta: ArrayLike) -> ArrayLike:
    """Equilibrium dehydrated water mass m_d,eq(theta) [kg m^-3].

    Three exponential-saturation terms activated at 378.15, 673.15 and
    813.15 K release 7.5%, 2% and 1.5% of m_eq_378 respectively;
    non-decreasing with asymptote 0.11 m_eq_378.
    """
    th = np.asarray(theta, dtype=float)
    out = np.zeros_like(th)
    for frac, onset, scale in ((0.075, 378.15, 200.0), (0.02, 673.15, 10.0), (0.015, 813.15, 5.0)):
        active = th > onset
        term = frac * mat.m_eq_378 * (1.0 - np.exp(-np.maximum(th - onset, 0.0) / scale))
        out = out + np.where(active, term, 0.0)
    return out


def mixture_heat_capacity(mat: MaterialParams, s: FluidState) -> tuple[ArrayLike, ArrayLike]:
    """Volumetric heat capacity (rho c_p) [J m^-3 K^-1] and apparent density.

    (rho c_p) = c_p^w rho_w eta_w + (c_p^v rho_v + c_p^a rho_a) eta_g
                + c_p^s rho_s eta_s
    with eta_w = phi S_w, eta_g = phi (1 - S_w), eta_s = 1 - phi.  Liquid
    terms vanish above the critical point.
    """
    theta = np.asarray(s.theta, dtype=float)
    phi = porosity(mat, theta)
    _, S_w = sorption(mat, s)
    eta_w = phi * S_w
    eta_g = phi * (1.0 - S_w)
    eta_s = 1.0 - phi

    th_liq = np.minimum(theta, mat.theta_cr)
    rho_w = np.where(theta <= mat.theta_cr, _rho_w_unchecked(th_liq), 0.0)
    cp_w = np.where(theta <= mat.theta_cr, _cp_w_unchecked(th_liq), 0.0)
    rho_v = vapour_density(s)
    rho_a = air_density(s)

    rho_cp = (
        cp_w * rho_w * eta_w
        + (vapour_heat_capacity(theta) * rho_v + air_heat_capacity(theta) * rho_a) * eta_g
        + solid_heat_capacity(theta) * mat.rho_s * eta_s
    )
    rho = rho_w * eta_w + (rho_v + rho_a) * eta_g + mat.rho_s * eta_s
    return rho_cp, rho
