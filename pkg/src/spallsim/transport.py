"""Nonlinear PDE coefficients of the moisture and energy balances.

The simplified model carries two fluxes: Darcian liquid water (driven by
the liquid pressure P - P_c) and Darcian vapour (driven by P).  Vapour
diffusion is excluded from the solver coefficients; it reappears only in
the material-point flux decomposition used by the analysis subcommand.

Above the critical point of water all liquid terms vanish and moisture
moves as vapour only.  The branch-defined coefficients therefore jump at
theta_cr; both one-sided limits are finite.

All functions are pure and thread-safe; coefficient evaluation at
quadrature points may run in parallel across elements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import CONST
from .materials import (
    ArrayLike,
    FluidState,
    MaterialParams,
    _cp_w_unchecked,
    _dhe_dtheta,
    _dphi_dtheta,
    _rho_w_unchecked,
    air_density,
    air_heat_capacity,
    capillary_pressure,
    dry_conductivity,
    enthalpies,
    gas_viscosity,
    intrinsic_permeability,
    mixture_heat_capacity,
    porosity,
    relative_permeabilities,
    solid_heat_capacity,
    sorption,
    sorption_with_partials,
    thermal_conductivity,
    vapour_density,
    vapour_heat_capacity,
    viscosities,
)

__all__ = [
    "MoistureCoefficients",
    "EnergyCoefficients",
    "FluxBreakdown",
    "FluxParams",
    "moisture_content",
    "vapour_mass_partials",
    "moisture_coefficients",
    "energy_coefficients",
    "all_coefficients",
    "flux_decomposition",
]


@dataclass(frozen=True)
class MoistureCoefficients:
    """Flux coefficients of the moisture balance: J_m = -K_mP grad P - K_mtheta grad theta."""

    K_mP: ArrayLike
    K_mtheta: ArrayLike


@dataclass(frozen=True)
class EnergyCoefficients:
    """Coefficients of the modified energy balance.

    M_thetaP dP/dt + M_thetatheta dtheta/dt + h_d dm_d/dt =
        div(K_thetaP grad P + K_thetatheta grad theta)
        + (C_thetaP grad P + C_thetatheta grad theta) . grad theta
    """

    M_thetaP: ArrayLike
    M_thetatheta: ArrayLike
    K_thetaP: ArrayLike
    K_thetatheta: ArrayLike
    C_thetaP: ArrayLike
    C_thetatheta: ArrayLike


def moisture_content(mat: MaterialParams, s: FluidState) -> ArrayLike:
    """Total moisture mass per unit volume m = eta_w rho_w + eta_v rho_v."""
    theta = np.asarray(s.theta, dtype=float)
    eta_w, S_w = sorption(mat, s)
    eta_v = porosity(mat, theta) * (1.0 - S_w)
    rho_w = np.where(theta <= mat.theta_cr, _rho_w_unchecked(np.minimum(theta, mat.theta_cr)), 0.0)
    return eta_w * rho_w + eta_v * vapour_density(s)


def vapour_mass_partials(mat: MaterialParams, s: FluidState) -> tuple[ArrayLike, ArrayLike]:
    """Partial derivatives of the vapour mass eta_v rho_v w.r.t. P and theta.

    eta_v = phi(theta) - eta_w(P, theta); the chain rule runs through the
    sorption isotherm, the porosity law and the perfect-gas density.
    """
    theta = np.asarray(s.theta, dtype=float)
    P = np.asarray(s.P, dtype=float)
    eta_w, deta_dP, deta_dth = sorption_with_partials(mat, s)
    phi = porosity(mat, theta)
    eta_v = phi - eta_w
    rho_v = vapour_density(s)
    drhov_dP = CONST.M_w / (theta * CONST.R)
    drhov_dth = -rho_v / theta

    d_dP = eta_v * drhov_dP - deta_dP * rho_v
    d_dth = (_dphi_dtheta(mat, theta) - deta_dth) * rho_v + eta_v * drhov_dth
    return d_dP, d_dth


def _darcy_mobilities(mat: MaterialParams, s: FluidState, D: ArrayLike):
    """Shared Darcy factors: (rho_w K K_rw / mu_w, rho_v K K_rg / mu_g, liquid mask)."""
    theta = np.asarray(s.theta, dtype=float)
    liquid = theta <= mat.theta_cr
    K = intrinsic_permeability(mat, D)
    K_rw, K_rg = relative_permeabilities(mat, s)
    mu_w, mu_g = viscosities(s)
    rho_v = vapour_density(s)
    rho_w = np.where(liquid, _rho_w_unchecked(np.minimum(theta, mat.theta_cr)), 0.0)
    lam_w = np.where(liquid, rho_w * K * K_rw / mu_w, 0.0)
    lam_v = rho_v * K * K_rg / mu_g
    return lam_w, lam_v, liquid, rho_w


def moisture_coefficients(mat: MaterialParams, s: FluidState, D: ArrayLike) -> MoistureCoefficients:
    """Moisture-balance flux coefficients.

    K_mP = rho_w (K K_rw / mu_w)(1 - dP_c/dP) + rho_v K K_rg / mu_g
    K_mtheta = -rho_w (K K_rw / mu_w) dP_c/dtheta

    Liquid terms vanish above the critical point, leaving the vapour
    contribution only.
    """
    lam_w, lam_v, _, _ = _darcy_mobilities(mat, s, D)
    _, dPc_dP, dPc_dth = capillary_pressure(s)
    return MoistureCoefficients(
        K_mP=lam_w * (1.0 - dPc_dP) + lam_v,
        K_mtheta=-lam_w * dPc_dth,
    )


def energy_coefficients(mat: MaterialParams, s: FluidState, D: ArrayLike) -> EnergyCoefficients:
    """Energy-balance coefficients (see EnergyCoefficients for the PDE form)."""
    theta = np.asarray(s.theta, dtype=float)
    lam_w, lam_v, liquid, _ = _darcy_mobilities(mat, s, D)
    _, dPc_dP, dPc_dth = capillary_pressure(s)
    h_e, _ = enthalpies(theta)
    dm_dP, dm_dth = vapour_mass_partials(mat, s)
    rho_cp, _ = mixture_heat_capacity(mat, s)
    cp_w = np.where(liquid, _cp_w_unchecked(np.minimum(theta, mat.theta_cr)), 0.0)
    gas_advect = (vapour_heat_capacity(theta) - _dhe_dtheta(theta)) * vapour_density(s) + (
        air_heat_capacity(theta) * air_density(s)
    )
    K = intrinsic_permeability(mat, D)
    K_rg = relative_permeabilities(mat, s)[1]
    _, mu_g = viscosities(s)

    return EnergyCoefficients(
        M_thetaP=h_e * dm_dP,
        M_thetatheta=rho_cp + h_e * dm_dth,
        K_thetaP=h_e * lam_v,
        K_thetatheta=thermal_conductivity(mat, s),
        C_thetaP=cp_w * lam_w * (1.0 - dPc_dP) + gas_advect * K * K_rg / mu_g,
        C_thetatheta=-cp_w * lam_w * dPc_dth,
    )


def all_coefficients(mat: MaterialParams, s: FluidState, D: ArrayLike):
    """(MoistureCoefficients, EnergyCoefficients) in one fused pass.

    Equivalent to calling moisture_coefficients and energy_coefficients,
    with the shared state (sorption, Darcy mobilities, Kelvin partials)
    evaluated once; this is the solver's hot path.
    """
    theta = np.asarray(s.theta, dtype=float)
    P = np.asarray(s.P, dtype=float)
    c = CONST
    liquid = theta <= mat.theta_cr
    th_liq = np.minimum(theta, mat.theta_cr)

    eta_w, deta_dP, deta_dth = sorption_with_partials(mat, s)
    phi = porosity(mat, theta)
    S_w = np.clip(eta_w / phi, 0.0, 1.0)
    eta_v = phi - eta_w

    psi = 0.05 - 22.5 * phi
    K_rg = np.clip(10.0 ** (S_w * psi) - 10.0**psi * S_w, 0.0, 1.0)
    K_rw = np.clip(10.0 ** ((1.0 - S_w) * psi) - 10.0**psi * (1.0 - S_w), 0.0, 1.0)

    K = intrinsic_permeability(mat, D)
    mu_w = 0.6612 * (theta - 229.0) ** -1.532
    P_a = np.maximum(c.P_atm - P, 0.0)
    mu_g = gas_viscosity(P, P_a, theta)
    rho_v = P * c.M_w / (theta * c.R)
    rho_a = P_a * c.M_a / (theta * c.R)
    rho_w = np.where(liquid, _rho_w_unchecked(th_liq), 0.0)
    lam_w = np.where(liquid, rho_w * K * K_rw / mu_w, 0.0)
    lam_v = rho_v * K * K_rg / mu_g
    _, dPc_dP, dPc_dth = capillary_pressure(s)

    moist = MoistureCoefficients(
        K_mP=lam_w * (1.0 - dPc_dP) + lam_v,
        K_mtheta=-lam_w * dPc_dth,
    )

    h_e, _ = enthalpies(theta)
    dm_dP = eta_v * c.M_w / (theta * c.R) - deta_dP * rho_v
    dm_dth = (_dphi_dtheta(mat, theta) - deta_dth) * rho_v - eta_v * rho_v / theta
    cp_w = np.where(liquid, _cp_w_unchecked(th_liq), 0.0)
    cp_v = vapour_heat_capacity(theta)
    cp_a = air_heat_capacity(theta)
    cp_s = solid_heat_capacity(theta)
    rho_cp = (
        cp_w * rho_w * phi * S_w
        + (cp_v * rho_v + cp_a * rho_a) * phi * (1.0 - S_w)
        + cp_s * mat.rho_s * (1.0 - phi)
    )
    lam_c = dry_conductivity(mat, theta) * (
        1.0 + 4.0 * phi * np.where(liquid, _rho_w_unchecked(th_liq), 0.0) * S_w
        / ((1.0 - phi) * mat.rho_s)
    )
    energy = EnergyCoefficients(
        M_thetaP=h_e * dm_dP,
        M_thetatheta=rho_cp + h_e * dm_dth,
        K_thetaP=h_e * lam_v,
        K_thetatheta=lam_c,
        C_thetaP=cp_w * lam_w * (1.0 - dPc_dP)
        + ((cp_v - _dhe_dtheta(theta)) * rho_v + cp_a * rho_a) * K * K_rg / mu_g,
        C_thetatheta=-cp_w * lam_w * dPc_dth,
    )
    return moist, energy


# ---------------------------------------------------------------------------
# Material-point flux decomposition (analysis only)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FluxParams:
    """Parameters of the flux-mechanism analysis.

    These enter only the analysis subcommand, never the solver.  The
    intrinsic permeability defaults to a reference undamaged concrete
    rather than the trial-fitted scenario values, which are deliberate
    underestimates.  The bound-water diffusivity D_B and the vapour
    diffusion structure factor f_D are order-of-magnitude literature
    values, exposed as pluggable parameters.

    K_intrinsic  intrinsic permeability for the map [m^2]
    S_ssp        solid saturation point separating adsorbed and capillary
                 liquid transport [-]
    D_B          bound (adsorbed) water diffusivity [m^2 s^-1]
    D_v0         free vapour-in-air diffusivity at 273.15 K, 1 atm [m^2 s^-1]
    f_D          structure (tortuosity) factor of vapour diffusion [-]
    """

    K_intrinsic: float = 1.88e-17
    S_ssp: float = 0.55
    D_B: float = 5.0e-11
    D_v0: float = 2.58e-5
    f_D: float = 4.0e-3


@dataclass(frozen=True)
class FluxBreakdown:
    """Per-mechanism coefficients of the total moisture flux.

    Coefficients c are defined through J = -c grad(variable): the four
    *_dP entries multiply grad P_v (all non-negative); the two *_dtheta
    entries multiply grad theta (signed).  total_dP is the sum of the
    four P_v-gradient coefficients.
    """

    vapour_flow_dP: ArrayLike
    vapour_diffusion_dP: ArrayLike
    liquid_water_flow_dP: ArrayLike
    adsorbed_water_diffusion_dP: ArrayLike
    liquid_water_flow_dtheta: ArrayLike
    adsorbed_water_diffusion_dtheta: ArrayLike

    @property
    def total_dP(self) -> ArrayLike:
        return (
            self.vapour_flow_dP
            + self.vapour_diffusion_dP
            + self.liquid_water_flow_dP
            + self.adsorbed_water_diffusion_dP
        )

    def dominant_dP(self) -> np.ndarray:
        """Label of the largest grad-P_v mechanism at each point."""
        stack = np.broadcast_arrays(
            np.asarray(self.vapour_flow_dP, dtype=float),
            np.asarray(self.vapour_diffusion_dP, dtype=float),
            np.asarray(self.liquid_water_flow_dP, dtype=float),
            np.asarray(self.adsorbed_water_diffusion_dP, dtype=float),
        )
        labels = np.array(
            ["vapour_flow", "vapour_diffusion", "liquid_water_flow", "adsorbed_water_diffusion"]
        )
        return labels[np.argmax(np.stack(stack), axis=0)]


def flux_decomposition(
    mat: MaterialParams,
    P_v: ArrayLike,
    P_a: ArrayLike,
    theta: ArrayLike,
    params: FluxParams = FluxParams(),
) -> FluxBreakdown:
    """Decompose the total moisture flux into its transport mechanisms.

    Multi-phase material-point analysis with an explicit dry-air pressure
    P_a: Darcian vapour flow, Fickian vapour diffusion, Darcian liquid
    (capillary) flow above the solid saturation point, and adsorbed water
    diffusion at or below it.  The undamaged intrinsic permeability of
    params is used.
    """
    P_v = np.asarray(P_v, dtype=float)
    P_a = np.asarray(P_a, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(P_v <= 0.0) or np.any(P_a < 0.0):
        raise ValueError("pressures must be positive (P_a may be zero)")
    c = CONST
    s = FluidState(P=P_v, theta=theta)

    liquid = theta <= mat.theta_cr
    eta_w, deta_dP, deta_dth = sorption_with_partials(mat, s)
    phi = porosity(mat, theta)
    S_w = np.clip(eta_w / phi, 0.0, 1.0)
    dSw_dP = deta_dP / phi
    dSw_dth = (deta_dth * phi - eta_w * _dphi_dtheta(mat, theta)) / phi**2

    K_rw, K_rg = relative_permeabilities(mat, s)
    mu_w = 0.6612 * (theta - 229.0) ** -1.532
    mu_g = gas_viscosity(P_v, P_a, theta)
    rho_v = P_v * c.M_w / (theta * c.R)
    rho_w = np.where(liquid, _rho_w_unchecked(np.minimum(theta, mat.theta_cr)), 0.0)
    _, dPc_dP, dPc_dth = capillary_pressure(s)

    adsorbed = liquid & (S_w <= params.S_ssp) & (S_w > 0.0)
    capillary = liquid & (S_w > params.S_ssp)
    # S_B = S_w below the solid saturation point, S_ssp above it.
    sb_frac = np.where(adsorbed, 1.0, np.where(capillary, params.S_ssp / np.maximum(S_w, 1e-300), 0.0))

    vapour_flow = rho_v * params.K_intrinsic * K_rg / mu_g

    P_g = P_v + P_a
    D_eff = (
        params.f_D
        * phi
        * (1.0 - S_w)
        * params.D_v0
        * (theta / 273.15) ** 1.667
        * (c.P_atm / P_g)
    )
    vapour_diff = c.M_a * c.M_w * P_a / (theta * c.R * (P_v * c.M_w + P_a * c.M_a)) * D_eff

    lam_w = np.where(liquid, rho_w * params.K_intrinsic * K_rw / mu_w, 0.0)
    liquid_dP = np.where(capillary, (1.0 - sb_frac) * lam_w * (1.0 - dPc_dP), 0.0)
    liquid_dth = np.where(capillary, -(1.0 - sb_frac) * lam_w * dPc_dth, 0.0)

    adsorbed_dP = np.where(adsorbed, rho_w * params.D_B * dSw_dP, 0.0)
    adsorbed_dth = np.where(adsorbed, rho_w * params.D_B * dSw_dth, 0.0)

    return FluxBreakdown(
        vapour_flow_dP=vapour_flow,
        vapour_diffusion_dP=vapour_diff,
        liquid_water_flow_dP=liquid_dP,
        adsorbed_water_diffusion_dP=adsorbed_dP,
        liquid_water_flow_dtheta=liquid_dth,
        adsorbed_water_diffusion_dtheta=adsorbed_dth,
    )
