"""Physical constants shared across the model (SI units)."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Fixed physical constants.

    R          universal gas constant [J mol^-1 K^-1]
    M_w        molar mass of water vapour [kg mol^-1]
    M_a        molar mass of dry air [kg mol^-1]
    sigma_SB   Stefan-Boltzmann constant [W m^-2 K^-4]
    P_atm      standard atmospheric pressure [Pa]
    """

    R: float = 8.3145
    M_w: float = 0.018016
    M_a: float = 0.028965
    sigma_SB: float = 5.67e-8
    P_atm: float = 101325.0


CONST = PhysicalConstants()

# Critical point of water used by the liquid/vapour branch switches.
# Chosen consistently with the evaporation-enthalpy constant: with this
# value the Watson form gives 2.256 MJ/kg at 373.15 K, the latent heat
# of steam at atmospheric boiling.
THETA_CR = 647.3
