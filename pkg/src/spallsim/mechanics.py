"""Temperature-dependent mechanics: strength, stiffness, stress and failure.

Sign convention: strains and stresses are positive in tension and negative
in compression, while the strengths f_c and f_t are positive magnitudes.
Consequently the tabulated peak/ultimate strains are returned as negative
numbers by strength_parameters.

The strength-reduction factors and constitutive-law strains are bundled as
a data file transcribed from EN 1992-1-2:2004 (Tables 3.1 and 6.1N),
verified at load time by checksum and by monotonicity of the reduction
columns.
"""

from __future__ import annotations

import hashlib
from importlib import resources

import numpy as np

from .materials import (
    Aggregate,
    ArrayLike,
    ConcreteClass,
    FluidState,
    MaterialParams,
    porosity,
)

_TABLE_FILE = "strength_reduction.txt"
_TABLE_SHA256 = "df2906e2c8e7f240b3c96f3d96596bd7a2f5304846a07b93a2ac75dbb5faaa2c"

_KC_COLUMN = {
    ConcreteClass.NSC_SILICEOUS: 1,
    ConcreteClass.NSC_CALCAREOUS: 2,
    ConcreteClass.HSC1: 3,
    ConcreteClass.HSC2: 4,
    ConcreteClass.HSC3: 5,
}

_table_cache: np.ndarray | None = None


def _load_table() -> np.ndarray:
    global _table_cache
    if _table_cache is None:
        raw = resources.files("spallsim.data").joinpath(_TABLE_FILE).read_bytes()
        digest = hashlib.sha256(raw).hexdigest()
        if digest != _TABLE_SHA256:
            raise RuntimeError(
                f"strength table checksum mismatch: expected {_TABLE_SHA256}, got {digest}"
            )
        rows = [
            [float(tok) for tok in line.split()]
            for line in raw.decode().splitlines()
            if line.strip() and not line.lstrip().startswith("#")
        ]
        table = np.array(rows)
        if np.any(np.diff(table[:, 0]) <= 0.0):
            raise RuntimeError("strength table temperatures must increase")
        for col in range(1, 6):
            if np.any(np.diff(table[:, col]) > 0.0):
                raise RuntimeError("strength reduction factors must be non-increasing")
            if table[0, col] != 1.0:
                raise RuntimeError("strength reduction must be 1 at 20 degC")
        _table_cache = table
    return _table_cache


def strength_curve_table(concrete_class: ConcreteClass) -> np.ndarray:
    """Rows (theta_C, k_c, eps_c1, eps_cu1) for one class, strains positive."""
    table = _load_table()
    col = _KC_COLUMN[concrete_class]
    return np.column_stack([table[:, 0], table[:, col], table[:, 6], table[:, 7]])


_THETA_TOL = 1e-9


def strength_parameters(mat: MaterialParams, theta: ArrayLike):
    """Compressive strength and constitutive strains at temperature.

    Returns (f_c [Pa], eps_c1 [-], eps_cu1 [-]) by piecewise-linear
    interpolation of the bundled table; the strains are returned signed
    negative (compression).  Raises outside the tabulated 20-1200 degC.
    """
    theta_C = np.asarray(theta, dtype=float) - 273.15
    table = _load_table()
    if np.any(theta_C < table[0, 0] - _THETA_TOL) or np.any(theta_C > table[-1, 0] + _THETA_TOL):
        raise ValueError("temperature outside the 20-1200 degC strength-table range")
    kc = np.interp(theta_C, table[:, 0], table[:, _KC_COLUMN[mat.concrete_class]])
    eps_c1 = -np.interp(theta_C, table[:, 0], table[:, 6])
    eps_cu1 = -np.interp(theta_C, table[:, 0], table[:, 7])
    return kc * mat.f_c_ref, eps_c1, eps_cu1


# Free thermal strain: cubic in Celsius temperature up to a plateau knot.
_STRAIN_POLY = {
    Aggregate.SILICEOUS: ((-1.8e-4, 9e-6, 0.0, 2.3e-11), 973.15, 14e-3),
    Aggregate.CALCAREOUS: ((-1.2e-4, 6e-6, 0.0, 1.4e-11), 1078.15, 12e-3),
}


def free_thermal_strain(theta: ArrayLike, aggregate: Aggregate) -> ArrayLike:
    """Free thermal strain of concrete, >= 0, defined on [293.15, 1473.15] K.

    The published polynomials are calibrated against Celsius temperature
    (they vanish at 20 degC); the branch knot and the plateau value depend
    on the aggregate type.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(th < 293.15 - _THETA_TOL) or np.any(th > 1473.15 + _THETA_TOL):
        raise ValueError("temperature outside the 293.15-1473.15 K strain range")
    coeffs, knot, plateau = _STRAIN_POLY[Aggregate(aggregate)]
    tc = np.minimum(th, knot) - 273.15
    eps = np.polynomial.polynomial.polyval(tc, np.asarray(coeffs))
    return np.where(th > knot, plateau, eps)


def compressive_stress(mat: MaterialParams, eps_m: ArrayLike, theta: ArrayLike) -> ArrayLike:
    """Uniaxial compressive stress [Pa] from the total mechanical strain.

    sigma = -3 eps_m f_c / (eps_c1 [2 + (eps_m/eps_c1)^3]) on
    (eps_cu1, 0], zero at or below the ultimate strain.  Requires
    eps_m <= 0 and returns sigma <= 0.
    """
    eps_m = np.asarray(eps_m, dtype=float)
    if np.any(eps_m > 0.0):
        raise ValueError("mechanical strain must be compressive (<= 0)")
    f_c, eps_c1, eps_cu1 = strength_parameters(mat, theta)
    ratio = eps_m / eps_c1
    sigma = -3.0 * eps_m * f_c / (eps_c1 * (2.0 + ratio**3))
    return np.where(eps_m <= eps_cu1, 0.0, sigma)


def reference_tensile_strength(f_c_ref_MPa: float) -> float:
    """Room-temperature tensile strength estimate [Pa] from f_c_ref [MPa]."""
    return 2.12e6 * np.log(1.0 + f_c_ref_MPa / 10.0)


def tensile_strength(theta: ArrayLike, f_t_ref: float) -> ArrayLike:
    """Tensile strength [Pa]: four-branch linear reduction, zero past 1473.15 K."""
    th = np.asarray(theta, dtype=float)
    factor = np.select(
        [th <= 373.15, th <= 823.15, th <= 1473.15],
        [1.0, (873.15 - th) / 500.0, (1473.15 - th) / 6500.0],
        default=0.0,
    )
    return f_t_ref * factor


def poisson_ratio(theta: ArrayLike) -> ArrayLike:
    """Poisson's ratio, ramping linearly from 0.2 to 0.7 over 293.15-873.15 K."""
    th = np.asarray(theta, dtype=float)
    return np.clip(0.2 + 0.5 * (th - 293.15) / 580.0, 0.2, 0.7)


def elastic_properties(mat: MaterialParams, theta: ArrayLike):
    """(E_c [Pa], nu [-]) with E_c = 3 f_c(theta) / (2 |eps_c1(theta)|)."""
    f_c, eps_c1, _ = strength_parameters(mat, theta)
    return 3.0 * f_c / (2.0 * np.abs(eps_c1)), poisson_ratio(theta)


def hygro_thermal_stress(mat: MaterialParams, s: FluidState) -> ArrayLike:
    """Tensile stress from pore-pressure build-up: sigma_ht = P phi(theta) >= 0."""
    return np.asarray(s.P, dtype=float) * porosity(mat, s.theta)


def thermo_mechanical_stress(mat: MaterialParams, theta: ArrayLike) -> ArrayLike:
    """Compressive in-plane stress of a fully restrained heated wall [Pa].

    Full restraint forces the mechanical strain to cancel the free thermal
    strain, eps_m = -eps_theta(theta); plane-stress conditions divide the
    uniaxial stress by (1 - nu).
    """
    eps_m = -free_thermal_strain(theta, mat.aggregate)
    sigma = compressive_stress(mat, eps_m, theta)
    return sigma / (1.0 - poisson_ratio(theta))


def _deviatoric_shape(cos_theta: ArrayLike, e_F: float) -> ArrayLike:
    """Elliptic deviatoric shape function r(vartheta, e_F)."""
    c = np.asarray(cos_theta, dtype=float)
    one_e2 = 1.0 - e_F * e_F
    num = 4.0 * one_e2 * c * c + (2.0 * e_F - 1.0) ** 2
    rad = np.maximum(4.0 * one_e2 * c * c + 5.0 * e_F * e_F - 4.0 * e_F, 0.0)
    den = 2.0 * one_e2 * c + (2.0 * e_F - 1.0) * np.sqrt(rad)
    return num / den


def menetrey_willam(
    sigma1: ArrayLike,
    sigma2: ArrayLike,
    sigma3: ArrayLike,
    f_c: ArrayLike,
    f_t: ArrayLike,
    e_F: float,
) -> ArrayLike:
    """Triaxial failure function in Haigh-Westergaard coordinates.

    F = (sqrt(1.5) rho / f_c)^2
        + 3 (f_c^2 - f_t^2)/(f_c f_t) e_F/(e_F + 1)
          (rho r(vartheta, e_F) / (sqrt(6) f_c) + xi / (sqrt(3) f_c))

    F = 1 on the failure surface.  Hydrostatic states (rho = 0) take
    vartheta = 0, r = 1/e_F.
    """
    if not 0.5 < e_F <= 1.0:
        raise ValueError("e_F must lie in (0.5, 1.0]")
    s1 = np.asarray(sigma1, dtype=float)
    s2 = np.asarray(sigma2, dtype=float)
    s3 = np.asarray(sigma3, dtype=float)
    f_c = np.asarray(f_c, dtype=float)
    f_t = np.asarray(f_t, dtype=float)
    if np.any(f_c <= 0.0) or np.any(f_t <= 0.0):
        raise ValueError("strengths must be positive")

    i1 = s1 + s2 + s3
    d1, d2, d3 = s1 - i1 / 3.0, s2 - i1 / 3.0, s3 - i1 / 3.0
    j2 = 0.5 * (d1 * d1 + d2 * d2 + d3 * d3)
    j3 = d1 * d2 * d3

    xi = i1 / np.sqrt(3.0)
    rho = np.sqrt(2.0 * j2)
    hydrostatic = rho == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        cos3t = np.where(hydrostatic, 1.0, 1.5 * np.sqrt(3.0) * j3 / np.maximum(j2, 1e-300) ** 1.5)
    vartheta = np.arccos(np.clip(cos3t, -1.0, 1.0)) / 3.0
    r = np.where(hydrostatic, 1.0 / e_F, _deviatoric_shape(np.cos(vartheta), e_F))

    quad = 1.5 * (rho / f_c) ** 2
    lin = (
        3.0
        * (f_c**2 - f_t**2)
        / (f_c * f_t)
        * (e_F / (e_F + 1.0))
        * (rho * r / (np.sqrt(6.0) * f_c) + xi / (np.sqrt(3.0) * f_c))
    )
    return quad + lin


def failure_function(mat: MaterialParams, s: FluidState) -> ArrayLike:
    """Failure parameter F for the wall stress state; spalling onsets at F > 1.

    Specialization of the triaxial surface to sigma_1 = sigma_ht >= 0 and
    sigma_2 = sigma_3 = sigma_tm <= 0:

    F = ((sigma_ht - sigma_tm)/f_c)^2
        + (f_c^2 - f_t^2)/(f_c^2 f_t)
          (sigma_ht + (2 e_F - 1)/(e_F + 1) sigma_tm)
    """
    theta = np.asarray(s.theta, dtype=float)
    f_c, _, _ = strength_parameters(mat, theta)
    f_t = tensile_strength(theta, mat.f_t_ref)
    if np.any(f_t <= 0.0):
        raise ValueError("tensile strength is zero: material fully degraded")
    s_ht = hygro_thermal_stress(mat, s)
    s_tm = thermo_mechanical_stress(mat, theta)
    e_F = mat.e_F
    return ((s_ht - s_tm) / f_c) ** 2 + (f_c**2 - f_t**2) / (f_c**2 * f_t) * (
        s_ht + (2.0 * e_F - 1.0) / (e_F + 1.0) * s_tm
    )


def damage(mat: MaterialParams, s: FluidState):
    """Multiplicative damage (D, D_m, D_theta), all in [0, 1].

    D_m is the failure parameter clamped to [0, 1]; D_theta averages the
    thermal degradation of E_c, f_c and f_t relative to room temperature;
    D = D_m + D_theta - D_m D_theta.
    """
    theta = np.asarray(s.theta, dtype=float)
    D_m = np.clip(failure_function(mat, s), 0.0, 1.0)

    f_c, eps_c1, _ = strength_parameters(mat, theta)
    E_c = 3.0 * f_c / (2.0 * np.abs(eps_c1))
    f_c0, eps0, _ = strength_parameters(mat, 293.15)
    E_c0 = 3.0 * f_c0 / (2.0 * abs(eps0))
    f_t = tensile_strength(theta, mat.f_t_ref)
    D_th = 1.0 - (E_c / E_c0 + f_c / mat.f_c_ref + f_t / mat.f_t_ref) / 3.0
    D_th = np.clip(D_th, 0.0, 1.0)

    return D_m + D_th - D_m * D_th, D_m, D_th
