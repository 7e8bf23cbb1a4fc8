"""Property-function tests.

Frozen expected values were computed by direct evaluation of the published
closed forms (independently of this package) and cross-checked against
steam-table physics where noted.
"""

import numpy as np
import pytest

from spallsim.constants import THETA_CR
from spallsim.materials import (
    Aggregate,
    ConcreteClass,
    FluidState,
    MaterialParams,
    _sorption_exponent,
    air_heat_capacity,
    capillary_pressure,
    dehydration_equilibrium,
    enthalpies,
    gas_viscosity,
    heat_capacities,
    intrinsic_permeability,
    mixture_heat_capacity,
    porosity,
    relative_permeabilities,
    saturation_vapour_pressure,
    solid_heat_capacity,
    sorption,
    sorption_with_partials,
    thermal_conductivity,
    vapour_density,
    vapour_heat_capacity,
    viscosities,
    water_density,
    water_heat_capacity,
)


@pytest.fixture
def kalifa() -> MaterialParams:
    return MaterialParams(
        f_c_ref=91.8e6, f_t_ref=4.9e6, cement_mass=414.8, phi_ref=0.0897,
        A_phi=2.4457e-5, rho_s=2660.0, lambda_d_ref=1.9759, A_lambda=-6.4215e-4,
        K_ref=1.3e-20, concrete_class=ConcreteClass.HSC2, aggregate=Aggregate.CALCAREOUS,
    )


def random_states(n=100, seed=0, theta_lo=274.0, theta_hi=640.0):
    rng = np.random.default_rng(seed)
    theta = rng.uniform(theta_lo, theta_hi, n)
    # pressures between 10 Pa and 95% of saturation
    P = rng.uniform(10.0, 0.95 * np.asarray(saturation_vapour_pressure(theta)))
    return FluidState(P=P, theta=theta)


class TestSaturationPressure:
    def test_frozen_values(self):
        # direct closed-form evaluation; 2340 Pa matches steam tables at 20 degC
        assert saturation_vapour_pressure(293.15) == pytest.approx(2340.1039900862156, rel=1e-12)
        # ~1 atm at the atmospheric boiling point
        assert saturation_vapour_pressure(373.15) == pytest.approx(101644.94953758207, rel=1e-12)

    def test_strictly_increasing(self):
        th = np.linspace(273.16, 1500.0, 2000)
        ps = saturation_vapour_pressure(th)
        assert np.all(np.diff(ps) > 0.0)

    def test_pole_guard(self):
        with pytest.raises(ValueError):
            saturation_vapour_pressure(80.0)


class TestVapourDensity:
    def test_frozen_value(self):
        s = FluidState(P=2339.0, theta=293.15)
        assert vapour_density(s) == pytest.approx(0.017288708777248488, rel=1e-12)

    def test_linearity_in_pressure(self):
        s1 = FluidState(P=1000.0, theta=400.0)
        s2 = FluidState(P=2000.0, theta=400.0)
        assert vapour_density(s2) == pytest.approx(2.0 * vapour_density(s1), rel=1e-14)


class TestCapillaryPressure:
    def test_zero_at_saturation(self):
        for th in (293.15, 400.0, 600.0):
            s = FluidState(P=float(saturation_vapour_pressure(th)), theta=th)
            Pc, _, _ = capillary_pressure(s)
            assert Pc == pytest.approx(0.0, abs=1e-6)

    def test_half_saturation_frozen(self):
        # +rho_w(293.15) * theta R / M_w * ln 2, evaluated independently
        th = 293.15
        s = FluidState(P=0.5 * float(saturation_vapour_pressure(th)), theta=th)
        Pc, _, _ = capillary_pressure(s)
        assert Pc == pytest.approx(94157750.3374781, rel=1e-10)

    def test_pressure_partial_frozen(self):
        th = 293.15
        s = FluidState(P=float(saturation_vapour_pressure(th)), theta=th)
        _, dP, _ = capillary_pressure(s)
        assert dP == pytest.approx(-58049.09527466599, rel=1e-10)

    def test_partials_match_finite_differences(self):
        s = random_states(100, seed=1)
        _, dPc_dP, dPc_dth = capillary_pressure(s)
        eps_P = 1e-6 * s.P
        eps_t = 1e-6 * s.theta
        Pp = capillary_pressure(FluidState(P=s.P + eps_P, theta=s.theta))[0]
        Pm = capillary_pressure(FluidState(P=s.P - eps_P, theta=s.theta))[0]
        tp = capillary_pressure(FluidState(P=s.P, theta=s.theta + eps_t))[0]
        tm = capillary_pressure(FluidState(P=s.P, theta=s.theta - eps_t))[0]
        assert np.allclose((Pp - Pm) / (2 * eps_P), dPc_dP, rtol=1e-5)
        assert np.allclose((tp - tm) / (2 * eps_t), dPc_dth, rtol=1e-5)

    def test_supercritical_is_zero(self):
        out = capillary_pressure(FluidState(P=1e5, theta=700.0))
        assert all(np.asarray(v) == 0.0 for v in out)


class TestWaterDensity:
    def test_frozen_values(self):
        # polynomial reads ~0.6% above steam-table water at 20 degC; kept as
        # published
        assert water_density(293.15) == pytest.approx(1004.0675916224, rel=1e-12)
        assert water_density(373.15) < water_density(293.15)

    def test_leading_coefficient(self):
        # at 0 degC only the constant terms survive: b0 + a0 * (-1e7)
        assert water_density(273.15) == pytest.approx(1021.3 - 4.8863, rel=1e-12)

    def test_supercritical_rejected(self):
        with pytest.raises(ValueError):
            water_density(THETA_CR + 1.0)


class TestViscosities:
    def test_liquid_frozen(self):
        mu_w, _ = viscosities(FluidState(P=2000.0, theta=293.15))
        assert mu_w == pytest.approx(0.0011264386947785808, rel=1e-12)

    def test_gas_reference_point(self):
        # pure-vapour limit at the fit's reference temperature
        assert gas_viscosity(1e5, 0.0, 273.15) == pytest.approx(8.85e-6, rel=1e-12)

    def test_gas_limit_high_pressure(self):
        # P >> P_atm implies zero implied air pressure: mu_g -> mu_gv
        _, mu_g = viscosities(FluidState(P=1e9, theta=400.0))
        assert mu_g == pytest.approx(8.85e-6 + 3.53e-8 * (400.0 - 273.15), rel=1e-12)


class TestPorosity:
    def test_reference(self, kalifa):
        assert porosity(kalifa, 293.15) == pytest.approx(0.0897, rel=1e-14)

    def test_linear_evaluation(self, kalifa):
        assert porosity(kalifa, 393.15) == pytest.approx(0.0921457, rel=1e-12)

    def test_constant_when_slope_zero(self, kalifa):
        from dataclasses import replace

        mat = replace(kalifa, A_phi=0.0)
        th = np.linspace(293.15, 900.0, 7)
        assert np.all(porosity(mat, th) == 0.0897)


class TestSorption:
    def test_saturated_branch(self, kalifa):
        th = 350.0
        P = 1.5 * float(saturation_vapour_pressure(th))
        eta, S_w = sorption(kalifa, FluidState(P=P, theta=th))
        assert eta == pytest.approx(float(porosity(kalifa, th)), rel=1e-14)
        assert S_w == 1.0

    def test_supercritical_dry(self, kalifa):
        eta, S_w = sorption(kalifa, FluidState(P=1e6, theta=THETA_CR + 10.0))
        assert eta == 0.0
        assert S_w == 0.0

    def test_exponent_at_reference(self):
        assert _sorption_exponent(298.15) == pytest.approx(0.9971550985432733, rel=1e-12)

    @pytest.mark.parametrize("theta", [293.15, 373.15, 473.15])
    def test_c1_continuity_at_knots(self, kalifa, theta):
        Ps = float(saturation_vapour_pressure(theta))

        def eta(h):
            return float(sorption(kalifa, FluidState(P=h * Ps, theta=theta))[0])

        scale = eta(0.96) / 0.04  # characteristic slope in h
        d = 1e-9
        for knot in (0.96, 1.00):
            s_minus = (eta(knot) - eta(knot - d)) / d * (1.0 / Ps)
            s_plus = (eta(knot + d) - eta(knot)) / d * (1.0 / Ps)
            assert abs(s_plus - s_minus) / (scale / Ps) < 1e-6
            # value continuity
            assert abs(eta(knot + d) - eta(knot - d)) < 1e-8

    def test_bounds_on_random_grid(self, kalifa):
        rng = np.random.default_rng(7)
        theta = rng.uniform(274.0, 900.0, 400)
        P = rng.uniform(5.0, 1.2e6, 400)
        eta, S_w = sorption(kalifa, FluidState(P=P, theta=theta))
        phi = porosity(kalifa, theta)
        assert np.all(eta >= 0.0) and np.all(eta <= phi + 1e-15)
        assert np.all(S_w >= 0.0) and np.all(S_w <= 1.0)

    def test_partials_match_finite_differences(self, kalifa):
        s = random_states(100, seed=3)
        _, de_dP, de_dth = sorption_with_partials(kalifa, s)
        hP = 1e-6 * s.P
        ht = 1e-6 * s.theta
        up = sorption(kalifa, FluidState(P=s.P + hP, theta=s.theta))[0]
        dn = sorption(kalifa, FluidState(P=s.P - hP, theta=s.theta))[0]
        assert np.allclose((up - dn) / (2 * hP), de_dP, rtol=2e-5, atol=1e-18)
        up = sorption(kalifa, FluidState(P=s.P, theta=s.theta + ht))[0]
        dn = sorption(kalifa, FluidState(P=s.P, theta=s.theta - ht))[0]
        assert np.allclose((up - dn) / (2 * ht), de_dth, rtol=2e-5, atol=1e-18)


class TestRelativePermeabilities:
    def test_endpoint_identities_exact(self, kalifa):
        # S_w = 0 exactly above the critical point
        K_rw, K_rg = relative_permeabilities(kalifa, FluidState(P=1e5, theta=700.0))
        assert K_rw == 0.0 and K_rg == 1.0
        # S_w = 1 exactly at saturation
        th = 350.0
        K_rw, K_rg = relative_permeabilities(
            kalifa, FluidState(P=2.0 * float(saturation_vapour_pressure(th)), theta=th)
        )
        assert K_rw == 1.0 and K_rg == 0.0

    def test_half_saturation_frozen(self):
        from dataclasses import replace
        from scipy.optimize import brentq

        # phi = 0.1 gives psi = -2.2; locate the pressure where S_w = 0.5
        mat = MaterialParams(
            f_c_ref=60e6, f_t_ref=4e6, cement_mass=415.0, phi_ref=0.1, A_phi=0.0,
            rho_s=2660.0, lambda_d_ref=2.0, A_lambda=-6e-4, K_ref=1e-20,
            concrete_class=ConcreteClass.HSC1, aggregate=Aggregate.CALCAREOUS,
        )
        th = 293.15

        def half(P):
            return float(sorption(mat, FluidState(P=P, theta=th))[1]) - 0.5

        P_half = brentq(half, 10.0, float(saturation_vapour_pressure(th)))
        _, K_rg = relative_permeabilities(mat, FluidState(P=P_half, theta=th))
        assert K_rg == pytest.approx(0.07627803675002717, rel=1e-9)

    def test_bounds(self, kalifa):
        s = random_states(300, seed=11)
        K_rw, K_rg = relative_permeabilities(kalifa, s)
        assert np.all((K_rw >= 0) & (K_rw <= 1))
        assert np.all((K_rg >= 0) & (K_rg <= 1))


class TestIntrinsicPermeability:
    def test_damage_amplification(self, kalifa):
        assert intrinsic_permeability(kalifa, 0.0) == pytest.approx(1.3e-20, rel=1e-14)
        assert intrinsic_permeability(kalifa, 1.0) == pytest.approx(1.3e-16, rel=1e-12)
        assert intrinsic_permeability(kalifa, 0.5) == pytest.approx(100 * 1.3e-20, rel=1e-12)

    def test_domain(self, kalifa):
        with pytest.raises(ValueError):
            intrinsic_permeability(kalifa, 1.5)


class TestThermalConductivity:
    def test_reference_dry(self, kalifa):
        lam = thermal_conductivity(kalifa, FluidState(P=1e-6, theta=293.15))
        assert lam == pytest.approx(1.9759, rel=1e-5)

    def test_dry_linear_evaluation(self, kalifa):
        lam = thermal_conductivity(kalifa, FluidState(P=1e-6, theta=493.15))
        assert lam == pytest.approx(1.722135163, rel=1e-5)

    def test_dry_equals_lambda_d_supercritical(self, kalifa):
        lam = thermal_conductivity(kalifa, FluidState(P=1e6, theta=800.0))
        assert lam == pytest.approx(1.9759 * (1 - 6.4215e-4 * (800.0 - 293.15)), rel=1e-12)


class TestHeatCapacities:
    def test_solid_frozen(self):
        assert solid_heat_capacity(293.15) == pytest.approx(913.2222222222223, rel=1e-12)

    def test_vapour_supercritical_constant(self):
        assert vapour_heat_capacity(700.0) == 45821.01
        assert vapour_heat_capacity(1200.0) == 45821.01

    def test_air_cubic(self):
        from spallsim.materials import _CPA

        assert _CPA[0] == -9.84936701814735e-8
        # fit reproduces ~1005 J/kg/K at room temperature
        assert air_heat_capacity(293.15) == pytest.approx(1005.0, abs=0.5)

    def test_liquid_domain_error(self):
        with pytest.raises(ValueError):
            water_heat_capacity(THETA_CR + 1.0)
        with pytest.raises(ValueError):
            heat_capacities(FluidState(P=1e5, theta=THETA_CR + 1.0))


class TestEnthalpies:
    def test_zero_at_critical(self):
        h_e, _ = enthalpies(THETA_CR)
        assert h_e == 0.0

    def test_continuity_at_critical(self):
        # (theta_cr - theta)^0.38 approaches zero slowly; check both sides
        # converge to the same limit
        below = [float(enthalpies(THETA_CR - d)[0]) for d in (1e-3, 1e-6, 1e-9, 1e-12)]
        assert all(a > b for a, b in zip(below, below[1:]))
        assert below[-1] < 10.0
        assert float(enthalpies(THETA_CR + 1e-12)[0]) == 0.0

    def test_boiling_frozen(self):
        # matches the latent heat of steam (2.257 MJ/kg) to 0.1%
        h_e, _ = enthalpies(373.15)
        assert h_e == pytest.approx(2255651.4337531193, rel=1e-12)

    def test_dehydration_constant(self):
        _, h_d = enthalpies(np.array([300.0, 700.0, 1200.0]))
        assert np.all(h_d == 2.4e6)


class TestDehydrationEquilibrium:
    def test_inactive_below_onset(self, kalifa):
        th = np.linspace(273.15, 378.15, 10)
        assert np.all(dehydration_equilibrium(kalifa, th) == 0.0)

    def test_single_term_frozen(self, kalifa):
        assert dehydration_equilibrium(kalifa, 578.15) == pytest.approx(
            9.955898801549782, rel=1e-12
        )

    def test_asymptote(self, kalifa):
        assert dehydration_equilibrium(kalifa, 1.0e4) == pytest.approx(23.1, rel=1e-9)

    def test_monotone_and_bounded(self, kalifa):
        th = np.linspace(293.15, 2000.0, 4000)
        md = dehydration_equilibrium(kalifa, th)
        assert np.all(np.diff(md) >= -1e-12)
        assert np.all(md <= 0.11 * kalifa.m_eq_378 + 1e-12)


class TestMixture:
    def test_dry_limit(self, kalifa):
        _, rho = mixture_heat_capacity(kalifa, FluidState(P=1e-6, theta=293.15))
        assert rho == pytest.approx(2660 * (1 - 0.0897), rel=1e-4)

    def test_positive_heat_capacity(self, kalifa):
        s = random_states(200, seed=13, theta_hi=900.0)
        rho_cp, rho = mixture_heat_capacity(kalifa, s)
        assert np.all(rho_cp > 0.0)
        assert np.all(rho > 0.0)


class TestFluidStateInvariants:
    def test_rejects_nonpositive_pressure(self):
        with pytest.raises(ValueError):
            FluidState(P=0.0, theta=300.0)

    def test_rejects_freezing(self):
        with pytest.raises(ValueError):
            FluidState(P=1e3, theta=250.0)


class TestMaterialParamsInvariants:
    def test_rejects_bad_eccentricity(self, kalifa):
        from dataclasses import replace

        with pytest.raises(ValueError):
            replace(kalifa, e_F=0.4)

    def test_rejects_bad_porosity(self, kalifa):
        from dataclasses import replace

        with pytest.raises(ValueError):
            replace(kalifa, phi_ref=1.2)
