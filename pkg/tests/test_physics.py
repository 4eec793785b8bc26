"""Closed-form physics: worked examples against independent arithmetic
oracles, plus invariance properties on seeded random parameter grids."""

import math

import numpy as np
import pytest

from fibersps.constants import PLANCK_H, SPEED_OF_LIGHT
from fibersps.physics import (
    EmitterParams,
    Measured,
    OpticsParams,
    PumpParams,
    absorption_time,
    absorption_time_composed,
    channeling_efficiency,
    collection_efficiency_ratio,
    g2_model,
    lifetime_intensity,
    objective_collection_efficiency,
    pump_intensity,
    ratio_with_uncertainty,
)


class TestLifetimeIntensity:
    def setup_method(self):
        self.p = EmitterParams(tau_life=452e-6, tau_abs=5.5e-9, i0=100.0)

    def test_zero_delay_returns_amplitude(self):
        assert lifetime_intensity(0.0, self.p) == 100.0

    def test_one_time_constant(self):
        assert lifetime_intensity(452e-6, self.p) == pytest.approx(100.0 / math.e, rel=1e-12)

    def test_two_time_constants(self):
        # direct arithmetic: 100 * e^-2
        assert lifetime_intensity(904e-6, self.p) == pytest.approx(
            100.0 * math.exp(-2.0), rel=1e-12
        )

    def test_rejects_negative_and_nonfinite(self):
        with pytest.raises(ValueError):
            lifetime_intensity(-1e-9, self.p)
        with pytest.raises(ValueError):
            lifetime_intensity(math.nan, self.p)
        with pytest.raises(ValueError):
            lifetime_intensity(math.inf, self.p)

    def test_strictly_decreasing(self):
        t = np.linspace(0, 2e-3, 200)
        vals = lifetime_intensity(t, self.p)
        assert np.all(np.diff(vals) < 0)

    def test_scale_invariance_grid(self):
        # I(t + tau_life) / I(t) = 1/e for any t
        rng = np.random.default_rng(7)
        for _ in range(1000):
            tau = rng.uniform(1e-6, 1e-2)
            p = EmitterParams(tau_life=tau, tau_abs=1e-9, i0=rng.uniform(0.1, 1e6))
            t = rng.uniform(0, 5 * tau)
            ratio = lifetime_intensity(t + tau, p) / lifetime_intensity(t, p)
            assert ratio == pytest.approx(1.0 / math.e, rel=1e-12)


class TestG2Model:
    def setup_method(self):
        self.p = EmitterParams(tau_life=452e-6, tau_abs=5.5e-9)

    def test_zero_delay_returns_g2_zero(self):
        assert g2_model(0.0, 0.15, self.p) == 0.15

    def test_poissonian_light_is_flat(self):
        for tau in (0.0, 1e-9, 1e-6, 1e-3):
            assert g2_model(tau, 1.0, self.p) == 1.0

    def test_one_absorption_time(self):
        # direct arithmetic at tau = tau_abs; the lifetime term shifts the
        # exponent by < 1e-4 relative
        rate = 1.0 / 5.5e-9 + 1.0 / 452e-6
        expected = 1.0 - 0.85 * math.exp(-rate * 5.5e-9)
        value = g2_model(5.5e-9, 0.15, self.p)
        assert value == pytest.approx(expected, rel=1e-12)
        assert value == pytest.approx(0.687, abs=5e-4)

    def test_rejects_bad_g2_zero(self):
        with pytest.raises(ValueError):
            g2_model(0.0, -0.1, self.p)
        with pytest.raises(ValueError):
            g2_model(0.0, 1.1, self.p)

    def test_monotone_nondecreasing_grid(self):
        rng = np.random.default_rng(11)
        tau_grid = np.linspace(0, 100e-9, 64)
        for _ in range(1000):
            p = EmitterParams(
                tau_life=rng.uniform(1e-6, 1e-3), tau_abs=rng.uniform(1e-9, 1e-7)
            )
            g0 = rng.uniform(0.0, 0.999)
            vals = g2_model(tau_grid, g0, p)
            assert vals[0] == g0
            assert np.all(np.diff(vals) >= 0)
            assert vals[-1] <= 1.0


class TestPumpAbsorptionAlgebra:
    def test_pump_intensity_selective(self):
        # Table-scale check: 2.0 uW over a 9 um spot
        value = pump_intensity(2.0e-6, 9e-6)
        assert value == pytest.approx(2.0e-6 / (math.pi * 4.5e-6**2), rel=1e-12)
        assert 3.0e4 <= value <= 3.2e4

    def test_pump_intensity_nonselective(self):
        value = pump_intensity(0.2e-6, 2e-6)
        assert value == pytest.approx(0.2e-6 / (math.pi * 1e-6**2), rel=1e-12)
        assert 6.2e4 <= value <= 6.6e4

    def test_pump_intensity_zero_power(self):
        assert pump_intensity(0.0, 9e-6) == 0.0

    def test_pump_intensity_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            pump_intensity(-1e-6, 9e-6)
        with pytest.raises(ValueError):
            pump_intensity(1e-6, 0.0)

    def test_absorption_time_halves_when_intensity_doubles(self):
        pump = PumpParams(power=2e-6, beam_diameter=9e-6, wavelength=808e-9, linewidth=1e-9)
        t1 = absorption_time(pump, 3e4, 452e-6)
        t2 = absorption_time(pump, 6e4, 452e-6)
        assert t2 == t1 / 2.0  # exact: power-of-two rescale

    def test_absorption_time_term_by_term(self):
        # independent oracle: assemble the closed form factor by factor
        lam, dlam, tau_life, intensity = 808e-9, 1e-9, 452e-6, 3e4
        pump = PumpParams(power=2e-6, beam_diameter=9e-6, wavelength=lam, linewidth=dlam)
        expected = 8.0 * math.pi
        expected *= PLANCK_H
        expected *= SPEED_OF_LIGHT * SPEED_OF_LIGHT
        expected *= dlam
        expected *= tau_life
        expected /= lam * lam * lam * lam * lam
        expected /= intensity
        assert absorption_time(pump, intensity, tau_life) == pytest.approx(expected, rel=1e-12)

    def test_composition_identity_grid(self):
        # energy-density + absorption-coefficient route agrees with the
        # single closed form to better than 1e-10 relative on random draws
        rng = np.random.default_rng(5)
        for _ in range(1000):
            pump = PumpParams(
                power=rng.uniform(1e-8, 1e-3),
                beam_diameter=rng.uniform(1e-6, 1e-4),
                wavelength=rng.uniform(3e-7, 2e-6),
                linewidth=rng.uniform(1e-12, 1e-8),
            )
            intensity = rng.uniform(1.0, 1e7)
            tau_life = rng.uniform(1e-6, 1e-2)
            direct = absorption_time(pump, intensity, tau_life)
            composed = absorption_time_composed(pump, intensity, tau_life)
            assert composed == pytest.approx(direct, rel=1e-10)

    def test_inverse_intensity_scaling(self):
        pump = PumpParams(power=2e-6, beam_diameter=9e-6, wavelength=808e-9, linewidth=1e-9)
        base = absorption_time(pump, 1.25e4, 452e-6)
        for k in (2.0, 4.0, 0.5, 0.25, 8.0):
            assert absorption_time(pump, k * 1.25e4, 452e-6) == base / k
        for k in (3.0, 7.7, 0.11):
            assert absorption_time(pump, k * 1.25e4, 452e-6) == pytest.approx(
                base / k, rel=1e-14
            )

    def test_absorption_time_rejects_nonpositive_intensity(self):
        pump = PumpParams(power=2e-6, beam_diameter=9e-6, wavelength=808e-9, linewidth=1e-9)
        with pytest.raises(ValueError):
            absorption_time(pump, 0.0, 452e-6)
        with pytest.raises(ValueError):
            absorption_time(pump, -3e4, 452e-6)


class TestCollectionGeometry:
    def test_objective_na_half(self):
        eta = objective_collection_efficiency(OpticsParams(numerical_aperture=0.5))
        assert eta == pytest.approx(0.5 * (1 - math.sqrt(0.75)), rel=1e-12)
        assert abs(eta - 0.06699) < 1e-5

    def test_objective_limit_na_to_n(self):
        eta = objective_collection_efficiency(OpticsParams(numerical_aperture=1.0, medium_index=1.0))
        assert eta == pytest.approx(0.5, abs=1e-12)

    def test_objective_zero_aperture(self):
        assert objective_collection_efficiency(OpticsParams(numerical_aperture=0.0)) == 0.0

    def test_objective_rejects_na_above_n(self):
        with pytest.raises(ValueError):
            OpticsParams(numerical_aperture=1.2, medium_index=1.0)

    def test_channeling_both_sides(self):
        eta = channeling_efficiency(OpticsParams(numerical_aperture=0.5, fiber_index=1.45, sides="both"))
        assert eta == pytest.approx(1.0 - 1.0 / 1.45, rel=1e-12)
        assert abs(eta - 0.31034) < 1e-5

    def test_channeling_one_side_is_half(self):
        both = channeling_efficiency(OpticsParams(numerical_aperture=0.5, fiber_index=1.45, sides="both"))
        one = channeling_efficiency(OpticsParams(numerical_aperture=0.5, fiber_index=1.45, sides="one"))
        assert one == pytest.approx(both / 2.0, rel=1e-12)

    def test_channeling_no_index_contrast(self):
        assert channeling_efficiency(OpticsParams(numerical_aperture=0.5, fiber_index=1.0)) == 0.0

    def test_channeling_rejects_fiber_index_below_one(self):
        with pytest.raises(ValueError):
            OpticsParams(numerical_aperture=0.5, fiber_index=0.9)


class TestRatios:
    def test_correlation_time_ratio(self):
        r = ratio_with_uncertainty(Measured(11.0, 3.1), Measured(4.2, 1.2))
        value = 11.0 / 4.2
        sigma = value * math.sqrt((3.1 / 11.0) ** 2 + (1.2 / 4.2) ** 2)
        assert r.value == pytest.approx(value, rel=1e-12)
        assert r.sigma == pytest.approx(sigma, rel=1e-12)
        assert round(r.value, 2) == 2.62
        assert round(r.sigma, 2) == 1.05
        # consistent with 2.6 +/- 1.1 after rounding to one decimal
        assert (round(r.value, 1), round(r.sigma, 1)) == (2.6, 1.1)

    def test_symmetric_ratio(self):
        r = ratio_with_uncertainty(Measured(5.0, 0.5), Measured(5.0, 0.5))
        assert r.value == 1.0
        assert r.sigma == pytest.approx(math.sqrt(2.0) * 0.1, rel=1e-12)

    def test_count_rate_ratio(self):
        r = ratio_with_uncertainty(Measured(585.0, 13.0), Measured(927.0, 12.0))
        sigma = (585.0 / 927.0) * math.sqrt((13.0 / 585.0) ** 2 + (12.0 / 927.0) ** 2)
        assert r.value == pytest.approx(0.631, abs=5e-4)
        assert r.sigma == pytest.approx(sigma, rel=1e-12)
        assert round(r.sigma, 3) == 0.016

    def test_rejects_zero_denominator(self):
        with pytest.raises(ValueError):
            ratio_with_uncertainty(Measured(1.0, 0.1), Measured(0.0, 0.1))

    def test_reciprocal_product_is_one(self):
        # algebraically exactly 1; IEEE division leaves at most 1 ulp
        rng = np.random.default_rng(13)
        worst = 0.0
        for _ in range(1000):
            a = Measured(rng.uniform(0.1, 1e3), rng.uniform(0, 10))
            b = Measured(rng.uniform(0.1, 1e3), rng.uniform(0, 10))
            prod = ratio_with_uncertainty(a, b).value * ratio_with_uncertainty(b, a).value
            worst = max(worst, abs(prod - 1.0))
        assert worst <= 2.0**-52

    def test_reciprocal_product_identical_inputs(self):
        a = Measured(11.0, 3.1)
        b = Measured(4.2, 1.2)
        assert ratio_with_uncertainty(a, a).value == 1.0
        assert ratio_with_uncertainty(b, b).value == 1.0

    def test_efficiency_ratio_paper_rates(self):
        r = collection_efficiency_ratio(
            Measured(585.0, 13.0), Measured(927.0, 12.0), Measured(2.6, 1.1)
        )
        value = (585.0 / 927.0) * 2.6
        rel = math.sqrt((13 / 585) ** 2 + (12 / 927) ** 2 + (1.1 / 2.6) ** 2)
        assert r.value == pytest.approx(value, rel=1e-12)
        assert r.sigma == pytest.approx(value * rel, rel=1e-12)
        assert round(r.value, 2) == 1.64
        assert round(r.sigma, 2) == 0.70
        assert 1.5 <= r.value <= 1.8

    def test_efficiency_ratio_all_ones(self):
        r = collection_efficiency_ratio(Measured(1.0), Measured(1.0), Measured(1.0))
        assert r.value == 1.0
        assert r.sigma == 0.0

    def test_efficiency_ratio_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            collection_efficiency_ratio(Measured(0.0), Measured(1.0), Measured(1.0))
        with pytest.raises(ValueError):
            collection_efficiency_ratio(Measured(1.0), Measured(1.0), Measured(-2.0, 0.0))


class TestParamValidation:
    def test_emitter_params(self):
        with pytest.raises(ValueError):
            EmitterParams(tau_life=0.0, tau_abs=1e-9)
        with pytest.raises(ValueError):
            EmitterParams(tau_life=1e-4, tau_abs=-1e-9)
        with pytest.raises(ValueError):
            EmitterParams(tau_life=1e-4, tau_abs=1e-9, i0=-1.0)
        # infinite absorption time = pump off is allowed
        EmitterParams(tau_life=1e-4, tau_abs=math.inf)

    def test_pump_params(self):
        with pytest.raises(ValueError):
            PumpParams(power=0.0, beam_diameter=9e-6, wavelength=808e-9, linewidth=1e-9)

    def test_measured_sigma(self):
        with pytest.raises(ValueError):
            Measured(1.0, -0.1)

    def test_optics_sides(self):
        with pytest.raises(ValueError):
            OpticsParams(numerical_aperture=0.5, sides="left")
