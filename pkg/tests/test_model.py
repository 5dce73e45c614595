import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zplsim import (DetectionSpec, ElectrodeSpec, LaserSpec, MoleculeSpec,
                    PhysicsError, SceneSpec, analytic_g2, diffraction_fwhm,
                    lorentzian, mixture_g2_zero, natural_linewidth,
                    pump_for_excited_population, pump_rate, rate_budget,
                    stark_calibrate, stark_shift, steady_state)

GAMMA = 1 / 9.4e-9


class TestNaturalLinewidth:
    def test_lifetime_9p4ns(self):
        fwhm = natural_linewidth(9.4e-9)
        assert fwhm == pytest.approx(16.93e6, rel=1e-3)
        # band implied by a 9.4 +/- 1 ns lifetime around the measured 18 MHz
        assert 16.1e6 < fwhm < 18.9e6

    def test_definition(self):
        assert natural_linewidth(1 / (2 * math.pi)) == pytest.approx(1.0)

    def test_halved_lifetime_doubles_width(self):
        assert natural_linewidth(4.7e-9) == pytest.approx(2 * natural_linewidth(9.4e-9))

    def test_rejects_nonpositive(self):
        with pytest.raises(PhysicsError):
            natural_linewidth(0.0)
        with pytest.raises(PhysicsError):
            natural_linewidth(-1e-9)

    @given(st.floats(min_value=1e-12, max_value=1e3))
    def test_inverse_identity(self, t1):
        assert natural_linewidth(t1) * (2 * math.pi * t1) == pytest.approx(1.0, rel=1e-12)


class TestLorentzian:
    def test_peak(self):
        assert lorentzian(0.0, 30e9) == 1.0

    def test_half_maximum(self):
        assert lorentzian(15e9, 30e9) == pytest.approx(0.5)

    def test_10ghz_detuning(self):
        assert lorentzian(10e9, 30e9) == pytest.approx(15**2 / (15**2 + 10**2), rel=1e-6)

    @given(st.floats(min_value=-1e12, max_value=1e12),
           st.floats(min_value=1e3, max_value=1e12))
    def test_even_and_bounded(self, detuning, fwhm):
        v = lorentzian(detuning, fwhm)
        assert 0.0 < v <= 1.0
        assert v == lorentzian(-detuning, fwhm)


class TestStark:
    def test_zero_voltage(self):
        mol = MoleculeSpec(id=1, stark_linear=77.14)
        assert stark_shift(mol, ElectrodeSpec(voltage=0.0)) == 0.0

    def test_calibrated_merge(self):
        coeff = stark_calibrate(180e6, 42.0, 18e-6)
        assert coeff == pytest.approx(77.14, rel=1e-3)
        mol = MoleculeSpec(id=1, stark_linear=coeff)
        shift = stark_shift(mol, ElectrodeSpec(gap=18e-6, voltage=42.0))
        assert shift == pytest.approx(-180e6, abs=1.0)

    def test_linearity(self):
        mol = MoleculeSpec(id=1, stark_linear=stark_calibrate(180e6, 42.0, 18e-6))
        assert stark_shift(mol, ElectrodeSpec(gap=18e-6, voltage=21.0)) == \
            pytest.approx(-90e6, abs=1.0)

    def test_calibrate_zero_and_proportionality(self):
        assert stark_calibrate(0.0, 42.0, 18e-6) == 0.0
        assert stark_calibrate(90e6, 42.0, 18e-6) == \
            pytest.approx(stark_calibrate(180e6, 42.0, 18e-6) / 2)

    def test_voltage_limit_enforced(self):
        with pytest.raises(PhysicsError):
            ElectrodeSpec(voltage=91.0, max_voltage=90.0)


class TestPumpRate:
    def test_on_resonance(self):
        mol = MoleculeSpec(id=1, zpl_center=0.0)
        laser = LaserSpec(frequency=mol.vibronic_offset, cw_peak_pump_rate=1e9)
        assert pump_rate(mol, laser, ElectrodeSpec()) == pytest.approx(1e9)

    def test_half_maximum_detuning(self):
        mol = MoleculeSpec(id=1)
        laser = LaserSpec(frequency=mol.vibronic_offset + 15e9, cw_peak_pump_rate=1e9)
        assert pump_rate(mol, laser, ElectrodeSpec()) == pytest.approx(0.5e9)

    def test_detuned_neighbor_simultaneously_pumped(self):
        a = MoleculeSpec(id=1, zpl_center=0.0)
        b = MoleculeSpec(id=2, zpl_center=10e9)
        laser = LaserSpec(frequency=a.vibronic_offset, cw_peak_pump_rate=1e9)
        ratio = pump_rate(b, laser, ElectrodeSpec()) / pump_rate(a, laser, ElectrodeSpec())
        assert ratio == pytest.approx(0.6923, abs=1e-4)


class TestSteadyState:
    def test_no_pump(self):
        assert steady_state(0.0, 1e12, GAMMA) == (1.0, 0.0, 0.0)

    def test_symmetric_two_level_limit(self):
        g, v, e = steady_state(GAMMA, math.inf, GAMMA)
        assert (g, v, e) == pytest.approx((0.5, 0.0, 0.5))

    def test_reference_operating_point(self):
        _, _, p_e = steady_state(0.017074e9, 1e12, GAMMA)
        assert p_e == pytest.approx(0.1383, abs=2e-4)

    @given(st.floats(min_value=0, max_value=1e10),
           st.floats(min_value=1e9, max_value=1e13),
           st.floats(min_value=1e6, max_value=1e10))
    def test_normalized_and_bounded(self, pump, k_vib, gamma):
        pops = steady_state(pump, k_vib, gamma)
        assert all(p >= 0 for p in pops)
        assert sum(pops) == pytest.approx(1.0, abs=1e-12)
        if pump > 0:
            # strictly below the two-level bound, up to float rounding
            assert pops[2] <= pump / (pump + gamma) * (1 + 1e-9)

    def test_converges_to_two_level(self):
        pump = 1e8
        target = pump / (pump + GAMMA)
        assert steady_state(pump, 1e15, GAMMA)[2] == pytest.approx(target, rel=1e-6)

    def test_pump_inverse(self):
        pump = pump_for_excited_population(0.1383, GAMMA, 1e12)
        assert steady_state(pump, 1e12, GAMMA)[2] == pytest.approx(0.1383, rel=1e-12)


class TestAnalyticG2:
    def test_uncorrelated_limit(self):
        assert analytic_g2(0.0, GAMMA, 1.0) == pytest.approx(1.0)

    def test_decay_time_8p1ns_operating_point(self):
        pump = 1 / 8.1e-9 - GAMMA
        assert pump == pytest.approx(0.017074e9, rel=1e-4)
        assert analytic_g2(pump, GAMMA, 8.1e-9) == pytest.approx(1 - math.exp(-1), rel=1e-9)

    def test_zero_lag(self):
        assert analytic_g2(1e8, GAMMA, 0.0) == 0.0

    def test_symmetric_monotone(self):
        taus = np.linspace(0, 50e-9, 100)
        vals = analytic_g2(1e7, GAMMA, taus)
        assert np.all(np.diff(vals) > 0)
        assert np.all(vals == analytic_g2(1e7, GAMMA, -taus))
        assert np.all((vals >= 0) & (vals < 1))


class TestMixtureG2Zero:
    def test_single_clean_source(self):
        assert mixture_g2_zero([1.0], [0.0]) == 0.0

    def test_residual_034(self):
        assert mixture_g2_zero([0.2172, 0.7828], [0.0, 0.0]) == pytest.approx(0.34, abs=1e-4)

    def test_residual_044(self):
        assert mixture_g2_zero([0.3268, 0.6732], [0.0, 0.0]) == pytest.approx(0.44, abs=1e-4)

    def test_single_source_passthrough(self):
        assert mixture_g2_zero([1.0], [0.37]) == pytest.approx(0.37)

    @given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=1, max_size=6))
    def test_all_zero_expansion(self, weights):
        fr = np.array(weights) / sum(weights)
        expected = 1.0 - np.sum(fr**2)
        assert mixture_g2_zero(fr, np.zeros_like(fr)) == pytest.approx(expected, abs=1e-9)

    def test_rejects_bad_fractions(self):
        with pytest.raises(PhysicsError):
            mixture_g2_zero([0.5, 0.6], [0, 0])


class TestRateBudget:
    def test_dark_molecule(self):
        assert rate_budget(MoleculeSpec(id=1), DetectionSpec(), 0.0) == 0.0

    def test_reference_detection_chain_budget(self):
        det = DetectionSpec(collection_efficiency=0.2, zpl_filter_transmission=0.5,
                            fiber_coupling=0.3, dead_time=0.0)
        rate = rate_budget(MoleculeSpec(id=1), det, 0.1383)
        assert rate == pytest.approx(1.32e5, rel=1e-2)
        assert rate > 1e5

    def test_saturated_bound(self):
        mol = MoleculeSpec(id=1, zpl_branching=1.0)
        assert rate_budget(mol, DetectionSpec(), 0.5) == pytest.approx(GAMMA / 2)


class TestDiffractionFwhm:
    def test_sil_enhanced_objective(self):
        assert diffraction_fwhm(590.0, 1.12) == pytest.approx(268.7, abs=0.1)

    def test_factor_cancellation(self):
        assert diffraction_fwhm(590.0, 0.51) == pytest.approx(590.0)

    def test_wavelength_linearity(self):
        assert diffraction_fwhm(295.0, 1.12) == pytest.approx(134.3, abs=0.1)

    def test_rejects_bad_na(self):
        with pytest.raises(PhysicsError):
            diffraction_fwhm(590.0, 0.0)


class TestSpecValidation:
    def test_unique_molecule_ids(self):
        with pytest.raises(PhysicsError):
            SceneSpec(molecules=(MoleculeSpec(id=1), MoleculeSpec(id=1)))

    def test_branching_range(self):
        with pytest.raises(PhysicsError):
            MoleculeSpec(id=1, zpl_branching=0.0)

    def test_pulsed_width_fits_period(self):
        with pytest.raises(PhysicsError):
            LaserSpec(mode="pulsed", pulse_width=20e-9, pulse_rep_rate=76e6,
                      pulse_divider=1)

    def test_detection_fraction_range(self):
        with pytest.raises(PhysicsError):
            DetectionSpec(collection_efficiency=1.5)
