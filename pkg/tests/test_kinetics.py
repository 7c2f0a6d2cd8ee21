"""Tests for the kinetic model and NPV-proxy reward."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flotopt.kinetics import (EconomicParams, KineticParams, grade_kinetic,
                              opex, recovery_kinetic, reward)

KP = KineticParams()
ECON = EconomicParams()


class TestParams:
    def test_defaults(self):
        assert KP.k == 1.0 and KP.c_max == 42.2
        assert ECON.timesteps_per_year == 100

    def test_invalid_kinetics(self):
        with pytest.raises(ValueError):
            KineticParams(k=0.0)
        with pytest.raises(ValueError):
            KineticParams(c_max=-1.0)

    def test_invalid_economics(self):
        with pytest.raises(ValueError):
            EconomicParams(timesteps_per_year=0)
        with pytest.raises(ValueError):
            EconomicParams(price_coeff=-1.0)


class TestRecoveryKinetic:
    def test_zero_time(self):
        """kt = 0 forces zero recovery."""
        assert recovery_kinetic(KP, 0.0, 50.0) == 0.0

    def test_hand_value(self):
        """k=1, t=1, f=10: 100 * 1/2 * 10/20 = 25."""
        expected = 100.0 * (1.0 / 2.0) * (10.0 / 20.0)
        assert recovery_kinetic(KP, 1.0, 10.0) == pytest.approx(expected, abs=1e-9)
        assert recovery_kinetic(KP, 1.0, 10.0) == pytest.approx(25.0, abs=1e-9)

    def test_asymptote(self):
        """Both saturation factors approach 1."""
        assert recovery_kinetic(KP, 1000.0, 10000.0) > 99.8

    def test_monotone_on_grid(self):
        t = np.linspace(0.0, 20.0, 101)
        f = np.linspace(0.0, 400.0, 81)
        T, F = np.meshgrid(t, f, indexing="ij")
        R = recovery_kinetic(KP, T, F)
        assert np.all(np.diff(R, axis=0) >= 0)
        assert np.all(np.diff(R, axis=1) >= 0)
        assert np.all(R >= 0) and np.all(R < 100)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            recovery_kinetic(KP, -1.0, 10.0)
        with pytest.raises(ValueError):
            recovery_kinetic(KP, 1.0, -10.0)

    @given(st.floats(0.0, 1e6), st.floats(0.0, 1e6))
    @settings(max_examples=200, deadline=None)
    def test_bounds_property(self, t, f):
        r = recovery_kinetic(KP, t, f)
        assert 0.0 <= r < 100.0

    def test_pure(self):
        a = recovery_kinetic(KP, 3.7, 123.4)
        b = recovery_kinetic(KP, 3.7, 123.4)
        assert a == b


class TestGradeKinetic:
    def test_ceiling_fixed_point(self):
        """At c = 42.2 the enrichment factor vanishes."""
        for t, f in [(0.0, 0.0), (5.0, 100.0), (10.0, 200.0)]:
            assert grade_kinetic(KP, 42.2, t, f) == pytest.approx(42.2, abs=1e-12)

    def test_zero_composition(self):
        assert grade_kinetic(KP, 0.0, 5.0, 100.0) == 0.0

    def test_hand_value(self):
        """c=10, t=0, f=100: exp(0)=1, logistic denominator 2."""
        expected = 10.0 * (1.0 + (1.0 - 10.0 / 42.2) * (1.0 - 1.0 / 2.0))
        got = grade_kinetic(KP, 10.0, 0.0, 100.0)
        assert got == pytest.approx(expected, abs=1e-9)
        assert got == pytest.approx(13.81516, abs=1e-5)

    def test_enrichment_bounds_on_grid(self):
        c = np.linspace(0.0, 42.2, 43)
        t = np.linspace(0.0, 20.0, 41)
        f = np.linspace(0.0, 400.0, 41)
        C, T, F = np.meshgrid(c, t, f, indexing="ij")
        G = grade_kinetic(KP, C, T, F)
        assert np.all(G >= C - 1e-12)
        assert np.all(G <= KP.c_max + 1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            grade_kinetic(KP, -0.1, 1.0, 10.0)
        with pytest.raises(ValueError):
            grade_kinetic(KP, 42.3, 1.0, 10.0)
        with pytest.raises(ValueError):
            grade_kinetic(KP, 10.0, -1.0, 10.0)

    @given(st.floats(0.0, 42.2), st.floats(0.0, 100.0), st.floats(0.0, 1000.0))
    @settings(max_examples=200, deadline=None)
    def test_bounds_property(self, c, t, f):
        g = grade_kinetic(KP, c, t, f)
        assert c - 1e-12 <= g <= KP.c_max + 1e-12


class TestOpex:
    def test_zero(self):
        assert opex(ECON, 0.0, 0.0) == 0.0

    def test_hand_values(self):
        assert opex(ECON, 5.0, 100.0) == pytest.approx(0.5 * 5 + 100 / 50, abs=1e-12)
        assert opex(ECON, 5.0, 100.0) == pytest.approx(4.5, abs=1e-9)
        assert opex(ECON, 1.0, 50.0) == pytest.approx(1.5, abs=1e-9)


class TestReward:
    def test_hand_value(self):
        """g=30, r=80: revenue 500*0.3 * 35*0.8 / 100 = 42, minus opex 4.5."""
        expected = (500 * 0.30) * (35 * 0.80) / 100 - 4.5
        assert reward(ECON, 30.0, 80.0, 5.0, 100.0) == pytest.approx(expected, abs=1e-9)
        assert reward(ECON, 30.0, 80.0, 5.0, 100.0) == pytest.approx(37.5, abs=1e-9)

    def test_all_zero(self):
        assert reward(ECON, 0.0, 0.0, 0.0, 0.0) == 0.0

    def test_measurement_cost(self):
        econ = EconomicParams(measurement_cost=1.0)
        base = reward(econ, 30.0, 80.0, 5.0, 100.0, measured=False)
        assert base == pytest.approx(37.5, abs=1e-9)
        assert reward(econ, 30.0, 80.0, 5.0, 100.0, measured=True) == \
            pytest.approx(36.5, abs=1e-9)

    def test_strictly_decreasing_in_actions(self):
        t = np.linspace(0.0, 10.0, 50)
        w = reward(ECON, 25.0, 75.0, t, 100.0)
        assert np.all(np.diff(w) < 0)
        f = np.linspace(0.0, 200.0, 50)
        w = reward(ECON, 25.0, 75.0, 5.0, f)
        assert np.all(np.diff(w) < 0)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            reward(ECON, -1.0, 50.0, 1.0, 10.0)
        with pytest.raises(ValueError):
            reward(ECON, 50.0, 101.0, 1.0, 10.0)

    def test_pure(self):
        assert reward(ECON, 22.2, 77.7, 3.3, 44.4) == reward(ECON, 22.2, 77.7, 3.3, 44.4)
