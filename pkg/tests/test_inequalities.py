"""Tests for the three statistics: the visibility-ratio bound, the
fringe-shape dispersion bound, and the coincidence-fraction statistic."""

import math

import numpy as np
import pytest

from pdcbell.core import AngleScan, UncertainValue, scan_grid
from pdcbell.errors import DivisionError
from pdcbell.inequalities import (
    bound_D,
    bound_F,
    ch_statistic,
    delta_min,
    evaluate_santos1,
    evaluate_santos2,
    fringe_V,
    santos1_from_visibilities,
    sinc2_threshold,
    visibility_VA,
    visibility_VB,
)

ETA = 0.62


def fringe_scan(n=8, r0=100.0, v=0.9, sigmas=None, extra=None):
    grid = np.asarray(scan_grid(n))
    rates = r0 * (1.0 + v * np.cos(2 * grid))
    if extra is not None:
        rates = rates + r0 * extra(grid)
    if sigmas is None:
        sigmas = np.zeros(n)
    return AngleScan.from_values(rates, sigmas)


class TestVisibilityRatio:
    def test_published_values(self):
        res = santos1_from_visibilities(
            UncertainValue(0.9784, 0.0017),
            UncertainValue(0.9985, 0.0030),
            ETA,
        )
        assert res.ratio.value == pytest.approx(1.0205, abs=5e-4)
        assert res.ratio.sigma == pytest.approx(0.0048, abs=2e-4)
        assert res.bound_F.value == pytest.approx(1.0876, abs=5e-4)
        assert res.bound_F.sigma == pytest.approx(0.0009, abs=1e-4)
        assert res.violation.value == pytest.approx(0.0671, abs=5e-4)
        assert res.violation.sigma == pytest.approx(0.0057, abs=2e-4)
        assert res.significance == pytest.approx(11.7, abs=0.2)

    def test_bound_monotone_in_visibility(self):
        lo = bound_F(ETA, UncertainValue(0.8, 0.0)).value
        hi = bound_F(ETA, UncertainValue(1.0, 0.0)).value
        assert hi > lo

    def test_bound_at_unit_efficiency(self):
        """At eta = 1 the correction term vanishes and F = 1."""
        assert bound_F(1.0, UncertainValue(0.97, 0.0)).value == pytest.approx(1.0)

    def test_scan_visibilities_recover_fringe(self):
        scan = fringe_scan(v=0.85)
        assert visibility_VA(scan).value == pytest.approx(0.85, abs=1e-12)
        assert visibility_VB(scan).value == pytest.approx(0.85, abs=1e-12)

    def test_evaluate_on_perfect_fringe(self):
        """A unit-visibility fringe violates the bound for any eta < 1."""
        res = evaluate_santos1(fringe_scan(v=1.0), ETA)
        assert res.ratio.value == pytest.approx(1.0, abs=1e-12)
        assert res.violation.value > 0.08


class TestDispersionBound:
    def test_threshold_value(self):
        assert sinc2_threshold(ETA) == pytest.approx(0.7212279, abs=1e-6)

    def test_clamps_below_threshold(self):
        d = bound_D(ETA, UncertainValue(0.5, 0.01))
        assert d.value == 0.0
        assert d.sigma == 0.0

    def test_positive_above_threshold(self):
        d = bound_D(ETA, UncertainValue(1.0, 0.0))
        assert d.value == pytest.approx(0.0146634, abs=1e-6)

    def test_monotone_in_fringe_parameter(self):
        vals = [bound_D(ETA, UncertainValue(v, 0.0)).value for v in (0.75, 0.85, 1.0)]
        assert vals == sorted(vals)
        assert vals[0] > 0


class TestDeltaMin:
    def test_zero_for_pure_fringes(self):
        for v in (0.3, 0.7, 1.0):
            assert delta_min(fringe_scan(v=v)).value < 1e-10

    def test_recovers_second_harmonic(self):
        a4 = 0.03
        scan = fringe_scan(extra=lambda g: a4 * np.cos(4 * g))
        assert delta_min(scan).value == pytest.approx(a4 / math.sqrt(2), abs=1e-8)

    def test_scale_invariance(self):
        """Delta_min is a shape statistic: rescaling every rate by a
        common factor must not change it."""
        rng = np.random.default_rng(8)
        for _ in range(100):
            base = rng.uniform(10.0, 200.0, 8)
            ref = delta_min(AngleScan.from_values(base)).value
            for k in rng.uniform(0.01, 100.0, 10):
                got = delta_min(AngleScan.from_values(base * k)).value
                assert abs(got - ref) < 1e-10

    def test_fringe_v_matches_contrast_visibilities(self):
        scan = fringe_scan(v=0.77)
        v = fringe_V(scan).value
        assert abs(v - visibility_VA(scan).value) < 1e-10
        assert abs(v - visibility_VB(scan).value) < 1e-10

    def test_sigma_from_rate_uncertainties(self):
        """A noisy scan must report a nonzero uncertainty on Delta_min."""
        scan = fringe_scan(
            extra=lambda g: 0.05 * np.cos(4 * g), sigmas=np.full(8, 0.5)
        )
        res = delta_min(scan)
        assert res.sigma > 0

    def test_zero_total_rate_rejected(self):
        scan = AngleScan.from_values([0.0, 0.0, 0.0, 0.0])
        with pytest.raises(DivisionError):
            delta_min(scan)

    def test_evaluate_verdict_sign(self):
        """A pure high-visibility fringe has Delta_min = 0 below a
        positive bound, so the violation is positive."""
        res = evaluate_santos2(fringe_scan(v=0.95), ETA)
        assert res.delta_min.value < 1e-10
        assert res.bound_D.value > 0
        assert res.violation.value == pytest.approx(res.bound_D.value, abs=1e-10)


class TestCoincidenceFraction:
    def test_perfect_fringe_value(self):
        """With R_tot = 4 * mean rate the statistic is V * sqrt(2) / 4."""
        for v in (0.5, 0.9, 1.0):
            res = ch_statistic(fringe_scan(v=v))
            assert res.statistic.value == pytest.approx(v * math.sqrt(2) / 4)
            assert res.r_tot_convention == "four-times-scan-mean"

    def test_violation_threshold(self):
        assert ch_statistic(fringe_scan(v=1.0)).violation.value > 0
        assert ch_statistic(fringe_scan(v=0.5)).violation.value < 0

    def test_rescaling_invariance(self):
        """With the scan-mean convention the statistic is scale free."""
        grid = np.asarray(scan_grid(8))
        base = 100.0 * (1.0 + 0.9 * np.cos(2 * grid))
        a = ch_statistic(AngleScan.from_values(base))
        b = ch_statistic(AngleScan.from_values(base * 17.3))
        assert a.statistic.value == pytest.approx(b.statistic.value, abs=1e-12)

    def test_measured_total_convention(self):
        scan = fringe_scan(v=1.0, r0=100.0)
        res = ch_statistic(scan, r_tot=UncertainValue(400.0, 0.0))
        assert res.r_tot_convention == "measured"
        assert res.statistic.value == pytest.approx(math.sqrt(2) / 4)
