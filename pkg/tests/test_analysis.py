"""Histogram fits, correlation coefficients and the S-function."""

import math

import numpy as np
import pytest

from comptonpairs.analysis import (
    AngleHistogram, FitDegenerateError, UndefinedCorrelationError,
    build_correlation_set, build_histogram, chsh_report,
    correlation_coefficient, fit_cosine, fit_cosine_counts, fit_s_curve,
    histogram_from_counters,
    s_curve_model, s_function,
)

ANGLES = np.arange(16) * 22.5


def cosine_hist(a, b):
    counts = np.rint(a - b * np.cos(2.0 * np.radians(ANGLES))).astype(np.int64)
    return AngleHistogram(counts)


class FakeEvent:
    def __init__(self, c1, c2, tag="entangled_candidate"):
        self.counter1 = c1
        self.counter2 = c2
        self.class_tag = tag


class TestAngleHistogram:
    def test_totals_and_angles(self):
        h = AngleHistogram(np.arange(16))
        assert h.total == 120
        assert h.angles_deg[3] == 67.5

    def test_merge_is_binwise_addition(self):
        h1 = AngleHistogram(np.arange(16))
        h2 = AngleHistogram(np.ones(16, dtype=int))
        assert np.array_equal((h1 + h2).counts, np.arange(16) + 1)

    def test_rejects_negative_counts(self):
        with pytest.raises(ValueError):
            AngleHistogram(np.array([-1] + [0] * 15))

    def test_folding_pairs_mirror_bins(self):
        h = AngleHistogram(np.arange(16))
        angles, folded = h.folded()
        assert angles[-1] == 180.0
        assert folded[0] == 0 and folded[8] == 8
        assert folded[3] == 3 + 13

    def test_build_histogram_single_bin(self):
        events = [FakeEvent(5, 1) for _ in range(40)]
        h = build_histogram(events)
        assert h.counts[4] == 40 and h.total == 40

    def test_build_histogram_selection_and_empty(self):
        events = [FakeEvent(0, 0, "a"), FakeEvent(1, 0, "b")]
        h = build_histogram(events, selection="a")
        assert h.total == 1 and h.counts[0] == 1
        assert build_histogram(events, selection="d").total == 0

    def test_vectorized_matches_object_path(self, rng):
        c1 = rng.integers(0, 16, size=500)
        c2 = rng.integers(0, 16, size=500)
        events = [FakeEvent(int(a), int(b)) for a, b in zip(c1, c2)]
        assert np.array_equal(build_histogram(events).counts,
                              histogram_from_counters(c1, c2).counts)


class TestFitCosine:
    def test_noiseless_inversion(self):
        counts = 1000.0 - 410.0 * np.cos(2.0 * np.radians(ANGLES))
        fit = fit_cosine_counts(counts)
        assert fit.a == pytest.approx(1000.0, rel=1e-10)
        assert fit.b == pytest.approx(410.0, rel=1e-10)
        assert fit.mu == pytest.approx(0.41, rel=1e-10)
        assert fit.r == pytest.approx(1410.0 / 590.0, rel=1e-10)
        assert fit.chi2 == pytest.approx(0.0, abs=1e-12)
        assert fit.dof == 14

    def test_noiseless_inversion_random_amplitudes(self, rng):
        for _ in range(200):
            a = float(rng.uniform(500.0, 50_000.0))
            b = float(rng.uniform(-0.8, 0.8)) * a
            counts = a - b * np.cos(2.0 * np.radians(ANGLES))
            fit = fit_cosine_counts(counts)
            assert fit.a == pytest.approx(a, rel=1e-10)
            assert fit.b == pytest.approx(b, rel=1e-10, abs=1e-10)

    def test_integer_counts_reproduce_amplitudes_to_rounding(self):
        fit = fit_cosine(cosine_hist(100_000.0, 41_000.0))
        assert fit.a == pytest.approx(100_000.0, rel=2e-5)
        assert fit.b == pytest.approx(41_000.0, rel=2e-5)
        assert fit.mu == pytest.approx(0.41, abs=2e-5)

    def test_ratio_modulation_algebra(self, rng):
        for _ in range(100):
            a = float(rng.uniform(1000.0, 10_000.0))
            b = float(rng.uniform(-0.7, 0.7)) * a
            fit = fit_cosine(cosine_hist(a, b))
            assert fit.r == pytest.approx((1 + fit.mu) / (1 - fit.mu), rel=1e-12)
            assert fit.mu == pytest.approx((fit.r - 1) / (fit.r + 1), rel=1e-12)

    def test_empty_histogram_is_degenerate(self):
        with pytest.raises(FitDegenerateError):
            fit_cosine(AngleHistogram(np.zeros(16, dtype=int)))

    def test_two_bins_are_degenerate(self):
        counts = np.zeros(16, dtype=int)
        counts[0] = 500
        counts[8] = 500
        with pytest.raises(FitDegenerateError):
            fit_cosine(AngleHistogram(counts))

    def test_collinear_bins_are_degenerate(self):
        # bins 0, 4, 8 sit at cos(2 dphi) = 1, -1, 1: fine; use bins where
        # cos(2 dphi) is identical (0, 8, plus 4+12 absent) -> singular
        counts = np.zeros(16, dtype=int)
        counts[0] = 400
        counts[8] = 300
        counts[4] = 0
        with pytest.raises(FitDegenerateError):
            fit_cosine(AngleHistogram(counts))


class TestCorrelationCoefficient:
    def test_exact_cosine_counts_give_minus_mu_cos(self):
        mu = 0.41
        h = cosine_hist(100_000.0, 41_000.0)
        for angle in ANGLES:
            e, sigma = correlation_coefficient(h, float(angle))
            assert e == pytest.approx(-mu * math.cos(2 * math.radians(angle)),
                                      abs=2e-5)
            assert sigma > 0.0

    def test_zero_at_45_degrees(self, rng):
        for _ in range(20):
            a = float(rng.uniform(1000.0, 9000.0))
            b = float(rng.uniform(-0.6, 0.6)) * a
            e, _ = correlation_coefficient(cosine_hist(a, b), 45.0)
            assert abs(e) < 2e-3  # rounding to integer counts only

    def test_bounded_by_one(self, rng):
        for _ in range(100):
            counts = rng.integers(0, 400, size=16)
            counts[0] += 1  # keep denominators alive
            h = AngleHistogram(counts.astype(np.int64))
            for angle in ANGLES:
                try:
                    e, _ = correlation_coefficient(h, float(angle))
                except UndefinedCorrelationError:
                    continue
                assert abs(e) <= 1.0

    def test_zero_denominator_raises(self):
        counts = np.zeros(16, dtype=int)
        counts[1] = 10
        with pytest.raises(UndefinedCorrelationError):
            correlation_coefficient(AngleHistogram(counts), 0.0)

    def test_off_grid_angle_raises(self):
        with pytest.raises(UndefinedCorrelationError):
            correlation_coefficient(cosine_hist(100.0, 10.0), 30.0)


class TestSFunction:
    def test_matches_reference_curve_on_grid(self):
        mu = 0.41
        h = cosine_hist(1_000_000.0, 410_000.0)
        for angle in ANGLES:
            s, sigma = s_function(h, float(angle))
            expected = -mu * (3 * math.cos(2 * math.radians(angle))
                              - math.cos(6 * math.radians(angle)))
            assert s == pytest.approx(expected, abs=1e-5)
            assert sigma > 0.0

    def test_extremum_at_22p5_deg(self):
        h = cosine_hist(1_000_000.0, 410_000.0)
        s, _ = s_function(h, 22.5)
        assert s == pytest.approx(-0.41 * 2 * math.sqrt(2), abs=1e-5)
        assert s == pytest.approx(-1.160, abs=1e-3)

    def test_at_zero_degrees_equals_minus_two_mu(self):
        h = cosine_hist(500_000.0, 205_000.0)
        s, _ = s_function(h, 0.0)
        assert s == pytest.approx(-2 * 0.41, abs=1e-5)

    def test_flat_counts_give_zero_everywhere(self):
        h = AngleHistogram(np.full(16, 1000, dtype=np.int64))
        for angle in ANGLES:
            s, _ = s_function(h, float(angle))
            assert s == 0.0

    def test_shared_bins_error_propagation(self):
        # at phi = 0 both terms read the same two bins: S = 2 E(0)
        h = cosine_hist(10_000.0, 4100.0)
        s, sigma = s_function(h, 0.0)
        e, sigma_e = correlation_coefficient(h, 0.0)
        assert s == pytest.approx(2 * e, rel=1e-12)
        assert sigma == pytest.approx(2 * sigma_e, rel=1e-12)


class TestSCurveFit:
    def test_recovers_synthetic_amplitude_exactly(self):
        cs = build_correlation_set(cosine_hist(2000.0, 800.0))
        for angle in cs.s_values:
            cs.s_values[angle] = (float(s_curve_model(angle, 0.5)), 0.01)
        fit = fit_s_curve(cs)
        assert fit.p0 == pytest.approx(0.5, rel=1e-12)
        assert fit.chi2 == pytest.approx(0.0, abs=1e-18)
        assert fit.sigma_p0 > 0.0

    def test_p0_consistent_with_modulation(self):
        cs = fit_s_curve(build_correlation_set(cosine_hist(1_000_000.0, 410_000.0)))
        assert cs.p0 == pytest.approx(0.41, abs=1e-4)
        assert cs.dof == 7

    def test_report_values(self):
        mu = 0.48
        cs = build_correlation_set(cosine_hist(4_000_000.0, int(4_000_000 * mu)))
        cs = fit_s_curve(cs)
        report = chsh_report(cs)
        assert report["max_abs_S"] == pytest.approx(2 * math.sqrt(2) * mu, abs=1e-4)
        assert report["max_abs_S"] <= 1.4
        assert not report["raw_chsh_violation"]
        assert report["normalized_max_abs_S"] == pytest.approx(2 * math.sqrt(2),
                                                               abs=0.01)

    def test_zero_modulation_report(self):
        cs = fit_s_curve(build_correlation_set(
            AngleHistogram(np.full(16, 2500, dtype=np.int64))))
        report = chsh_report(cs)
        assert report["max_abs_S"] == 0.0


class TestPullDistribution:
    def test_fit_errors_are_calibrated(self):
        # 200 Poisson realizations of a known cosine model: the pulls of
        # the fitted modulation factor must be centered and unit-width
        rng = np.random.default_rng(424242)
        a_true, b_true = 2000.0, 820.0
        mu_true = b_true / a_true
        pulls = []
        model = a_true - b_true * np.cos(2.0 * np.radians(ANGLES))
        for _ in range(200):
            counts = rng.poisson(model)
            fit = fit_cosine(AngleHistogram(counts))
            pulls.append((fit.mu - mu_true) / fit.sigma_mu)
        pulls = np.array(pulls)
        assert abs(pulls.mean()) < 0.2
        assert 0.7 < pulls.var(ddof=1) < 1.4
