"""Closed-form cross sections, kinematics and polarization transfer."""

import math

import numpy as np
import pytest

from comptonpairs.compton import (
    PhotonState, analyzing_power, flip_probability, kn_dcs_pol_to_pol,
    kn_dcs_polarized, kn_dcs_unpolarized, recoil_energy, sample_scatter,
    scattered_energy,
)

DEG = math.radians


class TestScatteredEnergy:
    def test_forward_scatter_loses_nothing(self):
        assert scattered_energy(511.0, 0.0) == 511.0

    def test_right_angle_halves_511(self):
        assert scattered_energy(511.0, math.pi / 2) == 255.5

    def test_backscatter_is_a_third_of_511(self):
        assert scattered_energy(511.0, math.pi) == pytest.approx(511.0 / 3, rel=1e-12)
        assert abs(scattered_energy(511.0, math.pi) - 170.33) < 0.01

    def test_monotone_decreasing_in_theta(self):
        thetas = np.linspace(0.0, math.pi, 200)
        values = [scattered_energy(511.0, t) for t in thetas]
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("energy,theta", [(0.0, 1.0), (-5.0, 1.0),
                                              (511.0, -0.1), (511.0, 3.2)])
    def test_domain_errors(self, energy, theta):
        with pytest.raises(ValueError):
            scattered_energy(energy, theta)

    def test_recoil_complements_scattered(self):
        for theta in np.linspace(0.0, math.pi, 50):
            total = scattered_energy(511.0, theta) + recoil_energy(511.0, theta)
            assert total == pytest.approx(511.0, abs=1e-12)
            assert recoil_energy(511.0, theta) >= 0.0


class TestPolarizedCrossSection:
    def test_perp_to_parallel_ratio_at_90deg(self):
        # eps = 1/2 at 511 keV: (0.5 + 2) / (0.5 + 2 - 2) = 5
        ratio = (kn_dcs_polarized(511.0, math.pi / 2, math.pi / 2)
                 / kn_dcs_polarized(511.0, math.pi / 2, 0.0))
        assert ratio == pytest.approx(5.0, rel=1e-12)

    def test_forward_scatter_has_no_phi_dependence(self):
        base = kn_dcs_polarized(511.0, 0.0, 0.0)
        for phi in np.linspace(0.0, 2 * math.pi, 17):
            assert kn_dcs_polarized(511.0, 0.0, phi) == base

    def test_ratio_at_82deg_matches_asymmetry_identity(self):
        # N(90)/N(0) = (1 + A)/(1 - A); A(82 deg) = 0.6918 puts this near 5.49
        alpha = analyzing_power(511.0, DEG(82.0))
        ratio = (kn_dcs_polarized(511.0, DEG(82.0), math.pi / 2)
                 / kn_dcs_polarized(511.0, DEG(82.0), 0.0))
        assert ratio == pytest.approx((1 + alpha) / (1 - alpha), rel=1e-12)
        assert ratio == pytest.approx(5.488, abs=0.01)

    def test_strictly_positive(self, rng):
        for _ in range(300):
            e = float(rng.uniform(1.0, 2000.0))
            t = float(rng.uniform(0.0, math.pi))
            p = float(rng.uniform(0.0, 2 * math.pi))
            assert kn_dcs_polarized(e, t, p) > 0.0


class TestUnpolarizedCrossSection:
    def test_forward_value_in_re2_units(self):
        assert kn_dcs_unpolarized(511.0, 0.0) == pytest.approx(1.0, rel=1e-15)

    def test_right_angle_value(self):
        assert kn_dcs_unpolarized(511.0, math.pi / 2) == pytest.approx(0.1875, rel=1e-15)

    def test_equals_phi_average_of_polarized(self):
        phis = (np.arange(10_000) + 0.5) * (2 * math.pi / 10_000)
        for theta in (0.3, 1.0, 2.2):
            avg = np.mean([kn_dcs_polarized(511.0, theta, p) for p in phis])
            assert kn_dcs_unpolarized(511.0, theta) == pytest.approx(avg, rel=1e-6)


class TestAnalyzingPower:
    def test_zero_at_forward_scattering(self):
        assert analyzing_power(511.0, 0.0) == 0.0

    def test_right_angle_is_two_thirds(self):
        assert analyzing_power(511.0, math.pi / 2) == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_maximum_near_82deg(self):
        # scan on a 0.1 deg grid; the peak sits at 81.7 deg with A = 0.692
        grid = np.arange(10.0, 170.0, 0.1)
        values = np.array([analyzing_power(511.0, DEG(t)) for t in grid])
        peak = grid[int(np.argmax(values))]
        assert abs(peak - 82.0) <= 0.5
        assert abs(values.max() - 0.69) <= 0.005
        assert analyzing_power(511.0, DEG(82.0)) == pytest.approx(0.69, abs=0.005)

    def test_matches_cross_section_asymmetry(self, rng):
        # definition vs closed form, 1000 random (E, theta)
        for _ in range(1000):
            e = float(rng.uniform(10.0, 2000.0))
            t = float(rng.uniform(1e-3, math.pi))
            perp = kn_dcs_polarized(e, t, math.pi / 2)
            para = kn_dcs_polarized(e, t, 0.0)
            expected = (perp - para) / (perp + para)
            assert analyzing_power(e, t) == pytest.approx(expected, rel=1e-12)


class TestPolarizationTransfer:
    def test_backscatter_flip_fraction_is_one_fifth(self):
        # eps = 1/3: flip (4/3) vs no-flip (16/3) out of 20/3
        flip = kn_dcs_pol_to_pol(511.0, math.pi, math.pi / 2)
        noflip = kn_dcs_pol_to_pol(511.0, math.pi, 0.0)
        assert flip / (flip + noflip) == pytest.approx(0.2, rel=1e-12)

    def test_thomson_limit_forbids_orthogonal_transfer(self):
        value = kn_dcs_pol_to_pol(0.01, 1.3, math.pi / 2)
        parallel = kn_dcs_pol_to_pol(0.01, 1.3, 0.0)
        assert value / parallel < 1e-9

    def test_polarization_sum_identity(self, rng):
        # summing the two orthogonal final polarizations recovers the
        # polarized cross section; final basis: transverse projection of
        # the incident polarization (cos^2 = 1 - sin^2 t cos^2 p) and its
        # orthogonal partner (cos = 0)
        for _ in range(1000):
            e = float(rng.uniform(10.0, 2000.0))
            t = float(rng.uniform(0.0, math.pi))
            p = float(rng.uniform(0.0, 2 * math.pi))
            cos_sq = 1.0 - (math.sin(t) * math.cos(p)) ** 2
            theta_pol = math.acos(min(1.0, math.sqrt(cos_sq)))
            total = (kn_dcs_pol_to_pol(e, t, theta_pol)
                     + kn_dcs_pol_to_pol(e, t, math.pi / 2))
            assert total == pytest.approx(kn_dcs_polarized(e, t, p), rel=1e-12)

    def test_flip_probability_anchors(self):
        assert flip_probability(511.0, math.pi) == pytest.approx(0.2, abs=1e-15)
        assert flip_probability(511.0, 0.0) == 0.0
        for theta in np.linspace(0.0, math.pi, 37):
            assert flip_probability(1.0, float(theta)) < 1e-3

    def test_flip_probability_from_transfer_weights(self, rng):
        # perpendicular-to-plane polarization: no-flip at Theta = 0
        for _ in range(200):
            e = float(rng.uniform(10.0, 2000.0))
            t = float(rng.uniform(0.0, math.pi))
            w_flip = kn_dcs_pol_to_pol(e, t, math.pi / 2)
            w_noflip = kn_dcs_pol_to_pol(e, t, 0.0)
            assert flip_probability(e, t) == pytest.approx(
                w_flip / (w_flip + w_noflip), rel=1e-12)


class TestPhotonState:
    def test_valid_polarized_photon(self):
        p = PhotonState(511.0, np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))
        assert p.polarized

    def test_rejects_non_unit_direction(self):
        with pytest.raises(ValueError):
            PhotonState(511.0, np.array([0.0, 0.0, 1.1]))

    def test_rejects_non_orthogonal_polarization(self):
        with pytest.raises(ValueError):
            PhotonState(511.0, np.array([0.0, 0.0, 1.0]),
                        np.array([0.0, 1e-3, 1.0]) / math.sqrt(1 + 1e-6))

    def test_rejects_non_positive_energy(self):
        with pytest.raises(ValueError):
            PhotonState(0.0, np.array([0.0, 0.0, 1.0]))


class TestSampleScatterBasics:
    def test_energy_conservation_exact_per_sample(self, rng):
        photon = PhotonState(511.0, np.array([0.0, 0.0, 1.0]),
                             np.array([1.0, 0.0, 0.0]))
        for _ in range(500):
            s = sample_scatter(photon, rng)
            assert s.energy_out_kev + s.recoil_kev == 511.0
            assert s.energy_out_kev == pytest.approx(
                scattered_energy(511.0, s.theta), rel=1e-9)
            assert 0.0 < s.epsilon <= 1.0

    def test_output_vectors_are_consistent(self, rng):
        photon = PhotonState(662.0, np.array([0.0, 1.0, 0.0]),
                             np.array([0.0, 0.0, 1.0]))
        for _ in range(300):
            s = sample_scatter(photon, rng)
            assert np.linalg.norm(s.direction_out) == pytest.approx(1.0, abs=1e-9)
            assert np.linalg.norm(s.polarization_out) == pytest.approx(1.0, abs=1e-9)
            assert abs(np.dot(s.direction_out, s.polarization_out)) < 1e-9
            # theta really is the angle to the incident direction
            assert math.cos(s.theta) == pytest.approx(
                float(np.dot(photon.direction, s.direction_out)), abs=1e-9)
