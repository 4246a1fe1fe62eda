"""Joint quantum-state models of the annihilation pair and pair sampling.

Both photons share a single incident energy (511 keV by default); no
acollinearity or Doppler spread is modeled.  Azimuths phi1, phi2 of the
two scattering planes are measured about the common flight axis from a
shared fixed lab axis; the relative azimuth dphi = phi1 - phi2 is the
observable for all rotation-invariant models.

Model catalogue (tag -> joint density, k_i = unpolarized single-photon
factors, a_i = analyzing powers):

    entangled            k1 k2 (1 - a1 a2 cos 2 dphi)
    mixed_hm             identical to ``entangled`` (the claim that the
                         orthogonally-paired mixture scatters with the
                         same cross section as the entangled state)
    mixed_ba             k1 k2, flat in dphi (the claim that the mixture
                         shows no azimuthal correlation, R = 1)
    product_fixed_basis  equal mixture of definite H x V and V x H
                         products in a fixed lab basis; depends on phi1
                         and phi2 separately, dphi modulation a1 a2 / 2
    depolarized(w)       (1 - w) x orthogonal pairing + w x parallel
                         pairing, dphi modulation (1 - 2 w) a1 a2

The decohered state after forward scattering is a tag choice here, not a
dynamical calculation: the experiment is reproduced by comparing model
predictions side by side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .compton import analyzing_power, kn_dcs_polarized, kn_dcs_unpolarized

MODEL_KINDS = ("entangled", "mixed_hm", "mixed_ba", "product_fixed_basis",
               "depolarized")

# Integer codes shared with the generation kernels.
MODEL_CODES = {name: i for i, name in enumerate(MODEL_KINDS)}

_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class PairModel:
    """Tagged choice of joint two-photon state model.

    Attributes:
        kind: One of MODEL_KINDS.
        weight: Parallel-pairing admixture w in [0, 1]; only meaningful
            for kind == "depolarized" (w = 0 reproduces the orthogonal
            pairing, w = 0.5 kills the modulation entirely).
    """

    kind: str
    weight: float = 0.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown pair model {self.kind!r}; "
                             f"expected one of {MODEL_KINDS}")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"mixture weight must lie in [0, 1], got {self.weight}")
        if self.weight != 0.0 and self.kind != "depolarized":
            raise ValueError("mixture weight applies only to 'depolarized'")

    @property
    def code(self) -> int:
        return MODEL_CODES[self.kind]


@dataclass(frozen=True)
class PairKinematics:
    """Scattering kinematics of one coincidence.

    delta_phi is phi1 - phi2 wrapped to [0, pi) (the densities are
    pi-periodic in the relative azimuth); it is derived from phi1/phi2 at
    construction so it is consistent by definition.
    """

    theta1: float
    theta2: float
    phi1: float
    phi2: float
    delta_phi: float = field(init=False)

    def __post_init__(self):
        for name in ("theta1", "theta2"):
            t = getattr(self, name)
            if not 0.0 <= t <= math.pi:
                raise ValueError(f"{name} must lie in [0, pi], got {t}")
        object.__setattr__(self, "delta_phi", wrap_half_turn(self.phi1 - self.phi2))


def wrap_half_turn(angle: float) -> float:
    """Wrap an angle to [0, pi)."""
    a = math.fmod(angle, math.pi)
    if a < 0.0:
        a += math.pi
    return a


def modulation_amplitude(model: PairModel, theta1: float, theta2: float,
                         energy_kev: float) -> float:
    """Closed-form amplitude of the cos(2 dphi) modulation.

    This is the analytic counterpart of :func:`marginal_modulation`
    (which integrates the joint density numerically); keeping both lets
    tests check one against the other.
    """
    a1 = analyzing_power(energy_kev, theta1)
    a2 = analyzing_power(energy_kev, theta2)
    if model.kind in ("entangled", "mixed_hm"):
        return a1 * a2
    if model.kind == "mixed_ba":
        return 0.0
    if model.kind == "product_fixed_basis":
        return 0.5 * a1 * a2
    # depolarized
    return (1.0 - 2.0 * model.weight) * a1 * a2


def joint_pdf(model: PairModel, kin: PairKinematics, energy_kev: float) -> float:
    """Joint density weight for scattering both photons at ``kin``.

    Rotation-invariant models depend on phi1 - phi2 only; the
    fixed-basis product model depends on phi1 and phi2 separately (its H
    axis is the lab azimuth origin).
    """
    k1 = kn_dcs_unpolarized(energy_kev, kin.theta1)
    k2 = kn_dcs_unpolarized(energy_kev, kin.theta2)
    if model.kind == "mixed_ba":
        return k1 * k2

    if model.kind == "product_fixed_basis":
        # (1/2) [ kn(phi1 | H) kn(phi2 | V) + kn(phi1 | V) kn(phi2 | H) ];
        # phi relative to a polarization at azimuth psi is phi - psi.
        hv = (kn_dcs_polarized(energy_kev, kin.theta1, kin.phi1)
              * kn_dcs_polarized(energy_kev, kin.theta2, kin.phi2 - _HALF_PI))
        vh = (kn_dcs_polarized(energy_kev, kin.theta1, kin.phi1 - _HALF_PI)
              * kn_dcs_polarized(energy_kev, kin.theta2, kin.phi2))
        return 0.5 * (hv + vh)

    amp = modulation_amplitude(model, kin.theta1, kin.theta2, energy_kev)
    return k1 * k2 * (1.0 - amp * math.cos(2.0 * (kin.phi1 - kin.phi2)))


def marginal_modulation(model: PairModel, theta1: float, theta2: float,
                        energy_kev: float, n_grid: int = 64) -> float:
    """Amplitude of the cos(2 dphi) component of the dphi marginal, by quadrature.

    The marginal M(dphi) is obtained by integrating the joint density
    over the mean azimuth on a uniform grid, and the amplitude by Fourier
    projection.  Uniform grids integrate the low trigonometric harmonics
    involved exactly, so this matches the closed forms to machine
    precision; it exists as an independent numerical route.
    """
    dphis = np.arange(n_grid) * (_TWO_PI / n_grid)
    phi1s = np.arange(n_grid) * (_TWO_PI / n_grid)
    marginal = np.empty(n_grid)
    for i, d in enumerate(dphis):
        total = 0.0
        for p1 in phi1s:
            kin = PairKinematics(theta1, theta2, float(p1), float(p1 - d))
            total += joint_pdf(model, kin, energy_kev)
        marginal[i] = total / n_grid
    mean = float(np.mean(marginal))
    if mean == 0.0:
        return 0.0
    return -2.0 * float(np.mean(marginal * np.cos(2.0 * dphis))) / mean


def sample_pair(model: PairModel, energy_kev: float,
                theta_window: tuple[float, float],
                rng: np.random.Generator) -> PairKinematics:
    """Draw one pair of scattering kinematics restricted to a theta window.

    Samples are distributed per joint_pdf * sin(theta1) * sin(theta2)
    with theta_i in ``theta_window`` (radians) and unrestricted azimuths.

    The polar angles factorize from the azimuthal correlation for every
    catalogued model, so each theta is drawn independently from the
    unpolarized weight k(theta) sin(theta) and the azimuths from the
    conditional density afterwards; both steps are plain rejection
    sampling against precomputed envelopes.
    """
    from . import _kernels_py as k

    lo, hi = theta_window
    if not (0.0 < lo < hi < math.pi):
        raise ValueError(f"theta window must satisfy 0 < lo < hi < pi, got {theta_window}")
    env = k.theta_envelope(energy_kev, lo, hi)
    theta1, theta2, phi1, phi2 = k.sample_pair_angles(
        rng, model.code, model.weight, energy_kev, lo, hi, env)
    return PairKinematics(theta1, theta2, phi1, phi2)
