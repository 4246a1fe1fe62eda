"""Polarized Compton scattering: kinematics, cross sections, polarization transfer.

All energies in keV, all angles in radians (core units).  Differential
cross sections are returned in units of the squared classical electron
radius (r_e^2 = 1); only ratios and normalized sampling weights are ever
consumed downstream, so the absolute scale is irrelevant.

Conventions
-----------
theta   polar scattering angle, in [0, pi].
phi     azimuth of the scattering plane measured from the incident
        linear-polarization direction (for polarized photons) or from a
        fixed deterministic transverse axis (for unpolarized photons).
eps     ratio E1/E of scattered to incident photon energy.

The polarized differential cross section is

    dsigma/dOmega = (eps^2 / 2) * (eps + 1/eps - 2 sin^2(theta) cos^2(phi)),

its phi-average is the unpolarized form, and the transfer between
definite linear polarizations follows

    dsigma/dOmega = (eps^2 / 4) * (eps + 1/eps - 2 + 4 cos^2(Theta)),

with Theta the angle between incident and final polarization vectors.
The scattered photon's polarization is discretized to one of the two
natural final basis vectors (the transverse projection of the incident
polarization, or the vector orthogonal to it); no partial/Stokes
polarization is carried.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ELECTRON_MASS_KEV = 511.0
CLASSICAL_ELECTRON_RADIUS = 1.0  # cross sections are used only as ratios

# FWHM of a Gaussian in units of sigma.
FWHM_TO_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))

# Safety factor applied on top of grid maxima when building rejection
# envelopes; the sampled densities are smooth, so a coarse grid plus this
# margin is a strict upper bound in practice (asserted during sampling).
ENVELOPE_SAFETY = 1.05
_ENVELOPE_GRID = 512

_TWO_PI = 2.0 * math.pi


def _check_energy_theta(energy_kev: float, theta: float) -> None:
    if not energy_kev > 0.0:
        raise ValueError(f"photon energy must be positive, got {energy_kev}")
    if not 0.0 <= theta <= math.pi:
        raise ValueError(f"scattering angle must lie in [0, pi], got {theta}")


def scattered_energy(energy_kev: float, theta: float) -> float:
    """Energy of the scattered photon.

        E1 = E * m_e / (m_e + E * (1 - cos theta))

    Monotonically decreasing in theta for fixed E.

    Args:
        energy_kev: Incident photon energy [keV].
        theta: Scattering angle [rad].

    Returns:
        Scattered photon energy E1 [keV].
    """
    _check_energy_theta(energy_kev, theta)
    me = ELECTRON_MASS_KEV
    return energy_kev * me / (me + energy_kev * (1.0 - math.cos(theta)))


def recoil_energy(energy_kev: float, theta: float) -> float:
    """Kinetic energy of the recoil electron, E - E1 [keV]."""
    return energy_kev - scattered_energy(energy_kev, theta)


def kn_dcs_polarized(energy_kev: float, theta: float, phi: float) -> float:
    """Differential cross section for a linearly polarized incident photon.

        (eps^2 / 2) * (eps + 1/eps - 2 sin^2(theta) cos^2(phi))

    phi is measured from the incident polarization direction.  Do not call
    this for unpolarized photons; use :func:`kn_dcs_unpolarized`.

    Returns:
        dsigma/dOmega in r_e^2 units; strictly positive.
    """
    _check_energy_theta(energy_kev, theta)
    eps = scattered_energy(energy_kev, theta) / energy_kev
    s = math.sin(theta)
    c = math.cos(phi)
    return 0.5 * eps * eps * (eps + 1.0 / eps - 2.0 * s * s * c * c)


def kn_dcs_unpolarized(energy_kev: float, theta: float) -> float:
    """Azimuth-averaged differential cross section.

        (eps^2 / 2) * (eps + 1/eps - sin^2(theta))

    Equals the mean of :func:`kn_dcs_polarized` over phi in [0, 2*pi).
    """
    _check_energy_theta(energy_kev, theta)
    eps = scattered_energy(energy_kev, theta) / energy_kev
    s = math.sin(theta)
    return 0.5 * eps * eps * (eps + 1.0 / eps - s * s)


def analyzing_power(energy_kev: float, theta: float) -> float:
    """Azimuthal asymmetry of polarized Compton scattering.

        A(theta) = sin^2(theta) / (E1/E + E/E1 - sin^2(theta))

    Identical to the cross-section asymmetry
    (dcs(phi=90deg) - dcs(phi=0)) / (dcs(phi=90deg) + dcs(phi=0)).
    A(0) = 0 by continuity; for 511 keV photons the maximum is about
    0.69 near theta = 82 deg.

    Returns:
        Dimensionless asymmetry in [0, 1).
    """
    _check_energy_theta(energy_kev, theta)
    if theta == 0.0:
        return 0.0
    eps = scattered_energy(energy_kev, theta) / energy_kev
    s = math.sin(theta)
    return s * s / (eps + 1.0 / eps - s * s)


def kn_dcs_pol_to_pol(energy_kev: float, theta: float, pol_angle: float) -> float:
    """Cross section for scattering into a definite final linear polarization.

        (eps^2 / 4) * (eps + 1/eps - 2 + 4 cos^2(Theta))

    pol_angle is Theta, the angle between the incident and final
    polarization vectors.  Summed over the two orthogonal final basis
    vectors of the scattered photon this reproduces
    :func:`kn_dcs_polarized` exactly.

    Args:
        energy_kev: Incident photon energy [keV].
        theta: Scattering angle [rad].
        pol_angle: Angle between incident and final polarization [rad],
            in [0, pi].
    """
    _check_energy_theta(energy_kev, theta)
    if not 0.0 <= pol_angle <= math.pi:
        raise ValueError(f"polarization angle must lie in [0, pi], got {pol_angle}")
    eps = scattered_energy(energy_kev, theta) / energy_kev
    c = math.cos(pol_angle)
    return 0.25 * eps * eps * (eps + 1.0 / eps - 2.0 + 4.0 * c * c)


def flip_probability(energy_kev: float, theta: float) -> float:
    """Probability that scattering flips the polarization to the orthogonal state.

    For an incident photon polarized perpendicular to the scattering plane
    the two final basis vectors see transfer weights

        no-flip: eps + 1/eps + 2        flip: eps + 1/eps - 2

    so the flip probability is (eps + 1/eps - 2) / (2 (eps + 1/eps)).
    It vanishes for forward scattering and in the low-energy (Thomson)
    limit, and reaches exactly 1/5 for 511 keV photons backscattered at
    180 degrees.
    """
    _check_energy_theta(energy_kev, theta)
    eps = scattered_energy(energy_kev, theta) / energy_kev
    g = eps + 1.0 / eps
    return (g - 2.0) / (2.0 * g)


# ---------------------------------------------------------------------------
# photon state and single-scatter sampling
# ---------------------------------------------------------------------------

_UNIT_TOL = 1e-12


@dataclass(frozen=True)
class PhotonState:
    """One photon in flight.

    Attributes:
        energy_kev: Photon energy, > 0.
        direction: Unit 3-vector of propagation.
        polarization: Unit 3-vector of linear polarization, orthogonal to
            ``direction``, or None for an unpolarized photon.
    """

    energy_kev: float
    direction: np.ndarray
    polarization: np.ndarray | None = None

    def __post_init__(self):
        if not self.energy_kev > 0.0:
            raise ValueError(f"photon energy must be positive, got {self.energy_kev}")
        d = np.asarray(self.direction, dtype=float)
        object.__setattr__(self, "direction", d)
        if d.shape != (3,):
            raise ValueError("direction must be a 3-vector")
        if abs(np.linalg.norm(d) - 1.0) > _UNIT_TOL:
            raise ValueError("direction must have unit norm")
        if self.polarization is not None:
            e = np.asarray(self.polarization, dtype=float)
            object.__setattr__(self, "polarization", e)
            if e.shape != (3,):
                raise ValueError("polarization must be a 3-vector")
            if abs(np.linalg.norm(e) - 1.0) > _UNIT_TOL:
                raise ValueError("polarization must have unit norm")
            if abs(float(np.dot(e, d))) > _UNIT_TOL:
                raise ValueError("polarization must be orthogonal to direction")

    @property
    def polarized(self) -> bool:
        return self.polarization is not None


@dataclass(frozen=True)
class ScatterSample:
    """Outcome of one sampled Compton scatter.

    Attributes:
        theta: Polar scattering angle [rad].
        phi: Azimuth of the scattering plane [rad], measured from the
            incident polarization (polarized case) or from the
            deterministic transverse reference axis (unpolarized case).
        energy_out_kev: Scattered photon energy.
        epsilon: energy_out / energy_in, in (0, 1].
        recoil_kev: Electron recoil energy, energy_in - energy_out.
        direction_out: Unit 3-vector of the scattered photon.
        polarization_out: Discretized final polarization unit vector.
        flipped: True if the final polarization is the basis vector
            orthogonal to the transverse projection of the incident one.
    """

    theta: float
    phi: float
    energy_out_kev: float
    epsilon: float
    recoil_kev: float
    direction_out: np.ndarray
    polarization_out: np.ndarray
    flipped: bool


def transverse_axis(direction: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to ``direction``.

    Projects out the coordinate axis least aligned with the direction.
    Used as the azimuth reference in the singular frames (theta = 0, pi)
    and for unpolarized photons; observables depend on relative azimuths
    only, so any fixed rule is acceptable.
    """
    k = int(np.argmin(np.abs(direction)))
    axis = np.zeros(3)
    axis[k] = 1.0
    t = axis - float(np.dot(axis, direction)) * direction
    return t / np.linalg.norm(t)


_envelope_cache: dict[float, float] = {}


def _scatter_envelope(energy_kev: float) -> float:
    """Upper bound on the sampled density kn_dcs_polarized * sin(theta).

    The maximum over phi sits at phi = pi/2, so a 1-D theta grid on that
    slice bounds the full 2-D density.  Cached per incident energy.
    """
    cached = _envelope_cache.get(energy_kev)
    if cached is not None:
        return cached
    thetas = np.linspace(0.0, math.pi, _ENVELOPE_GRID)
    env = ENVELOPE_SAFETY * max(
        kn_dcs_polarized(energy_kev, t, 0.5 * math.pi) * math.sin(t) for t in thetas
    )
    _envelope_cache[energy_kev] = env
    return env


def sample_scatter(photon: PhotonState, rng: np.random.Generator) -> ScatterSample:
    """Draw one Compton scatter for the given photon.

    (theta, phi) are rejection-sampled proportionally to
    dsigma/dOmega * sin(theta) against a precomputed global envelope.
    The final polarization is chosen between the two orthogonal final
    basis vectors with :func:`kn_dcs_pol_to_pol` weights.

    Args:
        photon: Incident photon (polarized or not).
        rng: numpy random Generator owning an independent stream.

    Returns:
        ScatterSample with kinematics and discretized final polarization.
    """
    energy = photon.energy_kev
    k_in = photon.direction

    if photon.polarized:
        e_ref = photon.polarization
        psi = 0.0
    else:
        # An unpolarized photon is an isotropic ensemble of linear
        # polarizations: draw the incident polarization first, then
        # scatter as polarized.  The reported phi stays relative to the
        # deterministic axis so its marginal is uniform.
        t1 = transverse_axis(k_in)
        psi = _TWO_PI * rng.random()
        t2 = np.cross(k_in, t1)
        e_ref = math.cos(psi) * t1 + math.sin(psi) * t2

    env = _scatter_envelope(energy)
    while True:
        theta = math.pi * rng.random()
        phi_rel = _TWO_PI * rng.random()
        f = kn_dcs_polarized(energy, theta, phi_rel) * math.sin(theta)
        if f > env:
            raise AssertionError("rejection envelope violated")
        if rng.random() * env <= f:
            break

    e1 = scattered_energy(energy, theta)
    eps = e1 / energy

    perp = np.cross(k_in, e_ref)
    k_out = (math.cos(theta) * k_in
             + math.sin(theta) * (math.cos(phi_rel) * e_ref + math.sin(phi_rel) * perp))

    # Final polarization basis: transverse projection of the incident
    # polarization (no-flip) and the vector orthogonal to it.
    proj = e_ref - float(np.dot(e_ref, k_out)) * k_out
    norm = np.linalg.norm(proj)
    if norm > 1e-9:
        e_noflip = proj / norm
    else:
        e_noflip = transverse_axis(k_out)  # degenerate: e_ref parallel to k_out
    e_flip = np.cross(k_out, e_noflip)

    g = eps + 1.0 / eps
    cos2_noflip = 1.0 - float(np.dot(e_ref, k_out)) ** 2
    w_noflip = (g - 2.0) + 4.0 * cos2_noflip
    w_flip = g - 2.0
    flipped = rng.random() * (w_noflip + w_flip) < w_flip
    e_out = e_flip if flipped else e_noflip

    phi = phi_rel if photon.polarized else math.fmod(psi + phi_rel, _TWO_PI)
    return ScatterSample(
        theta=theta,
        phi=phi,
        energy_out_kev=e1,
        epsilon=eps,
        recoil_kev=energy - e1,
        direction_out=k_out,
        polarization_out=e_out,
        flipped=bool(flipped),
    )
