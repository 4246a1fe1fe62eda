"""Parametric model of the two-arm coincidence setup.

Geometry is parametric, not ray-traced: the polar acceptance is a theta
window, azimuths are binned by the counter pitch, and the quoted
distances (70 cm between plastic scatterers, source 10 cm off-center
toward the tagging-scatterer arm) are recorded for documentation only --
the source offset just guarantees the ordering of interactions, which
the simulation enforces directly.

Arm 1 carries the optional thin GAGG tagging scatterer in front of its
plastic scatterer; an interaction there marks the pair as decohered.
Event classes by (GAGG, NaI) energy deposition pattern:

    entangled_candidate   no measured GAGG deposit
    a                     GAGG deposit below ~30 keV (small deflection)
    b                     30-110 keV, first scatter toward the counter
                          (high NaI energy band)
    c                     30-110 keV, first scatter away from the counter
                          (low NaI energy band)
    d                     plastic backscatter, second scatter in the
                          GAGG at ~90 deg (lowest NaI energies)

The b/c/d band edges are qualitative estimates and are config-overridable;
only the a-class boundary (30 keV) and the tagging window (up to 110 keV)
are fixed numbers from the reference setup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels_py
from ._params import pack_params, sigma_coefficient
from .compton import PhotonState, sample_scatter
from .pairs import PairKinematics, PairModel

CLASS_NAMES = ("entangled_candidate", "a", "b", "c", "d")
CLASS_REJECTED = "rejected"


@dataclass(frozen=True)
class ApparatusConfig:
    """Parametric description of the setup.

    Energies in keV, angles in degrees (converted to radians at the
    kernel boundary).  ``point_detector_mode`` idealizes the counters as
    points: both polar angles are pinned to the theta-window midpoint and
    azimuths take only the counter-center values.
    """

    n_counters_per_arm: int = 16
    counter_pitch_deg: float = 22.5
    theta_window_deg: tuple[float, float] = (80.0, 100.0)
    plastic_separation_cm: float = 70.0
    source_offset_cm: float = 10.0
    gagg_enabled: bool = False
    gagg_interaction_prob: float = 0.25
    gagg_threshold_kev: float = 2.0
    gagg_max_kev: float = 110.0
    nai_window_kev: tuple[float, float] = (235.0, 280.0)
    nai_resolution_fwhm_frac_at_511: float = 0.09
    gagg_resolution_fwhm_frac_at_170: float = 0.10
    point_detector_mode: bool = False
    energy_kev: float = 511.0
    class_a_gagg_max_kev: float = 30.0
    class_b_nai_window_kev: tuple[float, float] = (270.0, 430.0)
    class_c_nai_window_kev: tuple[float, float] = (150.0, 240.0)
    class_d_gagg_window_kev: tuple[float, float] = (30.0, 60.0)
    class_d_nai_window_kev: tuple[float, float] = (90.0, 150.0)
    backscatter_chain: bool = False
    backscatter_theta_window_deg: tuple[float, float] = (165.0, 180.0)

    def __post_init__(self):
        if self.n_counters_per_arm < 2:
            raise ValueError("need at least two counters per arm")
        if abs(self.n_counters_per_arm * self.counter_pitch_deg - 360.0) > 1e-9:
            raise ValueError(
                f"counter pitch x count must cover 360 deg, got "
                f"{self.n_counters_per_arm} x {self.counter_pitch_deg}")
        lo, hi = self.theta_window_deg
        if not 0.0 < lo <= hi < 180.0:
            raise ValueError(f"theta window must lie inside (0, 180), got {self.theta_window_deg}")
        if lo == hi and not self.point_detector_mode:
            raise ValueError("degenerate theta window requires point_detector_mode")
        if self.energy_kev <= 0.0:
            raise ValueError("photon energy must be positive")
        if self.gagg_threshold_kev <= 0.0:
            raise ValueError("GAGG threshold must be positive")
        if not 0.0 <= self.gagg_interaction_prob <= 1.0:
            raise ValueError("GAGG interaction probability must lie in [0, 1]")
        for name in ("nai_window_kev", "class_b_nai_window_kev",
                     "class_c_nai_window_kev", "class_d_gagg_window_kev",
                     "class_d_nai_window_kev", "backscatter_theta_window_deg"):
            win = getattr(self, name)
            if len(win) != 2 or not win[0] < win[1]:
                raise ValueError(f"{name} must be an ordered pair, got {win}")
            object.__setattr__(self, name, (float(win[0]), float(win[1])))
        object.__setattr__(self, "theta_window_deg",
                           (float(lo), float(hi)))
        if self.point_detector_mode and (self.gagg_enabled or self.backscatter_chain):
            raise ValueError("point_detector_mode excludes GAGG tagging and "
                             "the backscatter chain")


@dataclass(frozen=True)
class EventRecord:
    """One simulated coincidence.

    ``kin`` holds the true pair kinematics, the e_* fields the measured
    (smeared) energies; true_* keep the unsmeared deposits of the GAGG
    and NaI so energy bookkeeping stays checkable.  Plastic deposits are
    recorded unsmeared (nothing downstream consumes them, and no plastic
    resolution figure is part of the setup description).
    """

    kin: PairKinematics
    e_gagg: float
    e_plastic1: float
    e_plastic2: float
    e_nai1: float
    e_nai2: float
    counter1: int
    counter2: int
    class_tag: str
    true_gagg: float
    true_nai1: float
    true_nai2: float


def detector_response(true_energy_kev: float, fwhm_frac_at_ref: float,
                      ref_energy_kev: float, rng: np.random.Generator) -> float:
    """Gaussian energy smearing with sqrt(E) resolution scaling.

    sigma(E) = fwhm_frac * sqrt(E * ref) / (2 sqrt(2 ln 2)), i.e. the
    fractional FWHM equals ``fwhm_frac_at_ref`` at the reference energy.
    Negative draws clamp to zero; a zero fraction is the identity.
    """
    if true_energy_kev < 0.0:
        raise ValueError("true energy must be non-negative")
    if fwhm_frac_at_ref == 0.0 or true_energy_kev == 0.0:
        return true_energy_kev
    sig = sigma_coefficient(fwhm_frac_at_ref, ref_energy_kev)
    measured = true_energy_kev + sig * math.sqrt(true_energy_kev) * _kernels_py._gauss(rng)
    return measured if measured > 0.0 else 0.0


def gagg_prescatter(photon: PhotonState, config: ApparatusConfig,
                    rng: np.random.Generator):
    """Optional Compton scatter of the arm-1 photon in the tagging scatterer.

    With probability ``config.gagg_interaction_prob`` the photon scatters
    once; the measured deposit is the recoil energy smeared by the GAGG
    response and zeroed below threshold.  The returned photon carries the
    post-scatter direction, energy and discretized polarization.

    Returns:
        (deposited_kev, photon_after, interacted)
    """
    if rng.random() >= config.gagg_interaction_prob:
        return 0.0, photon, False
    sample = sample_scatter(photon, rng)
    deposited = detector_response(sample.recoil_kev,
                                  config.gagg_resolution_fwhm_frac_at_170,
                                  170.0, rng)
    if deposited < config.gagg_threshold_kev:
        deposited = 0.0
    photon_after = PhotonState(
        energy_kev=sample.energy_out_kev,
        direction=sample.direction_out,
        polarization=sample.polarization_out,
    )
    return deposited, photon_after, True


def classify_event(event: EventRecord, config: ApparatusConfig) -> str:
    """Classify a populated event by its measured energy pattern.

    Applies the same bands as the generation kernel; events outside every
    band come back as 'rejected'.
    """
    e_gagg = event.e_gagg
    e_nai1 = event.e_nai1
    nai_lo, nai_hi = config.nai_window_kev
    if not nai_lo <= event.e_nai2 <= nai_hi:
        return CLASS_REJECTED
    d_gagg = config.class_d_gagg_window_kev
    d_nai = config.class_d_nai_window_kev
    if (config.backscatter_chain and d_gagg[0] <= e_gagg <= d_gagg[1]
            and d_nai[0] <= e_nai1 <= d_nai[1]):
        return "d"
    if e_gagg == 0.0:
        return "entangled_candidate" if nai_lo <= e_nai1 <= nai_hi else CLASS_REJECTED
    if e_gagg < config.class_a_gagg_max_kev:
        return "a" if nai_lo <= e_nai1 <= nai_hi else CLASS_REJECTED
    if e_gagg <= config.gagg_max_kev:
        b = config.class_b_nai_window_kev
        if b[0] <= e_nai1 <= b[1]:
            return "b"
        c = config.class_c_nai_window_kev
        if c[0] <= e_nai1 <= c[1]:
            return "c"
    return CLASS_REJECTED


def simulate_event(model: PairModel, config: ApparatusConfig,
                   rng: np.random.Generator,
                   decoherent_model: PairModel | None = None) -> EventRecord | None:
    """Run one event attempt through the apparatus.

    Entangled (non-interacting) events draw their pair kinematics from
    ``model``; GAGG-interacted events draw from ``decoherent_model``
    (default: the orthogonal mixture with entangled-like correlation)
    and fold the pre-scatter deflection into the first photon's angular
    budget.  Returns None when the acceptance rejects the attempt.
    """
    if decoherent_model is None:
        decoherent_model = PairModel("mixed_hm")
    params, grid = pack_params(model, decoherent_model, config)
    out = _kernels_py.attempt(rng, params.tolist(), grid.tolist())
    if out is None:
        return None
    return _event_from_tuple(out)


def _event_from_tuple(out) -> EventRecord:
    (theta1, theta2, phi1, phi2, e_gagg, e_pl1, e_pl2, e_nai1, e_nai2,
     true_gagg, true_nai1, true_nai2, c1, c2, tag) = out
    return EventRecord(
        kin=PairKinematics(theta1, theta2, phi1, phi2),
        e_gagg=e_gagg, e_plastic1=e_pl1, e_plastic2=e_pl2,
        e_nai1=e_nai1, e_nai2=e_nai2,
        counter1=int(c1), counter2=int(c2),
        class_tag=CLASS_NAMES[int(tag)],
        true_gagg=true_gagg, true_nai1=true_nai1, true_nai2=true_nai2,
    )


def events_from_arrays(arrays: dict[str, np.ndarray]) -> list[EventRecord]:
    """Materialize EventRecords from kernel output arrays (small batches)."""
    n = len(arrays["theta1"])
    out = []
    for i in range(n):
        out.append(EventRecord(
            kin=PairKinematics(float(arrays["theta1"][i]),
                               float(arrays["theta2"][i]),
                               float(arrays["phi1"][i]),
                               float(arrays["phi2"][i])),
            e_gagg=float(arrays["e_gagg"][i]),
            e_plastic1=float(arrays["e_plastic1"][i]),
            e_plastic2=float(arrays["e_plastic2"][i]),
            e_nai1=float(arrays["e_nai1"][i]),
            e_nai2=float(arrays["e_nai2"][i]),
            counter1=int(arrays["counter1"][i]),
            counter2=int(arrays["counter2"][i]),
            class_tag=CLASS_NAMES[int(arrays["class_tag"][i])],
            true_gagg=float(arrays["true_gagg"][i]),
            true_nai1=float(arrays["true_nai1"][i]),
            true_nai2=float(arrays["true_nai2"][i]),
        ))
    return out
