"""Flat parameter block consumed by the event-generation kernels.

Both kernel backends (pure Python and compiled) read the same float64
array; the layout below is the single source of truth on the Python
side and is mirrored by a compile-time enum in the Cython source, with
``PARAMS_VERSION`` guarding against drift.

The point-counter grid (``grid_cdf``) is the cumulative distribution
over (counter1, counter2) pairs used in point-detector mode, built from
the joint model density evaluated at the counter-center azimuths.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np

from .compton import FWHM_TO_SIGMA
from .pairs import PairKinematics, PairModel, joint_pdf

if TYPE_CHECKING:
    from .apparatus import ApparatusConfig

PARAMS_VERSION = 1.0

(P_VERSION, P_MODEL_KIND, P_MODEL_W, P_DECOH_KIND, P_DECOH_W, P_ENERGY,
 P_THETA_LO, P_THETA_HI, P_POINT_MODE, P_POINT_THETA, P_PITCH, P_NCOUNTERS,
 P_GAGG_ENABLED, P_GAGG_PINT, P_GAGG_THRESHOLD, P_GAGG_MAX,
 P_NAI_LO, P_NAI_HI, P_NAI_SIG, P_GAGG_SIG,
 P_A_GAGG_MAX, P_B_NAI_LO, P_B_NAI_HI, P_C_NAI_LO, P_C_NAI_HI,
 P_D_GAGG_LO, P_D_GAGG_HI, P_D_NAI_LO, P_D_NAI_HI,
 P_BS_CHAIN, P_BS_THETA_LO, P_BS_THETA_HI,
 P_ENV_WIN, P_ENV_FULL, P_ENV_BS, N_PARAMS) = range(36)


def sigma_coefficient(fwhm_frac: float, ref_energy_kev: float) -> float:
    """Coefficient c such that sigma(E) = c * sqrt(E).

    Implements the sqrt(E) resolution scaling anchored at a reference:
    FWHM(E) = fwhm_frac * sqrt(E * ref), i.e. the fractional FWHM equals
    ``fwhm_frac`` at the reference energy.
    """
    return fwhm_frac * math.sqrt(ref_energy_kev) / FWHM_TO_SIGMA


def pack_params(model: PairModel, decoherent_model: PairModel,
                apparatus: "ApparatusConfig") -> tuple[np.ndarray, np.ndarray]:
    """Build the (params, grid_cdf) pair for the kernels."""
    from ._kernels_py import theta_envelope

    deg = math.radians
    a = apparatus
    p = np.zeros(N_PARAMS)
    p[P_VERSION] = PARAMS_VERSION
    p[P_MODEL_KIND] = model.code
    p[P_MODEL_W] = model.weight
    p[P_DECOH_KIND] = decoherent_model.code
    p[P_DECOH_W] = decoherent_model.weight
    p[P_ENERGY] = a.energy_kev
    lo, hi = deg(a.theta_window_deg[0]), deg(a.theta_window_deg[1])
    p[P_THETA_LO] = lo
    p[P_THETA_HI] = hi
    p[P_POINT_MODE] = 1.0 if a.point_detector_mode else 0.0
    p[P_POINT_THETA] = 0.5 * (lo + hi)
    p[P_PITCH] = deg(a.counter_pitch_deg)
    p[P_NCOUNTERS] = a.n_counters_per_arm
    p[P_GAGG_ENABLED] = 1.0 if a.gagg_enabled else 0.0
    p[P_GAGG_PINT] = a.gagg_interaction_prob
    p[P_GAGG_THRESHOLD] = a.gagg_threshold_kev
    p[P_GAGG_MAX] = a.gagg_max_kev
    p[P_NAI_LO], p[P_NAI_HI] = a.nai_window_kev
    p[P_NAI_SIG] = sigma_coefficient(a.nai_resolution_fwhm_frac_at_511, 511.0)
    p[P_GAGG_SIG] = sigma_coefficient(a.gagg_resolution_fwhm_frac_at_170, 170.0)
    p[P_A_GAGG_MAX] = a.class_a_gagg_max_kev
    p[P_B_NAI_LO], p[P_B_NAI_HI] = a.class_b_nai_window_kev
    p[P_C_NAI_LO], p[P_C_NAI_HI] = a.class_c_nai_window_kev
    p[P_D_GAGG_LO], p[P_D_GAGG_HI] = a.class_d_gagg_window_kev
    p[P_D_NAI_LO], p[P_D_NAI_HI] = a.class_d_nai_window_kev
    p[P_BS_CHAIN] = 1.0 if a.backscatter_chain else 0.0
    bs_lo, bs_hi = (deg(a.backscatter_theta_window_deg[0]),
                    deg(a.backscatter_theta_window_deg[1]))
    p[P_BS_THETA_LO] = bs_lo
    p[P_BS_THETA_HI] = bs_hi

    energy = a.energy_kev
    if not a.point_detector_mode:
        p[P_ENV_WIN] = theta_envelope(energy, lo, hi)
    p[P_ENV_FULL] = theta_envelope(energy, 0.0, math.pi)
    if a.backscatter_chain:
        p[P_ENV_BS] = theta_envelope(energy, bs_lo, bs_hi)

    if a.point_detector_mode:
        grid_cdf = point_grid_cdf(model, p[P_POINT_THETA], energy,
                                  a.n_counters_per_arm, p[P_PITCH])
    else:
        grid_cdf = np.zeros(1)
    return p, grid_cdf


def point_grid_cdf(model: PairModel, theta: float, energy_kev: float,
                   n_counters: int, pitch: float) -> np.ndarray:
    """Cumulative distribution over (counter1, counter2) for point counters.

    Point counters sample the azimuthal density only at the counter
    positions, so the discrete weights are the joint density evaluated at
    the counter-center azimuths with both polar angles pinned.
    """
    weights = np.empty(n_counters * n_counters)
    for i in range(n_counters):
        phi1 = (i + 0.5) * pitch
        for j in range(n_counters):
            phi2 = (j + 0.5) * pitch
            kin = PairKinematics(theta, theta, phi1, phi2)
            weights[i * n_counters + j] = joint_pdf(model, kin, energy_kev)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return cdf
