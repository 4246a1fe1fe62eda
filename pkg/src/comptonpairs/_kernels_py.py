"""Pure-Python event-generation kernel.

Reference implementation of the hot per-event loop.  The compiled
backend (``_kernels_cy``) mirrors this module operation for operation:
same formulas, same rejection loops, same order of random draws, so both
produce bit-identical event streams from the same BitGenerator state.

Draw-order contract (U = one uniform double from the stream):

  normal branch (point_mode = 0, backscatter_chain = 0)
    1. if gagg_enabled: U (interaction test); if interacted:
         theta_g rejection [2 U per iteration], U (deflection side),
         gauss [2 U] for the GAGG deposit smear
    2. pair angles:
         theta1 rejection [2 U/iter], theta2 rejection [2 U/iter], then
         product_fixed_basis: U (pairing), phi1 rejection [2 U/iter],
                              phi2 rejection [2 U/iter]
         otherwise:           U (phi1), dphi rejection [2 U/iter]
    3. gauss [2 U] for NaI 1, gauss [2 U] for NaI 2

  point branch (point_mode = 1)
    1. U (counter-pair pick from the grid CDF)
    2. gauss for NaI 1, gauss for NaI 2

  backscatter branch (backscatter_chain = 1)
    1. theta_b rejection [2 U/iter]
    2. pair angles as above
    3. gauss GAGG, gauss NaI 1, gauss NaI 2

Smear draws are consumed whether or not the event is later accepted.
Gaussians use the one-sided Box-Muller transform (two uniforms each) so
consumption is fixed and easy to mirror in C.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ._params import (
    N_PARAMS, PARAMS_VERSION, P_A_GAGG_MAX, P_BS_CHAIN, P_BS_THETA_HI,
    P_BS_THETA_LO, P_B_NAI_HI, P_B_NAI_LO, P_C_NAI_HI, P_C_NAI_LO,
    P_D_GAGG_HI, P_D_GAGG_LO, P_D_NAI_HI, P_D_NAI_LO, P_DECOH_KIND,
    P_DECOH_W, P_ENERGY, P_ENV_BS, P_ENV_FULL, P_ENV_WIN, P_GAGG_ENABLED,
    P_GAGG_MAX, P_GAGG_PINT, P_GAGG_SIG, P_GAGG_THRESHOLD, P_MODEL_KIND,
    P_MODEL_W, P_NAI_HI, P_NAI_LO, P_NAI_SIG, P_NCOUNTERS, P_PITCH,
    P_POINT_MODE, P_POINT_THETA, P_THETA_HI, P_THETA_LO, P_VERSION,
)

BACKEND = "python"

ME = 511.0
TWO_PI = 6.283185307179586
PI = math.pi

KIND_ENTANGLED = 0
KIND_MIXED_HM = 1
KIND_MIXED_BA = 2
KIND_PRODUCT_FIXED = 3
KIND_DEPOLARIZED = 4

TAG_ENTANGLED = 0
TAG_A = 1
TAG_B = 2
TAG_C = 3
TAG_D = 4

_ENVELOPE_GRID = 512
_ENVELOPE_SAFETY = 1.05


def _scat(energy: float, ctheta: float) -> float:
    return energy * ME / (ME + energy * (1.0 - ctheta))


def _kn_unpol_sin(energy: float, theta: float) -> float:
    c = math.cos(theta)
    s = math.sin(theta)
    eps = _scat(energy, c) / energy
    return 0.5 * eps * eps * (eps + 1.0 / eps - s * s) * s


def _alpha(energy: float, theta: float) -> float:
    c = math.cos(theta)
    s = math.sin(theta)
    eps = _scat(energy, c) / energy
    return s * s / (eps + 1.0 / eps - s * s)


@lru_cache(maxsize=64)
def theta_envelope(energy: float, lo: float, hi: float) -> float:
    """Rejection envelope for the density kn_unpolarized(theta) sin(theta)."""
    best = 0.0
    for i in range(_ENVELOPE_GRID):
        t = lo + (hi - lo) * i / (_ENVELOPE_GRID - 1)
        f = _kn_unpol_sin(energy, t)
        if f > best:
            best = f
    return _ENVELOPE_SAFETY * best


def _gauss(rng) -> float:
    # One-sided Box-Muller; fixed two-uniform consumption.
    u1 = rng.random()
    u2 = rng.random()
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(TWO_PI * u2)


def _sample_theta(rng, energy: float, lo: float, hi: float, env: float) -> float:
    while True:
        theta = lo + (hi - lo) * rng.random()
        f = _kn_unpol_sin(energy, theta)
        if f > env:
            raise AssertionError("theta rejection envelope violated")
        if rng.random() * env <= f:
            return theta


def _sample_dphi(rng, m: float) -> float:
    # density proportional to 1 - m cos(2 dphi) on [0, 2 pi)
    env = 1.0 + abs(m)
    while True:
        d = TWO_PI * rng.random()
        f = 1.0 - m * math.cos(2.0 * d)
        if rng.random() * env <= f:
            return d


def _sample_phi_polarized(rng, alpha: float, psi: float) -> float:
    # density proportional to 1 - alpha cos(2 (phi - psi)) on [0, 2 pi)
    env = 1.0 + alpha
    while True:
        phi = TWO_PI * rng.random()
        f = 1.0 - alpha * math.cos(2.0 * (phi - psi))
        if rng.random() * env <= f:
            return phi


def sample_pair_angles(rng, kind: int, weight: float, energy: float,
                       lo: float, hi: float, env: float):
    """Draw (theta1, theta2, phi1, phi2) for one pair from a model."""
    theta1 = _sample_theta(rng, energy, lo, hi, env)
    theta2 = _sample_theta(rng, energy, lo, hi, env)
    if kind == KIND_PRODUCT_FIXED:
        a1 = _alpha(energy, theta1)
        a2 = _alpha(energy, theta2)
        # definite pairing: photon 1 along H (psi = 0) and photon 2 along
        # V (psi = pi/2), or swapped, with equal probability
        if rng.random() < 0.5:
            psi1 = 0.0
            psi2 = 0.5 * PI
        else:
            psi1 = 0.5 * PI
            psi2 = 0.0
        phi1 = _sample_phi_polarized(rng, a1, psi1)
        phi2 = _sample_phi_polarized(rng, a2, psi2)
    else:
        if kind == KIND_MIXED_BA:
            m = 0.0
        else:
            m = _alpha(energy, theta1) * _alpha(energy, theta2)
            if kind == KIND_DEPOLARIZED:
                m = (1.0 - 2.0 * weight) * m
        phi1 = TWO_PI * rng.random()
        dphi = _sample_dphi(rng, m)
        phi2 = phi1 - dphi
        if phi2 < 0.0:
            phi2 += TWO_PI
    return theta1, theta2, phi1, phi2


def attempt(rng, p, grid_cdf):
    """Run one event attempt; return the event tuple or None if rejected.

    Tuple layout: (theta1, theta2, phi1, phi2, e_gagg, e_pl1, e_pl2,
    e_nai1, e_nai2, true_gagg, true_nai1, true_nai2, c1, c2, tag).
    """
    energy = p[P_ENERGY]
    pitch = p[P_PITCH]
    nc = int(p[P_NCOUNTERS])
    nai_sig = p[P_NAI_SIG]
    nai_lo = p[P_NAI_LO]
    nai_hi = p[P_NAI_HI]

    if p[P_BS_CHAIN] != 0.0:
        # class-d topology: pass through the GAGG, backscatter in the
        # plastic, second scatter at ~90 deg in the GAGG, then NaI
        theta_b = _sample_theta(rng, energy, p[P_BS_THETA_LO], p[P_BS_THETA_HI],
                                p[P_ENV_BS])
        theta1, theta2, phi1, phi2 = sample_pair_angles(
            rng, int(p[P_MODEL_KIND]), p[P_MODEL_W], energy,
            p[P_THETA_LO], p[P_THETA_HI], p[P_ENV_WIN])
        e_back = _scat(energy, math.cos(theta_b))
        e_pl1 = energy - e_back
        true_nai1 = _scat(e_back, math.cos(theta1))
        true_gagg = e_back - true_nai1
        true_nai2 = _scat(energy, math.cos(theta2))
        e_pl2 = energy - true_nai2
        e_gagg = true_gagg + p[P_GAGG_SIG] * math.sqrt(true_gagg) * _gauss(rng)
        if e_gagg < 0.0:
            e_gagg = 0.0
        if e_gagg < p[P_GAGG_THRESHOLD]:
            e_gagg = 0.0
        e_nai1 = true_nai1 + nai_sig * math.sqrt(true_nai1) * _gauss(rng)
        if e_nai1 < 0.0:
            e_nai1 = 0.0
        e_nai2 = true_nai2 + nai_sig * math.sqrt(true_nai2) * _gauss(rng)
        if e_nai2 < 0.0:
            e_nai2 = 0.0
        if not nai_lo <= e_nai2 <= nai_hi:
            return None
        if not p[P_D_GAGG_LO] <= e_gagg <= p[P_D_GAGG_HI]:
            return None
        if not p[P_D_NAI_LO] <= e_nai1 <= p[P_D_NAI_HI]:
            return None
        c1 = int(phi1 / pitch) % nc
        c2 = int(phi2 / pitch) % nc
        return (theta1, theta2, phi1, phi2, e_gagg, e_pl1, e_pl2,
                e_nai1, e_nai2, true_gagg, true_nai1, true_nai2, c1, c2, TAG_D)

    if p[P_POINT_MODE] != 0.0:
        u = rng.random()
        idx = 0
        last = nc * nc - 1
        while idx < last and grid_cdf[idx] < u:
            idx += 1
        c1 = idx // nc
        c2 = idx % nc
        phi1 = (c1 + 0.5) * pitch
        phi2 = (c2 + 0.5) * pitch
        theta1 = theta2 = p[P_POINT_THETA]
        true_nai1 = _scat(energy, math.cos(theta1))
        true_nai2 = _scat(energy, math.cos(theta2))
        e_pl1 = energy - true_nai1
        e_pl2 = energy - true_nai2
        e_nai1 = true_nai1 + nai_sig * math.sqrt(true_nai1) * _gauss(rng)
        if e_nai1 < 0.0:
            e_nai1 = 0.0
        e_nai2 = true_nai2 + nai_sig * math.sqrt(true_nai2) * _gauss(rng)
        if e_nai2 < 0.0:
            e_nai2 = 0.0
        if not nai_lo <= e_nai2 <= nai_hi:
            return None
        if not nai_lo <= e_nai1 <= nai_hi:
            return None
        return (theta1, theta2, phi1, phi2, 0.0, e_pl1, e_pl2,
                e_nai1, e_nai2, 0.0, true_nai1, true_nai2, c1, c2, TAG_ENTANGLED)

    # normal branch: optional GAGG pre-scatter, then the two polarimeters
    interacted = False
    theta_g = 0.0
    side = 1.0
    true_gagg = 0.0
    e_gagg = 0.0
    e_in1 = energy
    if p[P_GAGG_ENABLED] != 0.0:
        if rng.random() < p[P_GAGG_PINT]:
            interacted = True
            theta_g = _sample_theta(rng, energy, 0.0, PI, p[P_ENV_FULL])
            side = 1.0 if rng.random() < 0.5 else -1.0
            e_in1 = _scat(energy, math.cos(theta_g))
            true_gagg = energy - e_in1
            e_gagg = true_gagg + p[P_GAGG_SIG] * math.sqrt(true_gagg) * _gauss(rng)
            if e_gagg < 0.0:
                e_gagg = 0.0
            if e_gagg < p[P_GAGG_THRESHOLD]:
                e_gagg = 0.0

    if interacted:
        kind = int(p[P_DECOH_KIND])
        weight = p[P_DECOH_W]
    else:
        kind = int(p[P_MODEL_KIND])
        weight = p[P_MODEL_W]
    theta1, theta2, phi1, phi2 = sample_pair_angles(
        rng, kind, weight, energy, p[P_THETA_LO], p[P_THETA_HI], p[P_ENV_WIN])

    # the pair model's theta1 is the total axis-to-counter angle budget;
    # the in-plastic deflection is what remains after the GAGG kick
    theta_p1 = theta1 - side * theta_g if interacted else theta1
    if theta_p1 < 0.0:
        theta_p1 = -theta_p1
    if theta_p1 > PI:
        theta_p1 = TWO_PI - theta_p1

    true_nai1 = _scat(e_in1, math.cos(theta_p1))
    e_pl1 = e_in1 - true_nai1
    true_nai2 = _scat(energy, math.cos(theta2))
    e_pl2 = energy - true_nai2
    e_nai1 = true_nai1 + nai_sig * math.sqrt(true_nai1) * _gauss(rng)
    if e_nai1 < 0.0:
        e_nai1 = 0.0
    e_nai2 = true_nai2 + nai_sig * math.sqrt(true_nai2) * _gauss(rng)
    if e_nai2 < 0.0:
        e_nai2 = 0.0

    if not nai_lo <= e_nai2 <= nai_hi:
        return None
    if e_gagg == 0.0:
        if not nai_lo <= e_nai1 <= nai_hi:
            return None
        tag = TAG_ENTANGLED
    elif e_gagg < p[P_A_GAGG_MAX]:
        if not nai_lo <= e_nai1 <= nai_hi:
            return None
        tag = TAG_A
    elif e_gagg <= p[P_GAGG_MAX]:
        if p[P_B_NAI_LO] <= e_nai1 <= p[P_B_NAI_HI]:
            tag = TAG_B
        elif p[P_C_NAI_LO] <= e_nai1 <= p[P_C_NAI_HI]:
            tag = TAG_C
        else:
            return None
    else:
        return None

    c1 = int(phi1 / pitch) % nc
    c2 = int(phi2 / pitch) % nc
    return (theta1, theta2, phi1, phi2, e_gagg, e_pl1, e_pl2,
            e_nai1, e_nai2, true_gagg, true_nai1, true_nai2, c1, c2, tag)


def generate(bit_generator, params: np.ndarray, grid_cdf: np.ndarray,
             n_attempts: int) -> dict[str, np.ndarray]:
    """Run ``n_attempts`` event attempts; return accepted events as arrays.

    Array keys: theta1, theta2, phi1, phi2, e_gagg, e_plastic1,
    e_plastic2, e_nai1, e_nai2, true_gagg, true_nai1, true_nai2
    (float64) and counter1, counter2, class_tag (int16).
    """
    if params[P_VERSION] != PARAMS_VERSION or len(params) != N_PARAMS:
        raise ValueError("parameter block layout mismatch")
    rng = np.random.Generator(bit_generator)
    p = params.tolist()  # plain floats index much faster than numpy scalars
    grid_cdf = grid_cdf.tolist()
    floats = np.empty((12, n_attempts))
    ints = np.empty((3, n_attempts), dtype=np.int16)
    m = 0
    for _ in range(n_attempts):
        out = attempt(rng, p, grid_cdf)
        if out is None:
            continue
        for k in range(12):
            floats[k, m] = out[k]
        ints[0, m] = out[12]
        ints[1, m] = out[13]
        ints[2, m] = out[14]
        m += 1
    keys = ("theta1", "theta2", "phi1", "phi2", "e_gagg", "e_plastic1",
            "e_plastic2", "e_nai1", "e_nai2", "true_gagg", "true_nai1",
            "true_nai2")
    result = {k: floats[i, :m].copy() for i, k in enumerate(keys)}
    result["counter1"] = ints[0, :m].copy()
    result["counter2"] = ints[1, :m].copy()
    result["class_tag"] = ints[2, :m].copy()
    return result
