# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event-generation kernel.

Mirrors ``_kernels_py`` operation for operation: same formulas, same
rejection loops, same order of random draws (see the draw-order contract
in that module).  Uniform doubles are pulled straight from the numpy
BitGenerator's ``next_double`` slot, which is exactly what
``Generator.random()`` consumes, so both backends walk the same stream
and produce bit-identical event arrays.  The build compiles with
``-ffp-contract=off`` to keep IEEE per-operation rounding.
"""

import numpy as np

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport cos, log, sin, sqrt
from numpy.random cimport bitgen_t

cdef double CP_PARAMS_VERSION = 1.0

cdef enum:
    P_VERSION, P_MODEL_KIND, P_MODEL_W, P_DECOH_KIND, P_DECOH_W, P_ENERGY
    P_THETA_LO, P_THETA_HI, P_POINT_MODE, P_POINT_THETA, P_PITCH, P_NCOUNTERS
    P_GAGG_ENABLED, P_GAGG_PINT, P_GAGG_THRESHOLD, P_GAGG_MAX
    P_NAI_LO, P_NAI_HI, P_NAI_SIG, P_GAGG_SIG
    P_A_GAGG_MAX, P_B_NAI_LO, P_B_NAI_HI, P_C_NAI_LO, P_C_NAI_HI
    P_D_GAGG_LO, P_D_GAGG_HI, P_D_NAI_LO, P_D_NAI_HI
    P_BS_CHAIN, P_BS_THETA_LO, P_BS_THETA_HI
    P_ENV_WIN, P_ENV_FULL, P_ENV_BS, N_PARAMS

cdef double ME = 511.0
cdef double TWO_PI = 6.283185307179586
cdef double PI = 3.141592653589793

cdef enum:
    KIND_ENTANGLED, KIND_MIXED_HM, KIND_MIXED_BA, KIND_PRODUCT_FIXED
    KIND_DEPOLARIZED

cdef enum:
    TAG_ENTANGLED, TAG_A, TAG_B, TAG_C, TAG_D

BACKEND = "cython"

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef inline double _u(bitgen_t *rng) noexcept nogil:
    return rng.next_double(rng.state)


cdef inline double _scat(double energy, double ctheta) noexcept nogil:
    return energy * ME / (ME + energy * (1.0 - ctheta))


cdef inline double _kn_unpol_sin(double energy, double theta) noexcept nogil:
    cdef double c = cos(theta)
    cdef double s = sin(theta)
    cdef double eps = _scat(energy, c) / energy
    return 0.5 * eps * eps * (eps + 1.0 / eps - s * s) * s


cdef inline double _alpha(double energy, double theta) noexcept nogil:
    cdef double c = cos(theta)
    cdef double s = sin(theta)
    cdef double eps = _scat(energy, c) / energy
    return s * s / (eps + 1.0 / eps - s * s)


cdef inline double _gauss(bitgen_t *rng) noexcept nogil:
    cdef double u1 = _u(rng)
    cdef double u2 = _u(rng)
    return sqrt(-2.0 * log(1.0 - u1)) * cos(TWO_PI * u2)


cdef double _sample_theta(bitgen_t *rng, double energy, double lo, double hi,
                          double env) except -1.0:
    cdef double theta, f
    while True:
        theta = lo + (hi - lo) * _u(rng)
        f = _kn_unpol_sin(energy, theta)
        if f > env:
            raise AssertionError("theta rejection envelope violated")
        if _u(rng) * env <= f:
            return theta


cdef inline double _sample_dphi(bitgen_t *rng, double m) noexcept nogil:
    cdef double env = 1.0 + (m if m >= 0.0 else -m)
    cdef double d, f
    while True:
        d = TWO_PI * _u(rng)
        f = 1.0 - m * cos(2.0 * d)
        if _u(rng) * env <= f:
            return d


cdef inline double _sample_phi_polarized(bitgen_t *rng, double alpha,
                                         double psi) noexcept nogil:
    cdef double env = 1.0 + alpha
    cdef double phi, f
    while True:
        phi = TWO_PI * _u(rng)
        f = 1.0 - alpha * cos(2.0 * (phi - psi))
        if _u(rng) * env <= f:
            return phi


cdef int _sample_pair_angles(bitgen_t *rng, int kind, double weight,
                             double energy, double lo, double hi, double env,
                             double *out) except -1:
    cdef double theta1 = _sample_theta(rng, energy, lo, hi, env)
    cdef double theta2 = _sample_theta(rng, energy, lo, hi, env)
    cdef double a1, a2, psi1, psi2, m, phi1, phi2, dphi
    if kind == KIND_PRODUCT_FIXED:
        a1 = _alpha(energy, theta1)
        a2 = _alpha(energy, theta2)
        if _u(rng) < 0.5:
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
        phi1 = TWO_PI * _u(rng)
        dphi = _sample_dphi(rng, m)
        phi2 = phi1 - dphi
        if phi2 < 0.0:
            phi2 += TWO_PI
    out[0] = theta1
    out[1] = theta2
    out[2] = phi1
    out[3] = phi2
    return 0


def sample_pair_angles(bit_generator, int kind, double weight, double energy,
                       double lo, double hi, double env):
    """Scalar pair-angle draw (compiled twin of the Python helper)."""
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef double out[4]
    _sample_pair_angles(rng, kind, weight, energy, lo, hi, env, out)
    return out[0], out[1], out[2], out[3]


cdef bitgen_t *_get_bitgen(bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("expected a numpy BitGenerator")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


def generate(bit_generator, params, grid_cdf, long n_attempts):
    """Run ``n_attempts`` event attempts; return accepted events as arrays.

    Same contract as the pure-Python ``generate``.
    """
    if params[P_VERSION] != CP_PARAMS_VERSION or len(params) != N_PARAMS:
        raise ValueError("parameter block layout mismatch")
    cdef double[::1] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef double[::1] grid = np.ascontiguousarray(grid_cdf, dtype=np.float64)
    cdef bitgen_t *rng = _get_bitgen(bit_generator)

    floats_arr = np.empty((12, n_attempts))
    ints_arr = np.empty((3, n_attempts), dtype=np.int16)
    cdef double[:, ::1] floats = floats_arr
    cdef short[:, ::1] ints = ints_arr

    cdef double energy = p[P_ENERGY]
    cdef double pitch = p[P_PITCH]
    cdef int nc = <int> p[P_NCOUNTERS]
    cdef double nai_sig = p[P_NAI_SIG]
    cdef double nai_lo = p[P_NAI_LO]
    cdef double nai_hi = p[P_NAI_HI]
    cdef bint bs_chain = p[P_BS_CHAIN] != 0.0
    cdef bint point_mode = p[P_POINT_MODE] != 0.0
    cdef bint gagg_enabled = p[P_GAGG_ENABLED] != 0.0

    cdef long m = 0
    cdef long i
    cdef int idx, last, c1, c2, tag, kind
    cdef bint interacted, rejected
    cdef double pair[4]
    cdef double theta1, theta2, phi1, phi2, theta_g, theta_b, theta_p1
    cdef double side, weight, e_in1, e_back, u
    cdef double true_gagg, true_nai1, true_nai2, e_gagg, e_nai1, e_nai2
    cdef double e_pl1, e_pl2

    for i in range(n_attempts):
        rejected = False
        if bs_chain:
            theta_b = _sample_theta(rng, energy, p[P_BS_THETA_LO],
                                    p[P_BS_THETA_HI], p[P_ENV_BS])
            _sample_pair_angles(rng, <int> p[P_MODEL_KIND], p[P_MODEL_W],
                                energy, p[P_THETA_LO], p[P_THETA_HI],
                                p[P_ENV_WIN], pair)
            theta1 = pair[0]
            theta2 = pair[1]
            phi1 = pair[2]
            phi2 = pair[3]
            e_back = _scat(energy, cos(theta_b))
            e_pl1 = energy - e_back
            true_nai1 = _scat(e_back, cos(theta1))
            true_gagg = e_back - true_nai1
            true_nai2 = _scat(energy, cos(theta2))
            e_pl2 = energy - true_nai2
            e_gagg = true_gagg + p[P_GAGG_SIG] * sqrt(true_gagg) * _gauss(rng)
            if e_gagg < 0.0:
                e_gagg = 0.0
            if e_gagg < p[P_GAGG_THRESHOLD]:
                e_gagg = 0.0
            e_nai1 = true_nai1 + nai_sig * sqrt(true_nai1) * _gauss(rng)
            if e_nai1 < 0.0:
                e_nai1 = 0.0
            e_nai2 = true_nai2 + nai_sig * sqrt(true_nai2) * _gauss(rng)
            if e_nai2 < 0.0:
                e_nai2 = 0.0
            if not nai_lo <= e_nai2 <= nai_hi:
                continue
            if not p[P_D_GAGG_LO] <= e_gagg <= p[P_D_GAGG_HI]:
                continue
            if not p[P_D_NAI_LO] <= e_nai1 <= p[P_D_NAI_HI]:
                continue
            c1 = (<int> (phi1 / pitch)) % nc
            c2 = (<int> (phi2 / pitch)) % nc
            tag = TAG_D
        elif point_mode:
            u = _u(rng)
            idx = 0
            last = nc * nc - 1
            while idx < last and grid[idx] < u:
                idx += 1
            c1 = idx // nc
            c2 = idx % nc
            phi1 = (c1 + 0.5) * pitch
            phi2 = (c2 + 0.5) * pitch
            theta1 = p[P_POINT_THETA]
            theta2 = p[P_POINT_THETA]
            true_gagg = 0.0
            e_gagg = 0.0
            true_nai1 = _scat(energy, cos(theta1))
            true_nai2 = _scat(energy, cos(theta2))
            e_pl1 = energy - true_nai1
            e_pl2 = energy - true_nai2
            e_nai1 = true_nai1 + nai_sig * sqrt(true_nai1) * _gauss(rng)
            if e_nai1 < 0.0:
                e_nai1 = 0.0
            e_nai2 = true_nai2 + nai_sig * sqrt(true_nai2) * _gauss(rng)
            if e_nai2 < 0.0:
                e_nai2 = 0.0
            if not nai_lo <= e_nai2 <= nai_hi:
                continue
            if not nai_lo <= e_nai1 <= nai_hi:
                continue
            tag = TAG_ENTANGLED
        else:
            interacted = False
            theta_g = 0.0
            side = 1.0
            true_gagg = 0.0
            e_gagg = 0.0
            e_in1 = energy
            if gagg_enabled:
                if _u(rng) < p[P_GAGG_PINT]:
                    interacted = True
                    theta_g = _sample_theta(rng, energy, 0.0, PI, p[P_ENV_FULL])
                    side = 1.0 if _u(rng) < 0.5 else -1.0
                    e_in1 = _scat(energy, cos(theta_g))
                    true_gagg = energy - e_in1
                    e_gagg = (true_gagg
                              + p[P_GAGG_SIG] * sqrt(true_gagg) * _gauss(rng))
                    if e_gagg < 0.0:
                        e_gagg = 0.0
                    if e_gagg < p[P_GAGG_THRESHOLD]:
                        e_gagg = 0.0
            if interacted:
                kind = <int> p[P_DECOH_KIND]
                weight = p[P_DECOH_W]
            else:
                kind = <int> p[P_MODEL_KIND]
                weight = p[P_MODEL_W]
            _sample_pair_angles(rng, kind, weight, energy, p[P_THETA_LO],
                                p[P_THETA_HI], p[P_ENV_WIN], pair)
            theta1 = pair[0]
            theta2 = pair[1]
            phi1 = pair[2]
            phi2 = pair[3]

            theta_p1 = theta1 - side * theta_g if interacted else theta1
            if theta_p1 < 0.0:
                theta_p1 = -theta_p1
            if theta_p1 > PI:
                theta_p1 = TWO_PI - theta_p1

            true_nai1 = _scat(e_in1, cos(theta_p1))
            e_pl1 = e_in1 - true_nai1
            true_nai2 = _scat(energy, cos(theta2))
            e_pl2 = energy - true_nai2
            e_nai1 = true_nai1 + nai_sig * sqrt(true_nai1) * _gauss(rng)
            if e_nai1 < 0.0:
                e_nai1 = 0.0
            e_nai2 = true_nai2 + nai_sig * sqrt(true_nai2) * _gauss(rng)
            if e_nai2 < 0.0:
                e_nai2 = 0.0

            if not nai_lo <= e_nai2 <= nai_hi:
                continue
            if e_gagg == 0.0:
                if not nai_lo <= e_nai1 <= nai_hi:
                    continue
                tag = TAG_ENTANGLED
            elif e_gagg < p[P_A_GAGG_MAX]:
                if not nai_lo <= e_nai1 <= nai_hi:
                    continue
                tag = TAG_A
            elif e_gagg <= p[P_GAGG_MAX]:
                if p[P_B_NAI_LO] <= e_nai1 <= p[P_B_NAI_HI]:
                    tag = TAG_B
                elif p[P_C_NAI_LO] <= e_nai1 <= p[P_C_NAI_HI]:
                    tag = TAG_C
                else:
                    continue
            else:
                continue
            c1 = (<int> (phi1 / pitch)) % nc
            c2 = (<int> (phi2 / pitch)) % nc

        floats[0, m] = theta1
        floats[1, m] = theta2
        floats[2, m] = phi1
        floats[3, m] = phi2
        floats[4, m] = e_gagg
        floats[5, m] = e_pl1
        floats[6, m] = e_pl2
        floats[7, m] = e_nai1
        floats[8, m] = e_nai2
        floats[9, m] = true_gagg
        floats[10, m] = true_nai1
        floats[11, m] = true_nai2
        ints[0, m] = <short> c1
        ints[1, m] = <short> c2
        ints[2, m] = <short> tag
        m += 1

    keys = ("theta1", "theta2", "phi1", "phi2", "e_gagg", "e_plastic1",
            "e_plastic2", "e_nai1", "e_nai2", "true_gagg", "true_nai1",
            "true_nai2")
    result = {k: floats_arr[i, :m].copy() for i, k in enumerate(keys)}
    result["counter1"] = ints_arr[0, :m].copy()
    result["counter2"] = ints_arr[1, :m].copy()
    result["class_tag"] = ints_arr[2, :m].copy()
    return result
