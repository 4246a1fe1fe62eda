"""Histogramming, cosine fits, correlation coefficients and the S-function.

Coincidences are binned by the relative azimuth between the two fired
counters (16 bins of 22.5 deg covering the full circle by default; the
fit runs over all bins without folding so the chi2/dof bookkeeping stays
conventional).  The fitted count model is

    N(dphi) = A - B cos(2 dphi),

so R = (A+B)/(A-B) is the perpendicular-to-parallel count ratio and
mu = B/A the modulation factor, with first-order (delta-method) error
propagation from the (A, B) covariance.

Each counter pair doubles as a two-channel polarimeter: the channel
parallel to a given orientation sits at that counter azimuth, the
perpendicular channel 90 deg away.  The correlation coefficient at
relative orientation phi therefore reads directly off the histogram,

    E(phi) = [N(phi) - N(phi+90)] / [N(phi) + N(phi+90)],

and with the optimal orientation pattern (three relative angles equal to
phi, the fourth to 3 phi) the CHSH combination becomes

    S(phi) = 3 E(phi) - E(3 phi),

which for exact cosine counts equals -mu (3 cos 2 phi - cos 6 phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_SQRT_TWO = 2.0 * math.sqrt(2.0)


class FitDegenerateError(RuntimeError):
    """Raised when the histogram cannot constrain the fit."""


class UndefinedCorrelationError(RuntimeError):
    """Raised when a correlation coefficient has a vanishing denominator."""


@dataclass(frozen=True)
class AngleHistogram:
    """Coincidence counts binned by relative counter azimuth.

    Bin k covers relative azimuths [k*pitch, (k+1)*pitch); bin angles are
    quoted at k*pitch, the exact values realized by counter differences.
    """

    counts: np.ndarray
    pitch_deg: float = 22.5

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", c)
        if c.ndim != 1 or len(c) < 4:
            raise ValueError("need a 1-D histogram with at least 4 bins")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        if abs(len(c) * self.pitch_deg - 360.0) > 1e-9:
            raise ValueError("bins must tile the full circle")

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def angles_deg(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.pitch_deg

    def __add__(self, other: "AngleHistogram") -> "AngleHistogram":
        if other.n_bins != self.n_bins or other.pitch_deg != self.pitch_deg:
            raise ValueError("histogram binnings differ")
        return AngleHistogram(self.counts + other.counts, self.pitch_deg)

    def folded(self) -> tuple[np.ndarray, np.ndarray]:
        """Counts folded to [0, 180]: bins k and n-k summed.

        Returns (angles_deg, counts); the 0 and 180 deg bins have no
        mirror partner and stay as-is.
        """
        n = self.n_bins
        half = n // 2
        angles = np.arange(half + 1) * self.pitch_deg
        out = np.empty(half + 1, dtype=np.int64)
        out[0] = self.counts[0]
        out[half] = self.counts[half]
        for k in range(1, half):
            out[k] = self.counts[k] + self.counts[n - k]
        return angles, out


@dataclass(frozen=True)
class FitResult:
    """Cosine-fit outcome with derived ratio and modulation factor."""

    a: float
    b: float
    cov: np.ndarray
    chi2: float
    dof: int
    r: float
    sigma_r: float
    mu: float
    sigma_mu: float


@dataclass
class CorrelationSet:
    """Correlation coefficients and S-function values on the counter grid.

    e_values maps relative orientation [deg] -> (E, sigma); s_values maps
    phi [deg] -> (S, sigma).  p0 is filled by :func:`fit_s_curve`.
    """

    e_values: dict[float, tuple[float, float]] = field(default_factory=dict)
    s_values: dict[float, tuple[float, float]] = field(default_factory=dict)
    p0: float | None = None
    sigma_p0: float | None = None
    chi2: float | None = None
    dof: int | None = None


def build_histogram(events, selection=None, n_bins: int = 16,
                    pitch_deg: float = 22.5) -> AngleHistogram:
    """Histogram events by relative counter azimuth, optionally by class.

    ``selection`` is a class tag, a collection of tags, or None for all.
    An empty selection yields a valid all-zero histogram.
    """
    if selection is None:
        allowed = None
    elif isinstance(selection, str):
        allowed = {selection}
    else:
        allowed = set(selection)
    counts = np.zeros(n_bins, dtype=np.int64)
    for ev in events:
        if allowed is not None and ev.class_tag not in allowed:
            continue
        counts[(ev.counter1 - ev.counter2) % n_bins] += 1
    return AngleHistogram(counts, pitch_deg)


def histogram_from_counters(counter1: np.ndarray, counter2: np.ndarray,
                            n_bins: int = 16,
                            pitch_deg: float = 22.5) -> AngleHistogram:
    """Vectorized histogram straight from kernel output arrays."""
    rel = (counter1.astype(np.int64) - counter2.astype(np.int64)) % n_bins
    counts = np.bincount(rel, minlength=n_bins)
    return AngleHistogram(counts, pitch_deg)


def fit_cosine(hist: AngleHistogram) -> FitResult:
    """Weighted least squares of N(dphi) = A - B cos(2 dphi).

    Per-bin variance is max(counts, 1) (Poisson, kept finite for empty
    bins).  Raises FitDegenerateError for empty or under-constrained
    histograms and for singular normal equations.
    """
    return fit_cosine_counts(hist.counts.astype(float), hist.pitch_deg)


def fit_cosine_counts(counts: np.ndarray, pitch_deg: float = 22.5) -> FitResult:
    """Same fit on raw per-bin counts (floats allowed).

    Noiseless counts lying exactly on the model are reproduced exactly
    (any weighted projection is exact on data in the basis span), which
    is what the fit-inversion checks exercise.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.sum() <= 0:
        raise FitDegenerateError("empty histogram")
    if int(np.count_nonzero(counts)) < 3:
        raise FitDegenerateError("need at least 3 non-empty bins")
    angles = np.radians(np.arange(len(counts)) * pitch_deg)
    basis = np.column_stack([np.ones_like(angles), -np.cos(2.0 * angles)])
    var = np.maximum(counts, 1.0)
    w = 1.0 / var
    # 2x2 normal equations for the basis {1, -cos 2 dphi}
    m = basis.T @ (w[:, None] * basis)
    v = basis.T @ (w * counts)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) < 1e-12 * m[0, 0] * m[1, 1] or det == 0.0:
        raise FitDegenerateError("singular normal equations")
    cov = np.linalg.inv(m)
    a, b = cov @ v
    resid = counts - basis @ np.array([a, b])
    chi2 = float(np.sum(w * resid * resid))
    dof = len(counts) - 2
    if a <= abs(b):
        raise FitDegenerateError(
            f"unphysical fit: A = {a:.3g} must exceed |B| = {abs(b):.3g}")
    r = (a + b) / (a - b)
    mu = b / a
    # delta method on (A, B)
    dr_da = -2.0 * b / (a - b) ** 2
    dr_db = 2.0 * a / (a - b) ** 2
    var_r = (dr_da * dr_da * cov[0, 0] + dr_db * dr_db * cov[1, 1]
             + 2.0 * dr_da * dr_db * cov[0, 1])
    dmu_da = -b / (a * a)
    dmu_db = 1.0 / a
    var_mu = (dmu_da * dmu_da * cov[0, 0] + dmu_db * dmu_db * cov[1, 1]
              + 2.0 * dmu_da * dmu_db * cov[0, 1])
    return FitResult(a=float(a), b=float(b), cov=cov, chi2=chi2, dof=dof,
                     r=float(r), sigma_r=math.sqrt(max(var_r, 0.0)),
                     mu=float(mu), sigma_mu=math.sqrt(max(var_mu, 0.0)))


def _bin_index(hist: AngleHistogram, angle_deg: float) -> int:
    ratio = (angle_deg % 360.0) / hist.pitch_deg
    idx = int(round(ratio))
    if abs(ratio - idx) > 1e-9:
        raise UndefinedCorrelationError(
            f"angle {angle_deg} deg is not a multiple of the "
            f"{hist.pitch_deg} deg counter pitch")
    return idx % hist.n_bins


def correlation_coefficient(hist: AngleHistogram,
                            phi_deg: float) -> tuple[float, float]:
    """Polarization correlation coefficient at relative orientation phi.

        E(phi) = [N(phi) - N(phi+90)] / [N(phi) + N(phi+90)]

    The four parallel/perpendicular channel combinations of the
    two-channel polarimeters collapse pairwise onto the two histogram
    bins at phi and phi+90.  Poisson errors, variance floored at one
    count per bin.
    """
    i = _bin_index(hist, phi_deg)
    j = _bin_index(hist, phi_deg + 90.0)
    n1 = float(hist.counts[i])
    n2 = float(hist.counts[j])
    s = n1 + n2
    if s <= 0.0:
        raise UndefinedCorrelationError(
            f"no counts at {phi_deg} deg / {phi_deg + 90.0} deg")
    e = (n1 - n2) / s
    v1 = max(n1, 1.0)
    v2 = max(n2, 1.0)
    sigma = 2.0 * math.sqrt(n2 * n2 * v1 + n1 * n1 * v2) / (s * s)
    return e, sigma


def s_function(hist: AngleHistogram, phi_deg: float) -> tuple[float, float]:
    """CHSH combination S(phi) = 3 E(phi) - E(3 phi).

    Errors propagate through the full gradient with respect to the
    distinct histogram bins involved, so shared bins (e.g. phi = 0,
    where 3 phi aliases phi) are handled exactly.
    """
    grad: dict[int, float] = {}

    def accumulate(phi: float, coeff: float) -> float:
        i = _bin_index(hist, phi)
        j = _bin_index(hist, phi + 90.0)
        n1 = float(hist.counts[i])
        n2 = float(hist.counts[j])
        s = n1 + n2
        if s <= 0.0:
            raise UndefinedCorrelationError(f"no counts at {phi} deg")
        grad[i] = grad.get(i, 0.0) + coeff * 2.0 * n2 / (s * s)
        grad[j] = grad.get(j, 0.0) - coeff * 2.0 * n1 / (s * s)
        return coeff * (n1 - n2) / s

    value = accumulate(phi_deg, 3.0) + accumulate(3.0 * phi_deg, -1.0)
    var = sum(g * g * max(float(hist.counts[i]), 1.0) for i, g in grad.items())
    return value, math.sqrt(var)


def build_correlation_set(hist: AngleHistogram,
                          s_angles_deg=None) -> CorrelationSet:
    """Correlation coefficients at every counter angle and S on the half-turn grid."""
    cs = CorrelationSet()
    for k in range(hist.n_bins):
        angle = k * hist.pitch_deg
        cs.e_values[angle] = correlation_coefficient(hist, angle)
    if s_angles_deg is None:
        s_angles_deg = [k * hist.pitch_deg for k in range(hist.n_bins // 2)]
    for angle in s_angles_deg:
        cs.s_values[angle] = s_function(hist, angle)
    return cs


def s_curve_model(phi_deg: np.ndarray | float, p0: float):
    """Reference S-curve shape -p0 (3 cos 2 phi - cos 6 phi)."""
    phi = np.radians(phi_deg)
    return -p0 * (3.0 * np.cos(2.0 * phi) - np.cos(6.0 * phi))


def fit_s_curve(cs: CorrelationSet) -> CorrelationSet:
    """Weighted least squares of the single-amplitude S-curve model.

    Fits S(phi) = -p0 (3 cos 2 phi - cos 6 phi) to the measured S values
    and fills p0, sigma_p0, chi2 and dof on the set.
    """
    angles = np.array(sorted(cs.s_values))
    if len(angles) < 2:
        raise FitDegenerateError("need at least two S values")
    s = np.array([cs.s_values[a][0] for a in angles])
    sig = np.array([cs.s_values[a][1] for a in angles])
    if np.any(sig <= 0.0) or not np.all(np.isfinite(sig)):
        raise FitDegenerateError("S values carry non-finite errors")
    g = s_curve_model(angles, 1.0)
    w = 1.0 / (sig * sig)
    denom = float(np.sum(w * g * g))
    if denom <= 0.0:
        raise FitDegenerateError("S-curve basis vanishes at all sampled angles")
    p0 = float(np.sum(w * g * s)) / denom
    resid = s - p0 * g
    cs.p0 = p0
    cs.sigma_p0 = 1.0 / math.sqrt(denom)
    cs.chi2 = float(np.sum(w * resid * resid))
    cs.dof = len(angles) - 1
    return cs


def chsh_report(cs: CorrelationSet, p0: float | None = None) -> dict:
    """Summary of the CHSH reach of a measured S-curve.

    Reports the largest |S|, whether the raw inequality |S| <= 2 is
    violated (never expected for Compton polarimeters), and the
    efficiency-normalized maximum |S|/p0 against the ideal 2 sqrt(2).
    """
    if p0 is None:
        p0 = cs.p0
    max_abs_s = max((abs(v) for v, _ in cs.s_values.values()), default=0.0)
    normalized = max_abs_s / p0 if p0 else None
    return {
        "max_abs_S": max_abs_s,
        "raw_chsh_violation": bool(max_abs_s > 2.0),
        "normalized_max_abs_S": normalized,
        "ideal_bound": TWO_SQRT_TWO,
    }
