"""End-to-end behavior of the named run configurations (reduced statistics)."""

import dataclasses
import math

import pytest

from comptonpairs.analysis import FitResult
from comptonpairs.config import preset_config
from comptonpairs.runner import POOL_ABC, run


@pytest.fixture(scope="module")
def decoherent_summary():
    cfg = dataclasses.replace(preset_config("decoherent_all"),
                              n_events=6_000_000, seed=515)
    summary = run(cfg)
    summary.arrays.clear()
    return summary


def test_decoherent_classes_match_reference_ratios(decoherent_summary):
    # class-resolved count ratios: b sits above the pool, c below, all
    # close to the common geometry value near 2.4 (reference values
    # 2.43 +- 0.15, 2.52 +- 0.21, 2.35 +- 0.17)
    fits = decoherent_summary.fits
    for name, target, tol in (("a", 2.43, 0.15), ("b", 2.52, 0.21),
                              ("c", 2.35, 0.17)):
        fit = fits[name]
        assert isinstance(fit, FitResult), fit
        assert abs(fit.r - target) <= tol, name


def test_decoherent_pool_is_present_and_entangled_like(decoherent_summary):
    fit = decoherent_summary.fits[POOL_ABC]
    assert 2.3 <= fit.r <= 2.5
    assert decoherent_summary.accepted_by_class[POOL_ABC] > 200_000


def test_class_d_preset_ratio():
    cfg = dataclasses.replace(preset_config("class_d"), n_events=1_000_000,
                              seed=516)
    summary = run(cfg)
    fit = summary.fits["d"]
    assert 1.5 <= fit.r <= 1.8
    # the chain leaves the plastic backscatter recoil in arm 1, so the
    # mean energy bookkeeping differs visibly from the entangled runs
    assert summary.accepted_by_class["d"] > 100_000


def test_point_82deg_preset_reaches_the_ideal_ratio():
    cfg = dataclasses.replace(preset_config("point_82deg"),
                              n_events=1_500_000, seed=517)
    summary = run(cfg)
    fit = summary.fits["entangled_candidate"]
    assert abs(fit.r - 2.8353) <= 3.0 * fit.sigma_r + 1e-12
    assert abs(fit.r - 2.85) <= 0.02  # the conventionally quoted maximum
