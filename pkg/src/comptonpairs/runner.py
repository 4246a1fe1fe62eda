"""Run orchestration: deterministic parallel generation, analysis, outputs.

Attempts are split into fixed-size chunks and every chunk owns a random
stream spawned from the base seed (numpy SeedSequence), so results
depend only on (seed, n_events) and never on the worker count: chunk j
gets stream j whether one process or eight consume the pool.  Merged
outputs are concatenated in chunk order, which makes whole summaries
byte-identical across repeated and parallel runs.

Wall time is deliberately not part of the JSON summary (it would break
that byte-identity); it is reported on the console instead.
"""

from __future__ import annotations

import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from ._params import pack_params
from .analysis import (
    CorrelationSet, FitDegenerateError, FitResult, UndefinedCorrelationError,
    build_correlation_set, chsh_report, fit_cosine, fit_s_curve,
    histogram_from_counters,
)
from .apparatus import CLASS_NAMES
from .config import RunConfig, config_to_document

CHUNK_ATTEMPTS = 1 << 18

# pooled pseudo-class: every tagged decoherent event outside the
# backscatter topology, the union analyzed alongside the single classes
POOL_ABC = "decoherent_abc"

_FLOAT_KEYS = ("theta1", "theta2", "phi1", "phi2", "e_gagg", "e_plastic1",
               "e_plastic2", "e_nai1", "e_nai2", "true_gagg", "true_nai1",
               "true_nai2")
_INT_KEYS = ("counter1", "counter2", "class_tag")


@dataclass
class RunSummary:
    """In-memory result of one run; see summary_document() for the JSON shape."""

    config: RunConfig
    attempted: int
    accepted_by_class: dict[str, int]
    fits: dict[str, FitResult | str]
    correlations: dict[str, CorrelationSet | str]
    reports: dict[str, dict]
    rng_record: dict
    backend: str
    arrays: dict[str, np.ndarray] = field(repr=False, default_factory=dict)
    wall_time_s: float = 0.0


def _chunk_plan(n_events: int) -> list[int]:
    n_chunks = (n_events + CHUNK_ATTEMPTS - 1) // CHUNK_ATTEMPTS
    plan = [CHUNK_ATTEMPTS] * n_chunks
    remainder = n_events - CHUNK_ATTEMPTS * (n_chunks - 1)
    plan[-1] = remainder
    return plan


def _run_chunk(args):
    seed_seq, params, grid_cdf, n = args
    bitgen = np.random.PCG64(seed_seq)
    return kernels.generate(bitgen, params, grid_cdf, n)


def generate_events(config: RunConfig) -> tuple[dict[str, np.ndarray], dict]:
    """Generate all accepted events for a config; returns (arrays, rng record)."""
    params, grid_cdf = pack_params(config.model, config.decoherent_model,
                                   config.apparatus)
    plan = _chunk_plan(config.n_events)
    seeds = np.random.SeedSequence(config.seed).spawn(len(plan))
    jobs = [(ss, params, grid_cdf, n) for ss, n in zip(seeds, plan)]
    if config.workers == 1 or len(jobs) == 1:
        chunks = [_run_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_run_chunk, jobs))
    arrays = {}
    for key in _FLOAT_KEYS + _INT_KEYS:
        arrays[key] = np.concatenate([c[key] for c in chunks])
    record = {
        "scheme": "numpy SeedSequence(seed).spawn(n_chunks); chunk j owns stream j",
        "base_seed": config.seed,
        "chunk_attempts": CHUNK_ATTEMPTS,
        "n_chunks": len(plan),
    }
    return arrays, record


def _class_masks(arrays, config: RunConfig) -> dict[str, np.ndarray]:
    tags = arrays["class_tag"]
    masks = {}
    for code, name in enumerate(CLASS_NAMES):
        mask = tags == code
        if mask.any():
            masks[name] = mask
    if config.apparatus.gagg_enabled:
        pooled = (tags >= 1) & (tags <= 3)
        if pooled.any():
            masks[POOL_ABC] = pooled
    return masks


def run(config: RunConfig, out_dir: str | Path | None = None) -> RunSummary:
    """Generate events, run the analysis chain per class, write outputs.

    A degenerate fit in one class is recorded as an error string for
    that class without aborting the others.
    """
    t0 = time.perf_counter()
    arrays, rng_record = generate_events(config)
    n_bins = config.apparatus.n_counters_per_arm
    pitch = config.apparatus.counter_pitch_deg

    masks = _class_masks(arrays, config)
    fits: dict[str, FitResult | str] = {}
    correlations: dict[str, CorrelationSet | str] = {}
    reports: dict[str, dict] = {}
    accepted_by_class = {name: int(mask.sum()) for name, mask in masks.items()}
    for name, mask in masks.items():
        hist = histogram_from_counters(arrays["counter1"][mask],
                                       arrays["counter2"][mask],
                                       n_bins, pitch)
        try:
            fits[name] = fit_cosine(hist)
        except FitDegenerateError as exc:
            fits[name] = f"degenerate fit: {exc}"
        try:
            cs = fit_s_curve(build_correlation_set(hist))
            correlations[name] = cs
            reports[name] = chsh_report(cs)
        except (FitDegenerateError, UndefinedCorrelationError) as exc:
            correlations[name] = f"undefined: {exc}"

    summary = RunSummary(
        config=config,
        attempted=config.n_events,
        accepted_by_class=accepted_by_class,
        fits=fits,
        correlations=correlations,
        reports=reports,
        rng_record=rng_record,
        backend=kernels.BACKEND,
        arrays=arrays,
    )
    summary.wall_time_s = time.perf_counter() - t0
    if out_dir is not None:
        write_outputs(summary, out_dir)
    return summary


def fit_document(summary: RunSummary, name: str) -> dict:
    """Flat per-class fit record for the JSON summary."""
    doc = {"model": summary.config.model.kind, "class": name}
    fit = summary.fits.get(name)
    if isinstance(fit, FitResult):
        doc.update({"A": fit.a, "B": fit.b, "R": fit.r, "sigma_R": fit.sigma_r,
                    "mu": fit.mu, "sigma_mu": fit.sigma_mu,
                    "chi2": fit.chi2, "dof": fit.dof})
    else:
        doc["error"] = fit
    cs = summary.correlations.get(name)
    if isinstance(cs, CorrelationSet):
        doc.update({"p0": cs.p0, "sigma_p0": cs.sigma_p0,
                    "s_chi2": cs.chi2, "s_dof": cs.dof})
    return doc


def summary_document(summary: RunSummary) -> dict:
    """Deterministic JSON-ready document.

    Wall time and the worker count are excluded on purpose: neither
    affects the generated events, and summaries are required to be
    byte-identical for identical (seed, physics config) no matter how
    the work was parallelized.
    """
    config_echo = config_to_document(summary.config)
    del config_echo["workers"]
    doc = {
        "backend": summary.backend,
        "config": config_echo,
        "preset": summary.config.preset,
        "counts": {
            "attempted": summary.attempted,
            "accepted_total": int(sum(summary.accepted_by_class.values())
                                  - summary.accepted_by_class.get(POOL_ABC, 0)),
            "by_class": summary.accepted_by_class,
        },
        "rng": summary.rng_record,
        "fits": {name: fit_document(summary, name) for name in summary.fits},
        "s_functions": {},
    }
    for name, cs in summary.correlations.items():
        if not isinstance(cs, CorrelationSet):
            doc["s_functions"][name] = {"error": cs}
            continue
        doc["s_functions"][name] = {
            "E": [[angle, *cs.e_values[angle]] for angle in sorted(cs.e_values)],
            "S": [[angle, *cs.s_values[angle]] for angle in sorted(cs.s_values)],
            "p0": cs.p0,
            "sigma_p0": cs.sigma_p0,
            "chi2": cs.chi2,
            "dof": cs.dof,
            **summary.reports.get(name, {}),
        }
    return doc


def write_outputs(summary: RunSummary, out_dir: str | Path) -> list[Path]:
    """Write summary JSON, per-class plot data and optional listmode CSV."""
    from .plotdata import emit_plot_data  # deferred: keeps import graph light

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "summary.json"]
    text = json.dumps(summary_document(summary), indent=2, sort_keys=True)
    (out / "summary.json").write_text(text + "\n")
    written += emit_plot_data(summary, out)
    if summary.config.write_listmode:
        written.append(write_listmode(summary, out / "listmode.csv"))
    return written


LISTMODE_COLUMNS = ("class_tag", "counter1", "counter2", "e_gagg",
                    "e_plastic1", "e_plastic2", "e_nai1", "e_nai2",
                    "true_delta_phi_deg")


def write_listmode(summary: RunSummary, path: Path) -> Path:
    """One CSV row per accepted event; energies in keV with 3 decimals."""
    a = summary.arrays
    tags = a["class_tag"]
    n = len(tags)
    dphi = np.degrees(np.mod(a["phi1"] - a["phi2"], math.pi))
    with open(path, "w") as fh:
        fh.write(",".join(LISTMODE_COLUMNS) + "\n")
        for i in range(n):
            fh.write("%s,%d,%d,%.3f,%.3f,%.3f,%.3f,%.3f,%.6f\n" % (
                CLASS_NAMES[tags[i]], a["counter1"][i], a["counter2"][i],
                a["e_gagg"][i], a["e_plastic1"][i], a["e_plastic2"][i],
                a["e_nai1"][i], a["e_nai2"][i], dphi[i]))
    return path


def read_listmode(path: str | Path) -> dict[str, np.ndarray]:
    """Read a listmode CSV back into analysis-ready arrays."""
    names = {name: i for i, name in enumerate(LISTMODE_COLUMNS)}
    tags, c1, c2 = [], [], []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header != list(LISTMODE_COLUMNS):
            raise ValueError(f"unexpected listmode columns: {header}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            tags.append(CLASS_NAMES.index(parts[names["class_tag"]]))
            c1.append(int(parts[names["counter1"]]))
            c2.append(int(parts[names["counter2"]]))
    return {
        "class_tag": np.array(tags, dtype=np.int16),
        "counter1": np.array(c1, dtype=np.int16),
        "counter2": np.array(c2, dtype=np.int16),
    }


def print_report(summary: RunSummary, stream=sys.stdout) -> None:
    """Console one-liners per analyzed class."""
    print(f"backend: {summary.backend}; attempted {summary.attempted}; "
          f"wall time {summary.wall_time_s:.1f} s", file=stream)
    for name in summary.fits:
        doc = fit_document(summary, name)
        if "error" in doc:
            print(f"  {name}: {doc['error']} "
                  f"({summary.accepted_by_class.get(name, 0)} events)", file=stream)
            continue
        line = (f"  {name}: N = {summary.accepted_by_class[name]}, "
                f"R = {doc['R']:.4f} +- {doc['sigma_R']:.4f}, "
                f"mu = {doc['mu']:.4f} +- {doc['sigma_mu']:.4f}, "
                f"chi2/dof = {doc['chi2']:.1f}/{doc['dof']}")
        if doc.get("p0") is not None:
            line += f", p0 = {doc['p0']:.4f} +- {doc['sigma_p0']:.4f}"
        print(line, file=stream)
