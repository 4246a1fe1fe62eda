"""Command-line interface.

Subcommands:
    simulate  generate events from a config file and/or preset, analyze,
              write summary/plot data (and optionally listmode events)
    analyze   re-run the analysis chain on a stored listmode CSV
    predict   closed-form R, mu and S extremum for a model, no sampling

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

from .analysis import (FitDegenerateError, TWO_SQRT_TWO,
                       UndefinedCorrelationError, build_correlation_set,
                       chsh_report, fit_cosine, fit_s_curve,
                       histogram_from_counters)
from .config import ConfigError, PRESET_NAMES, parse_config, preset_config
from .pairs import MODEL_KINDS, PairModel, modulation_amplitude

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comptonpairs",
        description="Azimuthal-correlation Monte Carlo for annihilation "
                    "photon pairs in entangled and decoherent states")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the event generator")
    sim.add_argument("--config", type=Path, help="TOML or JSON run config")
    sim.add_argument("--preset", choices=PRESET_NAMES,
                     help="named configuration (config keys override it)")
    sim.add_argument("--events", type=int, help="attempted events")
    sim.add_argument("--seed", type=int, help="base RNG seed")
    sim.add_argument("--workers", type=int, help="worker processes")
    sim.add_argument("--listmode", action="store_true",
                     help="also write per-event listmode CSV")
    sim.add_argument("--out-dir", type=Path, default=Path("out"),
                     help="output directory (default: ./out)")

    ana = sub.add_parser("analyze", help="re-analyze stored listmode events")
    ana.add_argument("--listmode", type=Path, required=True)
    ana.add_argument("--out-dir", type=Path, default=Path("out"))
    ana.add_argument("--counters", type=int, default=16,
                     help="counters per arm used when the events were taken")

    pre = sub.add_parser("predict", help="closed-form predictions, no sampling")
    pre.add_argument("--model", required=True, choices=MODEL_KINDS)
    pre.add_argument("--theta1", type=float, required=True,
                     help="scattering angle of photon 1 [deg]")
    pre.add_argument("--theta2", type=float, required=True,
                     help="scattering angle of photon 2 [deg]")
    pre.add_argument("--weight", type=float, default=0.0,
                     help="parallel admixture for the depolarized model")
    pre.add_argument("--energy", type=float, default=511.0,
                     help="photon energy [keV]")
    return parser


def _cmd_simulate(args) -> int:
    from .runner import print_report, run

    try:
        if args.config is not None:
            try:
                text = args.config.read_text()
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            if args.preset is not None:
                # preset forms the base; the file's explicit keys win
                from .config import config_from_document
                config = config_from_document(
                    {**_doc_of(text), "preset": args.preset})
            else:
                config = parse_config(text)
        elif args.preset is not None:
            config = preset_config(args.preset)
        else:
            print("error: need --config and/or --preset", file=sys.stderr)
            return EXIT_VALIDATION
        overrides = {}
        if args.events is not None:
            overrides["n_events"] = args.events
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.listmode:
            overrides["write_listmode"] = True
        if overrides:
            config = dataclasses.replace(config, **overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        summary = run(config, out_dir=args.out_dir)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    print_report(summary)
    empty = [name for name in (config.focus or ()) if
             summary.accepted_by_class.get(name, 0) == 0]
    for name in empty:
        print(f"warning: no accepted events in class {name!r}; "
              f"emitted headers-only tables", file=sys.stderr)
    return EXIT_OK


def _doc_of(text: str) -> dict:
    stripped = text.lstrip()
    try:
        if stripped.startswith("{"):
            return json.loads(text)
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    except Exception as exc:
        raise ConfigError(f"config parse error: {exc}") from exc


def _cmd_analyze(args) -> int:
    from .runner import read_listmode
    from .apparatus import CLASS_NAMES

    try:
        arrays = read_listmode(args.listmode)
    except OSError as exc:
        print(f"error: cannot read listmode: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        args.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO

    pitch = 360.0 / args.counters
    tags = arrays["class_tag"]
    results = {}
    for code, name in enumerate(CLASS_NAMES):
        mask = tags == code
        if not mask.any():
            continue
        hist = histogram_from_counters(arrays["counter1"][mask],
                                       arrays["counter2"][mask],
                                       args.counters, pitch)
        entry = {"class": name, "n": int(mask.sum())}
        try:
            fit = fit_cosine(hist)
            entry.update({"A": fit.a, "B": fit.b, "R": fit.r,
                          "sigma_R": fit.sigma_r, "mu": fit.mu,
                          "sigma_mu": fit.sigma_mu, "chi2": fit.chi2,
                          "dof": fit.dof})
        except FitDegenerateError as exc:
            entry["error"] = str(exc)
        try:
            cs = fit_s_curve(build_correlation_set(hist))
            entry.update({"p0": cs.p0, "sigma_p0": cs.sigma_p0})
            entry.update(chsh_report(cs))
        except (FitDegenerateError, UndefinedCorrelationError) as exc:
            entry["s_error"] = str(exc)
        results[name] = entry
        line = f"  {name}: N = {entry['n']}"
        if "R" in entry:
            line += (f", R = {entry['R']:.4f} +- {entry['sigma_R']:.4f}, "
                     f"mu = {entry['mu']:.4f} +- {entry['sigma_mu']:.4f}")
        print(line)
    try:
        out = args.out_dir / "analysis.json"
        out.write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"error: cannot write analysis: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _cmd_predict(args) -> int:
    try:
        model = PairModel(args.model, args.weight)
        if not 0.0 < args.theta1 < 180.0 or not 0.0 < args.theta2 < 180.0:
            raise ValueError("scattering angles must lie in (0, 180) deg")
        mu = modulation_amplitude(model, math.radians(args.theta1),
                                  math.radians(args.theta2), args.energy)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    r = (1.0 + mu) / (1.0 - mu)
    s_max = TWO_SQRT_TWO * mu
    print(f"model = {model.kind}"
          + (f" (weight = {model.weight:g})" if model.kind == "depolarized" else ""))
    print(f"theta1 = {args.theta1:.3f} deg, theta2 = {args.theta2:.3f} deg, "
          f"E = {args.energy:g} keV")
    print(f"mu = {mu:.6f}")
    print(f"R = {r:.6f}")
    print(f"S extremum |S| = {abs(s_max):.6f} at phi = 22.5 deg")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "analyze":
        return _cmd_analyze(args)
    return _cmd_predict(args)


if __name__ == "__main__":
    sys.exit(main())
