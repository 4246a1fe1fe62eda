"""Run configuration: parsing, validation, serialization and presets.

Configs are accepted as TOML or JSON documents (sniffed by the first
non-blank character) and are strict: unknown keys are errors.  A preset
names a complete model/apparatus combination; explicit keys and CLI
flags are applied on top of it.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .apparatus import ApparatusConfig
from .compton import flip_probability
from .pairs import MODEL_KINDS, PairModel


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""


PRESET_NAMES = (
    "entangled_baseline", "decoherent_all", "class_a", "class_b", "class_c",
    "class_d", "s_function_entangled", "s_function_class_a", "point_82deg",
)


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulation run needs.

    ``model`` drives untagged (non-interacted) pairs; ``decoherent_model``
    drives pairs that interacted in the tagging scatterer.  ``focus``
    optionally narrows which event classes get plot files (the JSON
    summary always covers every populated class).
    """

    model: PairModel = field(default_factory=lambda: PairModel("entangled"))
    decoherent_model: PairModel = field(default_factory=lambda: PairModel("mixed_hm"))
    apparatus: ApparatusConfig = field(default_factory=ApparatusConfig)
    n_events: int = 1_000_000
    seed: int = 20120521
    workers: int = 1
    write_listmode: bool = False
    preset: str | None = None
    focus: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n_events < 1:
            raise ConfigError("n_events must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.preset is not None and self.preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {self.preset!r}; "
                              f"expected one of {PRESET_NAMES}")


def preset_config(name: str) -> RunConfig:
    """Named run configurations mapping onto the standard result panels."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    entangled = PairModel("entangled")
    mixed_hm = PairModel("mixed_hm")
    decoherent_apparatus = ApparatusConfig(gagg_enabled=True)
    if name == "entangled_baseline":
        return RunConfig(model=entangled, preset=name, n_events=10_000_000,
                         focus=("entangled_candidate",))
    if name == "decoherent_all":
        return RunConfig(model=entangled, decoherent_model=mixed_hm,
                         apparatus=decoherent_apparatus, preset=name,
                         n_events=20_000_000, focus=("decoherent_abc",))
    if name in ("class_a", "class_b", "class_c"):
        return RunConfig(model=entangled, decoherent_model=mixed_hm,
                         apparatus=decoherent_apparatus, preset=name,
                         n_events=20_000_000, focus=(name.split("_")[1],))
    if name == "class_d":
        # the backscatter flips the polarization of one photon with the
        # 180-degree flip probability, turning the orthogonal mixture
        # into a depolarized mixture with that parallel admixture
        w = flip_probability(511.0, math.pi)
        return RunConfig(
            model=PairModel("depolarized", weight=w),
            apparatus=ApparatusConfig(backscatter_chain=True),
            preset=name, n_events=10_000_000, focus=("d",))
    if name == "s_function_entangled":
        return RunConfig(model=entangled, preset=name, n_events=10_000_000,
                         focus=("entangled_candidate",))
    if name == "s_function_class_a":
        return RunConfig(model=entangled, decoherent_model=mixed_hm,
                         apparatus=decoherent_apparatus, preset=name,
                         n_events=20_000_000, focus=("a",))
    # point_82deg
    return RunConfig(
        model=entangled, preset=name, n_events=2_000_000,
        apparatus=ApparatusConfig(point_detector_mode=True,
                                  theta_window_deg=(82.0, 82.0)),
        focus=("entangled_candidate",))


# --- document <-> RunConfig -------------------------------------------------

_MODEL_KEYS = {"kind", "weight"}
_TOP_KEYS = {"model", "decoherent_model", "apparatus", "n_events", "seed",
             "workers", "write_listmode", "preset", "focus"}
_APPARATUS_KEYS = {f.name for f in dataclasses.fields(ApparatusConfig)}


def _parse_model(value, where: str) -> PairModel:
    if isinstance(value, str):
        return PairModel(value)
    if isinstance(value, dict):
        unknown = set(value) - _MODEL_KEYS
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")
        if "kind" not in value:
            raise ConfigError(f"{where} needs a 'kind'")
        return PairModel(value["kind"], float(value.get("weight", 0.0)))
    raise ConfigError(f"{where} must be a model tag or a table, got {type(value).__name__}")


def _pairs(value, where: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{where} must be a two-element array")
    return float(value[0]), float(value[1])


def config_from_document(doc: dict) -> RunConfig:
    """Validate a parsed document and build the RunConfig.

    Preset values are applied first; any explicit keys override them.
    Unknown keys anywhere are errors.
    """
    if not isinstance(doc, dict):
        raise ConfigError("configuration document must be a table")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

    # JSON documents may carry explicit nulls for preset/focus; treat a
    # null preset as "no preset" and a null focus as "no narrowing"
    if doc.get("preset") is not None:
        base = preset_config(doc["preset"])
    else:
        base = RunConfig()
    kwargs = {}
    if "model" in doc:
        kwargs["model"] = _parse_model(doc["model"], "model")
    if "decoherent_model" in doc:
        kwargs["decoherent_model"] = _parse_model(doc["decoherent_model"],
                                                  "decoherent_model")
    for key, cast in (("n_events", int), ("seed", int), ("workers", int),
                      ("write_listmode", bool)):
        if key in doc:
            kwargs[key] = cast(doc[key])
    if "focus" in doc:
        focus = doc["focus"]
        if isinstance(focus, str):
            focus = [focus]
        kwargs["focus"] = None if focus is None else tuple(str(f) for f in focus)

    if "apparatus" in doc:
        app_doc = doc["apparatus"]
        if not isinstance(app_doc, dict):
            raise ConfigError("apparatus must be a table")
        unknown = set(app_doc) - _APPARATUS_KEYS
        if unknown:
            raise ConfigError(f"unknown apparatus keys: {sorted(unknown)}")
        app_kwargs = {}
        for f in dataclasses.fields(ApparatusConfig):
            if f.name not in app_doc:
                continue
            value = app_doc[f.name]
            if isinstance(getattr(base.apparatus, f.name), tuple):
                value = _pairs(value, f"apparatus.{f.name}")
            app_kwargs[f.name] = value
        try:
            kwargs["apparatus"] = replace(base.apparatus, **app_kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    try:
        return replace(base, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text: str) -> RunConfig:
    """Parse a TOML or JSON configuration document."""
    stripped = text.lstrip()
    if not stripped:
        raise ConfigError("empty configuration document")
    if stripped[0] == "{":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON parse error: {exc}") from exc
    else:
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"TOML parse error: {exc}") from exc
    return config_from_document(doc)


def config_to_document(config: RunConfig) -> dict:
    """Full round-trippable document (every field explicit)."""
    doc = {
        "model": {"kind": config.model.kind, "weight": config.model.weight},
        "decoherent_model": {"kind": config.decoherent_model.kind,
                             "weight": config.decoherent_model.weight},
        "n_events": config.n_events,
        "seed": config.seed,
        "workers": config.workers,
        "write_listmode": config.write_listmode,
        "preset": config.preset,
        "focus": None if config.focus is None else list(config.focus),
        "apparatus": {},
    }
    for f in dataclasses.fields(ApparatusConfig):
        value = getattr(config.apparatus, f.name)
        doc["apparatus"][f.name] = list(value) if isinstance(value, tuple) else value
    return doc


def emit_config(config: RunConfig) -> str:
    """Serialize to canonical JSON (parse(emit(c)) == c)."""
    return json.dumps(config_to_document(config), indent=2, sort_keys=True)
