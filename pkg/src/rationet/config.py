"""Experiment configuration files.

One INI file describes one experiment: a [experiment] section with the
kind and seeds, a [data] section, a [train] section, and one [method NAME]
section per trained method.  Parsing is strict: unknown kinds, missing
required keys, or values of the wrong type raise ConfigError before any
artifact is written.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .errors import ConfigError

KINDS = ("hyptest", "classify", "glrt", "cusum", "kl", "mi", "local")

_REQUIRED = object()


@dataclass
class MethodSpec:
    """One trained method: a loss preset plus optional knob overrides."""

    name: str
    preset: str
    alpha: float | None = None
    c: float | None = None
    s: float | None = None
    domain: str | None = None
    output: str | None = None
    hidden: int | None = None


@dataclass
class ExperimentConfig:
    kind: str
    seeds: list[int]
    iterations: int
    step_size: float
    smoothing: float
    mode: str
    hidden: int
    methods: list[MethodSpec]
    data: dict
    trials: int
    block_sizes: list[int]
    thresholds: list[float]
    horizon: int
    options: dict = field(default_factory=dict)
    raw: list = field(default_factory=list)


def _parse_scalar(text: str, cast, where: str):
    try:
        if cast is bool:
            lowered = text.strip().lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        return cast(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: cannot read {text!r} as {cast.__name__}") from exc


def _get(parser, section: str, key: str, cast=str, default=_REQUIRED):
    if not parser.has_option(section, key):
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r} in [{section}]")
        return default
    return _parse_scalar(parser.get(section, key), cast, f"[{section}] {key}")


def _get_list(parser, section: str, key: str, cast, default=_REQUIRED):
    if not parser.has_option(section, key):
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r} in [{section}]")
        return list(default)
    raw = parser.get(section, key).replace(",", " ").split()
    if not raw:
        raise ConfigError(f"[{section}] {key} must list at least one value")
    return [_parse_scalar(item, cast, f"[{section}] {key}") for item in raw]


def _method_sections(parser) -> list[str]:
    return [s for s in parser.sections() if s.startswith("method")]


def _parse_method(parser, section: str) -> MethodSpec:
    name = section[len("method"):].strip() or _get(parser, section, "preset")
    spec = MethodSpec(
        name=name,
        preset=_get(parser, section, "preset"),
        alpha=_get(parser, section, "alpha", float, None),
        c=_get(parser, section, "c", float, None),
        s=_get(parser, section, "s", float, None),
        domain=_get(parser, section, "domain", str, None),
        output=_get(parser, section, "output", str, None),
        hidden=_get(parser, section, "hidden", int, None),
    )
    known = {"preset", "alpha", "c", "s", "domain", "output", "hidden"}
    for key in parser.options(section):
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
    return spec


_DATA_KEYS = {
    "hyptest": {"kind", "k", "mean0", "mean1", "variance0", "variance1",
                "n_train"},
    "glrt": {"kind", "mean0", "mean1", "variance0", "variance1",
             "nominal_blocks"},
    "kl": {"kind", "k", "mean0", "mean1", "variance0", "variance1",
           "n_train", "n_eval"},
    "mi": {"kind", "correlation", "n_train", "n_eval"},
    "cusum": {"kind", "regime0", "regime1", "train_lengths"},
    "classify": {"kind", "train_images", "train_labels", "test_images",
                 "test_labels", "positive_label", "negative_label",
                 "per_class_cap", "image_dim", "delta", "n_train_per_class",
                 "n_test_per_class"},
    "local": {"kind", "statistic", "k", "delta", "n_train",
              "grid_lo", "grid_hi", "grid_points"},
}


def _parse_data(parser, kind: str) -> dict:
    if not parser.has_section("data"):
        raise ConfigError("missing [data] section")
    allowed = _DATA_KEYS[kind]
    for key in parser.options("data"):
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [data] for {kind}")
    data: dict = {}
    if kind in ("hyptest", "glrt", "kl"):
        data["k"] = _get(parser, "data", "k", int, 1) if kind != "glrt" else 1
        data["mean0"] = _get(parser, "data", "mean0", float, 0.0)
        data["mean1"] = _get(parser, "data", "mean1", float)
        data["variance0"] = _get(parser, "data", "variance0", float, 1.0)
        data["variance1"] = _get(parser, "data", "variance1", float, 1.0)
        if kind == "glrt":
            data["nominal_blocks"] = _get_list(parser, "data",
                                               "nominal_blocks", int)
        else:
            data["n_train"] = _get(parser, "data", "n_train", int)
        if kind == "kl":
            data["n_eval"] = _get(parser, "data", "n_eval", int, 10000)
        for key in ("variance0", "variance1"):
            if data[key] <= 0:
                raise ConfigError(f"[data] {key} must be positive")
    elif kind == "mi":
        data["correlation"] = _get(parser, "data", "correlation", float)
        if not -1.0 < data["correlation"] < 1.0:
            raise ConfigError("[data] correlation must lie in (-1, 1)")
        data["n_train"] = _get(parser, "data", "n_train", int)
        data["n_eval"] = _get(parser, "data", "n_eval", int, 10000)
    elif kind == "cusum":
        data["regime0"] = _get(parser, "data", "regime0", str,
                               "iid_standard_normal")
        data["regime1"] = _get(parser, "data", "regime1", str, "sqrt_feedback")
        data["train_lengths"] = _get_list(parser, "data", "train_lengths", int)
    elif kind == "classify":
        data["kind"] = _get(parser, "data", "kind", str, "synthetic")
        if data["kind"] == "idx":
            for key in ("train_images", "train_labels", "test_images",
                        "test_labels"):
                data[key] = _get(parser, "data", key)
            data["positive_label"] = _get(parser, "data", "positive_label",
                                          int, 9)
            data["negative_label"] = _get(parser, "data", "negative_label",
                                          int, 4)
            data["per_class_cap"] = _get(parser, "data", "per_class_cap",
                                         int, 5500)
        elif data["kind"] == "synthetic":
            data["image_dim"] = _get(parser, "data", "image_dim", int, 784)
            data["delta"] = _get(parser, "data", "delta", float, 0.1)
            data["n_train_per_class"] = _get(parser, "data",
                                             "n_train_per_class", int)
            data["n_test_per_class"] = _get(parser, "data",
                                            "n_test_per_class", int)
        else:
            raise ConfigError(
                f"[data] kind must be idx or synthetic, got {data['kind']!r}"
            )
    elif kind == "local":
        data["statistic"] = _get(parser, "data", "statistic")
        if data["statistic"] not in ("translation", "scale"):
            raise ConfigError(
                "[data] statistic must be translation or scale, "
                f"got {data['statistic']!r}"
            )
        data["k"] = _get(parser, "data", "k", int, 1)
        data["delta"] = _get_list(parser, "data", "delta", float, [1.0])
        data["n_train"] = _get(parser, "data", "n_train", int)
        data["grid_lo"] = _get(parser, "data", "grid_lo", float, -3.0)
        data["grid_hi"] = _get(parser, "data", "grid_hi", float, 3.0)
        data["grid_points"] = _get(parser, "data", "grid_points", int, 241)
    return data


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    if not parser.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    kind = _get(parser, "experiment", "kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; valid: {KINDS}")
    seeds = _get_list(parser, "experiment", "seeds", int, [0])
    if not seeds:
        raise ConfigError("[experiment] seeds must not be empty")

    if not parser.has_section("train"):
        raise ConfigError("missing [train] section")
    iterations = _get(parser, "train", "iterations", int)
    step_size = _get(parser, "train", "step_size", float, 2e-4)
    smoothing = _get(parser, "train", "smoothing", float, 0.99)
    mode = _get(parser, "train", "mode", str, "full_batch")
    hidden = _get(parser, "train", "hidden", int, 20)
    if iterations < 1:
        raise ConfigError("[train] iterations must be positive")
    if hidden < 1:
        raise ConfigError("[train] hidden must be positive")

    methods = [_parse_method(parser, s) for s in _method_sections(parser)]
    if kind in ("hyptest", "classify") and not methods:
        raise ConfigError(f"{kind} experiments need at least one [method] section")
    if kind in ("cusum", "kl", "mi", "local") and len(methods) > 1:
        raise ConfigError(f"{kind} experiments take at most one [method] section")

    data = _parse_data(parser, kind)

    options = {
        "trace_stride": _get(parser, "experiment", "trace_stride", int, 10),
        "order": _get(parser, "experiment", "order", int, 1),
        "hidden_joint": _get(parser, "train", "hidden_joint", int, 50),
        "hidden_marginal": _get(parser, "train", "hidden_marginal", int, 20),
        "block_len": _get(parser, "experiment", "block_len", int, 256),
        "chunk_rows": _get(parser, "experiment", "chunk_rows", int, 200000),
    }

    cfg = ExperimentConfig(
        kind=kind,
        seeds=seeds,
        iterations=iterations,
        step_size=step_size,
        smoothing=smoothing,
        mode=mode,
        hidden=hidden,
        methods=methods,
        data=data,
        trials=_get(parser, "experiment", "trials", int, 10000),
        block_sizes=_get_list(parser, "experiment", "block_sizes", int, [1]),
        thresholds=_get_list(parser, "experiment", "thresholds", float, []),
        horizon=_get(parser, "experiment", "horizon", int, 100000),
        options=options,
        raw=[(s, k, parser.get(s, k)) for s in parser.sections()
             for k in parser.options(s)],
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.trials < 1:
        raise ConfigError("[experiment] trials must be positive")
    if any(b < 1 for b in cfg.block_sizes):
        raise ConfigError("[experiment] block_sizes must be positive")
    if cfg.kind == "cusum" and not cfg.thresholds:
        raise ConfigError("cusum experiments need [experiment] thresholds")
    if cfg.horizon < 1:
        raise ConfigError("[experiment] horizon must be positive")
    if cfg.mode not in ("full_batch", "stochastic_paired"):
        raise ConfigError(f"[train] mode {cfg.mode!r} is not a training mode")
    # Instantiating each preset and output catches unknown names and bad
    # parameters here, before the run starts writing artifacts.
    from . import network
    from .losses import preset as build_preset

    for m in cfg.methods:
        try:
            built = build_preset(m.preset, alpha=m.alpha, c=m.c, s=m.s,
                                 domain=m.domain)
        except Exception as exc:
            raise ConfigError(f"[method {m.name}]: {exc}") from exc
        try:
            network.output_from_name(m.output or built.output_hint)
        except Exception as exc:
            raise ConfigError(f"[method {m.name}] output: {exc}") from exc
