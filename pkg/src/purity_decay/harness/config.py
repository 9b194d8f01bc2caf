"""Experiment configuration: INI file schema, model defaults, CLI overrides.

Precedence is built-in defaults < config file < command-line flags. Unknown
sections or keys in a config file are rejected.
"""
from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

OUTPUT_ENV = "PURITY_DECAY_OUTPUT"

MODELS = ("one_one", "two_two_case1", "two_two_case2")

# per-model physical defaults; ħ for the 2+2 models is not a published value
MODEL_DEFAULTS = {
    "one_one": dict(gamma_a=1.0, gamma_b=0.6456, j_star=0.1, hbar=(0.01,), delta=(0.04,)),
    "two_two_case1": dict(gamma_a=1.0, gamma_b=0.64, j_star=0.1, hbar=(0.1,), delta=(0.04,)),
    "two_two_case2": dict(gamma_a=1.0, gamma_b=0.64, j_star=0.2, hbar=(0.1,), delta=(0.02,)),
}
UNPUBLISHED_DEFAULTS = {
    "two_two_case1": ["hbar=0.1 default is not given in the source; chosen for desk-scale runs"],
    "two_two_case2": ["hbar=0.1 default is not given in the source; chosen for desk-scale runs"],
}


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    vals = tuple(float(x) for x in str(text).replace(";", ",").split(",") if x.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


def _optional_float(text: str) -> float | None:
    text = str(text).strip().lower()
    return None if text in ("", "auto", "none") else float(text)


def _mode_dims(text: str):
    text = str(text).strip().lower()
    if text in ("", "auto"):
        return "auto"
    return tuple(int(x) for x in text.split(",") if x.strip())


def _bool(text: str) -> bool:
    text = str(text).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _formats(text: str) -> tuple[str, ...]:
    vals = tuple(x.strip() for x in str(text).split(",") if x.strip())
    bad = set(vals) - {"csv", "gnuplot"}
    if bad:
        raise ValueError(f"unknown formats {sorted(bad)}")
    return vals


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "one_one"
    gamma_a: float | None = None
    gamma_b: float | None = None
    delta_offset: float = 1.2
    j_star: float | None = None
    hbar_list: tuple[float, ...] | None = None
    delta_list: tuple[float, ...] | None = None
    workers: int = 1
    scaled_t_max: float = 5.0
    scaled_t_min: float = 0.01
    samples: int = 201
    spacing: str = "linear"
    mode_dims: Any = "auto"
    method: str = "krylov"
    step_dt: float | None = None
    krylov_dim: int = 30
    target_error_per_step: float = 1e-10
    renormalize_each_step: bool = True
    echo: bool = True
    torus_points: int = 8
    fd_step: float | None = None
    fit_min: float = 0.001
    fit_max: float = 0.1
    plateau_fraction: float = 0.2
    output_dir: str = field(default_factory=lambda: os.environ.get(OUTPUT_ENV, "runs"))
    formats: tuple[str, ...] = ("csv", "gnuplot")

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {MODELS}")
        defaults = MODEL_DEFAULTS[self.model]
        for key, dkey in (("gamma_a", "gamma_a"), ("gamma_b", "gamma_b"), ("j_star", "j_star"),
                          ("hbar_list", "hbar"), ("delta_list", "delta")):
            if getattr(self, key) is None:
                object.__setattr__(self, key, defaults[dkey])
        if not self.hbar_list or not self.delta_list:
            raise ConfigError("hbar and delta lists must be non-empty")
        if any(h <= 0 for h in self.hbar_list):
            raise ConfigError("hbar values must be positive")
        if any(d < 0 for d in self.delta_list):
            raise ConfigError("delta values must be non-negative")
        if self.j_star <= 0:
            raise ConfigError("j_star must be positive")
        if self.spacing not in ("linear", "log"):
            raise ConfigError("spacing must be 'linear' or 'log'")
        if self.samples < 2 or self.scaled_t_max <= 0:
            raise ConfigError("need samples >= 2 and scaled_t_max > 0")
        if self.spacing == "log" and not 0 < self.scaled_t_min < self.scaled_t_max:
            raise ConfigError("log spacing needs 0 < scaled_t_min < scaled_t_max")
        if self.method not in ("krylov", "chebyshev"):
            raise ConfigError("method must be 'krylov' or 'chebyshev'")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 < self.fit_min < self.fit_max <= 1:
            raise ConfigError("need 0 < fit_min < fit_max <= 1")
        if self.mode_dims != "auto":
            n_modes = 2 if self.model == "one_one" else 4
            if len(self.mode_dims) != n_modes or any(d < 2 for d in self.mode_dims):
                raise ConfigError(f"mode_dims needs {n_modes} entries, each >= 2")

    @property
    def d_A(self) -> int:
        return 1 if self.model == "one_one" else 2

    @property
    def n_modes(self) -> int:
        return 2 * self.d_A

    def unpublished_choices(self) -> list[str]:
        if self.hbar_list == MODEL_DEFAULTS[self.model]["hbar"]:
            return list(UNPUBLISHED_DEFAULTS.get(self.model, []))
        return []

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, val in out.items():
            if isinstance(val, tuple):
                out[key] = list(val)
        return out


# (section, key) -> (field name, parser)
SCHEMA: dict[tuple[str, str], tuple[str, Callable[[str], Any]]] = {
    ("model", "name"): ("model", str),
    ("model", "gamma_a"): ("gamma_a", float),
    ("model", "gamma_b"): ("gamma_b", float),
    ("model", "delta_offset"): ("delta_offset", float),
    ("model", "j_star"): ("j_star", float),
    ("sweep", "hbar"): ("hbar_list", _floats),
    ("sweep", "delta"): ("delta_list", _floats),
    ("sweep", "workers"): ("workers", int),
    ("grid", "scaled_t_max"): ("scaled_t_max", float),
    ("grid", "scaled_t_min"): ("scaled_t_min", float),
    ("grid", "samples"): ("samples", int),
    ("grid", "spacing"): ("spacing", str),
    ("truncation", "mode_dims"): ("mode_dims", _mode_dims),
    ("propagation", "method"): ("method", str),
    ("propagation", "step_dt"): ("step_dt", _optional_float),
    ("propagation", "krylov_dim"): ("krylov_dim", int),
    ("propagation", "target_error_per_step"): ("target_error_per_step", float),
    ("propagation", "renormalize_each_step"): ("renormalize_each_step", _bool),
    ("propagation", "echo"): ("echo", _bool),
    ("semiclassics", "torus_points"): ("torus_points", int),
    ("semiclassics", "fd_step"): ("fd_step", _optional_float),
    ("analysis", "fit_min"): ("fit_min", float),
    ("analysis", "fit_max"): ("fit_max", float),
    ("analysis", "plateau_fraction"): ("plateau_fraction", float),
    ("output", "directory"): ("output_dir", str),
    ("output", "formats"): ("formats", _formats),
}

FIELD_PARSERS = {name: parser for name, parser in SCHEMA.values()}


def parse_config_text(text: str, source: str = "<string>") -> dict[str, Any]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    sections = {s for s, _ in SCHEMA}
    values: dict[str, Any] = {}
    for section in parser.sections():
        if section not in sections:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if (section, key) not in SCHEMA:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            name, conv = SCHEMA[(section, key)]
            try:
                values[name] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {section}.{key}: {exc}") from exc
    return values


def load_config(path: str | os.PathLike | None = None, **overrides) -> ExperimentConfig:
    """Build a config from an optional file plus keyword overrides (None = not given)."""
    values: dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_config_text(text, str(path)))
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` back into the INI schema (inverse of ``parse_config_text``)."""
    def fmt(val):
        if isinstance(val, (tuple, list)):
            return ",".join(repr(v) if isinstance(v, float) else str(v) for v in val)
        if val is None:
            return "auto"
        if isinstance(val, bool):
            return "true" if val else "false"
        return repr(val) if isinstance(val, float) else str(val)

    lines: list[str] = []
    current = None
    for (section, key), (name, _) in SCHEMA.items():
        if section != current:
            lines.append(f"\n[{section}]" if lines else f"[{section}]")
            current = section
        lines.append(f"{key} = {fmt(getattr(cfg, name))}")
    return "\n".join(lines) + "\n"
