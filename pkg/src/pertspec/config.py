"""Experiment configuration: plain ``key = value`` files with ``#`` comments."""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


def parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex number {text!r}") from exc


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot parse boolean {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    t = text.strip()
    if not t:
        return ()
    try:
        return tuple(float(v) for v in t.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse list of numbers {text!r}") from exc


@dataclass
class ExperimentConfig:
    """All knobs of a run. ``basisCutoff = 0`` picks the cutoff from the window."""

    model: str = "torus_exp"
    q: int = 1
    h: float = 0.01
    deltaExponent: float = 4.0
    z0: complex = 1.6 + 0j
    windowRadius: float = 2.0
    realizations: int = 400
    perturbation: str = "potential"
    law: str = "gaussian"
    clamp: bool = False
    clampC: float = 1.0
    basisCutoff: int = 0
    cutoffFactor: float = 1.0
    masterSeed: int = 0
    outDir: str = "out"
    eigenBackend: str = "native"
    # limit-process sampling and reporting
    gafKind: str = "product"
    sigmaPlus: tuple = ()
    sigmaMinus: tuple = ()
    bins: int = 40
    r2Max: float = 0.0
    theory: str = "k2v"
    maxZ: float = 4.0
    meanZ: float = 1.5
    gamma: tuple = ()
    weylTolerance: float = 0.1

    @property
    def delta(self) -> float:
        return self.h**self.deltaExponent

    def validate(self) -> "ExperimentConfig":
        if self.model not in ("torus_exp", "complex_ho"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.q < 1:
            raise ConfigError("q must be >= 1")
        if not 0 < self.h <= 1:
            raise ConfigError("h must lie in (0, 1]")
        if not self.deltaExponent > 3:
            raise ConfigError("deltaExponent must exceed 3")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.windowRadius <= 0:
            raise ConfigError("windowRadius must be positive")
        if self.perturbation not in ("matrix", "potential"):
            raise ConfigError(f"unknown perturbation {self.perturbation!r}")
        if self.law not in ("gaussian", "uniform_phase"):
            raise ConfigError(f"unknown law {self.law!r}")
        if self.eigenBackend not in ("native", "lapack"):
            raise ConfigError(f"unknown eigenBackend {self.eigenBackend!r}")
        if self.gafKind not in ("product", "det"):
            raise ConfigError(f"unknown gafKind {self.gafKind!r}")
        if self.theory not in ("k2v", "ginibre", "kappa"):
            raise ConfigError(f"unknown theory {self.theory!r}")
        if self.bins < 1:
            raise ConfigError("bins must be >= 1")
        if len(self.sigmaPlus) != len(self.sigmaMinus) and self.sigmaMinus:
            raise ConfigError("sigmaPlus and sigmaMinus must have equal length")
        if any(s <= 0 for s in self.sigmaPlus + self.sigmaMinus):
            raise ConfigError("sigma values must be positive")
        if self.gamma and len(self.gamma) != 4:
            raise ConfigError("gamma is re_min,re_max,im_min,im_max")
        if not 0 <= self.masterSeed < 2**64:
            raise ConfigError("masterSeed must be a 64-bit unsigned integer")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _snake(name: str) -> str:
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


_ALIASES = {_snake(n): n for n in _FIELDS} | {n.lower(): n for n in _FIELDS}


def canonical_key(key: str) -> str:
    k = key.strip()
    if k in _FIELDS:
        return k
    alias = _ALIASES.get(k.lower()) or _ALIASES.get(_snake(k))
    if alias is None:
        raise ConfigError(f"unknown configuration key {key!r}")
    return alias


def convert_value(name: str, text: str):
    default = _FIELDS[name].default
    try:
        if isinstance(default, bool):
            return _parse_bool(text)
        if isinstance(default, int):
            return int(text.strip(), 0)
        if isinstance(default, float):
            v = float(text)
            if not math.isfinite(v):
                raise ValueError
            return v
        if isinstance(default, complex):
            return parse_complex(text)
        if isinstance(default, tuple):
            return _parse_floats(text)
    except ValueError as exc:
        raise ConfigError(f"bad value {text!r} for {name}") from exc
    return text.strip()


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        name = canonical_key(key)
        out[name] = convert_value(name, value)
    return out


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Read a config file (optional) and apply ``key=value`` overrides in order."""
    values = {}
    if path is not None:
        try:
            values.update(parse_config_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        name = canonical_key(key)
        values[name] = convert_value(name, value)
    return ExperimentConfig(**values).validate()


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for name in _FIELDS:
        v = getattr(cfg, name)
        if isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        elif isinstance(v, complex):
            v = f"{v.real!r}{v.imag:+.17g}j"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{name} = {v}")
    return "\n".join(lines) + "\n"
