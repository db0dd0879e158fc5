"""Flat key-value experiment configs.

One ``key = value`` per line, ``#`` starts a comment, keys are dotted
(``surface.kind``, ``window.r``).  Lists are comma separated; point lists
separate points with ``;`` (``basepoints = 0,0; 0,0.25``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .geometry import FlatKleinSpec, FlatTorusSpec, HPoint, HyperbolicSurfaceSpec, MobiusElement, Point, bolza_surface

PRESETS = {
    "torus_unit": ("torus", 1, 1),
    "torus_2_1": ("torus", 2, 1),
    "klein_2_1": ("klein", 2, 1),
    "klein_2_2": ("klein", 2, 2),
    "klein_3_1": ("klein", 3, 1),
    "genus2_bolza": ("hyperbolic", None, None),
}

KNOWN_KEYS = {
    "surface.preset", "surface.kind", "surface.a", "surface.b", "surface.generators",
    "basepoints",
    "spectrum.lambda_max",
    "weyl.lambda_max", "weyl.num",
    "heat.times", "heat.sweep",
    "window.r", "window.eps", "window.profile", "window.weight",
    "wavetrace.lambdas",
    "loops.R",
    "detect.r", "detect.eps", "detect.schedule", "detect.weight", "detect.R", "detect.eps_max",
    "constancy.lambda_max",
    "curvature.tol",
    "plot.input", "plot.x", "plot.y", "plot.step", "plot.output",
}


class ConfigError(ValueError):
    pass


def _number(text: str, key: str) -> float:
    text = text.strip()
    try:
        if "/" in text:
            return float(Fraction(text))
        if text.lower() in ("pi", "2pi"):
            return math.pi * (2 if text.lower() == "2pi" else 1)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: not a number: {text!r}") from None


def _exact(text: str, key: str):
    """Keep periods exact when written as integers or fractions."""
    text = text.strip()
    try:
        if "/" in text or text.lstrip("-").isdigit():
            f = Fraction(text)
            return int(f) if f.denominator == 1 else f
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: not a number: {text!r}") from None
    return _number(text, key)


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in KNOWN_KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = value
        return cls(values)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.parse(text)

    def has(self, key) -> bool:
        return key in self.values

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key) -> str:
        if key not in self.values:
            raise ConfigError(f"missing key {key!r}")
        return self.values[key]

    def number(self, key, default=None) -> float:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return default
        return _number(self.values[key], key)

    def numbers(self, key, default=None) -> list:
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing key {key!r}")
            return list(default)
        return [_number(v, key) for v in self.values[key].split(",") if v.strip()]

    def flag(self, key, default=False) -> bool:
        v = self.values.get(key)
        if v is None:
            return default
        if v.lower() in ("1", "true", "yes", "on"):
            return True
        if v.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {v!r}")

    def surface(self):
        if self.has("surface.preset"):
            name = self.values["surface.preset"]
            if name not in PRESETS:
                raise ConfigError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}")
            kind, a, b = PRESETS[name]
        else:
            kind = self.require("surface.kind")
            a = b = None
            if kind in ("torus", "klein"):
                a = _exact(self.require("surface.a"), "surface.a")
                b = _exact(self.require("surface.b"), "surface.b")
        try:
            if kind == "torus":
                return FlatTorusSpec(a, b)
            if kind == "klein":
                return FlatKleinSpec(a, b)
            if kind == "hyperbolic":
                return self._hyperbolic()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        raise ConfigError(f"unknown surface kind {kind!r}")

    def _hyperbolic(self) -> HyperbolicSurfaceSpec:
        gens = self.values.get("surface.generators", "bolza")
        if gens == "bolza":
            return bolza_surface()
        mats = []
        for i, chunk in enumerate(gens.split(";"), start=1):
            entries = [_number(v, "surface.generators") for v in chunk.split(",")]
            if len(entries) != 4:
                raise ConfigError("surface.generators: each generator needs four entries a,b,c,d")
            mats.append(MobiusElement.from_matrix([entries[:2], entries[2:]], (i,)))
        return HyperbolicSurfaceSpec(tuple(mats))

    def basepoints(self, hyperbolic: bool = False) -> list:
        raw = self.values.get("basepoints")
        if raw is None:
            return [HPoint(0.0, 1.0)] if hyperbolic else [Point(0.0, 0.0)]
        pts = []
        for chunk in raw.split(";"):
            coords = [_number(v, "basepoints") for v in chunk.split(",")]
            if len(coords) != 2:
                raise ConfigError(f"basepoints: expected two coordinates, got {chunk!r}")
            try:
                pts.append(HPoint(*coords) if hyperbolic else Point(*coords))
            except ValueError as exc:
                raise ConfigError(f"basepoints: {exc}") from None
        return pts
