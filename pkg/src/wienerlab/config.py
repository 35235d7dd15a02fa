"""Experiment files: TOML with a fixed set of sections.

Grammar (every section optional unless a subcommand needs it)::

    [experiment]
    pair = "circle-integer"          # circle-integer | real-real | cyclic:m | product(a,b)
    sequence = "uniform-count"       # see sequences.parse_sequence
    schedule = [64, 128, 256]        # or "dyadic(6,17)"
    seed = 42
    out = "results"

    [measure]
    atoms = [["circle:0", 0.3], ["circle:0.25", 0.7, 0.0]]   # element, re[, im]
    density = "haar"                 # haar | cosine(k,amp) | uniform(a,b)
    density_weight = 1.0

    [grid]
    points = ["circle:0", "circle:1/2"]
    circle = 32                      # adds k/32, k = 0..31

    [function]
    f = "indicator(squares)"
    bound = 1.0
    eps = [0.1, 0.01, 0.001]

    [sets]
    names = ["evens", "squares"]

    [system]
    kind = "power"                   # power | flow | finite
    matrix = [[1, 0], [0, [0.5, 0.0]]]   # entries are numbers or [re, im]
    m = 4                            # finite actions only
    x = [1, 1]
    y = [1, 1]

    [system.planted]
    dim = 6
    angles = [0.0, 0.25, 0.37]
    contraction = 0.8
    contraction_kind = "rotation"

    [tolerances]
    tol = 1e-3

    [expect]
    ...                              # per subcommand, see the README
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import groups as gr
from .errors import ConfigError, WienerLabError
from .measures import ComplexMeasure, Density
from .sequences import DEFAULT_SCHEDULE, dyadic, parse_sequence, validate_schedule

DEFAULT_TOLERANCES = {
    "tol": 1e-3,
    "tol_extremal": 1e-3,
    "tol_gamma": 1e-3,
    "tol_goldstein": 1e-2,
    "tol_cluster": 1e-6,
    "tol_crosscheck": 1e-8,
}

_SECTIONS = {"experiment", "measure", "grid", "function", "sets", "system", "tolerances", "expect"}


@dataclass
class ExperimentConfig:
    raw: dict
    path: str = "<memory>"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def section(self, name: str) -> dict:
        return self.raw.get(name, {})

    def require(self, name: str) -> dict:
        if name not in self.raw:
            raise ConfigError(f"{self.path}: section [{name}] is required for this subcommand")
        return self.raw[name]

    @property
    def seed(self) -> int:
        return int(self.section("experiment").get("seed", 0))

    @property
    def out(self) -> str | None:
        return self.section("experiment").get("out")

    def pair(self):
        text = self.section("experiment").get("pair")
        if text is None:
            return None
        return _wrap(f"[experiment].pair", lambda: gr.parse_pair(text))

    def schedule(self, default=DEFAULT_SCHEDULE) -> list:
        s = self.section("experiment").get("schedule")
        if s is None:
            return list(default)
        if isinstance(s, str):
            mo = re.fullmatch(r"\s*dyadic\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*", s)
            if not mo:
                raise ConfigError(f"{self.path}: [experiment].schedule: expected dyadic(lo,hi), got {s!r}")
            s = dyadic(int(mo.group(1)), int(mo.group(2)))
        return _wrap("[experiment].schedule", lambda: validate_schedule(s))

    def sequence(self):
        text = self.section("experiment").get("sequence")
        if text is None:
            raise ConfigError(f"{self.path}: [experiment].sequence is required")
        nu = _wrap("[experiment].sequence", lambda: parse_sequence(text))
        p = self.pair()
        if p is not None and p != nu.pair:
            raise ConfigError(f"{self.path}: sequence {text!r} lives on {nu.pair}, not on pair {p}")
        return nu

    def measure(self, pair) -> ComplexMeasure:
        sec = self.require("measure")
        atoms = []
        for i, entry in enumerate(sec.get("atoms", [])):
            key = f"[measure].atoms[{i}]"
            if not isinstance(entry, list) or not 2 <= len(entry) <= 3 or not isinstance(entry[0], str):
                raise ConfigError(f"{self.path}: {key}: expected [element, re] or [element, re, im]")
            pt = _wrap(key, lambda: gr.parse_element(entry[0]))
            atoms.append((pt, complex(float(entry[1]), float(entry[2]) if len(entry) == 3 else 0.0)))
        density = None
        if "density" in sec:
            density = _wrap("[measure].density", lambda: parse_density(sec["density"]))
            w = sec.get("density_weight", 1.0)
            if w != 1.0:
                density = density.scaled(w)
        return _wrap("[measure]", lambda: ComplexMeasure(pair, tuple(atoms), density))

    def grid(self, pair, required: bool = True) -> list:
        sec = self.section("grid")
        pts = [_wrap(f"[grid].points[{i}]", lambda t=t: gr.parse_element(t)) for i, t in enumerate(sec.get("points", []))]
        if "circle" in sec:
            q = int(sec["circle"])
            pts += [gr.CirclePoint(k / q) for k in range(q)]
        for i, g in enumerate(pts):
            if not gr.belongs(pair, gr.G_SIDE, g):
                raise ConfigError(f"{self.path}: [grid] entry {gr.format_element(g)} is not in G of {pair}")
        if required and not pts:
            raise ConfigError(f"{self.path}: [grid] is empty")
        unique: list = []
        for g in pts:
            if not any(g == u for u in unique):
                unique.append(g)
        return unique


def _wrap(key: str, thunk):
    try:
        return thunk()
    except (WienerLabError, ValueError, TypeError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_density(text: str) -> Density:
    t = text.strip().lower().replace(" ", "")
    if t == "haar":
        return Density.haar()
    mo = re.fullmatch(r"cosine\(([^,]+),([^,]+)\)", t)
    if mo:
        return Density.cosine(int(mo.group(1)), float(mo.group(2)))
    mo = re.fullmatch(r"uniform\(([^,]+),([^,]+)\)", t)
    if mo:
        return Density.uniform(float(mo.group(1)), float(mo.group(2)))
    raise ValueError(f"unknown density {text!r}")


def parse_matrix(rows, key: str = "matrix"):
    def entry(v):
        if isinstance(v, list):
            if len(v) != 2:
                raise ConfigError(f"{key}: complex entries are [re, im], got {v}")
            return complex(float(v[0]), float(v[1]))
        return complex(float(v))

    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError(f"{key}: expected a list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigError(f"{key}: ragged rows")
    return np.array([[entry(v) for v in r] for r in rows], dtype=np.complex128)


def parse_vector(values, key: str):
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{key}: expected a nonempty list")
    out = []
    for v in values:
        if isinstance(v, list):
            if len(v) != 2:
                raise ConfigError(f"{key}: complex entries are [re, im], got {v}")
            out.append(complex(float(v[0]), float(v[1])))
        else:
            out.append(complex(float(v)))
    return np.array(out, dtype=np.complex128)


def load_config(path: str | Path, overrides: list[str] | None = None) -> ExperimentConfig:
    """Read and validate a config file; ``overrides`` are ``key=value`` tolerance strings."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(p), overrides)


def parse_config(text: str, path: str = "<memory>", overrides: list[str] | None = None) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the message already carries "(at line L, column C)"
        raise ConfigError(f"{path}: {exc}") from None
    unknown = set(raw) - _SECTIONS
    if unknown:
        raise ConfigError(f"{path}: unknown section(s) {sorted(unknown)}")
    cfg = ExperimentConfig(raw, path)
    for k, v in raw.get("tolerances", {}).items():
        cfg.tolerances[k] = _tolerance(path, k, v)
    for item in overrides or []:
        k, sep, v = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol-override expects key=value, got {item!r}")
        cfg.tolerances[k.strip()] = _tolerance("--tol-override", k.strip(), v.strip())
    cfg.schedule()
    return cfg


def _tolerance(where: str, key: str, value) -> float:
    if key not in DEFAULT_TOLERANCES:
        raise ConfigError(f"{where}: unknown tolerance {key!r}; known: {sorted(DEFAULT_TOLERANCES)}")
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: tolerance {key} must be a number, got {value!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise ConfigError(f"{where}: tolerance {key} must be positive, got {v}")
    return v
