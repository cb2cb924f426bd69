"""Run configuration read from an INI-style file.

Example::

    [system]
    name = twisted_oscillator
    # plugin = mypkg.fields:make_system
    transverse_rate = 0.5

    [symmetry]
    h = [[-1, 0, 0], [0, -1, 0], [0, 0, -1]]
    n = 2
    m = 1

    [guess]
    x = [1.1, 0.0, 0.05]
    theta = 3.0

    [tolerances]
    shoot = 1e-10
    integ = 1e-12

    [gains]
    values = [-0.35, -0.1]

    [output]
    dir = out

Every section and key is optional except ``system.name`` (or
``system.plugin``). Matrices are JSON lists, row-major.
"""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .symmetry import GroupElement
from .systems import SystemSpec, get_system, load_plugin

_RESERVED = {"name", "plugin"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    system: str = "twisted_oscillator"
    plugin: Optional[str] = None
    params: dict = field(default_factory=dict)
    h: Optional[np.ndarray] = None
    n: Optional[int] = None
    m: Optional[int] = None
    x_guess: Optional[np.ndarray] = None
    theta_guess: Optional[float] = None
    tol_shoot: float = 1e-10
    tol_integ: float = 1e-12
    tol_eig: float = 1e-6
    gains: list = field(default_factory=list)
    out_dir: str = "."

    def validate(self) -> "RunConfig":
        for name in ("tol_shoot", "tol_integ", "tol_eig"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.n is not None and self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.m is not None and not (1 <= self.m <= (self.n if self.n is not None else self.m)):
            raise ConfigError("need 1 <= m <= n")
        if self.h is not None and (self.h.ndim != 2 or self.h.shape[0] != self.h.shape[1]):
            raise ConfigError("symmetry.h must be a square matrix")
        return self

    def build_system(self) -> SystemSpec:
        """Instantiate the system and apply the overrides from the file."""
        try:
            factory = load_plugin(self.plugin) if self.plugin else None
            spec = factory(**self.params) if factory else get_system(self.system, **self.params)
        except (KeyError, ImportError, AttributeError, TypeError) as exc:
            raise ConfigError(f"cannot build system: {exc}") from exc
        if self.h is not None:
            spec.h = GroupElement(self.h, "h")
        if self.n is not None:
            spec.n = self.n
        if self.m is not None:
            spec.m = self.m
        if spec.m > spec.n:
            raise ConfigError("need 1 <= m <= n")
        if self.x_guess is not None:
            spec.x_guess = self.x_guess
        if self.theta_guess is not None:
            spec.theta_guess = self.theta_guess
        if spec.h.dim != spec.field.dim or np.size(spec.x_guess) != spec.field.dim:
            raise ConfigError("dimension mismatch between field, h and guess")
        return spec


def _json(value: str, key: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{key}: expected a JSON value, got {value!r}") from exc


def _scalar(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def load_config(path: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_parser(cp)


def config_from_parser(cp: configparser.ConfigParser) -> RunConfig:
    cfg = RunConfig()
    try:
        if cp.has_section("system"):
            sec = cp["system"]
            cfg.system = sec.get("name", cfg.system)
            cfg.plugin = sec.get("plugin")
            cfg.params = {k: _scalar(v) for k, v in sec.items() if k not in _RESERVED}
        if cp.has_section("symmetry"):
            sec = cp["symmetry"]
            if "h" in sec:
                cfg.h = np.array(_json(sec["h"], "symmetry.h"), dtype=float)
            cfg.n = sec.getint("n") if "n" in sec else None
            cfg.m = sec.getint("m") if "m" in sec else None
        if cp.has_section("guess"):
            sec = cp["guess"]
            if "x" in sec:
                cfg.x_guess = np.array(_json(sec["x"], "guess.x"), dtype=float)
            if "theta" in sec:
                cfg.theta_guess = sec.getfloat("theta")
        if cp.has_section("tolerances"):
            sec = cp["tolerances"]
            cfg.tol_shoot = sec.getfloat("shoot", cfg.tol_shoot)
            cfg.tol_integ = sec.getfloat("integ", cfg.tol_integ)
            cfg.tol_eig = sec.getfloat("eig", cfg.tol_eig)
        if cp.has_section("gains"):
            cfg.gains = [float(g) for g in _json(cp["gains"].get("values", "[]"), "gains.values")]
        if cp.has_section("output"):
            cfg.out_dir = cp["output"].get("dir", cfg.out_dir)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg.validate()
