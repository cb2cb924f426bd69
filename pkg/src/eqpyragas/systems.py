"""Builtin example systems and the registration hook for user fields."""
from __future__ import annotations

import importlib
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from .flow import VectorField
from .symmetry import GroupElement


@dataclass
class SystemSpec:
    """A vector field together with its control symmetry and shooting guesses."""

    field: VectorField
    h: GroupElement
    n: int
    m: int
    x_guess: np.ndarray
    theta_guess: float
    description: str = ""


_REGISTRY: Dict[str, Callable[..., SystemSpec]] = {}


def register_system(name: str, factory: Callable[..., SystemSpec]) -> None:
    """Make ``factory(**params)`` available under ``name`` (config ``system.name``)."""
    _REGISTRY[name] = factory


def available_systems() -> list:
    return sorted(_REGISTRY)


def load_plugin(spec: str) -> Callable[..., SystemSpec]:
    """Import ``"package.module:factory"`` and return the factory."""
    module, _, attr = spec.partition(":")
    if not attr:
        raise ValueError(f"plugin spec must look like 'module:factory', got {spec!r}")
    return getattr(importlib.import_module(module), attr)


def get_system(name: str, **params) -> SystemSpec:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {', '.join(available_systems())}") from None
    return factory(**params)


def _oscillator_field(a: float, name: str) -> VectorField:
    def f(z):
        x, y, w = z
        r2 = x * x + y * y
        return np.array([x * (1 - r2) - y, y * (1 - r2) + x, w * (a - w * w)])

    def jac(z):
        x, y, w = z
        r2 = x * x + y * y
        return np.array([
            [1 - r2 - 2 * x * x, -2 * x * y - 1, 0.0],
            [1 - 2 * x * y, 1 - r2 - 2 * y * y, 0.0],
            [0.0, 0.0, a - 3 * w * w],
        ])

    return VectorField(3, f, jac, name=name, params={"transverse_rate": a})


def twisted_oscillator(transverse_rate: float = 0.5) -> SystemSpec:
    """Planar unit-circle oscillator with a decoupled transverse direction.

    ``x' = x(1-r^2) - y, y' = y(1-r^2) + x, w' = w(a - w^2)`` has the wave
    ``(cos t, sin t, 0)`` with ``-x(t) = x(t + pi)``. With ``h = -I`` the
    twisted multipliers are ``1, exp(-2 pi), -exp(a pi)``.
    """
    a = float(transverse_rate)
    return SystemSpec(
        field=_oscillator_field(a, "twisted_oscillator"),
        h=GroupElement(-np.eye(3), "-I3", order=2),
        n=2, m=1,
        x_guess=np.array([1.1, 0.0, 0.05]),
        theta_guess=3.0,
        description="twisted oscillator, h=-I3, closed-form multipliers {1, e^-2pi, -e^(a pi)}",
    )


def positive_unstable(transverse_rate: float = 0.35) -> SystemSpec:
    """Same oscillator, but ``h = diag(-1, -1, 1)`` leaves ``w`` untouched.

    The transverse twisted multiplier becomes ``+exp(a pi)``, which lies
    outside the window where scalar-gain control can help.
    """
    a = float(transverse_rate)
    return SystemSpec(
        field=_oscillator_field(a, "positive_unstable"),
        h=GroupElement(np.diag([-1.0, -1.0, 1.0]), "diag(-1,-1,1)", order=2),
        n=2, m=1,
        x_guess=np.array([1.1, 0.0, 0.01]),
        theta_guess=3.0,
        description="negative control: twisted multiplier +e^(a pi) > 1",
    )


def stable_oscillator(transverse_rate: float = -0.5) -> SystemSpec:
    """Twisted oscillator with a contracting transverse direction."""
    spec = twisted_oscillator(transverse_rate)
    spec.field.name = "stable_oscillator"
    spec.description = "stable wave: all nontrivial twisted multipliers inside the unit circle"
    return spec


def lorenz(sigma: float = 10.0, epsilon: float = 8.0 / 3.0, lam: float = 312.0) -> SystemSpec:
    """Lorenz system with its ``(x1, x2, x3) -> (-x1, -x2, x3)`` symmetry.

    The default guess sits near the symmetric periodic orbit at
    ``lam = 312``; it was taken from a long simulation (the attractor there
    is a nearby asymmetric orbit) followed by :func:`flow.scan_twisted_return`.
    """
    s, e, l = float(sigma), float(epsilon), float(lam)

    def f(x):
        return np.array([-s * x[0] + s * x[1], -x[0] * x[2] + l * x[0] - x[1], x[0] * x[1] - e * x[2]])

    def jac(x):
        return np.array([[-s, s, 0.0], [l - x[2], -1.0, -x[0]], [x[1], x[0], -e]])

    return SystemSpec(
        field=VectorField(3, f, jac, name="lorenz", params={"sigma": s, "epsilon": e, "lam": l}),
        h=GroupElement(np.diag([-1.0, -1.0, 1.0]), "gamma", order=2),
        n=2, m=1,
        x_guess=np.array([-6.85237123, -38.04235117, 250.70217702]),
        theta_guess=0.2036,
        description="Lorenz Z2 discrete wave",
    )


register_system("twisted_oscillator", twisted_oscillator)
register_system("positive_unstable", positive_unstable)
register_system("stable_oscillator", stable_oscillator)
register_system("lorenz", lorenz)
