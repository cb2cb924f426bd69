"""Group elements acting on R^N and spatio-temporal pattern data.

Only the single generator ``h`` of the spatio-temporal symmetry is ever
needed; the full symmetry group is never enumerated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

ALGEBRAIC_TOL = 1e-10
TRAJECTORY_TOL = 1e-6


@dataclass(frozen=True)
class GroupElement:
    """A linear map ``g`` on R^N, expected to be orthogonal.

    Parameters
    ----------
    matrix : array_like, shape (N, N)
    label : str
        Short identifier used in reports.
    order : int, optional
        Declared order ``k`` with ``g^k = I``; checked by :meth:`has_order`.
    """

    matrix: np.ndarray
    label: str = "g"
    order: Optional[int] = None

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"group element must be a square matrix, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)

    def power(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, k)

    def has_order(self, k: Optional[int] = None, tol: float = ALGEBRAIC_TOL) -> bool:
        k = self.order if k is None else k
        if k is None:
            raise ValueError("no order declared")
        return np.linalg.norm(self.power(k) - np.eye(self.dim)) <= tol

    def __matmul__(self, x):
        return self.matrix @ x


@dataclass(frozen=True)
class SpatioTemporalSymmetry:
    """The pattern ``h x(t) = x(t + theta_h)`` with ``theta_h = (m/n) p``."""

    h: GroupElement
    theta_h: float
    n: int
    m: int
    period_p: float

    def __post_init__(self):
        _check_nm(self.n, self.m)
        if self.theta_h <= 0 or self.period_p <= 0:
            raise ValueError("theta_h and period must be positive")
        expected = self.m / self.n * self.period_p
        if abs(self.theta_h - expected) > 1e-10 * expected:
            raise ValueError(
                f"theta_h={self.theta_h!r} inconsistent with (m/n)p={expected!r}"
            )

    @classmethod
    def from_period(cls, h, n: int, m: int, period_p: float) -> "SpatioTemporalSymmetry":
        _check_nm(n, m)
        h = h if isinstance(h, GroupElement) else GroupElement(h, "h")
        return cls(h, m / n * period_p, n, m, period_p)

    @classmethod
    def from_shift(cls, h, n: int, m: int, theta_h: float) -> "SpatioTemporalSymmetry":
        _check_nm(n, m)
        h = h if isinstance(h, GroupElement) else GroupElement(h, "h")
        return cls(h, theta_h, n, m, n * theta_h / m)


def _check_nm(n: int, m: int) -> None:
    if n < 1 or not 1 <= m <= n:
        raise ValueError(f"need n >= 1 and 1 <= m <= n, got n={n}, m={m}")


def _as_matrix(g) -> np.ndarray:
    return g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)


def check_orthogonal(g, tol: float = 1e-12) -> bool:
    """True iff ``||g^T g - I||_F <= tol``."""
    a = _as_matrix(g)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: expected square matrix, got {a.shape}")
    return bool(np.linalg.norm(a.T @ a - np.eye(a.shape[0])) <= tol)


def check_equivariance(f: Callable, g, samples: Iterable) -> float:
    """Largest ``||f(g x) - g f(x)||`` over the sample points.

    ``f`` is any callable mapping a point to its velocity; exceptions raised
    by ``f`` propagate.
    """
    a = _as_matrix(g)
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    if pts.size == 0:
        raise ValueError("need at least one sample point")
    worst = 0.0
    for x in pts:
        r = np.asarray(f(a @ x)) - a @ np.asarray(f(x))
        worst = max(worst, float(np.linalg.norm(r)))
    return worst


def check_anchor_order(sym: SpatioTemporalSymmetry, x0, tol: float = TRAJECTORY_TOL) -> bool:
    """Check ``h^n x0 = x0``, i.e. ``h^n`` fixes the orbit anchor.

    ``h^n`` need only be a spatial symmetry of the orbit, not the identity.
    """
    x0 = np.asarray(x0, dtype=float)
    r = np.linalg.norm(sym.h.power(sym.n) @ x0 - x0)
    return bool(r <= tol * max(1.0, np.linalg.norm(x0)))


def pattern_residual(wave, sym: Optional[SpatioTemporalSymmetry] = None, n_probe: int = 200,
                     t0: float = 0.0) -> float:
    """Max of ``||h x(t) - x(t + theta_h)||`` over ``n_probe`` times in one period.

    ``wave`` must be callable on arbitrary times (periodic evaluation) and
    expose ``sym``; a different ``sym`` can be passed to test a candidate
    pattern against the same orbit.
    """
    sym = wave.sym if sym is None else sym
    ts = t0 + np.linspace(0.0, wave.period, n_probe, endpoint=False)
    x = wave(ts)
    xs = wave(ts + sym.theta_h)
    r = x @ sym.h.matrix.T - xs
    return float(np.max(np.linalg.norm(r, axis=1)))
