"""Stability region of ``lambda = alpha + beta exp(-lambda)`` and gain intervals.

All roots of ``-z + alpha + beta exp(-z)`` lie in ``Re z < 0`` exactly when
``(alpha, beta)`` lies in

    S = {alpha + beta < 0, alpha < 1, beta > -omega / sin(omega)},

where ``omega in (0, pi)`` solves ``omega cot(omega) = alpha``. The lower
boundary is the curve ``C(omega) = (omega cot omega, -omega / sin omega)``,
the upper one the line ``R: alpha + beta = 0``.

A factor ``1 - z mu exp(b* (1 - z))`` with ``mu = -exp(lam) < 0`` becomes
``1 - w exp(alpha) exp(beta w)`` under ``w = -z`` with
``(alpha, beta) = (lam + b*, b*)``, so it has no roots in the closed unit
disk iff that point is in ``S``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

E2 = math.exp(2.0)
GAIN_CAP = 1e3
_SERIES_CUT = 1e-4


class Region(str, enum.Enum):
    INTERIOR = "interior"
    ON_R = "on_R"
    ON_C = "on_C"
    EXTERIOR = "exterior"


def curve_C(omega, k: int = 0):
    """Points ``(alpha, beta)`` of branch ``k`` of the boundary curve.

    ``omega`` must lie in ``(k pi, (k+1) pi)``; on branch 0 the value
    ``omega = 0`` gives the limit point ``(1, -1)`` (series near 0).
    """
    w = np.asarray(omega, dtype=float)
    lo_ok = w >= 0 if k == 0 else w > k * np.pi
    if not np.all(lo_ok & (w < (k + 1) * np.pi)):
        raise ValueError(f"omega outside branch {k}: ({k}pi, {k + 1}pi)")
    small = np.abs(w) < _SERIES_CUT
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(small, 1.0 - w * w / 3.0, w * np.cos(w) / np.sin(w))
        b = np.where(small, -1.0 - w * w / 6.0, -w / np.sin(w))
    if a.ndim == 0:
        return float(a), float(b)
    return a, b


def omega_of_alpha(alpha: float) -> float:
    """The ``omega in (0, pi)`` with ``omega cot(omega) = alpha`` (``alpha < 1``)."""
    if alpha >= 1.0:
        raise ValueError("omega cot(omega) = alpha needs alpha < 1")
    if 1.0 - alpha < 1e-10:
        return math.sqrt(3.0 * (1.0 - alpha))
    g = lambda w: w * math.cos(w) / math.sin(w) - alpha
    lo, hi = 1e-8, math.pi - 1e-12
    # g decreases from ~1 to -inf on (0, pi)
    while g(hi) > 0:
        hi = 0.5 * (hi + math.pi)
        if math.pi - hi < 1e-300:
            break
    return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def beta_C(alpha: float) -> float:
    """Lower boundary ``beta`` of ``S`` above ``alpha < 1``."""
    return curve_C(omega_of_alpha(alpha))[1]


@dataclass(frozen=True)
class RegionPoint:
    alpha: float
    beta: float
    region: Region

    @property
    def stable(self) -> bool:
        return self.region is Region.INTERIOR


def in_stability_region(alpha: float, beta: float, bnd_tol: float = 1e-9) -> RegionPoint:
    """Classify ``(alpha, beta)`` as interior, on ``R``, on ``C`` or exterior of ``S``."""
    alpha, beta = float(alpha), float(beta)
    s = alpha + beta
    if s > bnd_tol or alpha > 1.0 + bnd_tol:
        return RegionPoint(alpha, beta, Region.EXTERIOR)
    if alpha >= 1.0 - bnd_tol:
        # corner (1, -1): both boundaries meet
        if abs(beta + 1.0) <= math.sqrt(bnd_tol):
            return RegionPoint(alpha, beta, Region.ON_C)
        return RegionPoint(alpha, beta, Region.ON_R if abs(s) <= bnd_tol else Region.EXTERIOR)
    bc = beta_C(alpha)
    if beta < bc - bnd_tol:
        return RegionPoint(alpha, beta, Region.EXTERIOR)
    if abs(beta - bc) <= bnd_tol:
        return RegionPoint(alpha, beta, Region.ON_C)
    if abs(s) <= bnd_tol:
        return RegionPoint(alpha, beta, Region.ON_R)
    return RegionPoint(alpha, beta, Region.INTERIOR)


def factor_point(mu: complex, b_star: float) -> tuple:
    """``(alpha, beta, sign)`` for a real factor; roots ``z = sign * w``."""
    mu = complex(mu)
    if mu.imag != 0 or mu.real == 0:
        raise ValueError("only nonzero real eigenvalues map to a real (alpha, beta)")
    if mu.real > 0:
        return math.log(mu.real) + b_star, -b_star, 1
    return math.log(-mu.real) + b_star, b_star, -1


@dataclass
class GainInterval:
    """Open interval ``(lo, hi)`` of gains ``b``; empty when ``lo >= hi``."""

    lo: float
    hi: float
    theta_h: float
    per_eig: list = field(default_factory=list)
    binding: Optional[complex] = None
    reason: str = ""

    @property
    def empty(self) -> bool:
        return not self.lo < self.hi

    def contains(self, b: float) -> bool:
        return self.lo < b < self.hi

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "lo_star": self.lo * self.theta_h,
            "hi_star": self.hi * self.theta_h,
            "theta_h": self.theta_h,
            "empty": self.empty,
            "binding": None if self.binding is None else [self.binding.real, self.binding.imag],
            "reason": self.reason,
            "per_eig": [
                {"mu": [float(np.real(m)), float(np.imag(m))], "lo": lo, "hi": hi}
                for m, lo, hi in self.per_eig
            ],
        }


def _single_bounds(mu: float) -> tuple:
    """``(b*_lo, b*_hi)`` for one real ``mu in (-e^2, -1)``, in ``b* = b theta_h`` units."""
    lam = math.log(-mu)
    g = lambda w: w / math.tan(w / 2.0) - lam
    # g decreases from 2 to 0 on (0, pi)
    w = brentq(g, 1e-12, math.pi - 1e-15, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return -w / math.sin(w), -lam / 2.0


def gain_interval_single(mu_star: float, theta_h: float) -> GainInterval:
    """Gains stabilizing the factor of one real ``mu_star in (-e^2, -1)``.

    ``b_hi = -lam / (2 theta_h)`` with ``lam = ln(-mu_star)`` (the gain path
    crosses ``R``); ``b_lo = -omega / (theta_h sin omega)`` where
    ``omega cot(omega / 2) = lam`` (the path meets ``C``). Outside the open
    window the interval is empty with reason ``"window boundary"``.
    """
    mu = complex(mu_star)
    if not (-E2 < mu.real < -1.0) or mu.imag != 0:
        return GainInterval(math.nan, math.nan, theta_h, [(mu, math.nan, math.nan)], mu, "window boundary")
    lo, hi = _single_bounds(mu.real)
    lo, hi = lo / theta_h, hi / theta_h
    return GainInterval(lo, hi, theta_h, [(mu, lo, hi)], mu)


def gain_interval_combined(eigs, theta_h: float, im_tol: float = 1e-8,
                           unit_tol: float = 1e-6, gain_cap: float = GAIN_CAP) -> GainInterval:
    """Intersection of the single-eigenvalue intervals over all unstable ``mu``.

    The intervals are nested (the most negative ``mu`` binds). A wave
    without unstable eigenvalues gets ``(-gain_cap, 0)``; real stable
    eigenvalues stay stable for every ``b < 0``.
    """
    eigs = np.asarray(getattr(eigs, "spectrum", eigs), dtype=complex).ravel()
    unstable = [m for m in eigs if abs(m) > 1.0 + unit_tol]
    if not unstable:
        return GainInterval(-gain_cap, 0.0, theta_h, reason="no unstable eigenvalue")
    per, lo, hi, binding, reason = [], -math.inf, math.inf, None, ""
    for mu in unstable:
        if abs(mu.imag) > im_tol * max(1.0, abs(mu)):
            per.append((mu, math.nan, math.nan))
            reason = reason or "complex unstable eigenvalue; outside the scalar-gain theory"
            continue
        gi = gain_interval_single(mu.real, theta_h)
        per.append((mu, gi.lo, gi.hi))
        if gi.empty:
            reason = reason or f"unstable eigenvalue {mu.real:.6g} not in (-e^2, -1)"
            continue
        lo, hi = max(lo, gi.lo), min(hi, gi.hi)
        if binding is None or mu.real < binding.real:
            binding = mu
    if reason:
        return GainInterval(math.nan, math.nan, theta_h, per, None, reason)
    return GainInterval(lo, hi, theta_h, per, binding, "" if lo < hi else "empty interval")


def emit_region_chart(n_points: int = 400, branches=(0, 1, 2), r_extent: float = 10.0) -> list:
    """Rows ``(curve_id, omega, alpha, beta)`` tracing ``C_k`` and the line ``R``.

    Branch ``k`` samples ``omega`` in the open interval ``(k pi, (k+1) pi)``.
    """
    rows = []
    for k in branches:
        eps = 1e-3
        w = np.linspace(k * math.pi + (0 if k == 0 else eps), (k + 1) * math.pi - eps, n_points)
        a, b = curve_C(w, k)
        rows += [(f"C{k}", float(wi), float(ai), float(bi)) for wi, ai, bi in zip(w, a, b)]
    for a in np.linspace(1.0 - r_extent, 1.0, n_points):
        rows.append(("R", math.nan, float(a), float(-a)))
    return rows


def gain_path(mu: float, theta_h: float, gains) -> list:
    """Track ``(alpha(b), beta(b))`` along ``gains``, marking region changes.

    Returns dicts with ``b``, ``alpha``, ``beta``, ``region`` and ``crossing``
    (true when the region differs from the previous sample's).
    """
    out, prev = [], None
    for b in gains:
        a, be, _ = factor_point(mu, b * theta_h)
        rp = in_stability_region(a, be)
        out.append({"b": float(b), "alpha": a, "beta": be, "region": rp.region.value,
                    "crossing": prev is not None and rp.region is not prev})
        prev = rp.region
    return out
