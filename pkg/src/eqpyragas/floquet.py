"""Twisted monodromy matrix ``Y_h = h^-1 Y(theta_h)`` and its spectrum."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .flow import DiscreteWave, fundamental_solution

E2 = float(np.exp(2.0))


class EigenError(RuntimeError):
    pass


def eigen_all(A, tol: float = 1e-8, return_errors: bool = False):
    """All eigenvalues of a real square matrix.

    Backed by LAPACK ``geev`` (balancing, Hessenberg reduction, shifted QR).
    Eigenvalues are ordered by decreasing modulus, ties by angle. Each
    eigenpair's backward error ``||A v - mu v|| / ||v||`` is checked against
    ``tol * max(1, ||A||)``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"need a nonempty square matrix, got {A.shape}")
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"eigensolver did not converge: {exc}") from exc
    errs = np.linalg.norm(A @ V - V * w, axis=0) / np.linalg.norm(V, axis=0)
    bound = tol * max(1.0, np.linalg.norm(A, 2))
    if np.any(errs > bound):
        raise EigenError(f"eigenpair backward error {errs.max():.3e} exceeds {bound:.3e}")
    order = np.lexsort((np.angle(w), -np.abs(w)))
    w = w.astype(complex)[order]
    return (w, errs[order]) if return_errors else w


@dataclass
class TwistedMonodromy:
    """``Y_h`` with its full spectrum.

    ``trivial_index`` points at the eigenvalue nearest 1, which carries the
    orbit tangent.
    """

    matrix: np.ndarray
    spectrum: np.ndarray
    trivial_index: int
    backward_errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    h: np.ndarray = None
    theta_h: float = float("nan")

    @property
    def trivial(self) -> complex:
        return complex(self.spectrum[self.trivial_index])

    @property
    def nontrivial(self) -> np.ndarray:
        return np.delete(self.spectrum, self.trivial_index)

    def eigvecs(self) -> tuple:
        """Eigenvalues and unit eigenvectors in the order of :attr:`spectrum`."""
        w, V = np.linalg.eig(self.matrix)
        idx = [int(np.argmin(np.abs(w - mu))) for mu in self.spectrum]
        V = V[:, idx]
        return w[idx], V / np.linalg.norm(V, axis=0)


def _from_matrix(Yh, h=None, theta_h=float("nan")) -> TwistedMonodromy:
    spec, errs = eigen_all(Yh, return_errors=True)
    trivial = int(np.argmin(np.abs(spec - 1.0)))
    return TwistedMonodromy(np.asarray(Yh, dtype=float), spec, trivial, errs, h, theta_h)


def twisted_monodromy(wave: DiscreteWave, tol: float = 1e-12) -> TwistedMonodromy:
    """Build ``Y_h = h^-1 Y(theta_h)`` along the wave and compute its spectrum."""
    Y = fundamental_solution(wave.field, wave, wave.theta_h, tol)
    Yh = np.linalg.solve(wave.h, Y)
    return _from_matrix(Yh, wave.h, wave.theta_h)


@dataclass
class HypothesisReport:
    """Spectral hypotheses of the stabilization result, with margins.

    ``margin`` is the smallest distance of an unstable eigenvalue to the
    window ends ``{-e^2, -1}`` (``inf`` if none is unstable); ``boundary``
    flags margins below ``boundary_tol``, where the open-window test is not
    numerically meaningful.
    """

    trivial_simple: bool
    unit_circle_clear: bool
    unstable_eigs: list
    all_in_window: bool
    margin: float
    trivial_count: int = 1
    trivial_separation: float = float("inf")
    boundary: bool = False
    reasons: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.trivial_simple and self.unit_circle_clear and self.all_in_window

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "trivial_simple": self.trivial_simple,
            "trivial_count": self.trivial_count,
            "trivial_separation": self.trivial_separation,
            "unit_circle_clear": self.unit_circle_clear,
            "unstable_eigs": [[float(np.real(m)), float(np.imag(m))] for m in self.unstable_eigs],
            "all_in_window": self.all_in_window,
            "margin": self.margin,
            "boundary": self.boundary,
            "reasons": list(self.reasons),
        }


def check_hypotheses(tm, eig_tol: float = 1e-6, sep_floor: float = 1e-4, im_tol: float = 1e-8,
                     unit_tol: float = 1e-6, margin_floor: float = 0.0,
                     boundary_tol: float = 1e-6) -> HypothesisReport:
    """Check the spectral hypotheses on ``Y_h``.

    ``tm`` is a :class:`TwistedMonodromy` or a plain list of eigenvalues.
    The trivial eigenvalue is simple when exactly one eigenvalue is within
    ``eig_tol`` of 1 and the next closest is farther than ``sep_floor``.
    An unstable eigenvalue counts as real when ``|Im mu| <= im_tol * max(1, |mu|)``.
    """
    spec = np.asarray(tm.spectrum if isinstance(tm, TwistedMonodromy) else tm, dtype=complex)
    reasons = []
    dist1 = np.abs(spec - 1.0)
    near = int(np.sum(dist1 <= eig_tol))
    order = np.argsort(dist1)
    sep = float(dist1[order[1]]) if spec.size > 1 else float("inf")
    trivial_simple = near == 1 and sep > sep_floor
    if near == 0:
        reasons.append("no eigenvalue at 1 (trivial eigenvalue missing)")
    elif not trivial_simple:
        reasons.append("trivial eigenvalue 1 is not algebraically simple")

    rest = np.delete(spec, order[0]) if spec.size else spec
    on_circle = np.abs(np.abs(rest) - 1.0) <= unit_tol
    unit_clear = not bool(np.any(on_circle))
    if not unit_clear:
        reasons.append("nontrivial eigenvalue on the unit circle")

    unstable = [complex(m) for m in rest if abs(m) > 1.0 + unit_tol]
    in_window = True
    has_complex = False
    margin = float("inf")
    for mu in unstable:
        real = abs(mu.imag) <= im_tol * max(1.0, abs(mu))
        has_complex |= not real
        margin = min(margin, abs(mu.real + E2), abs(mu.real + 1.0))
        if not (real and -E2 + margin_floor < mu.real < -1.0 - margin_floor):
            in_window = False
    if has_complex:
        reasons.append("complex unstable eigenvalue; outside the scalar-gain theory")
    if not in_window:
        reasons.append("unstable eigenvalue not in (-e^2, -1)")
    return HypothesisReport(trivial_simple, unit_clear, unstable, in_window, margin, near, sep,
                            bool(unstable) and margin < boundary_tol, reasons)


def verify_power_identity(wave: DiscreteWave, tm: TwistedMonodromy, tol: float = 1e-12) -> float:
    """Relative residual of ``Y(p)^m = h^n Y_h^n`` (uncontrolled linearization)."""
    n, m = wave.sym.n, wave.sym.m
    if wave.period == wave.theta_h:
        Yp = wave.h @ tm.matrix
    else:
        Yp = fundamental_solution(wave.field, wave, wave.period, tol)
    lhs = np.linalg.matrix_power(Yp, m)
    rhs = np.linalg.matrix_power(wave.h, n) @ np.linalg.matrix_power(tm.matrix, n)
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))


def liouville_residual(wave: DiscreteWave, tm: TwistedMonodromy) -> float:
    """Relative gap between ``det Y_h`` and ``det(h^-1) exp(int trace f')``."""
    f = wave.field

    def tr(s):
        return np.trace(f.jac(wave(s)))

    integral, _ = quad(tr, 0.0, wave.theta_h, limit=200, epsabs=1e-13, epsrel=1e-13)
    expected = np.exp(integral) / np.linalg.det(wave.h)
    return float(abs(np.linalg.det(tm.matrix) - expected) / abs(expected))


def tangent_residual(wave: DiscreteWave, tm: TwistedMonodromy) -> float:
    """``||Y_h v - v||`` for the orbit tangent ``v = f(x*(0))``."""
    v = wave.field(wave.x0)
    return float(np.linalg.norm(tm.matrix @ v - v))
