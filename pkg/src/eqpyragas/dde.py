"""Controlled delay system: method-of-steps simulation and a discretized ``U_h``.

The controlled system is

    x'(t) = f(x(t)) + b [x(t) - h x(t - theta_h)],

whose control term vanishes along the discrete wave. Its linearization
about the wave generates the twisted monodromy operator
``U_h phi = h^-1 y(theta_h + .)``, approximated here on a uniform grid of
``M + 1`` nodes with cubic spline histories.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .charfn import CharFunction, smallest_roots
from .flow import DiscreteWave, IntegrationError, VectorField

log = logging.getLogger(__name__)

DEFAULT_M = 200


class HistoryRangeError(RuntimeError):
    """A delayed value was requested outside the stored history."""


@dataclass
class HistorySegment:
    """States on ``M + 1`` uniform nodes over ``[-theta, 0]`` with a cubic interpolant."""

    theta: float
    values: np.ndarray  # (M + 1, N)
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[0] < 4:
            raise ValueError("a cubic history needs at least 4 nodes")
        self._spline = CubicSpline(self.nodes, self.values, axis=0)

    @property
    def M(self) -> int:
        return self.values.shape[0] - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.theta, 0.0, self.values.shape[0])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        tol = 1e-12 * max(1.0, self.theta)
        if np.any(s < -self.theta - tol) or np.any(s > tol):
            raise HistoryRangeError(f"history queried outside [-{self.theta}, 0]")
        out = self._spline(np.clip(s, -self.theta, 0.0))
        # queries that hit a node return the stored state bit for bit
        nodes = self.nodes
        k = np.clip(np.rint((s + self.theta) / self.theta * self.M).astype(int), 0, self.M)
        hit = nodes[k] == s
        if np.any(hit):
            out = np.array(out)
            out[hit] = self.values[k[hit]]
        return out

    @classmethod
    def from_function(cls, fn, theta: float, M: int = DEFAULT_M) -> "HistorySegment":
        s = np.linspace(-theta, 0.0, M + 1)
        return cls(theta, np.array([fn(si) for si in s]))

    @classmethod
    def from_wave(cls, wave: DiscreteWave, M: int = DEFAULT_M, perturbation=None) -> "HistorySegment":
        """Wave history ``x*(s)``, ``s in [-theta_h, 0]``, plus an optional perturbation.

        ``perturbation`` is a constant vector or a callable of ``s``.
        """
        s = np.linspace(-wave.theta_h, 0.0, M + 1)
        vals = np.array(wave(s), dtype=float)
        if perturbation is not None:
            if callable(perturbation):
                vals = vals + np.array([perturbation(si) for si in s])
            else:
                vals = vals + np.asarray(perturbation, dtype=float)[None, :]
        return cls(wave.theta_h, vals)


class SimulationResult:
    """Piecewise dense solution of the controlled system on ``[-theta, t_end]``."""

    def __init__(self, history: HistorySegment, segments: list, t_end: float, h: np.ndarray,
                 sample_t: np.ndarray):
        self.history = history
        self.segments = segments
        self.t_end = t_end
        self.h = h
        self.theta = history.theta
        self.t = sample_t
        self.x = self(sample_t)
        self.control_norm = self.control(sample_t)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.empty((t.size, self.history.values.shape[1]))
        neg = t <= 0
        if neg.any():
            out[neg] = self.history(t[neg])
        if (~neg).any():
            idx = np.minimum(np.floor(t[~neg] / self.theta).astype(int), len(self.segments) - 1)
            pos = np.flatnonzero(~neg)
            for k in np.unique(idx):
                sel = pos[idx == k]
                out[sel] = self.segments[k](t[sel]).T
        return out[0] if scalar else out

    def control(self, t) -> np.ndarray:
        """``||x(t) - h x(t - theta)||``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        d = self(t) - self(t - self.theta) @ self.h.T
        return np.linalg.norm(d, axis=1)


def simulate_controlled(f: VectorField, h, theta_h: float, b: float, initial: HistorySegment,
                        t_end: float, tol: float = 1e-10, samples_per_delay: int = 50) -> SimulationResult:
    """Integrate the controlled system by the method of steps.

    Each interval ``[k theta, (k+1) theta]`` is an ODE whose delayed term
    is read from the previous interval's dense output (or the initial
    history). Uses DOP853 with ``rtol = atol = tol``.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    h = np.asarray(getattr(h, "matrix", h), dtype=float)
    theta = float(theta_h)
    if abs(initial.theta - theta) > 1e-12 * theta:
        raise ValueError("history length differs from theta_h")
    n_seg = int(np.ceil(t_end / theta - 1e-12))
    segments = []
    x = initial.values[-1].copy()
    for k in range(n_seg):
        t0, t1 = k * theta, min((k + 1) * theta, t_end)
        if k == 0:
            delayed = lambda t: initial(t - theta)
        else:
            seg = segments[-1]
            delayed = lambda t, seg=seg: seg(t - theta)

        def rhs(t, y, delayed=delayed):
            return f(y) + b * (y - h @ delayed(t))

        sol = solve_ivp(rhs, (t0, t1), x, method="DOP853", rtol=tol, atol=tol, dense_output=True)
        if sol.status != 0:
            raise IntegrationError(f"method of steps failed on interval {k}: {sol.message}", sol.t[-1])
        segments.append(_Segment(sol.sol, t0, t1))
        x = sol.y[:, -1]
    ts = np.linspace(0.0, t_end, max(2, int(round(samples_per_delay * t_end / theta)) + 1))
    return SimulationResult(initial, segments, t_end, h, ts)


class _Segment:
    """Dense output clipped to its own interval (guards against extrapolation)."""

    def __init__(self, sol, t0: float, t1: float):
        self.sol, self.t0, self.t1 = sol, t0, t1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        slack = 1e-9 * max(1.0, self.t1)
        if np.any(t < self.t0 - slack) or np.any(t > self.t1 + slack):
            raise HistoryRangeError(f"segment [{self.t0}, {self.t1}] queried at {t.min()}..{t.max()}")
        return self.sol(np.clip(t, self.t0, self.t1))


# ----------------------------------------------------------------------------
# distance to the orbit


def distance_to_orbit(x, wave: DiscreteWave, n_grid: int = 2000) -> float:
    """``min_t ||x - x*(t)||``: phase grid search, then one bounded refinement."""
    x = np.asarray(x, dtype=float)
    p = wave.period
    ts = np.linspace(0.0, p, n_grid, endpoint=False)
    d = np.linalg.norm(wave(ts) - x, axis=1)
    k = int(np.argmin(d))
    dt = p / n_grid
    # squared distance is smooth in the phase, which suits Brent's parabolic steps
    r = minimize_scalar(lambda s: float(np.sum((wave(s) - x) ** 2)),
                        bounds=(ts[k] - dt, ts[k] + dt), method="bounded",
                        options={"xatol": 1e-13 * max(1.0, p)})
    return float(min(d[k], np.sqrt(r.fun)))


def distance_series(x, wave: DiscreteWave, n_grid: int = 2000, sweeps: int = 4) -> np.ndarray:
    """Distance to the orbit for each row of ``x``.

    Grid search followed by Gauss-Newton sweeps on the phase,
    ``t <- t - <x*(t) - x, v(t)> / |v(t)|^2``, run for all points at once.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p = wave.period
    ts = np.linspace(0.0, p, n_grid, endpoint=False)
    orbit = wave(ts)
    d2 = ((orbit[None, :, :] - x[:, None, :]) ** 2).sum(axis=2) if x.shape[0] * n_grid <= 4_000_000 \
        else np.array([((orbit - xi) ** 2).sum(axis=1) for xi in x])
    k = np.argmin(d2, axis=1)
    best = np.sqrt(d2[np.arange(x.shape[0]), k])
    t = ts[k]
    for _ in range(sweeps):
        r = wave(t) - x
        v = wave.velocity(t)
        t = t - np.einsum("ij,ij->i", r, v) / np.einsum("ij,ij->i", v, v)
        best = np.minimum(best, np.linalg.norm(wave(t) - x, axis=1))
    return best


def eigen_perturbation(tm, index: int, amplitude: float = 1e-3) -> np.ndarray:
    """Unit real direction of the ``index``-th eigenvector of ``Y_h`` scaled by ``amplitude``."""
    _, V = tm.eigvecs()
    v = np.real(V[:, index])
    if np.linalg.norm(v) < 1e-12:
        v = np.imag(V[:, index])
    return amplitude * v / np.linalg.norm(v)


# ----------------------------------------------------------------------------
# discretized twisted monodromy operator


@dataclass
class DiscretizedOperator:
    """``(M + 1) N`` square matrix approximating ``U_h`` on the nodal basis.

    Row/column index ``k N + i`` is component ``i`` at node
    ``s_k = -theta + k theta / M``.
    """

    matrix: np.ndarray
    M: int
    N: int
    b: float
    theta: float

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.theta, 0.0, self.M + 1)

    def apply(self, history_values) -> np.ndarray:
        v = np.asarray(history_values, dtype=float).reshape(-1)
        return (self.matrix @ v).reshape(self.M + 1, self.N)

    def tangent_residual(self, wave: DiscreteWave) -> float:
        """``max |U_h v - v|`` for the sampled tangent ``v = x*'`` on the grid."""
        v = wave.velocity(self.nodes)
        return float(np.max(np.abs(self.apply(v) - v)) / np.max(np.abs(v)))


def _cardinal_basis(theta: float, M: int) -> CubicSpline:
    nodes = np.linspace(-theta, 0.0, M + 1)
    return CubicSpline(nodes, np.eye(M + 1), axis=0)


def linearized_step_operator(wave: DiscreteWave, b: float, M: int = DEFAULT_M) -> DiscretizedOperator:
    """Assemble the discretized ``U_h`` for gain ``b``.

    Every nodal basis history ``e_{k,i}`` (cardinal cubic spline) is pushed
    through ``y' = (f'(x*(t)) + b) y - b h phi(t - theta)`` on
    ``[0, theta]`` with ``y(0) = phi(0)``; all ``(M + 1) N`` columns are
    integrated together by classical RK4 with step ``theta / M``, aligned with
    the spline knots. Rows of node ``j`` hold ``h^-1 y(j theta / M)``.
    """
    if M < 8:
        raise ValueError("M must be at least 8")
    N = wave.dim
    theta = wave.theta_h
    h = wave.h
    hinv = np.linalg.inv(h)
    dt = theta / M
    basis = _cardinal_basis(theta, M)
    tj = np.arange(M + 1) * dt
    thalf = tj[:-1] + 0.5 * dt
    # f'(x*) on nodes and midpoints
    J_node = np.array([wave.field.jac(x) for x in wave(tj)])
    J_half = np.array([wave.field.jac(x) for x in wave(thalf)])
    S_node = np.eye(M + 1)  # delayed node times hit the knots exactly
    S_half = basis(thalf - theta)
    I = np.eye(N)

    def forcing(S_row):
        # -b h phi(t - theta) for all basis columns: (N, (M+1) N)
        return -b * np.kron(S_row[None, :], h)

    Y = np.zeros((N, (M + 1) * N))
    Y[:, M * N:] = I
    out = np.empty(((M + 1) * N, (M + 1) * N))
    out[:N] = hinv @ Y
    for j in range(M):
        A0, Ah, A1 = J_node[j] + b * I, J_half[j] + b * I, J_node[j + 1] + b * I
        F0, Fh, F1 = forcing(S_node[j]), forcing(S_half[j]), forcing(S_node[j + 1])
        k1 = A0 @ Y + F0
        k2 = Ah @ (Y + 0.5 * dt * k1) + Fh
        k3 = Ah @ (Y + 0.5 * dt * k2) + Fh
        k4 = A1 @ (Y + dt * k3) + F1
        Y = Y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(Y)):
            bad = np.flatnonzero(~np.isfinite(Y).all(axis=0))
            raise IntegrationError(f"operator columns {bad[:5].tolist()} diverged at step {j}", tj[j + 1])
        out[(j + 1) * N:(j + 2) * N] = hinv @ Y
    return DiscretizedOperator(out, M, N, b, theta)


def _top_k(matrix: np.ndarray, K: int) -> np.ndarray:
    w = np.linalg.eigvals(matrix)
    order = np.lexsort((np.angle(w), -np.abs(w)))
    return w[order][:K]


@dataclass
class OracleSpectrum:
    eigenvalues: np.ndarray
    drift: np.ndarray  # |mu_M - mu_2M| per eigenvalue
    refined: np.ndarray  # eigenvalues on the 2M grid


def _match(a: np.ndarray, b: np.ndarray) -> tuple:
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return r, c


def oracle_spectrum(op: DiscretizedOperator, K: int = 5, wave: Optional[DiscreteWave] = None) -> OracleSpectrum:
    """Top-``K`` eigenvalues of the assembled matrix.

    With ``wave`` given, the operator is rebuilt on a ``2M`` grid and the
    per-eigenvalue drift ``|mu_M - mu_2M|`` is reported as a convergence
    estimate.
    """
    if K > op.matrix.shape[0]:
        raise ValueError("K exceeds the operator dimension")
    top = _top_k(op.matrix, K)
    if wave is None:
        return OracleSpectrum(top, np.full(K, np.nan), top)
    fine = _top_k(linearized_step_operator(wave, op.b, 2 * op.M).matrix, K + 2)
    r, c = _match(top, fine)
    drift = np.full(K, np.nan)
    refined = top.copy()
    drift[r] = np.abs(top[r] - fine[c])
    refined[r] = fine[c]
    return OracleSpectrum(top, drift, refined)


@dataclass
class CrossCheck:
    b: float
    oracle: np.ndarray
    reciprocal_roots: np.ndarray
    rel_errors: np.ndarray

    @property
    def max_rel_error(self) -> float:
        return float(np.max(self.rel_errors)) if self.rel_errors.size else 0.0

    def row(self) -> dict:
        return {"b": self.b, "max_rel_error": self.max_rel_error,
                "oracle": [[float(z.real), float(z.imag)] for z in self.oracle],
                "charfn": [[float(z.real), float(z.imag)] for z in self.reciprocal_roots]}


def cross_check(eigs, theta_h: float, b: float, oracle_eigs, K: int = 5, zero_tol: float = 1e-10) -> CrossCheck:
    """Match oracle eigenvalues with reciprocals of the smallest roots of ``d``.

    Oracle eigenvalues below ``zero_tol`` in modulus are dropped (they have
    no root partner). Matching is by minimal total distance.
    """
    cf = CharFunction(eigs, b, theta_h)
    oracle = np.asarray(oracle_eigs, dtype=complex)[:K]
    oracle = oracle[np.abs(oracle) > zero_tol]
    roots = smallest_roots(cf, K + 2)
    recip = 1.0 / roots
    if oracle.size == 0:
        return CrossCheck(b, oracle, recip[:0], np.zeros(0))
    r, c = _match(oracle, recip)
    rel = np.abs(oracle[r] - recip[c]) / np.abs(recip[c])
    order = np.argsort(r)
    return CrossCheck(b, oracle[r][order], recip[c][order], rel[order])
