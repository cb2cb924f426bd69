"""ODE flow, variational equation and twisted shooting for discrete waves.

Integration uses scipy's DOP853 embedded Runge-Kutta pair with its dense
output. :class:`Trajectory` wraps the solver output so that evaluation at
stored nodes returns the stored states exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .symmetry import GroupElement, SpatioTemporalSymmetry

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
_FD_SCALE = np.cbrt(np.finfo(float).eps)


class IntegrationError(RuntimeError):
    """Raised when the integrator cannot reach the final time."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (failed at t={t:.6g})")
        self.t = t


class ShootingError(RuntimeError):
    """Raised when twisted shooting does not converge."""

    def __init__(self, message: str, residual: float = np.nan, condition: float = np.nan):
        super().__init__(message)
        self.residual = residual
        self.condition = condition


@dataclass
class VectorField:
    """Autonomous vector field ``x -> f(x)`` on R^N.

    ``jacobian`` is optional; without it :meth:`jac` falls back on central
    differences with step ``cbrt(eps) * max(1, |x_i|)``.
    """

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "field"
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.evaluate(np.asarray(x, dtype=float)), dtype=float)

    def jac(self, x) -> np.ndarray:
        if self.jacobian is not None:
            return np.asarray(self.jacobian(np.asarray(x, dtype=float)), dtype=float)
        return self.fd_jacobian(x)

    def fd_jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        J = np.empty((self.dim, self.dim))
        for i in range(self.dim):
            step = _FD_SCALE * max(1.0, abs(x[i]))
            e = np.zeros(self.dim)
            e[i] = step
            J[:, i] = (self(x + e) - self(x - e)) / (2 * step)
        return J

    def jacobian_error(self, probes) -> float:
        """Max relative deviation of the supplied Jacobian from central differences."""
        worst = 0.0
        for x in np.atleast_2d(probes):
            Ja, Jf = self.jac(x), self.fd_jacobian(x)
            worst = max(worst, np.linalg.norm(Ja - Jf) / max(1.0, np.linalg.norm(Jf)))
        return float(worst)


class Trajectory:
    """Solution on a time grid plus the solver's dense interpolant.

    Calling the trajectory at times equal to grid nodes returns the stored
    states bit-for-bit; elsewhere the dense output is used.
    """

    def __init__(self, t, y, sol, nfev: int = 0, njev: int = 0):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self._sol = sol
        self.nfev = nfev
        self.njev = njev

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def dim(self) -> int:
        return self.y.shape[1]

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        scalar = t_arr.ndim == 0
        tt = np.atleast_1d(t_arr)
        lo, hi = self.t[0], self.t[-1]
        span = hi - lo
        if np.any(tt < lo - 1e-12 * span) or np.any(tt > hi + 1e-12 * span):
            raise ValueError(f"time outside trajectory range [{lo}, {hi}]")
        out = np.atleast_2d(self._sol(np.clip(tt, lo, hi))).reshape(self.dim, -1).T.copy()
        idx = np.clip(np.searchsorted(self.t, tt), 0, len(self.t) - 1)
        hit = self.t[idx] == tt
        out[hit] = self.y[idx[hit]]
        return out[0] if scalar else out


def _solve(rhs, y0, t_span, rtol, atol, max_step=np.inf) -> Trajectory:
    sol = solve_ivp(rhs, t_span, np.asarray(y0, dtype=float), method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True, max_step=max_step)
    if sol.status != 0:
        raise IntegrationError(sol.message, float(sol.t[-1]))
    return Trajectory(sol.t, sol.y.T, sol.sol, sol.nfev, sol.njev)


def integrate(f: VectorField, x0, t_span, tol: float = DEFAULT_TOL, max_step: float = np.inf) -> Trajectory:
    """Integrate ``x' = f(x)`` over ``t_span`` with relative and absolute tolerance ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _solve(lambda t, x: f(x), x0, t_span, tol, tol, max_step)


def variational_flow(f: VectorField, x0, t_end: float, tol: float = 1e-12) -> Trajectory:
    """Integrate the orbit together with ``Y' = f'(x(t)) Y, Y(0) = I``.

    The returned trajectory carries the augmented state ``[x, vec(Y)]``
    with ``Y`` stored row-major.
    """
    n = f.dim

    def rhs(t, z):
        x = z[:n]
        Y = z[n:].reshape(n, n)
        return np.concatenate([f(x), (f.jac(x) @ Y).ravel()])

    z0 = np.concatenate([np.asarray(x0, dtype=float), np.eye(n).ravel()])
    return _solve(rhs, z0, (0.0, t_end), tol, tol)


def _split(z, n):
    z = np.atleast_2d(z)
    return z[:, :n], z[:, n:].reshape(-1, n, n)


def fundamental_solution(f: VectorField, wave_or_traj, t, tol: float = 1e-12) -> np.ndarray:
    """Fundamental matrix ``Y(t)`` of the linearization along a stored orbit.

    Parameters
    ----------
    f : VectorField
    wave_or_traj : DiscreteWave or Trajectory
        Supplies the starting point of the orbit.
    t : float or array_like
        Times in ``[0, T]`` measured from the start of the orbit.
    """
    x0 = wave_or_traj.x0 if isinstance(wave_or_traj, DiscreteWave) else wave_or_traj.y[0]
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ValueError("t must be non-negative")
    t_end = float(ts.max())
    if t_end == 0.0:
        Y = np.broadcast_to(np.eye(f.dim), (ts.size, f.dim, f.dim)).copy()
    else:
        traj = variational_flow(f, x0, t_end, tol)
        _, Y = _split(traj(ts), f.dim)
    return Y[0] if np.ndim(t) == 0 else Y


class DiscreteWave:
    """Periodic orbit ``x*`` with its spatio-temporal symmetry certificate.

    Evaluation is periodic: ``wave(t) = x*(t mod p)``.
    """

    def __init__(self, field: VectorField, x0, sym: SpatioTemporalSymmetry, trajectory: Trajectory,
                 shooting_residual: float, iterations: int = 0, minimality: Optional[dict] = None):
        self.field = field
        self.x0 = np.asarray(x0, dtype=float)
        self.sym = sym
        self.trajectory = trajectory
        self.shooting_residual = shooting_residual
        self.iterations = iterations
        self.minimality = minimality if minimality is not None else {}

    @property
    def period(self) -> float:
        return self.sym.period_p

    @property
    def theta_h(self) -> float:
        return self.sym.theta_h

    @property
    def h(self) -> np.ndarray:
        return self.sym.h.matrix

    @property
    def dim(self) -> int:
        return self.x0.size

    def __call__(self, t):
        return self.trajectory(np.mod(t, self.period))

    def velocity(self, t):
        x = np.atleast_2d(self(t))
        v = np.array([self.field(xi) for xi in x])
        return v[0] if np.ndim(t) == 0 else v

    def twisted_residual(self) -> float:
        xT = self.trajectory(self.theta_h)
        return float(np.linalg.norm(np.linalg.solve(self.h, xT) - self.x0))


def minimality_probe(traj: Trajectory, period: float, kmax: int = 6) -> dict:
    """Closure ``||x(p/k) - x(0)||`` for ``k = 2..kmax``.

    Small values suggest ``p`` is not the minimal period. Reported, never
    enforced.
    """
    x0 = traj.y[0]
    return {k: float(np.linalg.norm(traj(period / k) - x0)) for k in range(2, kmax + 1)}


def find_discrete_wave(f: VectorField, h, theta_guess: float, x_guess, *, n: int = 2, m: int = 1,
                       tol: float = 1e-10, max_iter: int = 40, integ_tol: float = 1e-12) -> DiscreteWave:
    """Locate a discrete wave ``h x(t) = x(t + theta_h)`` by twisted shooting.

    Newton iteration on the bordered system

        G(x0, T) = [ h^-1 Phi_T(x0) - x0 ;  <f(x_guess), x0 - x_guess> ] = 0,

    whose Jacobian is built from ``h^-1 Y(T) - I``, ``h^-1 f(Phi_T(x0))``
    and the phase row. The period is ``p = n T / m``.

    Raises
    ------
    ShootingError
        On non-convergence within ``max_iter`` steps, non-finite iterates or
        a numerically singular bordered Jacobian.
    """
    g = h if isinstance(h, GroupElement) else GroupElement(h, "h")
    hinv = g.inverse
    x = np.array(x_guess, dtype=float)
    xg = x.copy()
    N = x.size
    if N != f.dim:
        raise ValueError(f"guess has dimension {N}, field has {f.dim}")
    fg = f(xg)
    scale = max(1.0, float(np.linalg.norm(xg)))
    T = float(theta_guess)
    res = np.inf
    it = 0
    for it in range(max_iter + 1):
        if not (np.isfinite(T) and T > 0 and np.all(np.isfinite(x))):
            raise ShootingError("shooting produced a non-finite or non-positive iterate", res)
        try:
            zT = variational_flow(f, x, T, integ_tol).y[-1]
        except IntegrationError as exc:
            raise ShootingError(f"integration failed during shooting: {exc}", res) from exc
        xT, Y = zT[:N], zT[N:].reshape(N, N)
        G = np.concatenate([hinv @ xT - x, [fg @ (x - xg)]])
        res = float(np.linalg.norm(G))
        log.debug("shooting iter %d residual %.3e T=%.12g", it, res, T)
        if res <= tol * scale:
            break
        if it == max_iter:
            raise ShootingError(f"no convergence after {max_iter} Newton steps (residual {res:.3e})", res)
        J = np.zeros((N + 1, N + 1))
        J[:N, :N] = hinv @ Y - np.eye(N)
        J[:N, N] = hinv @ f(xT)
        J[N, :N] = fg
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > 1e14:
            raise ShootingError(f"bordered Jacobian singular (condition {cond:.3e})", res, cond)
        d = np.linalg.solve(J, -G)
        x = x + d[:N]
        T = T + d[N]

    sym = SpatioTemporalSymmetry.from_shift(g, n, m, T)
    traj = integrate(f, x, (0.0, sym.period_p), integ_tol)
    return DiscreteWave(f, x, sym, traj, res, it, minimality_probe(traj, sym.period_p))


def scan_twisted_return(f: VectorField, h, x_start, t_max: float, n_samples: int = 20000,
                        tol: float = 1e-10) -> list:
    """Candidate twisted return times from a single simulation.

    Returns ``(T, ||h^-1 x(T) - x_start||)`` at the local minima of the
    distance on ``(0, t_max]``, best first. Useful as ``theta_guess``.
    """
    hm = h.matrix if isinstance(h, GroupElement) else np.asarray(h, dtype=float)
    traj = integrate(f, x_start, (0.0, t_max), tol)
    ts = np.linspace(0.0, t_max, n_samples + 1)[1:]
    r = np.linalg.norm(np.linalg.solve(hm, traj(ts).T).T - np.asarray(x_start), axis=1)
    inner = np.flatnonzero((r[1:-1] < r[:-2]) & (r[1:-1] < r[2:])) + 1
    return sorted(((float(ts[i]), float(r[i])) for i in inner), key=lambda c: c[1])
