"""Characteristic function of the controlled twisted monodromy operator.

For scalar gain ``b`` the nonzero eigenvalues ``1/z`` of the twisted
monodromy operator of the controlled linearization are the roots ``z`` of

    d(z) = prod_j (1 - z mu_j exp(b (1 - z) theta_h)),

with ``mu_j`` the eigenvalues of ``Y_h``. Roots are located factor by
factor (Newton from seeded grids), audited against argument-principle
winding counts. The exponential correspondence maps roots ``lambda`` of
``-z + alpha + beta exp(-z)`` to roots ``exp(-lambda)`` of
``1 - z exp(alpha) exp(beta z)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._contour import ContourError, circle, rectangle, winding_number

OVERFLOW_GUARD = 500.0
HOMOTOPY_STEPS = 20


class RootCountMismatch(RuntimeError):
    """Found roots disagree with the winding-number count."""


@dataclass
class CharFunction:
    """``d(z)`` for eigenvalues ``eigs`` of ``Y_h``, gain ``b`` and delay ``theta_h``.

    ``matrix`` (``Y_h`` itself) is optional and only needed for
    :meth:`delta`.
    """

    eigs: np.ndarray
    b: float
    theta_h: float
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        self.eigs = np.asarray(self.eigs, dtype=complex).ravel()

    @classmethod
    def from_monodromy(cls, tm, b: float, theta_h: Optional[float] = None) -> "CharFunction":
        theta = tm.theta_h if theta_h is None else theta_h
        return cls(tm.spectrum, b, theta, tm.matrix)

    @property
    def b_star(self) -> float:
        return self.b * self.theta_h

    def delta(self, z: complex) -> np.ndarray:
        """``Delta(z) = I - z Y_h exp(b (1 - z) theta_h)``."""
        if self.matrix is None:
            raise ValueError("Delta(z) needs the matrix Y_h")
        n = self.matrix.shape[0]
        return np.eye(n) - z * self.matrix * np.exp(self.b_star * (1 - z))

    def factor(self, j: int, z):
        return 1.0 - self.eigs[j] * z * np.exp(self.b_star * (1 - np.asarray(z)))

    def log_d(self, z):
        z = np.asarray(z, dtype=complex)
        return sum(_log_factor(mu, self.b_star, z) for mu in self.eigs)


def _log_factor(mu: complex, bs: float, z):
    """A branch of ``log(1 - mu z exp(bs (1 - z)))`` that never overflows."""
    z = np.asarray(z, dtype=complex)
    if mu == 0:
        return np.zeros(z.shape, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        e = np.log(complex(mu)) + np.log(z) + bs * (1 - z)
        big = e.real > 0
        out = np.empty(z.shape, dtype=complex)
        out[big] = e[big] + 1j * np.pi + np.log1p(-np.exp(-e[big]))
        out[~big] = np.log1p(-np.exp(e[~big]))
    return out


def eval_d(cf: CharFunction, z) -> complex:
    """``d(z)``; switches to a log-sum when ``|b (1 - z) theta_h| > 500``."""
    z = complex(z)
    if abs(cf.b_star * (1 - z)) > OVERFLOW_GUARD:
        with np.errstate(over="ignore"):
            return complex(np.exp(cf.log_d(np.array([z]))[0]))
    e = np.exp(cf.b_star * (1 - z))
    return complex(np.prod(1.0 - z * cf.eigs * e))


def d_prime(cf: CharFunction, z) -> complex:
    """Analytic derivative of ``d`` by the product rule."""
    z = complex(z)
    bs = cf.b_star
    e = np.exp(bs * (1 - z))
    phi = 1.0 - z * cf.eigs * e
    dphi = cf.eigs * e * (bs * z - 1.0)
    total = 0j
    for j in range(cf.eigs.size):
        total += dphi[j] * np.prod(np.delete(phi, j))
    return complex(total)


def simplicity_at_one(cf: CharFunction, tol: float = 1e-10, sep: float = 1e-6) -> tuple:
    """Return ``(d(1), d'(1), simple)``; ``z = 1`` is a simple root iff
    ``|d(1)| <= tol`` and ``|d'(1)| >= sep``."""
    d1, dp1 = eval_d(cf, 1.0), d_prime(cf, 1.0)
    return d1, dp1, bool(abs(d1) <= tol and abs(dp1) >= sep)


# ----------------------------------------------------------------------------
# generic root location in a region


@dataclass
class _Problem:
    f: Callable
    df: Callable
    logf: Callable
    scale: Callable


def _newton(p: _Problem, z0, iters: int = 80, deflate=None):
    z = np.array(z0, dtype=complex).ravel()
    with np.errstate(all="ignore"):
        for _ in range(iters):
            fz, dfz = p.f(z), p.df(z)
            if deflate is None:
                step = fz / dfz
            else:
                roots, mults = deflate
                corr = np.sum(mults[None, :] / (z[:, None] - roots[None, :]), axis=1)
                step = 1.0 / (dfz / fz - corr)
            step = np.where(np.isfinite(step), step, np.nan)
            z = z - step
            if np.all(~np.isfinite(z) | (np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(z)))):
                break
        ok = np.isfinite(z) & (np.abs(p.f(z)) <= 1e-9 * p.scale(z))
    return z[ok]


def _multiplicity(p: _Problem, z0: complex, others: np.ndarray) -> int:
    rho = 1e-3 * max(1.0, abs(z0))
    if others.size:
        rho = min(rho, 0.3 * float(np.min(np.abs(others - z0))))
    rho = max(rho, 1e-7 * max(1.0, abs(z0)))
    return winding_number(p.logf, circle(z0, rho), n0=64)


def _polish(p: _Problem, z: complex, m: int, iters: int = 6) -> complex:
    with np.errstate(all="ignore"):
        for _ in range(iters):
            dfz = p.df(np.array([z]))[0]
            if dfz == 0 or not np.isfinite(dfz):
                break
            step = m * p.f(np.array([z]))[0] / dfz
            if not np.isfinite(step) or abs(step) > 1e-6 * max(1.0, abs(z)):
                break
            z = z - step
    return z


def _merge(found: list, new: np.ndarray, tol: float = 1e-6) -> list:
    for z in new:
        if all(abs(z - r) > tol * max(1.0, abs(r)) for r in found):
            found.append(complex(z))
    return found


def _locate(p: _Problem, expected: int, inside: Callable, seed_rounds, deflation_seeds) -> tuple:
    """Find all roots inside a region whose winding count is ``expected``."""
    roots: list = []
    mults = np.zeros(0, dtype=int)

    def settle():
        r = np.array(roots, dtype=complex)
        ms = np.array([_multiplicity(p, z, np.delete(r, i)) for i, z in enumerate(r)], dtype=int)
        # an inaccurate copy of a multiple root sits inside its neighbour's circle
        keep = ms > 0
        roots[:] = list(r[keep])
        return r[keep], ms[keep]

    if expected == 0:
        return np.zeros(0, dtype=complex), mults
    for seeds in seed_rounds:
        z = _newton(p, seeds)
        _merge(roots, z[inside(z)])
        r, mults = settle()
        if mults.sum() >= expected:
            break
    if mults.sum() < expected:
        for _ in range(3):
            r, mults = settle()
            z = _newton(p, deflation_seeds, deflate=(r, mults.astype(float)))
            _merge(roots, z[inside(z)])
            r, mults = settle()
            if mults.sum() >= expected:
                break
    r, mults = settle()
    if mults.sum() != expected:
        raise RootCountMismatch(
            f"winding number {expected} but found {mults.sum()} roots (with multiplicity)")
    r = np.array([_polish(p, z, int(m)) for z, m in zip(r, mults)], dtype=complex)
    order = np.lexsort((np.angle(r), np.abs(r)))
    return r[order], mults[order]


# ----------------------------------------------------------------------------
# roots of d in a disk


def _factor_problem(mu: complex, bs: float) -> _Problem:
    def f(z):
        return 1.0 - mu * z * np.exp(bs * (1 - z))

    def df(z):
        return mu * np.exp(bs * (1 - z)) * (bs * z - 1.0)

    def scale(z):
        return 1.0 + np.abs(mu * z * np.exp(bs * (1 - z)))

    return _Problem(f, df, lambda z: _log_factor(mu, bs, z), scale)


def _homotopy_seed(mu: complex, bs: float) -> complex:
    """Continue the root ``1/mu`` of the ``b = 0`` factor to gain ``bs``."""
    z = 1.0 / mu
    with np.errstate(all="ignore"):
        for k in range(1, HOMOTOPY_STEPS + 1):
            p = _factor_problem(mu, bs * k / HOMOTOPY_STEPS)
            for _ in range(30):
                step = p.f(z) / p.df(z)
                if not np.isfinite(step):
                    return complex(np.nan)
                z = z - step
                if abs(step) <= 1e-15 * max(1.0, abs(z)):
                    break
    return complex(z)


def _polar_seeds(R: float, nr: int, nt: int) -> np.ndarray:
    r = R * np.linspace(1.0 / nr, 1.05, nr)
    t = np.linspace(0, 2 * np.pi, nt, endpoint=False)
    return (r[:, None] * np.exp(1j * (t[None, :] + 0.5 * np.pi / nt))).ravel()


def _circle_n0(bs: float, R: float, nfac: int = 1) -> int:
    return int(128 + 32 * (abs(bs) * R + nfac))


def _factor_roots(mu: complex, bs: float, R: float) -> tuple:
    p = _factor_problem(mu, bs)
    W = winding_number(p.logf, circle(0.0, R), n0=_circle_n0(bs, R))
    if W == 0:
        return np.zeros(0, dtype=complex), np.zeros(0, dtype=int), 0
    nt0 = max(32, 8 * W)
    rounds = [np.array([_homotopy_seed(mu, bs)]),
              _polar_seeds(R, 12, nt0), _polar_seeds(R, 24, 2 * nt0), _polar_seeds(R, 48, 4 * nt0)]
    inside = lambda z: np.abs(z) <= R
    r, m = _locate(p, W, inside, rounds, _polar_seeds(R, 16, nt0))
    return r, m, W


@dataclass
class RootSet:
    """Roots of ``d`` in the disk ``|z| <= radius`` with multiplicities.

    ``winding`` is the argument-principle count of ``d`` on the circle and
    equals ``multiplicities.sum()``. ``factors[i]`` lists the factor
    indices contributing to root ``i``.
    """

    roots: np.ndarray
    multiplicities: np.ndarray
    radius: float
    winding: int
    residuals: np.ndarray
    factors: list = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.multiplicities.sum())

    def expanded(self) -> np.ndarray:
        """Roots repeated according to multiplicity, by increasing modulus."""
        return np.repeat(self.roots, self.multiplicities)

    def rows(self) -> list:
        """CSV rows ``(Re z, Im z, multiplicity, |d(z)| residual)``."""
        return [(float(z.real), float(z.imag), int(m), float(r))
                for z, m, r in zip(self.roots, self.multiplicities, self.residuals)]


def _radius_candidates(R: float):
    yield R
    for k in range(1, 4):
        yield R * (1 + 0.01 * k)
        yield R * (1 - 0.01 * k)


def roots_in_disk(cf: CharFunction, R: float, band: float = 1e-7) -> RootSet:
    """All roots of ``d`` with ``|z| <= R``, audited by winding number.

    The radius is nudged by 1% steps when a root lies within ``band * R``
    of the circle or the phase along it cannot be resolved; the radius used
    is stored in the result.

    Raises
    ------
    RootCountMismatch
        When the roots found disagree with the winding count.
    """
    if R <= 0:
        raise ValueError("radius must be positive")
    bs = cf.b_star
    last_err: Exception = ContourError("no admissible radius")
    for Rt in _radius_candidates(R):
        try:
            per = {}
            allr, allm, allf = [], [], []
            total = 0
            for j, mu in enumerate(cf.eigs):
                key = complex(mu)
                if key not in per:
                    per[key] = _factor_roots(key, bs, Rt)
                r, m, W = per[key]
                total += W
                if np.any(np.abs(np.abs(r) - Rt) <= band * Rt):
                    raise ContourError("root on the search circle")
                for z, k in zip(r, m):
                    for i, z0 in enumerate(allr):
                        if abs(z - z0) <= 1e-7 * max(1.0, abs(z0)):
                            allm[i] += int(k)
                            allf[i].append(j)
                            break
                    else:
                        allr.append(complex(z))
                        allm.append(int(k))
                        allf.append([j])
            Wd = winding_number(cf.log_d, circle(0.0, Rt), n0=_circle_n0(bs, Rt, cf.eigs.size))
        except ContourError as exc:
            last_err = exc
            continue
        if Wd != total or sum(allm) != Wd:
            raise RootCountMismatch(
                f"winding of d is {Wd}, factor windings sum to {total}, found {sum(allm)} roots")
        roots = np.array(allr, dtype=complex)
        mults = np.array(allm, dtype=int)
        order = np.lexsort((np.angle(roots), np.abs(roots))) if roots.size else np.zeros(0, int)
        roots, mults = roots[order], mults[order]
        facs = [allf[i] for i in order]
        res = np.array([abs(eval_d(cf, z)) for z in roots])
        return RootSet(roots, mults, Rt, Wd, res, facs)
    raise last_err


def smallest_roots(cf: CharFunction, K: int, R0: Optional[float] = None, max_doublings: int = 16) -> np.ndarray:
    """The ``K`` roots of ``d`` closest to the origin (with multiplicity)."""
    nz = np.abs(cf.eigs[cf.eigs != 0])
    if nz.size == 0:
        return np.zeros(0, dtype=complex)
    R = R0 if R0 is not None else 1.5 / nz.max()
    for _ in range(max_doublings):
        rs = roots_in_disk(cf, R)
        z = rs.expanded()
        if z.size > K:
            return z[:K]
        R *= 2.0
    return z[:K]


@dataclass
class StabilityVerdict:
    stable: bool
    trivial_simple: bool
    inner_roots: np.ndarray
    nearest_nontrivial: complex
    dominant_modulus: float

    def to_dict(self) -> dict:
        z = self.nearest_nontrivial
        return {
            "stable": self.stable,
            "trivial_simple": self.trivial_simple,
            "inner_roots": [[float(r.real), float(r.imag)] for r in self.inner_roots],
            "nearest_nontrivial_root": [float(z.real), float(z.imag)],
            "dominant_nontrivial_eigenvalue_modulus": self.dominant_modulus,
        }


def stability_verdict(cf: CharFunction, margin: float = 1e-6, trivial_tol: float = 1e-6) -> StabilityVerdict:
    """Stable iff the only root with ``|z| <= 1 + margin`` is a simple ``z = 1``.

    Roots outside the unit circle correspond to operator eigenvalues inside
    it, so the verdict reads the smallest roots of ``d``.
    """
    z = smallest_roots(cf, cf.eigs.size + 2)
    is_one = np.abs(z - 1.0) <= trivial_tol
    n_one = int(is_one.sum())
    rest = z[~is_one] if n_one == 1 else z
    nearest = complex(rest[np.argmin(np.abs(rest))]) if rest.size else complex(np.inf)
    inner = z[np.abs(z) <= 1 + margin]
    stable = n_one == 1 and abs(nearest) > 1 + margin
    return StabilityVerdict(stable, n_one == 1, inner, nearest, 1.0 / abs(nearest))


# ----------------------------------------------------------------------------
# exponential correspondence


def _g_problem(alpha: complex, beta: complex) -> _Problem:
    def f(z):
        return -z + alpha + beta * np.exp(-z)

    def df(z):
        return -1.0 - beta * np.exp(-z)

    def scale(z):
        return 1.0 + np.abs(z) + abs(alpha) + np.abs(beta * np.exp(-z))

    return _Problem(f, df, lambda z: np.log(f(z)), scale)


def _strip_box(alpha: complex, beta: complex, window: float) -> tuple:
    x1 = max(0.0, alpha.real + abs(beta)) + 1.0
    if beta == 0:
        return min(alpha.real, 0.0) - 1.0, x1
    x0 = -1.0
    # roots in the strip obey |beta| e^{-Re z} <= |Re z| + |alpha| + window
    while abs(beta) * np.exp(-x0) <= abs(x0) + abs(alpha) + window + 1.0:
        x0 -= 0.5
    return x0 - 0.5, x1


def g_roots_in_strip(alpha, beta, window: float) -> tuple:
    """Roots of ``G(z) = -z + alpha + beta exp(-z)`` with ``|Im z| <= window``.

    Returns ``(roots, multiplicities, window_used)``; the window is widened
    by 1% steps if a root sits on its edge.
    """
    alpha = complex(alpha)
    beta = complex(beta)
    p = _g_problem(alpha, beta)
    last: Exception = ContourError("no admissible window")
    for k in range(6):
        W = window * (1 + 0.01 * k) if k else window
        x0, x1 = _strip_box(alpha, beta, W)
        try:
            cnt = winding_number(p.logf, rectangle(x0, x1, -W, W), n0=int(512 + 64 * (W + x1 - x0)))
        except ContourError as exc:
            last = exc
            continue
        nx = int(24 + 6 * (x1 - x0))
        ny = int(24 + 6 * W)
        xs = np.linspace(x0, x1, nx)
        seeds = [(xs[:, None] + 1j * np.linspace(-W, W, f * ny)[None, :]).ravel() for f in (1, 2, 4)]
        inside = lambda z: (np.abs(z.imag) <= W) & (z.real >= x0) & (z.real <= x1)
        try:
            r, m = _locate(p, cnt, inside, seeds, seeds[0])
        except ContourError as exc:
            last = exc
            continue
        return r, m, W
    raise last


@dataclass
class Correspondence:
    """Paired roots ``lambda`` of ``G`` and ``mu = exp(-lambda)`` of ``F``."""

    lambdas: np.ndarray
    mus: np.ndarray
    multiplicities: np.ndarray
    window: float
    max_f_residual: float


def f_exp(alpha, beta, z):
    """``F(z) = 1 - z exp(alpha) exp(beta z)``."""
    return 1.0 - z * np.exp(alpha) * np.exp(beta * np.asarray(z))


def exp_correspondence(alpha, beta, window: float, check_tol: float = 1e-10) -> Correspondence:
    """Roots of ``G`` in ``|Im z| <= window`` and their images ``exp(-lambda)``.

    Each image is checked to be a root of ``F`` with relative residual at
    most ``check_tol``.
    """
    lam, m, W = g_roots_in_strip(alpha, beta, window)
    mu = np.exp(-lam)
    with np.errstate(all="ignore"):
        scale = 1.0 + np.abs(mu * np.exp(alpha) * np.exp(beta * mu))
        res = np.abs(f_exp(alpha, beta, mu)) / scale
    worst = float(res.max()) if res.size else 0.0
    simple = m == 1
    if np.any(res[simple] > check_tol):
        raise RootCountMismatch(f"exp(-lambda) fails F(z) = 0: residual {worst:.3e}")
    return Correspondence(lam, mu, m, W, worst)
