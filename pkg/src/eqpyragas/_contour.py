"""Argument-principle helpers shared by the root finders."""
from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


class ContourError(RuntimeError):
    """The phase along a contour could not be resolved (root on or near it)."""


def _wrap(d):
    return (d + np.pi) % TWO_PI - np.pi


def winding_number(log_fn, path, n0: int = 256, max_jump: float = np.pi / 4,
                   max_points: int = 1 << 21) -> int:
    """Winding number of ``f`` along a closed path.

    ``log_fn(z)`` returns ``log f(z)`` (any branch); only its imaginary part
    is used. ``path(s)`` maps ``s`` in ``[0, 1]`` onto the contour with
    ``path(0) == path(1)``. Segments whose phase increment exceeds
    ``max_jump`` are bisected until none remain.
    """
    s = np.linspace(0.0, 1.0, max(int(n0), 16) + 1)
    with np.errstate(all="ignore"):
        ph = np.imag(log_fn(path(s)))
    while True:
        if not np.all(np.isfinite(ph)):
            raise ContourError("function vanishes or overflows on the contour")
        d = _wrap(np.diff(ph))
        bad = np.abs(d) > max_jump
        if not bad.any():
            break
        mids = 0.5 * (s[:-1][bad] + s[1:][bad])
        if s.size + mids.size > max_points or np.min(np.diff(s)[bad]) < 1e-15:
            raise ContourError("phase unresolved; a root lies on or very near the contour")
        with np.errstate(all="ignore"):
            ph_mid = np.imag(log_fn(path(mids)))
        s = np.concatenate([s, mids])
        ph = np.concatenate([ph, ph_mid])
        order = np.argsort(s, kind="stable")
        s, ph = s[order], ph[order]
    total = d.sum() / TWO_PI
    w = int(np.rint(total))
    if abs(total - w) > 1e-6:
        raise ContourError(f"non-integer winding {total}")
    return w


def circle(center: complex, radius: float):
    return lambda s: center + radius * np.exp(1j * TWO_PI * np.asarray(s))


def rectangle(x0: float, x1: float, y0: float, y1: float):
    """Counter-clockwise boundary of ``[x0, x1] x [y0, y1]``, parametrized by arclength."""
    w, h = x1 - x0, y1 - y0
    L = 2 * (w + h)
    corners = np.array([0.0, w, w + h, 2 * w + h, L]) / L

    def path(s):
        s = np.asarray(s, dtype=float)
        z = np.empty(s.shape, dtype=complex)
        u = s * L
        a = s <= corners[1]
        z[a] = x0 + u[a] + 1j * y0
        b = (s > corners[1]) & (s <= corners[2])
        z[b] = x1 + 1j * (y0 + u[b] - w)
        c = (s > corners[2]) & (s <= corners[3])
        z[c] = x1 - (u[c] - w - h) + 1j * y1
        d = s > corners[3]
        z[d] = x0 + 1j * (y1 - (u[d] - 2 * w - h))
        return z

    return path
