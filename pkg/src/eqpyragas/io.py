"""Wave files, CSV tables and JSON reports."""
from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .flow import DiscreteWave, integrate
from .symmetry import GroupElement, SpatioTemporalSymmetry
from .systems import get_system, load_plugin

WAVE_FORMAT = "eqpyragas-wave"
WAVE_VERSION = 1


class WaveFileError(ValueError):
    pass


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dump_json(obj, path: str) -> None:
    """Write with insertion key order preserved."""
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2)
        fh.write("\n")


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def save_wave(wave: DiscreteWave, path: str, system: str, params: dict, plugin=None,
              n_samples: int = 400) -> dict:
    """Write anchor, period, symmetry and dense samples. Floats keep full precision."""
    ts = np.linspace(0.0, wave.period, n_samples + 1)
    doc = {
        "format": WAVE_FORMAT,
        "version": WAVE_VERSION,
        "system": {"name": system, "plugin": plugin, "params": params},
        "h": wave.h.tolist(),
        "n": wave.sym.n,
        "m": wave.sym.m,
        "x0": [float(v) for v in wave.x0],
        "theta_h": float(wave.theta_h),
        "period": float(wave.period),
        "shooting_residual": float(wave.shooting_residual),
        "samples": {"t": ts.tolist(), "x": wave(ts).tolist()},
    }
    dump_json(doc, path)
    return doc


def read_wave_doc(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise WaveFileError(f"cannot read wave file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise WaveFileError(f"wave file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != WAVE_FORMAT:
        raise WaveFileError(f"{path} is not a wave file")
    if doc.get("version") != WAVE_VERSION:
        raise WaveFileError(f"unsupported wave file version {doc.get('version')}")
    for key in ("system", "h", "n", "m", "x0", "theta_h", "period"):
        if key not in doc:
            raise WaveFileError(f"wave file lacks {key!r}")
    return doc


def load_wave(path: str, integ_tol: float = 1e-12) -> DiscreteWave:
    """Rebuild a wave from its file: the field comes from the registry, the
    trajectory is re-integrated from the stored anchor over the stored period."""
    doc = read_wave_doc(path)
    sysd = doc["system"]
    try:
        if sysd.get("plugin"):
            spec = load_plugin(sysd["plugin"])(**sysd.get("params", {}))
        else:
            spec = get_system(sysd["name"], **sysd.get("params", {}))
    except (KeyError, ImportError, AttributeError, TypeError) as exc:
        raise WaveFileError(f"cannot rebuild system: {exc}") from exc
    h = GroupElement(np.array(doc["h"], dtype=float), spec.h.label)
    theta, p = float(doc["theta_h"]), float(doc["period"])
    sym = SpatioTemporalSymmetry(h, theta, int(doc["n"]), int(doc["m"]), p)
    x0 = np.array(doc["x0"], dtype=float)
    traj = integrate(spec.field, x0, (0.0, p), integ_tol)
    return DiscreteWave(spec.field, x0, sym, traj, float(doc.get("shooting_residual", np.nan)))


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
