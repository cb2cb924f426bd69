"""Walkthrough on the builtin twisted oscillator.

The orbit is the unit circle in (x, y) with w = 0, period 2 pi, and h = -I
shifts it by half a period. Its twisted multipliers are known in closed
form, so every number printed here can be checked by hand.
"""
import math

import numpy as np

from eqpyragas import (CharFunction, find_discrete_wave, gain_interval_combined, get_system,
                       stability_verdict, twisted_monodromy)
from eqpyragas.dde import eigen_perturbation
from eqpyragas.pipeline import perturbation_run

spec = get_system("twisted_oscillator")
wave = find_discrete_wave(spec.field, spec.h, spec.theta_guess, spec.x_guess, n=spec.n, m=spec.m)
print(f"period {wave.period:.12f} (2 pi = {2 * math.pi:.12f}), theta_h {wave.theta_h:.12f}")

# Y_h = h^-1 Y(theta_h); expected {1, exp(-2 pi), -exp(pi / 2)}
tm = twisted_monodromy(wave)
print("twisted multipliers:", np.round(tm.spectrum.real, 8))
print("closed form:        ", np.round([-math.exp(math.pi / 2), 1.0, math.exp(-2 * math.pi)], 8))

# The unstable multiplier -4.81 lies in (-e^2, -1), so a scalar gain exists.
gi = gain_interval_combined(tm.spectrum, wave.theta_h)
print(f"stabilizing gains: ({gi.lo:.10f}, {gi.hi:.10f})")

for b in (-0.1, -0.35, -0.6):
    v = stability_verdict(CharFunction(tm.spectrum, b, wave.theta_h))
    print(f"b = {b:+.2f}: stable {v.stable}, dominant nontrivial |eigenvalue| {v.dominant_modulus:.4f}")

# Nonlinear check: kick the wave along the unstable eigenvector and watch 20 periods.
kick = eigen_perturbation(tm, int(np.argmax(np.abs(tm.spectrum))), 1e-3)
for b in (-0.35, -0.1):
    run = perturbation_run(wave, b, kick, periods=20)
    d = run["distances"]
    print(f"b = {b:+.2f}: distance {d[0]:.2e} -> {d[-1]:.2e} after 20 periods")
