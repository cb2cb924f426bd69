"""Two routes to the controlled spectrum.

Route 1 evaluates the characteristic function d(z), built from the
multipliers of Y_h alone, and inverts its smallest roots. Route 2
discretizes the step operator of the linearized delay equation on a
spline grid and takes its eigenvalues directly. They should agree up to
the grid error, which shrinks about 16x per grid doubling.
"""
import numpy as np

from eqpyragas import find_discrete_wave, get_system, twisted_monodromy
from eqpyragas.dde import cross_check, linearized_step_operator, oracle_spectrum

spec = get_system("twisted_oscillator")
wave = find_discrete_wave(spec.field, spec.h, spec.theta_guess, spec.x_guess, n=spec.n, m=spec.m)
tm = twisted_monodromy(wave)

for b in (0.0, -0.1, -0.35, -0.6):
    print(f"b = {b:+.2f}")
    for M in (50, 100, 200):
        spec_M = oracle_spectrum(linearized_step_operator(wave, b, M), K=5)
        cc = cross_check(tm.spectrum, wave.theta_h, b, spec_M.eigenvalues)
        print(f"  M = {M:3d}: max relative error {cc.max_rel_error:.2e}")
    print("  leading eigenvalues:", np.round(cc.oracle, 6))
