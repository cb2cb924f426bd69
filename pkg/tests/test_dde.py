import numpy as np
import pytest

from conftest import OSC_MULTIPLIERS
from eqpyragas.charfn import CharFunction, stability_verdict
from eqpyragas.dde import (HistoryRangeError, HistorySegment, cross_check, distance_series,
                           distance_to_orbit, eigen_perturbation, linearized_step_operator,
                           oracle_spectrum, simulate_controlled)
from eqpyragas.flow import integrate
from eqpyragas.pipeline import perturbation_run


def test_history_nodes_and_c1(osc_wave):
    hist = HistorySegment.from_wave(osc_wave, 40)
    np.testing.assert_array_equal(hist(hist.nodes), hist.values)
    d = hist._spline.derivative()
    k = hist.nodes[1:-1]
    eps = 1e-9
    assert np.max(np.abs(d(k - eps) - d(k + eps))) <= 1e-6


def test_history_range_guard(osc_wave):
    hist = HistorySegment.from_wave(osc_wave, 20)
    with pytest.raises(HistoryRangeError):
        hist(0.1)


def test_noninvasive(osc_wave):
    sim = simulate_controlled(osc_wave.field, osc_wave.h, osc_wave.theta_h, -0.35,
                              HistorySegment.from_wave(osc_wave), 2 * osc_wave.period)
    assert sim.control_norm.max() <= 1e-7


def test_noninvasive_lorenz(lorenz_wave):
    sim = simulate_controlled(lorenz_wave.field, lorenz_wave.h, lorenz_wave.theta_h, -0.05,
                              HistorySegment.from_wave(lorenz_wave), lorenz_wave.period)
    assert sim.control_norm.max() <= 1e-7 * np.abs(lorenz_wave.x0).max()


def test_zero_gain_is_plain_flow(osc_wave):
    x0 = np.array([0.7, 0.1, 0.3])
    hist = HistorySegment.from_function(lambda s: x0 + 0.1 * s, osc_wave.theta_h, 30)
    sim = simulate_controlled(osc_wave.field, osc_wave.h, osc_wave.theta_h, 0.0, hist, 5.0)
    ref = integrate(osc_wave.field, x0, (0.0, 5.0))
    assert np.max(np.abs(sim.x - ref(sim.t))) <= 1e-8


def test_simulator_equivariance(osc_wave):
    # f and the control commute with h, so simulating h phi gives h x(t)
    pert = np.array([0.01, -0.02, 0.03])
    th = osc_wave.theta_h
    a = HistorySegment.from_wave(osc_wave, 60, perturbation=pert)
    b = HistorySegment(th, a.values @ osc_wave.h.T)
    sa = simulate_controlled(osc_wave.field, osc_wave.h, th, -0.35, a, 3 * th)
    sb = simulate_controlled(osc_wave.field, osc_wave.h, th, -0.35, b, 3 * th)
    assert np.max(np.abs(sa.x @ osc_wave.h.T - sb.x)) <= 1e-8


def test_simulator_shift_equivariance(osc_wave):
    # starting from the wave history shifted by theta is the same as applying h
    th = osc_wave.theta_h
    a = HistorySegment.from_wave(osc_wave, 200)
    shifted = HistorySegment.from_function(lambda s: osc_wave(s + th), th, 200)
    sa = simulate_controlled(osc_wave.field, osc_wave.h, th, -0.35, a, 2 * th)
    sb = simulate_controlled(osc_wave.field, osc_wave.h, th, -0.35, shifted, 2 * th)
    assert np.max(np.abs(sa.x @ osc_wave.h.T - sb.x)) <= 1e-8


def test_stabilizing_gain_decays(osc_wave):
    run = perturbation_run(osc_wave, -0.35, [0, 0, 1e-3], periods=20)
    assert run["decay_factor"] >= 10


def test_distance_examples(osc_wave):
    assert distance_to_orbit([1.5, 0, 0], osc_wave) == pytest.approx(0.5, abs=1e-6)
    assert distance_to_orbit([0, 0, 1.0], osc_wave) == pytest.approx(np.sqrt(2), abs=1e-6)
    assert distance_to_orbit(osc_wave(1.234), osc_wave) <= 1e-9


def test_distance_series_matches_scalar(osc_wave, rng):
    pts = osc_wave(rng.uniform(0, 6, 10)) + 1e-4 * rng.normal(size=(10, 3))
    ser = distance_series(pts, osc_wave)
    ref = [distance_to_orbit(p, osc_wave) for p in pts]
    np.testing.assert_allclose(ser, ref, rtol=1e-6, atol=1e-12)


def test_operator_requires_grid(osc_wave):
    with pytest.raises(ValueError):
        linearized_step_operator(osc_wave, -0.35, 4)


def test_operator_b_zero_reduces_to_Yh(osc_wave, osc_tm):
    op = linearized_step_operator(osc_wave, 0.0, 50)
    top = oracle_spectrum(op, 3).eigenvalues
    ref = np.sort_complex(osc_tm.spectrum)
    assert np.max(np.abs(np.sort_complex(top) - ref)) <= 1e-6


def test_operator_tangent_eigenvalue(osc_wave):
    op = linearized_step_operator(osc_wave, -0.35, 200)
    assert op.tangent_residual(osc_wave) <= 1e-5


def test_operator_stable_at_inner_gain(osc_wave):
    op = linearized_step_operator(osc_wave, -0.35, 200)
    w = np.linalg.eigvals(op.matrix)
    i = np.argmin(np.abs(w - 1))
    assert abs(w[i] - 1) <= 1e-6
    assert np.max(np.abs(np.delete(w, i))) < 1 - 1e-3


@pytest.mark.parametrize("b", [-0.35, -0.1])
def test_oracle_matches_charfn(osc_wave, osc_tm, b):
    op = linearized_step_operator(osc_wave, b, 200)
    cc = cross_check(osc_tm.spectrum, osc_wave.theta_h, b, oracle_spectrum(op, 5).eigenvalues)
    assert cc.oracle.size == 5
    assert cc.max_rel_error <= 1e-3


def test_cross_check_detects_corruption(osc_wave):
    op = linearized_step_operator(osc_wave, -0.35, 100)
    cc = cross_check([-3.0, 1.0, 0.001], osc_wave.theta_h, -0.35, oracle_spectrum(op, 5).eigenvalues)
    assert cc.max_rel_error > 1e-2


@pytest.mark.parametrize("b", [0.0, -0.1, -0.35, -0.6])
def test_verdict_equivalence(osc_wave, osc_tm, b):
    v = stability_verdict(CharFunction(osc_tm.spectrum, b, osc_wave.theta_h))
    rho = v.dominant_modulus
    direction = eigen_perturbation(osc_tm, 0, 1e-3)  # the -e^{pi/2} direction
    run = perturbation_run(osc_wave, b, direction, periods=20)
    if rho > 1 + 1e-3:
        # complex dominant pairs make the distance oscillate; use the late envelope
        assert run["distances"][-5:].max() > run["distances"][0]
    elif rho < 1 - 1e-3:
        assert run["distances"][-1] < run["distances"][0]
