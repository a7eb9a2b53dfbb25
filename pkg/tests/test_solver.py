import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zygwave.coefficients import (
    LowerOrderCoefficients,
    constant_field,
    field_from_function,
    weierstrass_holder,
    weierstrass_zygmund,
)
from zygwave.energy import EnergyTrace
from zygwave.function_spaces import sobolev_norm
from zygwave.paraops import operator_order_fit, quantized
from zygwave.parasymbols import build_alpha_tilde
from zygwave.solver import (
    CauchyProblem,
    apply_L,
    classical_energy,
    energy_trace,
    remainder_B,
    remainder_B_operator,
    remainder_R,
    remainder_R_operator,
    rk4_convergence,
    sigma_shifted_trace,
    solve,
)
from zygwave.spectral_core import PeriodicGrid, ScalarField, random_field

G32 = PeriodicGrid(32)
G64 = PeriodicGrid(64)
G256 = PeriodicGrid(256)


def _mode(grid, k):
    return ScalarField(grid, np.exp(1j * k * grid.x))


def _smooth_data(grid, rng, kmax=8):
    keep = (np.abs(grid.frequencies) <= kmax).astype(float)
    return random_field(grid, rng, keep, real=True), random_field(grid, rng, keep, real=True)


def test_apply_L_examples():
    p = CauchyProblem(constant_field(1.0, G32), _mode(G32, 3), _mode(G32, 3))
    out = apply_L(p, _mode(G32, 3))
    assert np.allclose(out.samples, 9 * _mode(G32, 3).samples, atol=1e-12)
    times = p.a.times
    lower = LowerOrderCoefficients(
        times, np.zeros((2, times.size, 32)), np.ones((times.size, 32))
    )
    pc = CauchyProblem(constant_field(1.0, G32), _mode(G32, 3), _mode(G32, 3), lower=lower)
    assert np.allclose(apply_L(pc, _mode(G32, 3)).samples, 10 * _mode(G32, 3).samples, atol=1e-12)
    with pytest.raises(ValueError):
        apply_L(p, _mode(G64, 1))


def test_dalembert_mode():
    u0 = _mode(G256, 1)
    p = CauchyProblem(constant_field(1.0, G256), u0, ScalarField.zeros(G256), T=1.0, dt=1e-3)
    traj = solve(p)
    exact = np.exp(1j * G256.x) * math.cos(traj.times[-1])
    assert np.abs(traj.u[-1] - exact).max() <= 1e-6
    assert np.allclose(np.diff(traj.times), traj.times[1] - traj.times[0])


def test_manufactured_fourth_order():
    order, dts, errors = rk4_convergence()
    assert 3.7 <= order <= 4.3
    assert np.all(np.diff(errors) < 0)


def test_reversibility(rng):
    a = field_from_function(lambda t, x: 1.5 + 0.5 * np.cos(x), G64, T=1.0)
    u0, u1 = _smooth_data(G64, rng)
    fwd = solve(CauchyProblem(a, u0, u1, T=1.0, dt=1e-3))
    uT, vT = fwd.state(len(fwd) - 1)
    back = solve(CauchyProblem(a, uT, vT * -1.0, T=1.0, dt=1e-3))
    assert np.abs(back.u[-1] - u0.samples).max() <= 1e-6
    assert np.abs(back.dtu[-1] + u1.samples).max() <= 1e-6


@settings(max_examples=5)
@given(seed=st.integers(0, 2**32 - 1))
def test_linearity_of_solve(seed):
    rng = np.random.default_rng(seed)
    a = weierstrass_zygmund(4, 0, "tx", grid=G32, T=0.5, dt=2.0**-10)
    (u0, u1), (w0, w1) = _smooth_data(G32, rng), _smooth_data(G32, rng)
    f1 = rng.standard_normal(32)
    src = lambda t: f1 * math.cos(t)  # noqa: E731
    one = solve(CauchyProblem(a, u0, u1, T=0.5, source=src))
    two = solve(CauchyProblem(a, w0, w1, T=0.5))
    both = solve(CauchyProblem(a, u0 + w0, u1 + w1, T=0.5, source=src))
    assert np.abs(both.u - one.u - two.u).max() <= 1e-10 * (1 + np.abs(both.u).max())


def test_classical_energy_conserved(rng):
    a = field_from_function(lambda t, x: 1.5 + 0.5 * np.cos(x), G64, T=1.0)
    u0, u1 = _smooth_data(G64, rng)
    p = CauchyProblem(a, u0, u1, T=1.0)
    traj = solve(p)
    E = [classical_energy(p, *traj.state(i)) for i in range(len(traj))]
    assert (max(E) - min(E)) / E[0] <= 1e-4


def test_cfl_violation():
    with pytest.raises(ValueError):
        CauchyProblem(constant_field(4.0, G64), _mode(G64, 1), _mode(G64, 1), dt=0.1)


def test_zero_trace():
    z = ScalarField.zeros(G32)
    p = CauchyProblem(constant_field(1.0, G32, dt=2.0**-10), z, z, T=0.25)
    tr = energy_trace(p, solve(p), samples=5)
    for name in ("E", "Hhalf_u", "Hneghalf_dtu", "Hneghalf_Lu"):
        assert not np.any(getattr(tr, name))


def test_constant_coefficient_trace_drift(rng):
    p = CauchyProblem(constant_field(1.0, G64, dt=2.0**-10), *_smooth_data(G64, rng), T=1.0)
    traj = solve(p)
    tr = energy_trace(p, traj, samples=9)
    # with gamma = 1 the energy carries gamma^2 ||u||^2_{H^-1/2}, which is not conserved
    idx = [int(np.argmin(np.abs(traj.times - t))) for t in tr.t]
    drift = np.array([sobolev_norm(traj.state(i)[0], -0.5) ** 2 for i in idx])
    assert (tr.E.max() - tr.E.min()) / tr.E[0] > 1e-3
    core = tr.E - drift
    assert (core.max() - core.min()) / core[0] <= 1e-4


@pytest.fixture(scope="module")
def smooth_x_run():
    rng = np.random.default_rng(7)
    a = field_from_function(
        lambda t, x: 1.25 + 0.25 * np.cos(x) + 0.25 * math.sin(3 * t), G64, T=0.5, dt=2.0**-12
    )
    p = CauchyProblem(a, *_smooth_data(G64, rng), T=0.5)
    return p, solve(p)


def test_sigma_zero_matches_energy_trace(smooth_x_run):
    p, traj = smooth_x_run
    a = sigma_shifted_trace(p, traj, 0.0, samples=5)
    b = energy_trace(p, traj, samples=5)
    for name in ("t", "E", "Hhalf_u", "Hneghalf_dtu", "Hneghalf_Lu"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert np.array_equal(a.extras["source"] + a.extras["residual"], a.Hneghalf_Lu)


def test_sigma_one_envelope_is_finite(smooth_x_run):
    p, traj = smooth_x_run
    tr = sigma_shifted_trace(p, traj, 1.0, samples=5)
    assert isinstance(tr, EnergyTrace) and tr.fit.found and np.isfinite(tr.fit.C)
    with pytest.raises(ValueError):
        sigma_shifted_trace(p, traj, -0.6)


def test_remainder_R_flat_is_zero(rng):
    a = constant_field(1.0, G64)
    at = build_alpha_tilde(a, 1.0)
    p = CauchyProblem(a, _mode(G64, 1), _mode(G64, 1))
    u = random_field(G64, rng)
    assert np.abs(remainder_R(p, at, u).spectrum).max() <= 1e-12


def test_remainder_R_gains_one_order(rng):
    a = weierstrass_zygmund(6, 0, "x", grid=G256, T=1 / 16, dt=2.0**-10)
    at = build_alpha_tilde(a, 1.0)
    R = remainder_R_operator(a.values[0], at)
    assert operator_order_fit(R, G256).m <= 1.2
    assert operator_order_fit(quantized(at), G256).m >= 1.9
    u, v = random_field(G256, rng), random_field(G256, rng)
    assert np.allclose(R.apply(u + v).spectrum, R.apply(u).spectrum + R.apply(v).spectrum, atol=1e-10)


def test_remainder_B(rng):
    v = random_field(G64, rng)
    assert np.abs(remainder_B(np.full(64, 2.5), v).spectrum).max() <= 1e-12
    theta = 0.6
    b = weierstrass_holder(theta, phase_seed=1, grid=G256)
    B = remainder_B_operator(G256, b.samples.real)
    assert -operator_order_fit(B, G256).m >= theta - 0.2
    w = random_field(G64, rng)
    lhs = remainder_B(np.cos(G64.x), v + w).spectrum
    rhs = remainder_B(np.cos(G64.x), v).spectrum + remainder_B(np.cos(G64.x), w).spectrum
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_lower_order_theta_recorded():
    times = np.zeros(1)
    with pytest.raises(ValueError):
        LowerOrderCoefficients(times, np.zeros((2, 1, 8)), np.zeros((1, 8)), theta=0.5)
