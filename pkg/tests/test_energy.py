import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zygwave.coefficients import constant_field, field_from_function, weierstrass_zygmund
from zygwave.energy import (
    EnergyOperators,
    EnergyTrace,
    energy_equivalence,
    energy_rate,
    fix_gamma,
    gronwall_fit,
    norm_pair,
    q_operator,
    single_factor_q,
    tarama_state,
    weighted_q_operator,
)
from zygwave.function_spaces import sobolev_norm
from zygwave.paraops import operator_order_fit
from zygwave.parasymbols import build_alpha
from zygwave.spectral_core import PeriodicGrid, ScalarField, random_field

G64 = PeriodicGrid(64)
G256 = PeriodicGrid(256)


def _flat_alpha(grid, gamma=1.0):
    return build_alpha(constant_field(1.0, grid, dt=2.0**-12), gamma)


@pytest.fixture(scope="module")
def rough_alpha():
    a = weierstrass_zygmund(6, 0, "tx", grid=G256, dt=2.0**-10)
    return build_alpha(a, 1.0, rows=[300])


def test_zero_field_has_zero_energy():
    z = ScalarField.zeros(G64)
    st_ = tarama_state(z, z, _flat_alpha(G64))
    assert st_.E == 0


def test_plane_wave_closed_form():
    al = _flat_alpha(G64)
    for k in (1, 5, 20):
        lam = math.sqrt(k * k + 1.0)
        for t in (0.0, 0.3, 1.1):
            u = ScalarField(G64, np.exp(1j * k * G64.x) * math.cos(k * t))
            d = ScalarField(G64, -k * np.exp(1j * k * G64.x) * math.sin(k * t))
            E = tarama_state(u, d, al).E
            closed = (k * k / lam * math.sin(k * t) ** 2 + lam * math.cos(k * t) ** 2)
            assert math.isclose(E, closed, rel_tol=1e-10)


@given(seed=st.integers(0, 2**32 - 1))
def test_flat_energy_is_weighted_norm_pair(seed):
    rng = np.random.default_rng(seed)
    u, d = random_field(G64, rng), random_field(G64, rng)
    E = tarama_state(u, d, _flat_alpha(G64)).E
    assert math.isclose(E, sobolev_norm(u, 0.5) ** 2 + sobolev_norm(d, -0.5) ** 2, rel_tol=1e-10)


def test_static_alpha_drops_time_term(rng):
    al = _flat_alpha(G64)
    ops = EnergyOperators(al)
    u, d = random_field(G64, rng), random_field(G64, rng)
    assert np.allclose(tarama_state(u, d, al, ops=ops).v.spectrum, ops.A.apply(d).spectrum, atol=1e-14)


def test_energy_rate_identity():
    dt = 2.0**-10
    a = field_from_function(lambda t, x: 1.5 + 0.3 * np.sin(3 * t) + 0 * x, G64, T=1.0, dt=dt)
    rng = np.random.default_rng(3)
    u0, u1 = random_field(G64, rng), random_field(G64, rng)

    def u_at(t):
        return u0 * math.cos(2 * t) + u1 * math.sin(t)

    def du_at(t):
        return u0 * (-2 * math.sin(2 * t)) + u1 * math.cos(t)

    def ddu_at(t):
        return u0 * (-4 * math.cos(2 * t)) + u1 * (-math.sin(t))

    r = 500
    al = build_alpha(a, 1.0, rows=[r - 1, r, r + 1])
    E = [tarama_state(u_at(al.times[i]), du_at(al.times[i]), al, t=i).E for i in range(3)]
    fd = (E[2] - E[0]) / (2 * dt)
    t = al.times[1]
    analytic = energy_rate(EnergyOperators(al, 1), u_at(t), du_at(t), ddu_at(t))
    assert abs(fd - analytic) <= 1e-4 * abs(analytic)


def test_translation_invariance(rough_alpha, rng):
    u, d = random_field(G256, rng), random_field(G256, rng)
    shift = 17
    rolled = replace(
        rough_alpha,
        values=np.roll(rough_alpha.values, shift, axis=1),
        dt1=np.roll(rough_alpha.dt1, shift, axis=1),
        dt2=np.roll(rough_alpha.dt2, shift, axis=1),
    )
    su = ScalarField(G256, np.roll(u.samples, shift))
    sd = ScalarField(G256, np.roll(d.samples, shift))
    assert math.isclose(tarama_state(u, d, rough_alpha).E, tarama_state(su, sd, rolled).E, rel_tol=1e-10)


def test_sigma_must_exceed_minus_half():
    with pytest.raises(ValueError):
        EnergyOperators(_flat_alpha(G64), sigma=-0.5)


def test_equivalence_examples():
    flat = energy_equivalence(_flat_alpha(G64), samples=32)
    assert flat.ok(20) and flat.C <= math.sqrt(2) + 1e-9
    cs = []
    for n in (64, 128):
        g = PeriodicGrid(n)
        a = weierstrass_zygmund(5, 0, "tx", grid=g, dt=2.0**-10)
        rep = energy_equivalence(build_alpha(a, 1.0, rows=[400]), samples=48)
        assert rep.ok(20)
        cs.append(rep.C)
    assert 0.5 <= cs[1] / cs[0] <= 2


def test_norm_pair_zero():
    z = ScalarField.zeros(G64)
    assert norm_pair(z, z) == 0


def test_q_vanishes_for_x_independent_alpha():
    assert np.max(np.abs(q_operator(_flat_alpha(G64)).matrix)) <= 1e-12


def test_q_cancellation(rough_alpha):
    q = operator_order_fit(q_operator(rough_alpha), G256).m
    weighted = operator_order_fit(weighted_q_operator(rough_alpha, 0.5), G256).m
    single = operator_order_fit(single_factor_q(rough_alpha), G256).m
    assert q <= 0.25
    assert weighted >= 0.75
    assert q < weighted and single < weighted


def test_q_homogeneity(rough_alpha, rng):
    u = rng.standard_normal(256)
    c = 3.0
    lhs = q_operator(rough_alpha * c).matrix @ u
    rhs = math.sqrt(c) * (q_operator(rough_alpha).matrix @ u)
    assert np.allclose(lhs, rhs, atol=1e-10 * np.abs(rhs).max())


def test_fix_gamma():
    a = weierstrass_zygmund(5, 0, "tx", grid=G64, dt=2.0**-14)
    gamma, (plus, minus) = fix_gamma(lambda g: build_alpha(a, g, rows=[8000]), 0.5, 2.0)
    assert gamma is not None and gamma >= max(plus.gamma_star, minus.gamma_star)


def _trace(t, E, Lu=None):
    z = np.zeros_like(t)
    return EnergyTrace(t, E, z, z, z if Lu is None else Lu)


def test_gronwall_examples():
    t = np.linspace(0, 1, 65)
    fit = gronwall_fit(_trace(t, np.full_like(t, 4.0)))
    assert fit.lam == 0 and math.isclose(fit.C, 1.0)
    fit = gronwall_fit(_trace(t, 4.0 * np.exp(4 * t)))
    assert fit.lam == 2 and math.isclose(fit.C, 1.0)
    with pytest.raises(ValueError):
        gronwall_fit(_trace(np.zeros(0), np.zeros(0)))


def test_trace_timestamps_must_increase():
    with pytest.raises(ValueError):
        _trace(np.array([0.0, 0.0]), np.ones(2))


def test_trace_csv_round_trip(tmp_path, rng):
    t = np.linspace(0, 1, 9)
    tr = EnergyTrace(t, rng.random(9), rng.random(9), rng.random(9), rng.random(9))
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    back = EnergyTrace.from_csv(path)
    for name in ("t", "E", "Hhalf_u", "Hneghalf_dtu", "Hneghalf_Lu"):
        assert np.array_equal(getattr(back, name), getattr(tr, name))
    assert path.read_text().splitlines()[0] == "t,E,Hhalf_u,Hneghalf_dtu,Hneghalf_Lu"
