import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zygwave.function_spaces import (
    NormSpec,
    dyadic_zygmund_seminorm,
    holder_seminorm,
    log_sobolev_norm,
    loglip_check,
    sobolev_norm,
    zygmund_seminorm,
)
from zygwave.spectral_core import PeriodicGrid, ScalarField, band_field, random_field


def weierstrass(g, depth=9):
    return ScalarField(g, sum(2.0**-j * np.cos(2.0**j * g.x) for j in range(depth)))


def test_single_mode_norms():
    g = PeriodicGrid(64)
    u = ScalarField(g, np.exp(3j * g.x))
    assert math.isclose(sobolev_norm(u, 0.5), 10**0.25)
    assert math.isclose(log_sobolev_norm(u, NormSpec(0.5, 0.0, 1.0)), 10**0.25)
    assert math.isclose(log_sobolev_norm(u, NormSpec(0.0, 1.0, 1.0)), math.log(5))
    one = ScalarField(g, np.ones(64))
    assert all(math.isclose(sobolev_norm(one, s), 1.0) for s in (-1, 0, 2))


def test_normspec_validation():
    with pytest.raises(ValueError):
        NormSpec(gamma=0.5)
    with pytest.raises(ValueError):
        NormSpec(mode="other")


@pytest.mark.parametrize("s", [-1.0, -0.5, 0.0, 0.5, 1.0])
def test_dyadic_sobolev_within_three(s, rng):
    g = PeriodicGrid(256)
    for _ in range(100):
        u = random_field(g, rng, g.lam(1.0) ** -0.5)
        r = sobolev_norm(u, s) / sobolev_norm(u, s, "dyadic")
        assert 1 / 3 <= r <= 3


@given(s=st.sampled_from([-0.5, 0.0, 0.5]), alpha=st.sampled_from([-1.0, 0.0, 1.0]),
       gamma=st.sampled_from([1.0, 8.0, 64.0]), seed=st.integers(0, 10_000))
def test_log_sobolev_direct_vs_dyadic(s, alpha, gamma, seed):
    g = PeriodicGrid(256)
    rng = np.random.default_rng(seed)
    for u in (random_field(g, rng), band_field(g, seed % 7, rng)):
        r = log_sobolev_norm(u, NormSpec(s, alpha, gamma)) / log_sobolev_norm(u, NormSpec(s, alpha, gamma, "dyadic"))
        assert 1 / 4 <= r <= 4


@given(s1=st.floats(-2, 2), ds=st.floats(0, 2), seed=st.integers(0, 1000))
def test_sobolev_monotone_in_s(s1, ds, seed):
    u = random_field(PeriodicGrid(64), np.random.default_rng(seed))
    assert sobolev_norm(u, s1) <= sobolev_norm(u, s1 + ds) * (1 + 1e-12)


@given(a1=st.floats(-2, 2), da=st.floats(0, 2), seed=st.integers(0, 1000))
def test_log_sobolev_monotone_in_alpha(a1, da, seed):
    u = random_field(PeriodicGrid(64), np.random.default_rng(seed))
    lo = log_sobolev_norm(u, NormSpec(0.0, a1, 2.0))
    hi = log_sobolev_norm(u, NormSpec(0.0, a1 + da, 2.0))
    assert lo <= hi * (1 + 1e-12)


@given(c=st.floats(-5, 5), seed=st.integers(0, 1000))
def test_seminorms_are_homogeneous(c, seed):
    g = PeriodicGrid(64)
    f = ScalarField(g, random_field(g, np.random.default_rng(seed)).samples.real)
    cf = f * c
    assert math.isclose(zygmund_seminorm(cf), abs(c) * zygmund_seminorm(f), rel_tol=1e-12, abs_tol=1e-300)
    assert math.isclose(holder_seminorm(cf, 0.5), abs(c) * holder_seminorm(f, 0.5), rel_tol=1e-12, abs_tol=1e-300)
    assert math.isclose(loglip_check(cf).constant, abs(c) * loglip_check(f).constant, rel_tol=1e-12, abs_tol=1e-300)


def test_zygmund_examples():
    g = PeriodicGrid(128)
    assert zygmund_seminorm(ScalarField(g, np.full(128, 2.0))) == 0
    line = np.linspace(0, 1, 200)
    assert zygmund_seminorm(line, spacing=line[1], periodic=False) < 1e-12
    assert zygmund_seminorm(ScalarField(g, np.sin(g.x))) <= 1.0 + 1e-12
    with pytest.raises(ValueError):
        zygmund_seminorm(np.ones(3), spacing=0.1)


def test_zygmund_refinement_stability_and_dyadic_equivalence():
    coarse = zygmund_seminorm(weierstrass(PeriodicGrid(256)))
    fine = zygmund_seminorm(weierstrass(PeriodicGrid(1024)))
    assert abs(fine / coarse - 1) <= 0.2
    w = weierstrass(PeriodicGrid(1024))
    r = dyadic_zygmund_seminorm(w) / fine
    assert 0.1 <= r <= 10


def test_dyadic_zygmund_examples():
    g = PeriodicGrid(64)
    assert math.isclose(dyadic_zygmund_seminorm(ScalarField(g, np.exp(4j * g.x))), 4.0)
    assert math.isclose(dyadic_zygmund_seminorm(ScalarField(g, np.full(64, -3.0))), 3.0)


def test_loglip_examples():
    g = PeriodicGrid(256)
    assert loglip_check(ScalarField(g, np.ones(256))).constant == 0
    rep = loglip_check(ScalarField(g, np.sin(g.x)))
    assert rep.constant <= 1.0 / np.log1p(1.0 + 1.0) + 1e-12
    w = weierstrass(g)
    assert loglip_check(w).constant <= 5 * zygmund_seminorm(w) + np.abs(w.samples).max()


def test_holder_examples():
    g = PeriodicGrid(256)
    assert holder_seminorm(ScalarField(g, np.ones(256)), 0.6) == 0
    val = holder_seminorm(ScalarField(g, np.sin(g.x)), 0.6)
    y = g.spacing * np.arange(1, 129)
    assert val <= np.max(np.abs(2 * np.sin(y / 2)) / y**0.6) + 1e-12
    with pytest.raises(ValueError):
        holder_seminorm(ScalarField(g, np.sin(g.x)), 1.5)
