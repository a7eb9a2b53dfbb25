import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zygwave.coefficients import constant_field, weierstrass_zygmund
from zygwave.paraops import (
    SpectralOperator,
    adjoint,
    adjoint_remainder,
    apply,
    composition_remainder,
    garding_equivalence_check,
    multiplier_symbol,
    operator_order_fit,
    positivity_gamma_search,
    quantize,
    quantized,
)
from zygwave.parasymbols import Symbol, build_alpha, build_cutoff, smooth_symbol, symbol_power
from zygwave.spectral_core import PeriodicGrid, ScalarField

G64 = PeriodicGrid(64)
G256 = PeriodicGrid(256)


def _random(grid, rng):
    return ScalarField.from_spectrum(grid, grid.fft(rng.standard_normal(grid.n_points)) * grid.nyquist_mask)


def _smoothed(sym, gamma=1.0):
    return smooth_symbol(sym, build_cutoff(gamma, sym.grid))


def _lam_power(grid, s, gamma=1.0):
    return multiplier_symbol(grid, grid.lam(gamma) ** s, s, gamma)


@pytest.fixture(scope="module")
def rough_alpha():
    a = weierstrass_zygmund(6, 0, "tx", grid=G256, dt=2.0**-10)
    return build_alpha(a, 1.0, rows=[300])


def test_quantize_requires_smoothing():
    with pytest.raises(ValueError):
        quantize(_lam_power(G64, 1.0))


def test_constant_symbol_quantizes_to_scalar(rng):
    u = _random(G64, rng)
    for c in (1.0, 2.5):
        T = quantize(_smoothed(multiplier_symbol(G64, np.full(64, c), 0.0)))
        assert np.allclose(apply(T, u).samples, c * u.samples, atol=1e-12)


def test_multiplier_acts_on_modes():
    T = quantize(_smoothed(_lam_power(G64, 0.5)))
    for k in (0, 3, -7, 20):
        e = ScalarField(G64, np.exp(1j * k * G64.x))
        out = apply(T, e).samples
        assert np.allclose(out, (1 + k * k) ** 0.25 * e.samples, atol=1e-12)
    assert not np.any(apply(T, ScalarField(G64, np.zeros(64))).samples)


def test_plateau_gives_pointwise_product(rng):
    gamma = 64.0
    sym = Symbol.from_function(G64, lambda x, k: 2 + np.cos(x) + 0 * k, 0.0, gamma=gamma)
    psi = build_cutoff(gamma, G64)
    assert psi.eps1 * gamma >= 1
    T = quantize(smooth_symbol(sym, psi))
    spec = G64.fft(rng.standard_normal(64))
    spec[np.abs(G64.frequencies) >= 31] = 0  # keep the product on the lattice
    u = ScalarField.from_spectrum(G64, spec)
    assert np.allclose(apply(T, u).samples, (2 + np.cos(G64.x)) * u.samples, atol=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
def test_linearity_and_adjoint(seed):
    rng = np.random.default_rng(seed)
    a = Symbol(G64, rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64)), 0.0)
    T = quantize(_smoothed(a))
    u, v = _random(G64, rng), _random(G64, rng)
    lhs = apply(T, u + v).samples
    assert np.allclose(lhs, apply(T, u).samples + apply(T, v).samples, atol=1e-12)
    Tu, Tsv = apply(T, u).spectrum, apply(adjoint(T), v).spectrum
    assert abs(np.vdot(v.spectrum, Tu) - np.vdot(Tsv, u.spectrum)) <= 1e-10 * (1 + abs(np.vdot(v.spectrum, Tu)))
    assert adjoint(adjoint(T)) is T


def test_time_index_checked():
    T = quantize(_smoothed(_lam_power(G64, 1.0)))
    with pytest.raises(IndexError):
        T.matrix(1)


def test_adjoint_of_real_multiplier_is_itself():
    T = quantize(_smoothed(_lam_power(G64, 1.0)))
    assert np.array_equal(adjoint(T).matrix(0), T.matrix(0))
    one = quantize(_smoothed(multiplier_symbol(G64, np.ones(64), 0.0)))
    assert np.array_equal(adjoint(one).matrix(0), SpectralOperator.identity(G64).matrix)


def test_frequency_locality(rough_alpha):
    T = quantized(rough_alpha)
    lam = G256.lam(1.0)
    band = np.floor(np.log2(lam)).astype(int)
    for k in (5, 17, 40, 90):
        col = np.abs(T.matrix[:, k])
        hit = band[col > 1e-13 * col.max()]
        assert hit.min() >= band[k] - 2 and hit.max() <= band[k] + 2


def test_order_fit_examples():
    ident = operator_order_fit(SpectralOperator.identity(G256), G256)
    assert abs(ident.m) <= 1e-12 and abs(ident.delta) <= 1e-9
    lam = operator_order_fit(quantized(_lam_power(G256, 1.0)), G256)
    assert abs(lam.m - 1) <= 0.05 and abs(lam.delta) <= 0.3
    al = operator_order_fit(quantized(build_alpha(constant_field(1.0, G256, dt=2.0**-10), 1.0)), G256)
    assert abs(al.m - 2) <= 0.05
    with pytest.raises(ValueError):
        operator_order_fit(SpectralOperator.identity(G256), G256, bands=[2, 3, 4])


def test_order_fit_of_alpha_family(rough_alpha):
    for p, sym in ((1.0, rough_alpha), (0.25, symbol_power(rough_alpha, 0.25)),
                   (-0.25, symbol_power(rough_alpha, -0.25)), (0.5, symbol_power(rough_alpha, 0.5))):
        fit = operator_order_fit(quantized(sym), G256)
        assert abs(fit.m - 2 * p) <= 0.1


def test_composition_remainder_vanishes_for_multipliers():
    a, b = _lam_power(G64, 0.5), _lam_power(G64, 1.5)
    assert np.max(np.abs(composition_remainder(a, b).matrix)) <= 1e-12


def test_composition_remainder_orders(rough_alpha):
    a = _lam_power(G256, 0.5)
    b = Symbol.from_function(G256, lambda x, k: 2 + np.cos(x) + 0 * k, 0.0)
    assert operator_order_fit(composition_remainder(a, b), G256).m <= 0.5 - 1 + 0.2
    q = symbol_power(rough_alpha, 0.25)
    assert operator_order_fit(composition_remainder(q, q), G256).m <= 0.2
    naive = quantized(q) @ quantized(q) - quantized(symbol_power(rough_alpha, 0.5))
    assert operator_order_fit(naive, G256).m < 0.5


def test_adjoint_remainder(rough_alpha, rng):
    assert np.max(np.abs(adjoint_remainder(_lam_power(G64, 1.0)).matrix)) <= 1e-12
    h = symbol_power(rough_alpha, 0.5)
    assert operator_order_fit(adjoint_remainder(h), G256).m <= 0.2
    u = rng.standard_normal(256)
    one, two = adjoint_remainder(h).matrix, adjoint_remainder(h * 2.0).matrix
    assert np.allclose(two @ u, 2 * (one @ u), atol=1e-10)


def test_positivity_multiplier_is_exact():
    rep = positivity_gamma_search(lambda g: _lam_power(G64, 2.0, g), 2.0, 1.0, samples=100)
    assert rep.gamma_star == 1 and abs(rep.lam1 - 1) <= 1e-10 and rep.monotone
    with pytest.raises(ValueError):
        positivity_gamma_search(lambda g: _lam_power(G64, 2.0, g), 2.0, 1.0, samples=10)


def test_positivity_search_on_rough_alpha():
    a = weierstrass_zygmund(5, 0, "tx", grid=G64, dt=2.0**-14)
    rep = positivity_gamma_search(lambda g: build_alpha(a, g, rows=[8000]), 2.0, 0.5, samples=100)
    assert rep.found and rep.lam1 >= 0.5 / 4 and rep.monotone
    for st_ in rep.trace:
        assert st_.eigen_min <= st_.power_min + 1e-9 and st_.eigen_min <= st_.sampled_min + 1e-9


def test_garding(rough_alpha):
    rep = garding_equivalence_check(_lam_power(G64, 1.0), 1.0, 1.0)
    assert abs(rep.ratio - 1) <= 1e-10
    q = symbol_power(rough_alpha, 0.25)
    assert garding_equivalence_check(q, 0.5, 1.0).ok(20)
    assert garding_equivalence_check(rough_alpha, 2.0, 1.0).ok(20)
    with pytest.raises(ValueError):
        garding_equivalence_check(multiplier_symbol(G64, np.zeros(64), 0.0), 0.0, 1.0)
