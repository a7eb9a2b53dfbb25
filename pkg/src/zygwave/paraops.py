"""Paradifferential quantization, order fits, calculus remainders and positivity checks.

Operators act on normalized spectra in FFT order. A quantized symbol is
realized as the dense spectral matrix ``T[p, k] = S(p - k, k)`` where ``S`` is
the x-spectrum of the symbol column at frequency ``k``. Outputs that would
leave the lattice are dropped instead of being folded back, and the Nyquist
row and column are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .parasymbols import (
    Symbol,
    build_cutoff,
    smooth_symbol,
    x_derivative,
    xi_derivative,
)
from .spectral_core import PeriodicGrid, ScalarField, band_field

EIGEN_LIMIT = 1024


@lru_cache(maxsize=8)
def _gather_indices(n):
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    d = k[:, None] - k[None, :]
    valid = (d >= -n // 2) & (d < n // 2)
    valid[n // 2, :] = False
    valid[:, n // 2] = False
    rows = np.mod(d, n)
    cols = np.broadcast_to(np.arange(n)[None, :], (n, n))
    return rows[valid], cols[valid], valid


def spectral_matrix(symbol_row):
    """Matrix acting on normalized spectra for one ``(x, xi)`` symbol slice."""
    n = symbol_row.shape[0]
    spec = np.fft.fft(symbol_row, axis=0) / n
    r, c, valid = _gather_indices(n)
    out = np.zeros((n, n), dtype=complex)
    out[valid] = spec[r, c]
    return out


def _spectrum(u, grid):
    if isinstance(u, ScalarField):
        return u.spectrum
    return grid.fft(np.asarray(u))


class SpectralOperator:
    """Dense linear map on the spectra of a 1D grid."""

    def __init__(self, grid, matrix, order=None, log_order=0.0):
        self.grid = grid
        self.matrix = np.asarray(matrix, dtype=complex)
        n = grid.n_points
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix must be {n}x{n}")
        self.order = order
        self.log_order = log_order

    def apply(self, u):
        out = self.matrix @ _spectrum(u, self.grid)
        return ScalarField.from_spectrum(self.grid, out)

    __call__ = apply

    def apply_spectrum(self, spec):
        return self.matrix @ spec

    def adjoint(self):
        return SpectralOperator(self.grid, self.matrix.conj().T, self.order, self.log_order)

    def real_part(self):
        return SpectralOperator(self.grid, 0.5 * (self.matrix + self.matrix.conj().T), self.order)

    def _other(self, other):
        if not isinstance(other, SpectralOperator):
            raise TypeError("expected a SpectralOperator")
        if other.grid != self.grid:
            raise ValueError("operators act on different grids")
        return other.matrix

    def __matmul__(self, other):
        m = self._other(other)
        order = None if self.order is None or other.order is None else self.order + other.order
        return SpectralOperator(self.grid, self.matrix @ m, order)

    def __add__(self, other):
        return SpectralOperator(self.grid, self.matrix + self._other(other))

    def __sub__(self, other):
        return SpectralOperator(self.grid, self.matrix - self._other(other))

    def __mul__(self, c):
        return SpectralOperator(self.grid, self.matrix * complex(c), self.order, self.log_order)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    @classmethod
    def identity(cls, grid):
        eye = np.diag(grid.nyquist_mask.astype(complex))
        return cls(grid, eye, 0.0)

    @classmethod
    def multiplier(cls, grid, values, order=None):
        return cls(grid, np.diag(np.asarray(values, complex) * grid.nyquist_mask), order)


@dataclass(eq=False)
class ParaOp:
    """Quantization of a smoothed symbol, one spectral matrix per symbol time row."""

    symbol: Optional[Symbol]
    gamma: float
    order: float
    log_order: float = 0.0
    _matrices: dict = field(default_factory=dict, repr=False)
    _adjoint_of: Optional["ParaOp"] = field(default=None, repr=False)

    @property
    def grid(self):
        src = self.symbol if self.symbol is not None else self._adjoint_of.symbol
        return src.grid

    @property
    def n_rows(self):
        src = self.symbol if self.symbol is not None else self._adjoint_of.symbol
        return src.n_rows

    def matrix(self, t=0):
        if not 0 <= t < self.n_rows:
            raise IndexError(f"time index {t} outside 0..{self.n_rows - 1}")
        if t not in self._matrices:
            if self._adjoint_of is not None:
                self._matrices[t] = self._adjoint_of.matrix(t).conj().T
            else:
                self._matrices[t] = spectral_matrix(self.symbol.values[t])
        return self._matrices[t]

    def at(self, t=0):
        return SpectralOperator(self.grid, self.matrix(t), self.order, self.log_order)

    def apply(self, u, t=0):
        return apply(self, u, t)


def quantize(sigma, gamma=None):
    """``T_sigma`` for a symbol already smoothed by an admissible cutoff."""
    if not sigma.smoothed:
        raise ValueError("quantize needs a smoothed symbol; call smooth_symbol first")
    return ParaOp(sigma, float(sigma.gamma if gamma is None else gamma), sigma.order, sigma.log_order)


def apply(T, u, t=0):
    """``T u`` at symbol time row ``t``."""
    spec = _spectrum(u, T.grid)
    return ScalarField.from_spectrum(T.grid, T.matrix(t) @ spec)


def adjoint(T):
    """Exact discrete adjoint; ``adjoint(adjoint(T))`` returns the original operator."""
    if T._adjoint_of is not None:
        return T._adjoint_of
    return ParaOp(None, T.gamma, T.order, T.log_order, _adjoint_of=T)


def _smoothed(a, psi):
    return a if a.smoothed else smooth_symbol(a, psi)


def _unsmoothed(a):
    return replace(a, smoothed=False, cutoff=None)


def _cutoff_for(a, b, psi):
    for s in (a, b):
        if psi is None and s.cutoff is not None:
            psi = s.cutoff
    if psi is None:
        psi = build_cutoff(max(a.gamma, b.gamma), a.grid)
    return psi


def quantized(a, psi=None, t=0):
    """Spectral operator of ``T_a`` at row ``t`` (smoothing ``a`` first when needed)."""
    psi = _cutoff_for(a, a, psi) if not a.smoothed else a.cutoff
    s = _smoothed(a.select(t), psi)
    return SpectralOperator(a.grid, spectral_matrix(s.values[0]), a.order, a.log_order)


def composition_remainder(a, b, psi=None, t=0):
    """``R = T_a T_b - T_{ab} + i T_{d_xi sigma_a d_x sigma_b}`` at time row ``t``.

    ``a`` and ``b`` may be raw or smoothed; the product ``ab`` and the
    correction symbol are formed from what is given and smoothed again.
    """
    psi = _cutoff_for(a, b, psi)
    a, b = a.select(t), b.select(t)
    sa, sb = _smoothed(a, psi), _smoothed(b, psi)
    ab = smooth_symbol(_unsmoothed(a) * _unsmoothed(b), psi)
    corr = smooth_symbol(_unsmoothed(xi_derivative(sa) * x_derivative(sb)), psi)
    Ta = SpectralOperator(a.grid, spectral_matrix(sa.values[0]))
    Tb = SpectralOperator(a.grid, spectral_matrix(sb.values[0]))
    Tab = SpectralOperator(a.grid, spectral_matrix(ab.values[0]))
    Tc = SpectralOperator(a.grid, spectral_matrix(corr.values[0]))
    out = Ta @ Tb - Tab + 1j * Tc
    out.order = a.order + b.order - 1
    return out


def adjoint_remainder(a, psi=None, t=0):
    """``R = (T_a)* - T_{conj a} + i T_{d_xi d_x conj sigma_a}`` at time row ``t``."""
    psi = _cutoff_for(a, a, psi)
    a = a.select(t)
    sa = _smoothed(a, psi)
    sbar = _smoothed(_unsmoothed(a).conj(), psi)
    corr = smooth_symbol(_unsmoothed(xi_derivative(x_derivative(sbar))), psi)
    Ta = SpectralOperator(a.grid, spectral_matrix(sa.values[0]))
    Tbar = SpectralOperator(a.grid, spectral_matrix(sbar.values[0]))
    Tc = SpectralOperator(a.grid, spectral_matrix(corr.values[0]))
    out = Ta.adjoint() - Tbar + 1j * Tc
    out.order = a.order - 1
    return out


@dataclass
class OrderFit:
    """Band-wise growth of ``||P u_j|| / ||u_j||``.

    ``m`` comes from the two-parameter fit ``c + m j log 2``; ``m_joint`` and
    ``delta`` from the three-parameter fit with an extra ``log(j+1)`` term.
    """

    m: float
    delta: float
    m_joint: float
    residual: float
    bands: np.ndarray
    log_ratios: np.ndarray


def default_bands(grid, gamma=1.0):
    """``max(2, ceil(log2 gamma))`` up to ``log2(n/2) - 2``."""
    lo = max(2, int(math.ceil(math.log2(gamma))))
    hi = int(math.log2(grid.n_points // 2)) - 2
    return np.arange(lo, hi + 1)


def _as_matrix(P, grid):
    if isinstance(P, SpectralOperator):
        return P.matrix
    if isinstance(P, ParaOp):
        return P.matrix(0)
    if isinstance(P, np.ndarray):
        return P
    if callable(P):
        return None
    raise TypeError("unsupported operator type")


def operator_order_fit(P, grid, gamma=1.0, bands=None, trials=20, seed=0):
    """Fit the order of ``P`` from its action on random fields localized in gamma-bands."""
    bands = default_bands(grid, gamma) if bands is None else np.asarray(bands)
    if bands.size < 4:
        raise ValueError("order fits need at least 4 bands")
    mat = _as_matrix(P, grid)
    rng = np.random.default_rng(seed)
    ys = []
    for j in bands:
        logs = []
        for _ in range(trials):
            u = band_field(grid, int(j), rng, gamma)
            if mat is not None:
                out = mat @ u.spectrum
            else:
                out = _spectrum(P(u), grid)
            logs.append(math.log(np.linalg.norm(out) / np.linalg.norm(u.spectrum)))
        ys.append(np.mean(logs))
    ys = np.asarray(ys)
    js = bands.astype(float)
    X1 = np.column_stack([js * math.log(2), np.ones_like(js)])
    c1, *_ = np.linalg.lstsq(X1, ys, rcond=None)
    resid = float(np.sqrt(np.mean((ys - X1 @ c1) ** 2)))
    X2 = np.column_stack([js * math.log(2), np.log(js + 1), np.ones_like(js)])
    c2, *_ = np.linalg.lstsq(X2, ys, rcond=None)
    return OrderFit(float(c1[0]), float(c2[1]), float(c2[0]), resid, bands, ys)


def _h_weight(grid, gamma, s):
    return grid.lam(gamma) ** s


@dataclass
class PositivityStep:
    gamma: float
    sampled_min: float
    power_min: float
    eigen_min: Optional[float]

    @property
    def estimate(self):
        """Best available lower envelope: the exact minimum when it was computed."""
        est = min(self.sampled_min, self.power_min)
        return est if self.eigen_min is None else min(est, self.eigen_min)


@dataclass
class PositivityReport:
    gamma_star: Optional[float]
    lam1: Optional[float]
    threshold: float
    trace: list

    @property
    def found(self):
        return self.gamma_star is not None

    @property
    def monotone(self):
        """Once the threshold is cleared it stays cleared along the trace."""
        cleared = [s.estimate >= self.threshold for s in self.trace]
        if True not in cleared:
            return True
        first = cleared.index(True)
        return all(cleared[first:])


def _rayleigh_step(T, grid, gamma, m, samples, power_steps, rng):
    """Minimum of ``Re<T u, u> / ||u||^2_{H^{m/2}_gamma}`` by sampling, power iteration and eigvalsh."""
    keep = grid.nyquist_mask.astype(bool)
    winv = 1.0 / _h_weight(grid, gamma, m / 2.0)[keep]
    herm = 0.5 * (T + T.conj().T)[np.ix_(keep, keep)]
    B = winv[:, None] * herm * winv[None, :]
    dim = B.shape[0]
    V = rng.standard_normal((dim, samples)) + 1j * rng.standard_normal((dim, samples))
    V /= np.linalg.norm(V, axis=0)
    q = np.real(np.einsum("ij,ij->j", V.conj(), B @ V))
    sampled = float(q.min())
    v = V[:, int(q.argmin())]
    shift = float(np.abs(B).sum(axis=1).max())
    for _ in range(power_steps):
        v = shift * v - B @ v
        v /= np.linalg.norm(v)
    power = float(np.real(v.conj() @ B @ v))
    eig = float(np.linalg.eigvalsh(B)[0]) if dim <= EIGEN_LIMIT else None
    return sampled, power, eig


def positivity_gamma_search(
    symbol_for_gamma: Callable[[float], Symbol],
    m,
    lam0,
    gammas=None,
    samples=128,
    power_steps=10,
    seed=0,
    t=0,
    full_trace=True,
):
    """Doubling search for the first gamma where ``Re T_a`` is bounded below by ``lam0/4`` in ``H^{m/2}_gamma``.

    ``symbol_for_gamma(gamma)`` returns the (raw or smoothed) symbol. With
    ``full_trace`` the remaining candidates are evaluated too, so the trace
    can be checked for monotonicity.
    """
    if samples < 100:
        raise ValueError("use at least 100 random fields per gamma")
    gammas = [2.0**k for k in range(11)] if gammas is None else list(gammas)
    rng = np.random.default_rng(seed)
    threshold = lam0 / 4.0
    trace, gamma_star, lam1 = [], None, None
    for g in gammas:
        a = symbol_for_gamma(g)
        T = quantized(a, None if a.smoothed else build_cutoff(g, a.grid), t)
        step = PositivityStep(g, *_rayleigh_step(T.matrix, a.grid, g, m, samples, power_steps, rng))
        trace.append(step)
        if gamma_star is None and step.estimate >= threshold:
            gamma_star, lam1 = g, step.estimate
            if not full_trace:
                break
    return PositivityReport(gamma_star, lam1, threshold, trace)


@dataclass
class GardingReport:
    c1: float
    c2: float
    sampled_c1: float
    sampled_c2: float
    gamma: float

    @property
    def ratio(self):
        return self.c2 / self.c1

    def ok(self, bound=20.0):
        return self.ratio <= bound


def garding_equivalence_check(a, m, gamma, samples=128, seed=0, t=0):
    """Two-sided bounds ``c1 <= ||T_a u|| / ||u||_{H^m_gamma} <= c2``.

    Sampled bounds come from random fields; exact ones from the singular
    values of ``T_a Lambda^{-m}`` when the lattice is small enough.
    """
    row = a.values[min(t, a.n_rows - 1)]
    lam = a.grid.lam(gamma)
    keep = a.grid.nyquist_mask.astype(bool)
    if np.real(row[:, keep] / lam[keep] ** m).min() <= 0:
        raise ValueError("symbol is not elliptic of the requested order")
    T = quantized(a, None if a.smoothed else build_cutoff(gamma, a.grid), t).matrix
    winv = 1.0 / _h_weight(a.grid, gamma, m)
    M = (T * winv[None, :])[:, keep]
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((M.shape[1], samples)) + 1j * rng.standard_normal((M.shape[1], samples))
    r = np.linalg.norm(M @ V, axis=0) / np.linalg.norm(V, axis=0)
    s1, s2 = float(r.min()), float(r.max())
    if M.shape[1] <= EIGEN_LIMIT:
        sv = np.linalg.svd(M, compute_uv=False)
        c1, c2 = float(sv[-1]), float(sv[0])
    else:
        c1, c2 = s1, s2
    return GardingReport(c1, c2, s1, s2, float(gamma))


def multiplier_symbol(grid, values, order, gamma=1.0):
    """Static symbol ``values(xi)`` that does not depend on ``x``."""
    vals = np.broadcast_to(np.asarray(values, complex)[None, :], (grid.n_points, grid.n_points))
    return Symbol(grid, vals, order, 0.0, gamma, static=True)


__all__ = [
    "SpectralOperator",
    "ParaOp",
    "quantize",
    "apply",
    "adjoint",
    "quantized",
    "spectral_matrix",
    "composition_remainder",
    "adjoint_remainder",
    "operator_order_fit",
    "OrderFit",
    "default_bands",
    "positivity_gamma_search",
    "PositivityReport",
    "garding_equivalence_check",
    "GardingReport",
    "multiplier_symbol",
    "PeriodicGrid",
]
