"""Tarama energy, its equivalence with the H^{1/2} x H^{-1/2} pair, the Q cancellation and Gronwall fits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .function_spaces import sobolev_norm
from .paraops import SpectralOperator, positivity_gamma_search, spectral_matrix
from .parasymbols import (
    Symbol,
    build_cutoff,
    smooth_symbol,
    symbol_power,
    symbol_time_derivative,
)
from .spectral_core import ScalarField, random_field

TRACE_COLUMNS = ("t", "E", "Hhalf_u", "Hneghalf_dtu", "Hneghalf_Lu")
LAMBDA_GRID = np.arange(0.0, 32.0 + 1e-9, 0.25)


def _lam_sigma(alpha, sigma):
    lam = alpha.grid.lam(alpha.gamma) ** sigma
    vals = np.broadcast_to(lam[None, :], (alpha.grid.n_points,) * 2)
    return Symbol(alpha.grid, vals, sigma, 0.0, alpha.gamma, static=True)


def _weighted(sym, weight):
    return sym if weight is None else weight * sym


class EnergyOperators:
    """The quantized symbols entering the energy at one time row of ``alpha``.

    ``sigma`` shifts every symbol by ``Lambda^sigma``; ``sigma = 0`` is the
    plain energy.
    """

    def __init__(self, alpha, t=0, psi=None, sigma=0.0):
        if sigma <= -0.5:
            raise ValueError("sigma must exceed -1/2")
        self.alpha = alpha.select(t)
        self.grid = alpha.grid
        self.gamma = alpha.gamma
        self.sigma = float(sigma)
        self.psi = psi or build_cutoff(alpha.gamma, alpha.grid)
        self._w = None if sigma == 0 else _lam_sigma(self.alpha, sigma)
        self.minus = smooth_symbol(_weighted(symbol_power(self.alpha, -0.25), self._w), self.psi)
        self.plus = smooth_symbol(_weighted(symbol_power(self.alpha, 0.25), self._w), self.psi)

    def _op(self, sym):
        return SpectralOperator(self.grid, spectral_matrix(sym.values[0]), sym.order)

    @cached_property
    def A(self):
        """``T_{alpha^-1/4}``."""
        return self._op(self.minus)

    @cached_property
    def B(self):
        """``T_{alpha^1/4}``."""
        return self._op(self.plus)

    @cached_property
    def A_dt(self):
        return self._op(symbol_time_derivative(self.minus, 1))

    @cached_property
    def A_dtt(self):
        return self._op(symbol_time_derivative(self.minus, 2))

    @cached_property
    def B_dt(self):
        return self._op(symbol_time_derivative(self.plus, 1))


@dataclass
class EnergyState:
    v: ScalarField
    w: ScalarField
    E: float
    t: float


def tarama_state(u, dtu, alpha, t=0, psi=None, sigma=0.0, ops=None):
    """``v = T_{alpha^-1/4} d_t u - T_{d_t alpha^-1/4} u``, ``w = T_{alpha^1/4} u``, ``E = |v|^2 + |w|^2``."""
    ops = ops or EnergyOperators(alpha, t, psi, sigma)
    v = ops.A.apply(dtu) - ops.A_dt.apply(u)
    w = ops.B.apply(u)
    E = v.l2_norm() ** 2 + w.l2_norm() ** 2
    return EnergyState(v, w, float(E), float(ops.alpha.times[0]))


def energy_rate(ops, u, dtu, dttu):
    """``dE/dt`` from the differentiated definitions of ``v`` and ``w``.

    Exact when ``alpha`` does not depend on ``x`` (all operators commute).
    """
    v = ops.A.apply(dtu) - ops.A_dt.apply(u)
    w = ops.B.apply(u)
    dv = ops.A.apply(dttu) - ops.A_dtt.apply(u)
    dw = ops.B_dt.apply(u) + ops.B.apply(dtu)
    return 2.0 * (v.inner(dv).real + w.inner(dw).real)


def norm_pair(u, dtu, sigma=0.0):
    return sobolev_norm(u, sigma + 0.5) + sobolev_norm(dtu, sigma - 0.5)


@dataclass
class EquivalenceReport:
    upper: float
    lower: float
    ratios: np.ndarray

    @property
    def C(self):
        """Single constant bounding both ``E^1/2 / N`` and ``N / E^1/2``."""
        return max(self.upper, self.lower)

    def ok(self, bound=20.0):
        return self.C <= bound


def equivalence_ratio(state, u, dtu, sigma=0.0):
    """``E^1/2 / (||d_t u||_{H^{s-1/2}} + ||u||_{H^{s+1/2}})``, or ``None`` for the zero pair."""
    denom = norm_pair(u, dtu, sigma)
    if denom == 0:
        return None
    return math.sqrt(state.E) / denom


def _probe_pair(grid, rng, j=None, gamma=1.0):
    lam = grid.lam(1.0)
    if j is None:
        u = random_field(grid, rng, lam**-1.0)
        d = random_field(grid, rng, np.ones(grid.n_points))
    else:
        from .spectral_core import band_field

        u = band_field(grid, j, rng, gamma) * (2.0 ** -(j / 2))
        d = band_field(grid, j, rng, gamma) * (2.0 ** (j / 2))
    return u, d


def energy_equivalence(alpha, samples=64, seed=0, t=0, psi=None, sigma=0.0):
    """Sample ``E^1/2 / N`` over random and band-localized pairs ``(u, d_t u)``."""
    ops = EnergyOperators(alpha, t, psi, sigma)
    rng = np.random.default_rng(seed)
    n_bands = int(math.log2(alpha.grid.n_points // 2))
    ratios = []
    for i in range(samples):
        j = None if i % 2 == 0 else (i // 2) % n_bands
        u, d = _probe_pair(alpha.grid, rng, j, alpha.gamma)
        r = equivalence_ratio(tarama_state(u, d, alpha, ops=ops), u, d, sigma)
        if r is not None:
            ratios.append(r)
    ratios = np.asarray(ratios)
    return EquivalenceReport(float(ratios.max()), float((1.0 / ratios).max()), ratios)


def _ops(alpha, t, psi):
    a = alpha.select(t)
    psi = psi or build_cutoff(alpha.gamma, alpha.grid)
    return a, psi


def _quant(sym, psi):
    s = smooth_symbol(sym, psi)
    return SpectralOperator(sym.grid, spectral_matrix(s.values[0]), sym.order)


def q_operator(alpha, psi=None, t=0):
    """``Q = T*_{alpha^1/4} T_{alpha^1/4} - T*_{alpha^-1/4} T_{alpha^-1/4} Re T_alpha``."""
    a, psi = _ops(alpha, t, psi)
    B = _quant(symbol_power(a, 0.25), psi)
    A = _quant(symbol_power(a, -0.25), psi)
    Ta = _quant(a, psi)
    return B.adjoint() @ B - A.adjoint() @ A @ Ta.real_part()


def weighted_q_operator(alpha, sigma=0.5, psi=None, t=0):
    """``Q`` with both factors weighted by ``Lambda^sigma``.

    The weight breaks the cancellation of the subprincipal part, leaving an
    operator of order ``2 sigma`` (plus a logarithm); it is the reference for a
    deliberately miscancelled ``Q``.
    """
    a, psi = _ops(alpha, t, psi)
    w = _lam_sigma(a, sigma)
    B = _quant(w * symbol_power(a, 0.25), psi)
    A = _quant(w * symbol_power(a, -0.25), psi)
    Ta = _quant(a, psi)
    return B.adjoint() @ B - A.adjoint() @ A @ Ta.real_part()


def single_factor_q(alpha, psi=None, t=0):
    """``T*_{alpha^1/4} T_{alpha^1/4} - Re T_{alpha^1/2}`` (one factor dropped)."""
    a, psi = _ops(alpha, t, psi)
    B = _quant(symbol_power(a, 0.25), psi)
    H = _quant(symbol_power(a, 0.5), psi)
    return B.adjoint() @ B - H.real_part()


def fix_gamma(alpha_for_gamma, lam0, Lam0, gammas=None, seed=0):
    """Smallest doubling gamma where both ``T_{alpha^1/4}`` and ``T_{alpha^-1/4}`` pass the positivity search."""
    plus = positivity_gamma_search(
        lambda g: symbol_power(alpha_for_gamma(g), 0.25), 0.5, lam0**0.25, gammas, seed=seed,
        full_trace=False,
    )
    minus = positivity_gamma_search(
        lambda g: symbol_power(alpha_for_gamma(g), -0.25), -0.5, Lam0**-0.25, gammas, seed=seed,
        full_trace=False,
    )
    if not (plus.found and minus.found):
        return None, (plus, minus)
    return max(plus.gamma_star, minus.gamma_star), (plus, minus)


@dataclass
class GronwallFit:
    C: float
    lam: float
    found: bool


@dataclass
class EnergyTrace:
    t: np.ndarray
    E: np.ndarray
    Hhalf_u: np.ndarray
    Hneghalf_dtu: np.ndarray
    Hneghalf_Lu: np.ndarray
    fit: Optional[GronwallFit] = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in TRACE_COLUMNS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.t.size
        if any(getattr(self, c).shape != (n,) for c in TRACE_COLUMNS):
            raise ValueError("trace columns must have equal length")
        if n > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("trace timestamps must be strictly increasing")

    def __len__(self):
        return self.t.size

    @property
    def norm_pair(self):
        return self.Hhalf_u + self.Hneghalf_dtu

    def rows(self):
        for i in range(len(self)):
            yield [float(getattr(self, c)[i]) for c in TRACE_COLUMNS]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for row in self.rows():
                writer.writerow([repr(v) for v in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != TRACE_COLUMNS:
                raise ValueError(f"unexpected header {header}")
            data = np.array([[float(x) for x in row] for row in reader]).reshape(-1, 5)
        return cls(*data.T)


def _cumtrapz(y, x):
    out = np.zeros_like(y)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def gronwall_constant(trace, lam):
    """``max_t E^1/2 / (e^{lam t} (E(0)^1/2 + int_0^t e^{-lam s} ||Lu|| ds))`` over the trace."""
    t = trace.t - trace.t[0]
    root = np.sqrt(np.maximum(trace.E, 0.0))
    envelope = np.exp(lam * t) * (root[0] + _cumtrapz(np.exp(-lam * t) * trace.Hneghalf_Lu, t))
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(envelope > 0, root / envelope, np.where(root > 0, np.inf, 0.0))
    return float(q.max())


def gronwall_fit(trace, lambdas=LAMBDA_GRID, tol=1e-9):
    """Smallest scanned ``lam`` whose envelope holds with ``C <= 1``; otherwise the last ``lam`` and its ``C``."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    C = np.nan
    for lam in lambdas:
        C = gronwall_constant(trace, lam)
        if C <= 1.0 + tol:
            return GronwallFit(max(C, 0.0) if np.isfinite(C) else C, float(lam), True)
    return GronwallFit(C, float(lambdas[-1]), False)
