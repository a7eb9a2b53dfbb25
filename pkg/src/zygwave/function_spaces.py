"""Sobolev, logarithmic Sobolev, Zygmund, Hoelder and log-Lipschitz (semi)norms.

Norms are computed from the normalized spectrum of ``ScalarField`` so that
the constant function 1 has every Sobolev norm equal to 1. Seminorms based on
finite differences take the supremum over grid-aligned shifts only; pass the
sample spacing when working with time series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .spectral_core import CLASSICAL, block_multiplier, lp_block, n_blocks


@dataclass(frozen=True)
class NormSpec:
    s: float = 0.0
    alpha: float = 0.0
    gamma: float = 1.0
    mode: str = "direct"

    def __post_init__(self):
        if self.gamma < 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if self.mode not in ("direct", "dyadic"):
            raise ValueError(f"mode must be 'direct' or 'dyadic', got {self.mode!r}")


def _power_spectrum(u):
    return np.abs(u.spectrum * u.grid.nyquist_mask) ** 2


def sobolev_norm(u, s, mode="direct"):
    """``H^s`` norm; ``mode="dyadic"`` gives the classical block characterization."""
    if mode == "direct":
        w = (1.0 + u.grid.kmag**2) ** s
        return float(np.sqrt(np.sum(w * _power_spectrum(u))))
    if mode == "dyadic":
        total = 0.0
        for j in range(n_blocks(u.grid, CLASSICAL)):
            total += 2.0 ** (2 * j * s) * lp_block(u, j).l2_norm() ** 2
        return math.sqrt(total)
    raise ValueError(f"unknown mode {mode!r}")


def sobolev_weight(grid, s, alpha=0.0, gamma=1.0):
    """Direct-mode weight ``Lambda^s log^alpha(1 + gamma + |k|)`` on the lattice."""
    return grid.lam(gamma) ** s * np.log1p(gamma + grid.kmag) ** alpha


def log_sobolev_norm(u, spec):
    """Norm of ``H^{s + alpha log}_gamma`` in direct or dyadic form."""
    if spec.mode == "direct":
        w = sobolev_weight(u.grid, spec.s, spec.alpha, spec.gamma) ** 2
        return float(np.sqrt(np.sum(w * _power_spectrum(u))))
    power = _power_spectrum(u)
    total = 0.0
    for j in range(n_blocks(u.grid, spec.gamma)):
        block = np.sum(np.abs(block_multiplier(u.grid, j, spec.gamma)) ** 2 * power)
        total += (2.0 ** (j * spec.s) * (1.0 + j) ** spec.alpha) ** 2 * block
    return math.sqrt(total)


def _samples(f):
    values = getattr(f, "samples", f)
    return np.asarray(values)


def _shift_range(n, spacing, limit, periodic):
    """Grid shifts ``m >= 1`` with ``m * spacing < limit``."""
    mmax = math.ceil(limit / spacing) - 1
    if periodic:
        mmax = min(mmax, n // 2)
    else:
        mmax = min(mmax, n - 1)
    return np.arange(1, mmax + 1)


def _spacing(f, spacing):
    if spacing is not None:
        return float(spacing)
    grid = getattr(f, "grid", None)
    if grid is None:
        raise ValueError("spacing is required for raw sample arrays")
    return grid.spacing


def zygmund_seminorm(f, spacing=None, periodic=True, return_profile=False):
    """Sampled Zygmund seminorm ``sup |f(z+h) + f(z-h) - 2 f(z)| / |h|`` over ``0 < |h| < 1``.

    ``f`` is a 1D ``ScalarField`` or a sample array with ``spacing``. For a
    non-periodic series only interior points with both neighbours present are
    used.
    """
    values = _samples(f)
    if values.ndim != 1:
        raise ValueError("zygmund_seminorm expects one-dimensional samples")
    if values.size < 4:
        raise ValueError("need at least 4 samples")
    h = _spacing(f, spacing)
    shifts = _shift_range(values.size, h, 1.0, periodic)
    if not periodic:
        shifts = shifts[2 * shifts < values.size]
    sups = kernels.second_difference_sup(values, shifts, periodic) / (shifts * h)
    value = float(np.nanmax(sups)) if sups.size else 0.0
    if return_profile:
        return value, shifts * h, sups
    return value


def dyadic_zygmund_seminorm(f):
    """``sup_j 2^j ||Delta_j f||_inf`` with classical blocks."""
    best = 0.0
    for j in range(n_blocks(f.grid, CLASSICAL)):
        best = max(best, 2.0**j * float(np.abs(lp_block(f, j).samples).max()))
    return best


def lipschitz_constant(f, spacing=None, periodic=True):
    """Largest sampled difference quotient over neighbouring points."""
    values = _samples(f)
    h = _spacing(f, spacing)
    return float(kernels.first_difference_sup(values, [1], periodic)[0] / h)


@dataclass
class LogLipReport:
    constant: float
    shifts: np.ndarray
    quotients: np.ndarray
    gamma: float


def loglip_check(f, gamma=1.0, spacing=None, periodic=True):
    """Smallest ``C`` with ``|f(x+y) - f(x)| <= C |y| log(1 + gamma + 1/|y|)`` on sampled ``0 < |y| < 1``."""
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    values = _samples(f)
    h = _spacing(f, spacing)
    shifts = _shift_range(values.size, h, 1.0, periodic)
    y = shifts * h
    sups = kernels.first_difference_sup(values, shifts, periodic)
    q = sups / (y * np.log1p(gamma + 1.0 / y))
    return LogLipReport(float(np.nanmax(q)) if q.size else 0.0, y, q, gamma)


def holder_seminorm(f, theta, spacing=None, periodic=True):
    """``sup |f(x+y) - f(x)| / |y|^theta`` over all sampled shifts (up to half the period)."""
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    values = _samples(f)
    h = _spacing(f, spacing)
    n = values.size
    shifts = np.arange(1, n // 2 + 1) if periodic else np.arange(1, n)
    sups = kernels.first_difference_sup(values, shifts, periodic)
    return float(np.nanmax(sups / (shifts * h) ** theta))
