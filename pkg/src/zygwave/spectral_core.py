"""Periodic grids, fields, smooth radial cutoffs and Littlewood-Paley blocks.

Conventions
-----------
* The torus has period ``2*pi`` on every axis; ``x_j = 2*pi*j/n``.
* Spectra use ``u_hat[k] = mean(u * exp(-i k.x))``, i.e. ``fftn(u) / n**dim``,
  stored in FFT order. With this scaling ``sum |u_hat|**2`` is the mean square
  of the samples and ``sum_k u_hat[k] exp(i k.x)`` reproduces ``u``.
* The Nyquist mode (any component equal to ``-n/2``) is dropped by every
  operator in the package.

Two families of dyadic blocks are provided. *Classical* blocks use ``|k|``:
``Delta_0 = chi(|D|)`` and ``Delta_j = phi(2^-j |D|)``. *Parameter* blocks use
``Lambda(k, gamma) = (gamma**2 + |k|**2)**0.5`` with
``Delta_j = chi(2^-(j+1) Lambda) - chi(2^-j Lambda)`` for ``j >= 1``; block 0
absorbs the base ``chi(Lambda)`` so the blocks still sum to the identity when
``gamma < 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

CLASSICAL = "classical"
GammaMode = Union[float, str]


def _bump(s, steepness=1.0):
    s = np.asarray(s, dtype=float)
    pos = s > 0
    out = np.zeros_like(s)
    out[pos] = np.exp(-steepness / s[pos])
    return out


@dataclass(frozen=True)
class RadialCutoff:
    """Smooth nonincreasing profile equal to 1 on ``[0, 1]`` and 0 on ``[2, inf)``.

    On ``(1, 2)`` the bridge is ``h(2-r) / (h(2-r) + h(r-1))`` with
    ``h(s) = exp(-steepness/s)``.
    """

    plateau_radius: float = 1.0
    support_radius: float = 2.0
    steepness: float = 1.0

    def chi(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        width = self.support_radius - self.plateau_radius
        s = (r - self.plateau_radius) / width
        left = _bump(1.0 - s, self.steepness)
        right = _bump(s, self.steepness)
        with np.errstate(invalid="ignore", divide="ignore"):
            bridge = left / (left + right)
        return np.where(s <= 0.0, 1.0, np.where(s >= 1.0, 0.0, bridge))

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        return self.chi(r) - self.chi(2.0 * r)

    __call__ = chi


CUTOFF = RadialCutoff()


def chi(r):
    return CUTOFF.chi(r)


def phi(r):
    return CUTOFF.phi(r)


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on the ``dim``-torus of period ``2*pi``."""

    n_points: int
    dim: int = 1
    period: float = 2.0 * math.pi

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 16 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 16, got {n!r}")
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim!r}")

    @property
    def shape(self):
        return (self.n_points,) * self.dim

    @property
    def size(self):
        return self.n_points**self.dim

    @property
    def spacing(self):
        return self.period / self.n_points

    @cached_property
    def frequencies(self):
        """Integer lattice ``-n/2 .. n/2-1`` along one axis, FFT order."""
        return np.fft.fftfreq(self.n_points, 1.0 / self.n_points).astype(int)

    @cached_property
    def x(self):
        """Sample coordinates; a tuple of meshgrid arrays when ``dim == 2``."""
        x1 = self.spacing * np.arange(self.n_points)
        if self.dim == 1:
            return x1
        return tuple(np.meshgrid(x1, x1, indexing="ij"))

    @cached_property
    def wavevectors(self):
        """Tuple of integer arrays ``(k_1, ..., k_dim)`` broadcast to ``shape``."""
        k1 = self.frequencies
        if self.dim == 1:
            return (k1,)
        return tuple(np.meshgrid(k1, k1, indexing="ij"))

    @cached_property
    def kmag(self):
        return np.sqrt(sum(kk.astype(float) ** 2 for kk in self.wavevectors))

    @cached_property
    def nyquist_mask(self):
        """1.0 everywhere except on modes with a ``-n/2`` component."""
        mask = np.ones(self.shape)
        for kk in self.wavevectors:
            mask[kk == -self.n_points // 2] = 0.0
        return mask

    def lam(self, gamma):
        """``Lambda(k, gamma)`` on the lattice."""
        _check_gamma(gamma)
        return np.sqrt(gamma**2 + self.kmag**2)

    def fft(self, samples):
        return np.fft.fftn(samples) / self.size

    def ifft(self, spectrum):
        return np.fft.ifftn(spectrum) * self.size

    def __repr__(self):
        return f"PeriodicGrid(n_points={self.n_points}, dim={self.dim})"


def make_grid(n_points, dim=1):
    return PeriodicGrid(n_points, dim)


class ScalarField:
    """Complex samples on a ``PeriodicGrid``; immutable."""

    __slots__ = ("grid", "_samples", "_spectrum")

    def __init__(self, grid, samples):
        samples = np.array(samples, dtype=complex)
        if samples.shape != grid.shape:
            raise ValueError(f"samples of shape {samples.shape} do not fit {grid}")
        samples.setflags(write=False)
        self.grid = grid
        self._samples = samples
        self._spectrum = None

    @classmethod
    def from_spectrum(cls, grid, spectrum):
        spectrum = np.asarray(spectrum, dtype=complex)
        field = cls(grid, grid.ifft(spectrum))
        spec = spectrum.copy()
        spec.setflags(write=False)
        field._spectrum = spec
        return field

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, func(*(grid.x if grid.dim == 2 else (grid.x,))))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    @property
    def samples(self):
        return self._samples

    @property
    def spectrum(self):
        if self._spectrum is None:
            spec = self.grid.fft(self._samples)
            spec.setflags(write=False)
            self._spectrum = spec
        return self._spectrum

    def multiplier(self, symbol):
        """Apply the Fourier multiplier ``symbol(k)`` (Nyquist removed)."""
        return ScalarField.from_spectrum(self.grid, self.spectrum * symbol * self.grid.nyquist_mask)

    def l2_norm(self):
        """Root mean square of the samples (equals the spectral l2 norm)."""
        return float(np.sqrt(np.mean(np.abs(self._samples) ** 2)))

    def inner(self, other):
        """``<self, other> = mean(self * conj(other))``."""
        return complex(np.mean(self._samples * np.conj(other.samples)))

    def _check(self, other):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return ScalarField(self.grid, self._samples + other.samples)

    def __sub__(self, other):
        self._check(other)
        return ScalarField(self.grid, self._samples - other.samples)

    def __mul__(self, c):
        return ScalarField(self.grid, self._samples * c)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self._samples)

    def __repr__(self):
        return f"ScalarField({self.grid!r}, l2={self.l2_norm():.3e})"


def lambda_weight(k, gamma):
    """``(gamma**2 + |k|**2) ** 0.5`` for a scalar frequency or a frequency vector."""
    _check_gamma(gamma)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    return float(np.sqrt(gamma**2 + np.sum(k**2)))


def _check_gamma(gamma):
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")


def _classical(gamma):
    if isinstance(gamma, str):
        if gamma != CLASSICAL:
            raise ValueError(f"unknown block mode {gamma!r}")
        return True
    _check_gamma(gamma)
    return False


def block_multiplier(grid, j, gamma: GammaMode = CLASSICAL):
    """Fourier multiplier of the ``j``-th dyadic block (Nyquist removed)."""
    if j < 0:
        return np.zeros(grid.shape)
    if _classical(gamma):
        r = grid.kmag
        m = chi(r) if j == 0 else phi(2.0**-j * r)
    else:
        lam = grid.lam(gamma)
        upper = chi(2.0 ** -(j + 1) * lam)
        m = upper if j == 0 else upper - chi(2.0**-j * lam)
    return m * grid.nyquist_mask


def lowpass_multiplier(grid, j, gamma: GammaMode = CLASSICAL):
    if _classical(gamma):
        if j < 0:
            return np.zeros(grid.shape)
        m = chi(2.0**-j * grid.kmag)
    else:
        m = chi(2.0**-j * grid.lam(gamma))
    return m * grid.nyquist_mask


def n_blocks(grid, gamma: GammaMode = CLASSICAL):
    """Number of blocks needed so that they sum to the identity on ``grid``.

    The lattice caps the scale: blocks beyond this index vanish identically.
    """
    kmax = float(grid.kmag.max())
    if _classical(gamma):
        return max(1, math.ceil(math.log2(max(kmax, 1.0)))) + 1
    lam_max = math.sqrt(gamma**2 + kmax**2)
    return max(1, math.ceil(math.log2(lam_max)))


def lp_block(u, j, gamma: GammaMode = CLASSICAL):
    return u.multiplier(block_multiplier(u.grid, j, gamma))


def lp_lowpass(u, j, gamma: GammaMode = CLASSICAL):
    return u.multiplier(lowpass_multiplier(u.grid, j, gamma))


def lp_decompose(u, gamma: GammaMode = CLASSICAL):
    return [lp_block(u, j, gamma) for j in range(n_blocks(u.grid, gamma))]


def random_field(grid, rng, weight=None, real=False):
    """Field with independent Gaussian Fourier coefficients times ``weight``."""
    spec = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if weight is not None:
        spec = spec * weight
    spec = spec * grid.nyquist_mask
    field = ScalarField.from_spectrum(grid, spec)
    if real:
        field = ScalarField(grid, field.samples.real)
    return field


def band_field(grid, j, rng, gamma: GammaMode = CLASSICAL):
    """Random field localized in dyadic block ``j``."""
    return random_field(grid, rng, block_multiplier(grid, j, gamma))


def gradient_norm(u):
    """``||grad u||_{L2}`` computed spectrally."""
    return float(np.sqrt(np.sum(u.grid.kmag**2 * np.abs(u.spectrum * u.grid.nyquist_mask) ** 2)))


@dataclass
class BernsteinReport:
    js: np.ndarray
    ratios: np.ndarray  # shape (len(js), trials)
    slope: float
    two_sided_constant: float

    @property
    def ok(self):
        return 0.9 <= self.slope <= 1.1 and self.two_sided_constant < 4.0


def bernstein_check(j, trials=50, grid=None, j_min=2, seed=0):
    """Fit ``log(||grad u|| / ||u||)`` against ``j log 2`` over annulus fields.

    Uses classical blocks ``j_min .. j``; the block ``j`` must fit strictly
    below the Nyquist frequency (``2**(j+1) < n/2``).
    """
    grid = grid or make_grid(512)
    if 2 ** (j + 1) >= grid.n_points // 2:
        raise ValueError(f"block {j} is not resolved on a grid of {grid.n_points} points")
    if j < j_min:
        raise ValueError("need j >= j_min")
    rng = np.random.default_rng(seed)
    js = np.arange(j_min, j + 1)
    ratios = np.empty((len(js), trials))
    for a, jj in enumerate(js):
        for t in range(trials):
            u = band_field(grid, int(jj), rng)
            ratios[a, t] = gradient_norm(u) / u.l2_norm()
    if len(js) > 1:
        slope = float(np.polyfit(js * math.log(2.0), np.log(ratios).mean(axis=1), 1)[0])
    else:
        slope = float("nan")
    scaled = ratios / 2.0 ** js[:, None]
    const = float(max(scaled.max(), (1.0 / scaled).max()))
    return BernsteinReport(js, ratios, slope, const)
