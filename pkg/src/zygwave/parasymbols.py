"""Admissible cutoffs, smoothed symbols and the second-order symbols of the wave operator.

Symbols live on ``rows x space x frequency`` for a 1D torus: ``values[r, x, k]``
with ``x`` the sample index and ``k`` the frequency index in FFT order. The
Nyquist frequency column is carried along but ignored by every measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .coefficients import DEFAULT_KERNEL, CoefficientField, mollify_at
from .spectral_core import CUTOFF, PeriodicGrid, RadialCutoff

LINKAGES = ("banded", "fixed")


def _classical_mu(gamma):
    return -3 if gamma < 4 else int(math.floor(math.log2(gamma))) - 2


@dataclass(frozen=True, eq=False)
class AdmissibleCutoff:
    """``psi(eta, xi)`` sampled on the lattice, with measured plateau and support constants.

    For ``mu >= 0``::

        psi = chi_mu(eta) chi_{mu+2}(xi) + sum_{k >= mu+3} chi_{k-3}(eta) phi_k(xi)

    where ``chi_j(r) = chi(2^-j r)`` and ``phi_k = chi_k - chi_{k-1}``. The
    value ``mu = -3`` selects ``chi(8 eta) chi(xi) + sum_{k >= 1} chi_{k-3}(eta) phi_k(xi)``.
    """

    mu: int
    gamma: float
    grid: PeriodicGrid
    profile: RadialCutoff = CUTOFF
    matrix: np.ndarray = field(init=False, repr=False)
    eps1: float = field(init=False)
    eps2: float = field(init=False)

    def __post_init__(self):
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if self.mu < -3:
            raise ValueError("mu must be >= -3")
        if self.grid.dim != 1:
            raise ValueError("symbols are defined on 1D grids")
        k = self.grid.frequencies
        psi = self(k[:, None], k[None, :])
        psi.setflags(write=False)
        object.__setattr__(self, "matrix", psi)
        e1, e2 = _measure_constants(psi, k, self.gamma)
        object.__setattr__(self, "eps1", e1)
        object.__setattr__(self, "eps2", e2)

    def __call__(self, eta, xi):
        eta = np.abs(np.asarray(eta, dtype=float))
        xi = np.abs(np.asarray(xi, dtype=float))
        chi = self.profile.chi
        if self.mu < 0:
            out = chi(8.0 * eta) * chi(xi)
            start = 1
        else:
            out = chi(2.0**-self.mu * eta) * chi(2.0 ** -(self.mu + 2) * xi)
            start = self.mu + 3
        top = max(start, int(math.ceil(math.log2(max(float(xi.max(initial=1.0)), 1.0)))) + 2)
        for kk in range(start, top + 1):
            ring = chi(2.0**-kk * xi) - chi(2.0 ** -(kk - 1) * xi)
            out = out + chi(2.0 ** -(kk - 3) * eta) * ring
        return out

    def support_mask(self):
        """Lattice points ``(eta, xi)`` inside the ball ``|eta| < eps2 (gamma + |xi|)``."""
        k = np.abs(self.grid.frequencies)
        return k[:, None] < self.eps2 * (self.gamma + k[None, :])


def _measure_constants(psi, k, gamma):
    """Lattice versions of the plateau and support radii, relative to ``gamma + |xi|``."""
    ak = np.abs(k)
    e1, e2 = np.inf, 0.0
    for col in range(psi.shape[1]):
        if col == k.size // 2:
            continue
        vals = psi[:, col]
        scale = gamma + ak[col]
        below = ak[np.abs(vals - 1.0) > 1e-14]
        r1 = below.min() if below.size else ak.max() + 1
        inside = ak[vals > 0.0]
        # halfway to the first lattice point where psi vanishes for good
        r2 = inside.max() + 0.5 if inside.size else 0.5
        e1 = min(e1, r1 / scale)
        e2 = max(e2, r2 / scale)
    # the plateau must hold on the closed ball, so stay strictly inside r1
    return float(e1 * (1 - 1e-12)), float(e2)


def build_cutoff(gamma, grid, profile=CUTOFF, mu=None):
    """Admissible cutoff for parameter ``gamma``.

    By default ``mu`` is the largest integer keeping the support constant at
    or below 1/2, ``floor(log2 gamma) - 2``, and the ``mu = -3`` form for
    ``gamma < 4``.
    """
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    if grid.n_points < 32:
        raise ValueError("cutoffs need lattices with at least 32 points")
    mu = _classical_mu(gamma) if mu is None else mu
    cut = AdmissibleCutoff(mu, float(gamma), grid, profile)
    if not 0 < cut.eps1 < cut.eps2 < 1:
        raise ValueError(f"cutoff constants out of order: eps1={cut.eps1}, eps2={cut.eps2}")
    return cut


def _as_values(v):
    arr = np.asarray(v, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None]
    return arr


@dataclass(frozen=True, eq=False)
class Symbol:
    """Sampled symbol ``a(t_r, x, xi)`` with declared order ``(order, log_order)``.

    ``dt1``/``dt2`` carry the first and second time derivatives when the
    symbol was built from mollified coefficients; ``static`` marks symbols
    known to be time independent.
    """

    grid: PeriodicGrid
    values: np.ndarray
    order: float
    log_order: float = 0.0
    gamma: float = 1.0
    smoothed: bool = False
    times: Optional[np.ndarray] = None
    dt1: Optional[np.ndarray] = None
    dt2: Optional[np.ndarray] = None
    static: bool = False
    cutoff: Optional[AdmissibleCutoff] = None

    def __post_init__(self):
        vals = _as_values(self.values)
        n = self.grid.n_points
        if self.grid.dim != 1 or vals.shape[1:] != (n, n):
            raise ValueError(f"symbol values must have shape (rows, {n}, {n})")
        object.__setattr__(self, "values", vals)
        for name in ("dt1", "dt2"):
            v = getattr(self, name)
            if v is not None:
                v = _as_values(v)
                if v.shape != vals.shape:
                    raise ValueError(f"{name} shape does not match values")
                object.__setattr__(self, name, v)
        times = np.zeros(vals.shape[0]) if self.times is None else np.asarray(self.times, float)
        if times.shape != (vals.shape[0],):
            raise ValueError("one time per symbol row is required")
        object.__setattr__(self, "times", times)

    @classmethod
    def from_function(cls, grid, func, order, log_order=0.0, gamma=1.0):
        """Static symbol from ``func(x, xi)`` broadcast over ``x[:, None]`` and ``xi[None, :]``."""
        x = grid.x[:, None]
        k = grid.frequencies[None, :]
        vals = np.broadcast_to(func(x, k), (grid.n_points, grid.n_points))
        return cls(grid, vals, order, log_order, gamma, static=True)

    @property
    def n_rows(self):
        return self.values.shape[0]

    def row(self, r=0):
        return self.values[r]

    def _derived(self, values, dt1=None, dt2=None, **kw):
        return replace(self, values=values, dt1=dt1, dt2=dt2, **kw)

    def select(self, rows):
        rows = np.atleast_1d(rows)
        pick = lambda v: None if v is None else v[rows]  # noqa: E731
        return replace(
            self, values=self.values[rows], dt1=pick(self.dt1), dt2=pick(self.dt2), times=self.times[rows]
        )

    def _check(self, other):
        if other.grid != self.grid or other.n_rows != self.n_rows:
            raise ValueError("symbols live on different lattices or time rows")

    def __mul__(self, other):
        if isinstance(other, Symbol):
            self._check(other)
            d1 = d2 = None
            if self.static and other.static:
                pass
            elif _has_dt(self, 1) and _has_dt(other, 1):
                a, b = self.values, other.values
                a1, b1 = _dt(self, 1), _dt(other, 1)
                d1 = a1 * b + a * b1
                if _has_dt(self, 2) and _has_dt(other, 2):
                    d2 = _dt(self, 2) * b + 2 * a1 * b1 + a * _dt(other, 2)
            return Symbol(
                self.grid, self.values * other.values, self.order + other.order,
                self.log_order + other.log_order, max(self.gamma, other.gamma),
                self.smoothed and other.smoothed, self.times, d1, d2,
                self.static and other.static, self.cutoff,
            )
        c = complex(other)
        scale = lambda v: None if v is None else c * v  # noqa: E731
        return self._derived(self.values * c, scale(self.dt1), scale(self.dt2))

    __rmul__ = __mul__

    def __add__(self, other):
        self._check(other)
        plus = lambda a, b: None if a is None or b is None else a + b  # noqa: E731
        return Symbol(
            self.grid, self.values + other.values, max(self.order, other.order),
            max(self.log_order, other.log_order), max(self.gamma, other.gamma),
            self.smoothed and other.smoothed, self.times,
            plus(_dt(self, 1, None), _dt(other, 1, None)),
            plus(_dt(self, 2, None), _dt(other, 2, None)),
            self.static and other.static, self.cutoff,
        )

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def conj(self):
        c = lambda v: None if v is None else np.conj(v)  # noqa: E731
        return self._derived(np.conj(self.values), c(self.dt1), c(self.dt2))

    def with_order(self, order, log_order=None):
        return replace(self, order=order, log_order=self.log_order if log_order is None else log_order)


def _has_dt(sym, k):
    return sym.static or (sym.dt1 if k == 1 else sym.dt2) is not None


def _dt(sym, k, missing=...):
    v = sym.dt1 if k == 1 else sym.dt2
    if v is not None:
        return v
    if sym.static:
        return np.zeros_like(sym.values)
    if missing is ...:
        raise ValueError("symbol carries no time derivatives")
    return missing


def _ascending(n):
    """Frequency indices in increasing order, Nyquist omitted."""
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    order = np.argsort(k)
    return order[k[order] != -n // 2]


def xi_difference(values, order=1):
    """Centered differences in ``xi`` on the lattice (spacing 1); Nyquist column set to 0."""
    values = np.asarray(values)
    idx = _ascending(values.shape[-1])
    out = np.zeros_like(values)
    g = values[..., idx]
    for _ in range(order):
        g = np.gradient(g, axis=-1)
    out[..., idx] = g
    return out


def x_derivative_values(values, grid):
    spec = np.fft.fft(values, axis=-2)
    k = (grid.frequencies * grid.nyquist_mask)[:, None]
    return np.fft.ifft(1j * k * spec, axis=-2)


def xi_derivative(a, order=1):
    """``d_xi^order a`` by lattice differences; declared order drops by ``order``."""
    d1 = None if a.dt1 is None else xi_difference(a.dt1, order)
    d2 = None if a.dt2 is None else xi_difference(a.dt2, order)
    return replace(a, values=xi_difference(a.values, order), order=a.order - order, dt1=d1, dt2=d2)


def x_derivative(a):
    """``d_x a`` spectrally; declared log-order rises by one (log-Lipschitz loss)."""
    g = a.grid
    d1 = None if a.dt1 is None else x_derivative_values(a.dt1, g)
    d2 = None if a.dt2 is None else x_derivative_values(a.dt2, g)
    return replace(
        a, values=x_derivative_values(a.values, g), log_order=a.log_order + 1, dt1=d1, dt2=d2
    )


def _smooth_values(values, psi):
    return np.fft.ifft(np.fft.fft(values, axis=-2) * psi, axis=-2)


def smooth_symbol(a, psi):
    """Multiply the x-spectrum of every frequency column by ``psi(eta, xi)``."""
    if a.smoothed:
        raise ValueError("symbol is already smoothed")
    if psi.grid != a.grid:
        raise ValueError("cutoff and symbol use different lattices")
    m = psi.matrix
    d1 = None if a.dt1 is None else _smooth_values(a.dt1, m)
    d2 = None if a.dt2 is None else _smooth_values(a.dt2, m)
    return replace(a, values=_smooth_values(a.values, m), dt1=d1, dt2=d2, smoothed=True, cutoff=psi)


def paley_wiener_excess(a, psi=None):
    """Largest x-spectral magnitude outside ``|eta| < eps2 (gamma + |xi|)``, relative to the largest overall."""
    psi = psi or a.cutoff
    if psi is None:
        raise ValueError("no cutoff to measure against")
    spec = np.abs(np.fft.fft(a.values, axis=-2))
    outside = ~psi.support_mask()
    outside[:, a.grid.n_points // 2] = False
    top = spec.max()
    return float(spec[:, outside].max() / top) if top > 0 and outside.any() else 0.0


def _weight(grid, gamma, m, delta):
    k = np.abs(grid.frequencies)
    return (gamma + k) ** m * np.log1p(gamma + k) ** delta


def symbol_seminorm(a, m, delta, k):
    """``max_{j <= k} sup (gamma+|xi|)^{-m+j} log^{-delta}(1+gamma+|xi|) |d_xi^j a|``."""
    if k not in (0, 1, 2):
        raise ValueError("seminorms are available for k <= 2")
    cols = _ascending(a.grid.n_points)
    best = 0.0
    for j in range(k + 1):
        vals = a.values if j == 0 else xi_difference(a.values, j)
        w = _weight(a.grid, a.gamma, m - j, delta)
        best = max(best, float((np.abs(vals[..., cols]) / w[cols]).max()))
    return best


def _geometric(mmax, count):
    if mmax < 1:
        return np.zeros(0, dtype=int)
    return np.unique(np.round(np.geomspace(1, mmax, count)).astype(int))


def symbol_zygmund_constant(a, m, delta, n_shifts=10, max_columns=64):
    """Smallest ``K`` with second differences in ``(t, x)`` bounded by ``K (tau + |y|) (gamma+|xi|)^m log^delta``.

    Shifts are geometric in both variables with ``tau + |y| < 1``; at most
    ``max_columns`` frequency columns (evenly spread) are examined.
    """
    n = a.grid.n_points
    cols = _ascending(n)
    if cols.size > max_columns:
        cols = cols[np.linspace(0, cols.size - 1, max_columns).round().astype(int)]
    w = _weight(a.grid, a.gamma, m, delta)[cols]
    vals = a.values[:, :, cols] / w
    h = a.grid.spacing
    xs = np.concatenate([[0], _geometric(min(n // 2, int(1.0 / h)), n_shifts)])
    if a.n_rows >= 3:
        dt = float(a.times[1] - a.times[0])
        ts = np.concatenate([[0], _geometric(min((a.n_rows - 1) // 2, int(1.0 / dt)), n_shifts)])
    else:
        dt, ts = 1.0, np.array([0])
    best = 0.0
    nr = a.n_rows
    for tau in ts:
        mid = vals[tau: nr - tau]
        up = vals[2 * tau:]
        down = vals[: nr - 2 * tau]
        for y in xs:
            dist = tau * dt + y * h
            if dist == 0 or dist >= 1:
                continue
            d = np.roll(up, -y, axis=1) + np.roll(down, y, axis=1) - 2.0 * mid
            best = max(best, float(np.abs(d).max()) / dist)
    return best


def band_index(grid, gamma):
    """``j`` with ``Lambda(xi, gamma)`` in ``[2^j, 2^(j+1))`` for every lattice frequency."""
    return np.floor(np.log2(grid.lam(gamma))).astype(int)


def _resolve_rows(a, rows):
    if rows is None:
        return np.array([0])
    return np.atleast_1d(np.asarray(rows, dtype=int))


def build_alpha(a, gamma, linkage="banded", eps=None, rows=None, rho=DEFAULT_KERNEL, derivatives=2):
    """``alpha = a_eps(t, x) xi^2 + gamma^2`` at the requested time rows.

    ``linkage="banded"`` uses ``eps = 2^-j`` on the band ``Lambda in [2^j, 2^(j+1))``;
    ``"fixed"`` uses the single ``eps`` everywhere. Time derivatives up to
    ``derivatives`` come from the differentiated kernel.
    """
    a = _scalar_coefficient(a)
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}")
    grid = a.grid
    rows = _resolve_rows(a, rows)
    k2 = grid.frequencies.astype(float) ** 2
    if linkage == "fixed":
        if eps is None:
            raise ValueError("fixed linkage needs eps")
        bands = {0: float(eps)}
        band_of = np.zeros(grid.n_points, dtype=int)
    else:
        band_of = band_index(grid, gamma)
        bands = {int(j): 2.0 ** -int(j) for j in np.unique(band_of)}
    shape = (rows.size, grid.n_points, grid.n_points)
    vals = np.empty(shape)
    d1 = np.empty(shape) if derivatives >= 1 else None
    d2 = np.empty(shape) if derivatives >= 2 else None
    for j, e in bands.items():
        cols = band_of == j
        if not cols.any():
            continue
        try:
            coeff = mollify_at(a, min(e, 1.0), rows, 0, rho)
        except ValueError as exc:
            raise ValueError(f"band {j}: {exc}") from None
        vals[:, :, cols] = coeff[:, :, None] * k2[cols] + gamma**2
        if d1 is not None:
            d1[:, :, cols] = mollify_at(a, min(e, 1.0), rows, 1, rho)[:, :, None] * k2[cols]
        if d2 is not None:
            d2[:, :, cols] = mollify_at(a, min(e, 1.0), rows, 2, rho)[:, :, None] * k2[cols]
    return Symbol(grid, vals, 2.0, 0.0, float(gamma), False, a.times[rows], d1, d2)


def build_alpha_tilde(a, gamma, rows=None):
    """``a(t, x) xi^2 + gamma^2`` with the coefficients left unmollified in time."""
    a = _scalar_coefficient(a)
    rows = _resolve_rows(a, rows)
    k2 = a.grid.frequencies.astype(float) ** 2
    vals = a.values[rows][:, :, None] * k2[None, None, :] + gamma**2
    return Symbol(a.grid, vals, 2.0, 0.0, float(gamma), False, a.times[rows])


def _scalar_coefficient(a):
    """Accept a field or a 1x1 coefficient matrix (the only shape in one space dimension)."""
    if isinstance(a, CoefficientField):
        return a
    rows = list(a)
    if len(rows) != 1 or len(rows[0]) != 1:
        raise ValueError("in one space dimension the coefficient matrix is 1x1")
    return rows[0][0]


def symbol_power(a, p):
    """Pointwise ``a^p`` for a positive symbol, with time derivatives by the chain rule."""
    v = a.values
    top = np.abs(v).max()
    if np.abs(v.imag).max() > 1e-12 * top or v.real.min() <= 0:
        raise ValueError("symbol_power needs a positive symbol")
    r = v.real
    out = r**p
    d1 = d2 = None
    if a.dt1 is not None:
        a1 = a.dt1.real
        d1 = p * r ** (p - 1) * a1
        if a.dt2 is not None:
            d2 = p * (p - 1) * r ** (p - 2) * a1**2 + p * r ** (p - 1) * a.dt2.real
    return replace(
        a, values=out.astype(complex), order=p * a.order, log_order=p * a.log_order, dt1=d1, dt2=d2
    )


def symbol_time_derivative(a, order):
    """``d_t a`` (declared log-order + 1) or ``d_t^2 a`` (declared order + 1)."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    vals = _dt(a, order)
    if order == 1:
        return replace(a, values=vals, log_order=a.log_order + 1, dt1=None, dt2=None, static=a.static)
    return replace(a, values=vals, order=a.order + 1, dt1=None, dt2=None, static=a.static)


def per_band_sup(values, grid, gamma, bands=None):
    """``sup |values|`` over each dyadic band ``Lambda in [2^j, 2^(j+1))`` (Nyquist excluded)."""
    bidx = band_index(grid, gamma)
    keep = np.ones(grid.n_points, bool)
    keep[grid.n_points // 2] = False
    js = np.unique(bidx[keep]) if bands is None else np.asarray(bands)
    sups = np.array([np.abs(values[..., (bidx == j) & keep]).max() for j in js])
    return js, sups


def band_slope(js, sups):
    """Least-squares slope of ``log2 sup`` against the band index."""
    return float(np.polyfit(np.asarray(js, float), np.log2(sups), 1)[0])


def save_symbol(path, a):
    """Store a symbol compactly; smoothed symbols keep only x-spectra inside the cutoff support."""
    spec = np.fft.fft(a.values, axis=-2)
    meta = dict(
        order=a.order, log_order=a.log_order, gamma=a.gamma, smoothed=a.smoothed,
        static=a.static, n=a.grid.n_points, rows=a.n_rows,
    )
    if a.smoothed:
        # keep every coefficient the cutoff did not annihilate
        mask = np.any(np.abs(spec) > 0, axis=0)
    else:
        mask = np.ones(spec.shape[1:], bool)
    payload = {"coeffs": spec[:, mask], "mask": np.packbits(mask), "times": a.times}
    for name in ("dt1", "dt2"):
        v = getattr(a, name)
        if v is not None:
            payload[name] = np.fft.fft(v, axis=-2)[:, mask]
    if a.cutoff is not None:
        meta.update(mu=a.cutoff.mu, cutoff_gamma=a.cutoff.gamma, steepness=a.cutoff.profile.steepness)
    np.savez_compressed(path, meta=np.array(repr(meta)), **payload)


def load_symbol(path):
    import ast

    with np.load(path) as data:
        meta = ast.literal_eval(str(data["meta"]))
        n, rows = meta["n"], meta["rows"]
        grid = PeriodicGrid(n)
        mask = np.unpackbits(data["mask"])[: n * n].astype(bool).reshape(n, n)

        def unpack(c):
            spec = np.zeros((rows, n, n), complex)
            spec[:, mask] = c
            return np.fft.ifft(spec, axis=-2)

        dts = {k: unpack(data[k]) if k in data else None for k in ("dt1", "dt2")}
        cutoff = None
        if "mu" in meta:
            cutoff = AdmissibleCutoff(
                meta["mu"], meta["cutoff_gamma"], grid, RadialCutoff(steepness=meta["steepness"])
            )
        return Symbol(
            grid, unpack(data["coeffs"]), meta["order"], meta["log_order"], meta["gamma"],
            meta["smoothed"], data["times"], dts["dt1"], dts["dt2"], meta["static"], cutoff,
        )
