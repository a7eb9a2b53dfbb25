"""Coefficient fields on time x torus, Weierstrass generators and time mollification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.signal import fftconvolve

from . import kernels
from ._kernels_py import reflect_index
from .function_spaces import holder_seminorm
from .spectral_core import PeriodicGrid, ScalarField

REGULARITY_CLASSES = ("lipschitz", "zygmund", "log-lipschitz", "smooth")
AXES = ("t", "x", "tx")
DEFAULT_LADDER = tuple(2.0 ** -k for k in range(2, 7))
# direct summation is faster than an FFT for short kernels
_FFT_THRESHOLD = 64


def _profile(s, derivative=0):
    """``exp(-1/(1-s^2))`` on ``(-1, 1)`` and its first two derivatives."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    q = 1.0 - si * si
    base = np.exp(-1.0 / q)
    if derivative == 0:
        out[inside] = base
    elif derivative == 1:
        out[inside] = base * (-2.0 * si / q**2)
    elif derivative == 2:
        g = -2.0 * si / q**2
        dg = -2.0 / q**2 - 8.0 * si * si / q**3
        out[inside] = base * (g * g + dg)
    else:
        raise ValueError("only derivatives 0, 1, 2 are available")
    return out


@dataclass(frozen=True)
class MollifierKernel:
    """Even smooth bump supported in ``[-1, 1]`` with unit mass.

    ``fine_points`` sets the reference sample used for the moments; discrete
    weights for a given ``(eps, dt)`` are renormalized so that the discrete
    moments match the continuous ones exactly.
    """

    fine_points: int = 8193
    _fine: np.ndarray = field(init=False, repr=False, compare=False)
    _scale: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        s = np.linspace(-1.0, 1.0, self.fine_points)
        raw = _profile(s)
        # the bump vanishes to all orders at the ends, so the trapezoid rule is spectrally accurate
        scale = 1.0 / (raw.sum() * (s[1] - s[0]))
        object.__setattr__(self, "_fine", s)
        object.__setattr__(self, "_scale", scale)

    def __call__(self, s, derivative=0):
        return self._scale * _profile(s, derivative)

    @property
    def mass(self):
        s = self._fine
        return float(self(s).sum() * (s[1] - s[0]))

    def abs_moment(self):
        """``int rho(s) |s| ds``."""
        s = self._fine
        return float((self(s) * np.abs(s)).sum() * (s[1] - s[0]))

    def weights(self, eps, dt, derivative=0):
        """Weights ``w[m]`` on offsets ``s_m = (m - M) dt`` approximating convolution with ``d^k rho_eps``.

        Normalization: ``sum w = 1`` for the kernel itself, ``-sum w s = 1`` for
        the first derivative and ``sum w s^2 / 2 = 1`` for the second, so that
        ``t``, and ``t^2 / 2`` respectively, are differentiated exactly.
        """
        _check_resolution(eps, dt)
        M = int(math.ceil(eps / dt)) - 1
        m = np.arange(1, M + 1)
        half = _profile(m * dt / eps, derivative)
        sign = -1.0 if derivative == 1 else 1.0
        center = _profile(np.zeros(1), derivative)
        w = np.concatenate([sign * half[::-1], center, half])
        s = np.arange(-M, M + 1) * dt
        if derivative == 0:
            w = w / w.sum()
        elif derivative == 1:
            w = w / -(w * s).sum()
        else:
            w0 = self.weights(eps, dt, 0)
            w = w - w.sum() * w0
            w = w / (w * s * s / 2.0).sum()
        return w


DEFAULT_KERNEL = MollifierKernel()


def _check_resolution(eps, dt):
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if eps / dt < 8.0:
        raise ValueError(f"eps={eps} spans fewer than 8 time samples (dt={dt})")


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Real samples ``a(t, x)`` on a uniform time grid times a 1D torus.

    ``func(t, x)``, when present, evaluates the same field analytically at
    arbitrary times; otherwise ``at`` interpolates linearly in time.
    """

    grid: PeriodicGrid
    times: np.ndarray
    values: np.ndarray
    lam0: float
    Lam0: float
    regularity: str = "zygmund"
    func: Optional[Callable] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("need at least two time samples")
        steps = np.diff(times)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
            raise ValueError("time samples must be uniform and increasing")
        if values.shape != (times.size,) + self.grid.shape:
            raise ValueError(f"values shape {values.shape} does not match times x grid")
        if not 0 < self.lam0 <= self.Lam0:
            raise ValueError("ellipticity bounds must satisfy 0 < lam0 <= Lam0")
        if self.regularity not in REGULARITY_CLASSES:
            raise ValueError(f"unknown regularity class {self.regularity!r}")
        tol = 1e-12 * self.Lam0
        if values.min() < self.lam0 - tol or values.max() > self.Lam0 + tol:
            raise ValueError(
                f"values leave [{self.lam0}, {self.Lam0}]: range [{values.min()}, {values.max()}]"
            )
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def dt(self):
        return float(self.times[1] - self.times[0])

    @property
    def T(self):
        return float(self.times[-1] - self.times[0])

    @property
    def n_times(self):
        return self.times.size

    def row(self, i):
        return ScalarField(self.grid, self.values[i])

    def at(self, t):
        if self.func is not None:
            return np.asarray(self.func(t, self.grid.x), dtype=float)
        pos = (t - self.times[0]) / self.dt
        i = int(np.clip(np.floor(pos), 0, self.n_times - 2))
        w = pos - i
        return (1.0 - w) * self.values[i] + w * self.values[i + 1]

    def time_reversed(self):
        return CoefficientField(
            self.grid, self.times, self.values[::-1].copy(), self.lam0, self.Lam0, self.regularity
        )

    def with_values(self, values, regularity=None):
        return CoefficientField(
            self.grid, self.times, values, self.lam0, self.Lam0, regularity or self.regularity
        )

    def zygmund_tx_seminorm(self, n_shifts=16, max_rows=1024):
        """Isotropic space-time Zygmund seminorm measured on geometric shift sets.

        Returns ``sup |a(t+tau, x+y) + a(t-tau, x-y) - 2 a(t, x)| / |(tau, y)|``
        over ``0 < |(tau, y)| < 1``; the table is thinned in time to at most
        ``max_rows`` rows first.
        """
        stride = max(1, int(math.ceil(self.n_times / max_rows)))
        vals = self.values[::stride]
        dt = self.dt * stride
        h = self.grid.spacing
        tsh = _geometric_shifts(min(vals.shape[0] // 2 - 1, int(1.0 / dt)), n_shifts)
        xsh = _geometric_shifts(min(self.grid.n_points // 2, int(1.0 / h)), n_shifts)
        tsh = np.concatenate([[0], tsh])
        xsh = np.concatenate([[0], xsh])
        sup = kernels.second_difference_sup_2d(vals, tsh, xsh)
        dist = np.hypot(tsh[:, None] * dt, xsh[None, :] * h)
        valid = (dist > 0) & (dist < 1) & np.isfinite(sup)
        return float(np.max(sup[valid] / dist[valid]))


def _geometric_shifts(mmax, count):
    if mmax < 1:
        return np.zeros(0, dtype=np.int64)
    return np.unique(np.round(np.geomspace(1, mmax, count)).astype(np.int64))


@dataclass(frozen=True, eq=False)
class LowerOrderCoefficients:
    """First- and zeroth-order coefficients ``b_j(t, x)`` and ``c(t, x)``.

    ``b[0]`` multiplies ``d_t u`` and ``b[1]`` multiplies ``d_x u``.
    """

    times: np.ndarray
    b: np.ndarray
    c: np.ndarray
    theta: float = 1.0

    def __post_init__(self):
        if not self.theta > 0.5:
            raise ValueError("lower-order coefficients need Hoelder exponent theta > 1/2")
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        times = np.asarray(self.times, dtype=float)
        if b.shape[0] != 2 or b.shape[1:] != c.shape or c.shape[0] != times.size:
            raise ValueError("expected b of shape (2, nt, n) and c of shape (nt, n)")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "times", times)

    @classmethod
    def zero(cls, grid, times):
        nt = len(times)
        return cls(times, np.zeros((2, nt) + grid.shape), np.zeros((nt,) + grid.shape))

    @property
    def is_zero(self):
        return not (np.any(self.b) or np.any(self.c))

    def at(self, t):
        """Linearly interpolated ``(b0, b1, c)`` at time ``t``."""
        times = self.times
        if times.size == 1:
            return self.b[0, 0], self.b[1, 0], self.c[0]
        pos = (t - times[0]) / (times[1] - times[0])
        i = int(np.clip(np.floor(pos), 0, times.size - 2))
        w = pos - i

        def lerp(a):
            return (1.0 - w) * a[i] + w * a[i + 1]

        return lerp(self.b[0]), lerp(self.b[1]), lerp(self.c)

    def holder_seminorms(self, spacing):
        """Largest spatial Hoelder-``theta`` seminorm of each ``b_j`` over time, capped below 1."""
        theta = min(self.theta, 0.999)
        return [
            max(holder_seminorm(row, theta, spacing) for row in bj) for bj in self.b
        ]

    def sup_c(self):
        return float(np.abs(self.c).max())


def _weierstrass_1d(z, depth, phases):
    out = np.zeros_like(z, dtype=float)
    for j in range(depth):
        out += 2.0**-j * np.cos(2.0**j * z + phases[j])
    return out


def _time_grid(T, dt):
    nt = int(round(T / dt)) + 1
    return np.arange(nt) * dt


def weierstrass_zygmund(
    depth,
    phase_seed=None,
    axis="tx",
    grid=None,
    T=1.0,
    dt=2.0**-12,
    lam0=0.5,
    Lam0=2.0,
):
    """Coefficient ``lam0 + (Lam0 - lam0)/2 (1 + W / ||W||_inf)`` built from a Weierstrass sum.

    ``W(z) = sum_{j<depth} 2^-j cos(2^j z + phi_j)`` runs along the chosen
    axis; for ``axis="tx"`` it is ``(W_x(x) + W_t(t)) / 2`` with independent
    phases. ``phase_seed=None`` gives zero phases.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    grid = grid or PeriodicGrid(512)
    if grid.dim != 1:
        raise ValueError("coefficient generators work on 1D grids")
    top = 2.0 ** (depth - 1)
    if "x" in axis and top >= grid.n_points / 2:
        raise ValueError(f"depth {depth} exceeds the grid resolution n={grid.n_points}")
    if "t" in axis and top * dt > math.pi / 4:
        raise ValueError(f"depth {depth} is not resolved by the time step {dt}")
    if phase_seed is None:
        px = pt = np.zeros(depth)
    else:
        sx, st = np.random.SeedSequence(phase_seed).spawn(2)
        px = np.random.default_rng(sx).uniform(0, 2 * np.pi, depth)
        pt = np.random.default_rng(st).uniform(0, 2 * np.pi, depth)

    def raw(t, x):
        t = np.asarray(t, dtype=float)
        if axis == "x":
            return _weierstrass_1d(x, depth, px) + 0.0 * t[..., None]
        if axis == "t":
            return _weierstrass_1d(t, depth, pt)[..., None] + 0.0 * x
        return 0.5 * (_weierstrass_1d(x, depth, px) + _weierstrass_1d(t, depth, pt)[..., None])

    times = _time_grid(T, dt)
    table = raw(times, grid.x)
    scale = float(np.abs(table).max())
    mid, half = (lam0 + Lam0) / 2.0, (Lam0 - lam0) / 2.0

    def func(t, x):
        # clip guards against tiny overshoot between the samples used for the norm
        return np.clip(mid + half * raw(np.asarray(t), x) / scale, lam0, Lam0)

    values = mid + half * table / scale
    return CoefficientField(grid, times, values, lam0, Lam0, "zygmund", func)


def banded_weierstrass(
    depth, phase_seed=None, grid=None, T=1.0, dt=2.0**-12, lam0=0.5, Lam0=2.0, x_modes=2
):
    """Zygmund in time, band-limited in space: ``W = sum_j 2^-j cos(2^j t + phi_j) m_j(x)``.

    Each ``m_j`` is a positive trigonometric polynomial of degree ``x_modes``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    grid = grid or PeriodicGrid(512)
    if 2.0 ** (depth - 1) * dt > math.pi / 4:
        raise ValueError(f"depth {depth} is not resolved by the time step {dt}")
    rng = np.random.default_rng(np.random.SeedSequence(phase_seed if phase_seed is not None else 0))
    phases = rng.uniform(0, 2 * np.pi, depth) if phase_seed is not None else np.zeros(depth)
    shifts = rng.uniform(0, 2 * np.pi, (depth, x_modes))
    ks = np.arange(1, x_modes + 1)

    def modulation(x):
        waves = np.cos(ks[None, :, None] * x[None, None, :] + shifts[:, :, None])
        return 1.0 + 0.5 * (waves / ks[None, :, None] ** 2).sum(axis=1) / np.sum(1.0 / ks**2)

    mods = modulation(grid.x)

    def raw(t, x):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        m = mods if x is grid.x else modulation(np.asarray(x))
        terms = 2.0 ** -np.arange(depth)[:, None] * np.cos(
            2.0 ** np.arange(depth)[:, None] * t[None, :] + phases[:, None]
        )
        return np.einsum("jt,jx->tx", terms, m)

    times = _time_grid(T, dt)
    table = raw(times, grid.x)
    scale = float(np.abs(table).max())
    mid, half = (lam0 + Lam0) / 2.0, (Lam0 - lam0) / 2.0

    def func(t, x):
        out = np.clip(mid + half * raw(t, x) / scale, lam0, Lam0)
        return out[0] if np.ndim(t) == 0 else out

    return CoefficientField(grid, times, mid + half * table / scale, lam0, Lam0, "zygmund", func)


def weierstrass_holder(theta, depth=None, phase_seed=None, grid=None):
    """Real field ``sum_j 2^(-j theta) cos(2^j x + phi_j)``, Hoelder of exponent ``theta`` uniformly in depth.

    ``depth`` defaults to the finest octave below ``n/2``.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    grid = grid or PeriodicGrid(512)
    top = int(math.log2(grid.n_points // 2))
    depth = top if depth is None else depth
    if depth < 1 or depth > top:
        raise ValueError(f"depth must lie in [1, {top}] on a grid of {grid.n_points} points")
    phases = (
        np.zeros(depth)
        if phase_seed is None
        else np.random.default_rng(phase_seed).uniform(0, 2 * np.pi, depth)
    )
    js = np.arange(depth)
    w = (2.0 ** (-js * theta))[:, None] * np.cos(2.0 ** js[:, None] * grid.x[None, :] + phases[:, None])
    return ScalarField(grid, w.sum(axis=0))


def constant_field(value, grid, T=1.0, dt=2.0**-8, lam0=None, Lam0=None):
    times = _time_grid(T, dt)
    lam0 = value if lam0 is None else lam0
    Lam0 = value if Lam0 is None else Lam0
    values = np.full((times.size,) + grid.shape, float(value))
    return CoefficientField(
        grid, times, values, lam0, Lam0, "smooth", lambda t, x: np.full(np.shape(x), float(value))
    )


def field_from_function(func, grid, T=1.0, dt=2.0**-10, lam0=None, Lam0=None, regularity="smooth"):
    """Tabulate ``func(t, x)`` (vectorized over ``x``) and keep it for exact evaluation."""
    times = _time_grid(T, dt)
    values = np.stack([np.broadcast_to(func(t, grid.x), grid.shape) for t in times]).astype(float)
    lam0 = float(values.min()) if lam0 is None else lam0
    Lam0 = float(values.max()) if Lam0 is None else Lam0
    return CoefficientField(grid, times, values, lam0, Lam0, regularity, func)


def _convolve(values, weights):
    """``out[r] = sum_m w[m] values[reflect(r - (m - M))]`` for every row."""
    M = (weights.size - 1) // 2
    if M <= _FFT_THRESHOLD:
        return kernels.convolve_reflect(values, weights)
    nt = values.shape[0]
    ext = values[reflect_index(np.arange(-M, nt + M), nt)]
    w = weights.reshape((-1,) + (1,) * (values.ndim - 1))
    return fftconvolve(ext, w, mode="valid", axes=0)


@dataclass(frozen=True, eq=False)
class MollifiedField:
    field: CoefficientField
    dt1: np.ndarray
    dt2: np.ndarray
    eps: float


def mollify_time(a, eps, rho=DEFAULT_KERNEL):
    """Time mollification ``rho_eps * a`` with even reflection past both ends.

    Returns the mollified field with ``d_t a_eps`` and ``d_t^2 a_eps``
    obtained by convolving with the differentiated kernel.
    """
    dt = a.dt
    values = _convolve(a.values, rho.weights(eps, dt, 0))
    d1 = _convolve(a.values, rho.weights(eps, dt, 1))
    d2 = _convolve(a.values, rho.weights(eps, dt, 2))
    # averaging cannot leave the hull of the data beyond rounding
    values = np.clip(values, a.values.min(), a.values.max())
    return MollifiedField(a.with_values(values), d1, d2, eps)


def mollify_at(a, eps, rows, derivative=0, rho=DEFAULT_KERNEL):
    """``d_t^k (rho_eps * a)`` evaluated only at the given time rows."""
    rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
    return kernels.convolve_reflect(a.values, rho.weights(eps, a.dt, derivative), rows)


@dataclass
class MollificationReport:
    eps: np.ndarray
    sup_diff: np.ndarray
    sup_dt1: np.ndarray
    sup_dt2: np.ndarray
    min_value: float
    max_value: float
    lam0: float
    Lam0: float
    gamma: float
    diff_slope: float
    dt2_slope: float
    dt1_power: float
    dt1_power_residual: float
    dt1_log_slope: float
    dt1_log_residual: float
    margin: float

    @property
    def degenerate(self):
        """All three families vanish (constant coefficients)."""
        top = max(self.sup_diff.max(), self.sup_dt1.max(), self.sup_dt2.max())
        return top <= 1e-10 * self.Lam0

    @property
    def bounds_ok(self):
        tol = 1e-12 * self.Lam0
        return self.min_value >= self.lam0 - tol and self.max_value <= self.Lam0 + tol

    def checks(self, tol=0.15):
        if self.degenerate:
            return {"diff": True, "dt2": True, "dt1_power": True, "dt1_log": True, "bounds": self.bounds_ok}
        return {
            "diff": abs(self.diff_slope - 1.0) <= tol,
            "dt2": abs(self.dt2_slope + 1.0) <= tol,
            "dt1_power": self.dt1_power <= tol,
            "dt1_log": self.dt1_log_slope > 0 and self.dt1_log_residual < self.dt1_power_residual,
            "bounds": self.bounds_ok,
        }


def _loglog_fit(x, y):
    """Slope and RMS log-residual of ``log y = c + p log x``."""
    lx, ly = np.log(x), np.log(y)
    coef = np.polyfit(lx, ly, 1)
    resid = ly - np.polyval(coef, lx)
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def mollification_report(a, ladder=DEFAULT_LADDER, rho=DEFAULT_KERNEL, gamma=1.0, margin=None):
    """Measure how ``a_eps - a``, ``d_t a_eps`` and ``d_t^2 a_eps`` scale along an eps ladder.

    Suprema are taken over times at distance ``>= margin`` (default: the
    largest eps) from both ends, where the boundary reflection plays no role.
    """
    eps = np.asarray(sorted(ladder, reverse=True), dtype=float)
    if eps.size < 2:
        raise ValueError("ladder needs at least two values")
    for e in eps:
        _check_resolution(e, a.dt)
    margin = float(eps.max()) if margin is None else float(margin)
    rel = a.times - a.times[0]
    inner = (rel >= margin - 1e-12) & (rel <= a.T - margin + 1e-12)
    if not inner.any():
        raise ValueError("time window too short for the requested margin")
    diff, d1s, d2s = [], [], []
    lo, hi = np.inf, -np.inf
    for e in eps:
        m = mollify_time(a, e, rho)
        diff.append(np.abs(m.field.values - a.values)[inner].max())
        d1s.append(np.abs(m.dt1)[inner].max())
        d2s.append(np.abs(m.dt2)[inner].max())
        lo = min(lo, m.field.values.min())
        hi = max(hi, m.field.values.max())
    diff, d1s, d2s = map(np.asarray, (diff, d1s, d2s))
    nan = float("nan")
    diff_slope = dt2_slope = power = p_res = log_slope = log_res = nan
    if np.all(diff > 0) and np.all(d2s > 0) and np.all(d1s > 0):
        diff_slope, _ = _loglog_fit(eps, diff)
        dt2_slope, _ = _loglog_fit(eps, d2s)
        neg_power, p_res = _loglog_fit(eps, d1s)
        power = -neg_power
        ell = np.log1p(gamma + 1.0 / eps)
        coef = np.polyfit(ell, d1s, 1)
        model = np.polyval(coef, ell)
        log_slope = float(coef[0])
        log_res = (
            float(np.sqrt(np.mean(np.log(d1s / model) ** 2))) if np.all(model > 0) else float("inf")
        )
    return MollificationReport(
        eps, diff, d1s, d2s, float(lo), float(hi), a.lam0, a.Lam0, gamma,
        diff_slope, dt2_slope, power, p_res, log_slope, log_res, margin,
    )
