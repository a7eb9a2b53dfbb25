"""Method-of-lines solver for ``u_tt - d_x(a d_x u) + b0 u_t + b1 u_x + c u = f`` on the torus.

Spatial derivatives are spectral, pointwise products follow the 2/3 rule and
time stepping is classical RK4. The operator-replacement remainders used by
the energy argument live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .coefficients import CoefficientField, LowerOrderCoefficients
from .energy import (
    EnergyOperators,
    EnergyTrace,
    gronwall_fit,
    tarama_state,
)
from .function_spaces import sobolev_norm
from .paraops import SpectralOperator, spectral_matrix
from .parasymbols import Symbol, build_alpha, build_cutoff, smooth_symbol
from .spectral_core import ScalarField

CFL = 0.25
MAX_SAMPLES = 512


def dealias_mask(grid):
    """Modes kept by the 2/3 rule: ``|k| <= n/3`` (Nyquist always dropped)."""
    return (np.abs(grid.frequencies) <= grid.n_points // 3) & (grid.nyquist_mask > 0)


@dataclass(eq=False)
class CauchyProblem:
    """Coefficients, data and source for one run.

    ``source(t)`` returns samples (or a ``ScalarField``) of ``f`` at time
    ``t``; ``None`` means ``f = 0``.
    """

    a: CoefficientField
    u0: ScalarField
    u1: ScalarField
    T: float = 1.0
    lower: Optional[LowerOrderCoefficients] = None
    source: Optional[Callable[[float], object]] = None
    dt: Optional[float] = None

    def __post_init__(self):
        g = self.a.grid
        if self.u0.grid != g or self.u1.grid != g:
            raise ValueError("data and coefficients live on different grids")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.lower is not None and self.lower.b.shape[2:] != g.shape:
            raise ValueError("lower-order coefficients do not match the grid")
        limit = self.cfl_limit
        if self.dt is not None and self.dt > limit * (1 + 1e-12):
            raise ValueError(f"time step {self.dt} violates the CFL limit {limit:.3e}")

    @property
    def grid(self):
        return self.a.grid

    @property
    def cfl_limit(self):
        return CFL * self.grid.spacing / math.sqrt(self.a.Lam0)

    def source_at(self, t):
        if self.source is None:
            return None
        f = self.source(t)
        return f.samples if isinstance(f, ScalarField) else np.asarray(f, dtype=complex)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    u: np.ndarray
    dtu: np.ndarray
    dt: float
    stride: int
    grid: object
    max_stage_residual: float = 0.0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.dtu))):
            raise ValueError("trajectory holds non-finite values")

    def __len__(self):
        return self.times.size

    def state(self, i):
        return ScalarField(self.grid, self.u[i]), ScalarField(self.grid, self.dtu[i])

    def norm_pair(self, sigma=0.0):
        """``||u||_{H^{sigma+1/2}} + ||d_t u||_{H^{sigma-1/2}}`` at every sample."""
        out = np.empty(len(self))
        for i in range(len(self)):
            u, d = self.state(i)
            out[i] = sobolev_norm(u, sigma + 0.5) + sobolev_norm(d, sigma - 0.5)
        return out

    def growth_ratio(self, sigma=0.0):
        """``sup_t`` of the norm pair divided by its initial value."""
        pair = self.norm_pair(sigma)
        return float(pair.max() / pair[0])


class _Rhs:
    """Spectral right-hand side of the first-order system in ``(u, d_t u)``."""

    def __init__(self, problem):
        self.p = problem
        g = problem.grid
        self.grid = g
        self.ik = 1j * g.frequencies * g.nyquist_mask
        self.keep = dealias_mask(g)

    def _filtered(self, values):
        return np.fft.ifft(np.fft.fft(values) * self.keep)

    def _product(self, coeff, field_hat):
        """Dealiased spectrum of ``coeff * field`` with both factors cut to ``|k| <= n/3``."""
        c = self._filtered(coeff)
        f = np.fft.ifft(field_hat * self.keep)
        return np.fft.fft(c * f) * self.keep

    def spatial(self, u_hat, v_hat, t):
        """Spectrum of ``-d_x(a d_x u) + b0 v + b1 d_x u + c u``."""
        a = self.p.a.at(t)
        ux = self.ik * u_hat
        out = -self.ik * self._product(a, ux)
        if self.p.lower is not None and not self.p.lower.is_zero:
            b0, b1, c = self.p.lower.at(t)
            out = out + self._product(b0, v_hat) + self._product(b1, ux) + self._product(c, u_hat)
        return out

    def __call__(self, t, u_hat, v_hat):
        acc = -self.spatial(u_hat, v_hat, t)
        f = self.p.source_at(t)
        if f is not None:
            acc = acc + np.fft.fft(f) * self.keep
        return v_hat, acc


def _step_count(problem):
    dt_max = problem.dt if problem.dt is not None else problem.cfl_limit
    n_steps = int(math.ceil(problem.T / dt_max - 1e-9))
    stride = int(math.ceil(n_steps / MAX_SAMPLES))
    n_steps = int(math.ceil(n_steps / stride)) * stride
    return n_steps, stride


def solve(problem):
    """Integrate with RK4 and return samples every ``ceil((T/dt)/512)`` steps."""
    g = problem.grid
    n = g.n_points
    rhs = _Rhs(problem)
    n_steps, stride = _step_count(problem)
    dt = problem.T / n_steps
    t0 = float(problem.a.times[0])
    keep = rhs.keep
    u = np.fft.fft(problem.u0.samples) * keep
    v = np.fft.fft(problem.u1.samples) * keep
    n_samples = n_steps // stride + 1
    U = np.empty((n_samples, n), complex)
    V = np.empty((n_samples, n), complex)
    U[0], V[0] = np.fft.ifft(u), np.fft.ifft(v)
    worst = 0.0
    t = t0
    for step in range(1, n_steps + 1):
        k1u, k1v = rhs(t, u, v)
        k2u, k2v = rhs(t + dt / 2, u + dt / 2 * k1u, v + dt / 2 * k1v)
        k3u, k3v = rhs(t + dt / 2, u + dt / 2 * k2u, v + dt / 2 * k2v)
        k4u, k4v = rhs(t + dt, u + dt * k3u, v + dt * k3v)
        du = dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        dv = dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        # spread between first and last stage slopes, relative to the state size
        scale = max(np.abs(u).max() + np.abs(v).max(), 1e-300)
        worst = max(worst, dt * float(np.abs(k4v - k1v).max() + np.abs(k4u - k1u).max()) / scale)
        u = (u + du) * keep
        v = (v + dv) * keep
        t = t0 + step * dt
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            raise FloatingPointError(f"non-finite state at t={t:.6g} (step {step}, dt={dt:.3e})")
        if step % stride == 0:
            i = step // stride
            U[i], V[i] = np.fft.ifft(u), np.fft.ifft(v)
    times = t0 + np.arange(n_samples) * stride * dt
    return Trajectory(times, U, V, dt, stride, g, worst)


def apply_L(problem, u, dtu=None, t=0.0):
    """Spatial part ``-d_x(a d_x u) + b0 d_t u + b1 d_x u + c u`` at time ``t``.

    Products are evaluated without truncation so that band-limited inputs
    give exact values; the integrator applies the 2/3 rule on top.
    """
    g = problem.grid
    if u.grid != g or (dtu is not None and dtu.grid != g):
        raise ValueError("fields live on a different grid")
    ik = 1j * g.frequencies * g.nyquist_mask
    a = problem.a.at(t)
    ux = u.multiplier(ik).samples
    flux = ScalarField(g, a * ux)
    out = -flux.multiplier(ik).samples
    if problem.lower is not None and not problem.lower.is_zero:
        b0, b1, c = problem.lower.at(t)
        d = np.zeros(g.shape) if dtu is None else dtu.samples
        out = out + b0 * d + b1 * ux + c * u.samples
    return ScalarField(g, out)


def multiplication_matrix(values):
    """Spectral matrix of multiplication by ``values(x)`` (outputs off the lattice dropped)."""
    n = len(values)
    return spectral_matrix(np.broadcast_to(np.asarray(values, complex)[:, None], (n, n)))


def divergence_matrix(grid, a_row):
    ik = 1j * grid.frequencies * grid.nyquist_mask
    return ik[:, None] * multiplication_matrix(a_row) * ik[None, :]


def remainder_R_operator(a_row, alpha_tilde, gamma=None, psi=None, t=0):
    """``R = d_x(a d_x .) - gamma^2 + Re T_{alpha~}`` as a spectral operator."""
    g = alpha_tilde.grid
    gamma = alpha_tilde.gamma if gamma is None else gamma
    psi = psi or build_cutoff(gamma, g)
    s = smooth_symbol(alpha_tilde.select(t), psi)
    T = SpectralOperator(g, spectral_matrix(s.values[0]))
    eye = np.diag(g.nyquist_mask.astype(complex))
    mat = divergence_matrix(g, a_row) - gamma**2 * eye + T.real_part().matrix
    return SpectralOperator(g, mat, 1.0)


def remainder_R(problem, alpha_tilde, u, t=0, psi=None):
    """``R u`` with the coefficient row matching the symbol's time row ``t``."""
    if alpha_tilde.grid != problem.grid:
        raise ValueError("symbol and problem use different grids")
    row = int(round((alpha_tilde.times[t] - problem.a.times[0]) / problem.a.dt))
    op = remainder_R_operator(problem.a.values[row], alpha_tilde, psi=psi, t=t)
    return op.apply(u)


def remainder_B_operator(grid, b_row, gamma=1.0, psi=None):
    """``B~ v = b v - T_b v`` for a real field ``b(x)``."""
    psi = psi or build_cutoff(gamma, grid)
    b_row = np.asarray(b_row, complex)
    sym = Symbol(grid, np.broadcast_to(b_row[:, None], (grid.n_points,) * 2), 0.0, 0.0, gamma, static=True)
    Tb = spectral_matrix(smooth_symbol(sym, psi).values[0])
    return SpectralOperator(grid, multiplication_matrix(b_row) - Tb, None)


def remainder_B(b, v, gamma=1.0, psi=None):
    b_row = b.samples if isinstance(b, ScalarField) else np.asarray(b)
    return remainder_B_operator(v.grid, b_row, gamma, psi).apply(v)


def _trace_indices(traj, samples):
    n = len(traj)
    if samples is None or samples >= n:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, samples)).astype(int))


def sigma_shifted_trace(problem, traj, sigma=0.0, gamma=1.0, samples=33, psi=None, alpha_builder=None):
    """Energy built from ``T_{Lambda^sigma alpha^{-+1/4}}`` along a trajectory.

    Columns hold ``E``, ``||u||_{H^{sigma+1/2}}``, ``||d_t u||_{H^{sigma-1/2}}``
    and ``||Lu||_{H^{sigma-1/2}}``, taken as ``||f||`` plus the
    finite-difference residual of the discrete solution. Both parts are also
    kept separately in ``extras["source"]`` and ``extras["residual"]``.
    """
    if sigma <= -0.5:
        raise ValueError("sigma must exceed -1/2")
    g = problem.grid
    psi = psi or build_cutoff(gamma, g)
    a = problem.a
    idx = _trace_indices(traj, samples)
    E, nu, nd, nf, res = [], [], [], [], []
    for i in idx:
        t = float(traj.times[i])
        row = int(np.clip(round((t - a.times[0]) / a.dt), 0, a.n_times - 1))
        alpha = (alpha_builder or _default_alpha)(a, gamma, row)
        u, d = traj.state(i)
        ops = EnergyOperators(alpha, 0, psi, sigma)
        st = tarama_state(u, d, alpha, ops=ops)
        E.append(st.E)
        nu.append(sobolev_norm(u, sigma + 0.5))
        nd.append(sobolev_norm(d, sigma - 0.5))
        f = problem.source_at(t)
        nf.append(0.0 if f is None else sobolev_norm(ScalarField(g, f), sigma - 0.5))
        res.append(_residual(problem, traj, i, sigma))
    nf, res = np.asarray(nf), np.asarray(res)
    trace = EnergyTrace(traj.times[idx], E, nu, nd, nf + res)
    trace.extras["source"] = nf
    trace.extras["residual"] = res
    trace.fit = gronwall_fit(trace)
    return trace


def _default_alpha(a, gamma, row):
    return build_alpha(a, gamma, "banded", rows=[row])


def energy_trace(problem, traj, gamma=1.0, samples=33, psi=None, alpha_builder=None):
    """Tarama energy, the norm pair and ``||Lu||_{H^-1/2}`` along a trajectory, with its Gronwall fit."""
    return sigma_shifted_trace(problem, traj, 0.0, gamma, samples, psi, alpha_builder)


def _residual(problem, traj, i, sigma):
    """``||L u - f||_{H^{sigma-1/2}}`` with ``u_tt`` from centered differences of the samples."""
    n = len(traj)
    if n < 3:
        return 0.0
    h = traj.times[1] - traj.times[0]
    lo, hi = max(i - 1, 0), min(i + 1, n - 1)
    if hi - lo < 2:
        lo, hi = (0, 2) if i == 0 else (n - 3, n - 1)
        # one-sided second-order stencil at the ends
        w = np.array([-1.5, 2.0, -0.5]) if i == 0 else np.array([0.5, -2.0, 1.5])
        dtt = (w[0] * traj.dtu[lo] + w[1] * traj.dtu[lo + 1] + w[2] * traj.dtu[lo + 2]) / h
    else:
        dtt = (traj.dtu[hi] - traj.dtu[lo]) / (2 * h)
    u, d = traj.state(i)
    t = float(traj.times[i])
    Lu = dtt + apply_L(problem, u, d, t).samples
    f = problem.source_at(t)
    if f is not None:
        Lu = Lu - f
    r = ScalarField(problem.grid, Lu).multiplier(dealias_mask(problem.grid).astype(float))
    return sobolev_norm(r, sigma - 0.5)


def classical_energy(problem, u, dtu, t=0.0):
    """``mean(a |d_x u|^2 + |d_t u|^2)``, conserved for time-independent ``a`` and ``f = 0``."""
    g = problem.grid
    ux = u.multiplier(1j * g.frequencies).samples
    return float(np.mean(problem.a.at(t) * np.abs(ux) ** 2 + np.abs(dtu.samples) ** 2))


def manufactured_problem(grid, k=3, omega=2.0, T=1.0, dt=None, depth=0.25):
    """Problem whose exact solution is ``e^{ikx} cos(omega t)``.

    The coefficient ``a(t) = 1 + depth sin t`` varies in time only, so the
    spatial operator is exact on the single mode and the error left after a
    solve is the time-stepping error. Returns ``(problem, exact)`` where
    ``exact(t)`` gives the samples of the solution.
    """
    from .coefficients import field_from_function

    mode = np.exp(1j * k * grid.x)
    a = field_from_function(
        lambda t, x: 1.0 + depth * np.sin(t) + 0.0 * x, grid, T=T, dt=2.0**-10,
        lam0=1.0 - depth, Lam0=1.0 + depth,
    )

    def source(t):
        return (-(omega**2) + (1.0 + depth * math.sin(t)) * k**2) * math.cos(omega * t) * mode

    def exact(t):
        return math.cos(omega * t) * mode

    u0 = ScalarField(grid, mode)
    u1 = ScalarField.zeros(grid)
    return CauchyProblem(a, u0, u1, T, source=source, dt=dt), exact


def rk4_convergence(grid=None, dts=(0.04, 0.02, 0.01, 0.005), **kw):
    """Final-time errors of the manufactured solution and the fitted order in ``dt``."""
    from .spectral_core import PeriodicGrid

    grid = grid or PeriodicGrid(32)
    errors = []
    for dt in dts:
        problem, exact = manufactured_problem(grid, dt=dt, **kw)
        traj = solve(problem)
        errors.append(float(np.abs(traj.u[-1] - exact(traj.times[-1])).max()))
    errors = np.asarray(errors)
    order = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    return order, np.asarray(dts, dtype=float), errors
