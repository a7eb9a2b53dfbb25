"""Pure numpy versions of the hot loops.

These are the reference implementations; ``_kernels.pyx`` mirrors them
one-to-one and ``zygwave.kernels`` picks whichever is importable.
"""

import numpy as np


def second_difference_sup(f, shifts, periodic=True):
    """Return ``max_z |f(z+m) + f(z-m) - 2 f(z)|`` for every shift ``m``.

    ``f`` is a 1D array of samples. With ``periodic=False`` only the points
    ``z`` whose neighbours ``z +- m`` stay inside the array are used; a shift
    that leaves no such point yields ``nan``.
    """
    f = np.asarray(f)
    n = f.shape[0]
    out = np.empty(len(shifts))
    for i, m in enumerate(shifts):
        m = int(m)
        if periodic:
            d = np.roll(f, -m) + np.roll(f, m) - 2.0 * f
        else:
            if 2 * m >= n:
                out[i] = np.nan
                continue
            d = f[2 * m:] + f[: n - 2 * m] - 2.0 * f[m: n - m]
        out[i] = np.abs(d).max()
    return out


def first_difference_sup(f, shifts, periodic=True):
    """Return ``max_z |f(z+m) - f(z)|`` for every shift ``m``."""
    f = np.asarray(f)
    n = f.shape[0]
    out = np.empty(len(shifts))
    for i, m in enumerate(shifts):
        m = int(m)
        if periodic:
            d = np.roll(f, -m) - f
        else:
            if m >= n:
                out[i] = np.nan
                continue
            d = f[m:] - f[: n - m]
        out[i] = np.abs(d).max()
    return out


def second_difference_sup_2d(f, tshifts, xshifts):
    """Space-time second differences of ``f[t, x]``.

    Returns ``out[a, b] = max |f(t+tau, x+y) + f(t-tau, x-y) - 2 f(t, x)|``
    with ``tau = tshifts[a]`` (interior points only, time is not periodic)
    and ``y = xshifts[b]`` (periodic in x).
    """
    f = np.asarray(f)
    nt = f.shape[0]
    out = np.full((len(tshifts), len(xshifts)), np.nan)
    for a, tau in enumerate(tshifts):
        tau = int(tau)
        if 2 * tau >= nt:
            continue
        centre = f[tau: nt - tau]
        fwd = f[2 * tau:]
        bwd = f[: nt - 2 * tau]
        for b, y in enumerate(xshifts):
            y = int(y)
            d = np.roll(fwd, -y, axis=1) + np.roll(bwd, y, axis=1) - 2.0 * centre
            out[a, b] = np.abs(d).max()
    return out


def reflect_index(i, n):
    """Even reflection of integer indices into ``[0, n)`` (period ``2n-2``)."""
    if n == 1:
        return np.zeros_like(i)
    period = 2 * n - 2
    i = np.mod(i, period)
    return np.where(i >= n, period - i, i)


def convolve_reflect(values, weights, rows=None):
    """Discrete time convolution with even reflection at both ends.

    ``out[r] = sum_m weights[m] * values[refl(r - (m - M))]`` where
    ``M = (len(weights) - 1) // 2``. ``rows`` restricts the output to the
    given time indices.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    nt = values.shape[0]
    M = (len(weights) - 1) // 2
    if rows is None:
        rows = np.arange(nt)
    rows = np.asarray(rows)
    out = np.zeros((len(rows),) + values.shape[1:])
    for m, w in enumerate(weights):
        if w == 0.0:
            continue
        idx = reflect_index(rows - (m - M), nt)
        out += w * values[idx]
    return out
