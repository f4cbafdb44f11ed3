"""Finite differences on graded grids and fixed-order Gauss-Legendre panels."""

from __future__ import annotations

import numpy as np

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def panel_integrals(f, edges: np.ndarray, order: int = 16) -> np.ndarray:
    """Integrals of a vectorised ``f`` over each panel [edges[i], edges[i+1]]."""
    t, w = gauss_legendre(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    nodes = a + half * (t[None, :] + 1.0)
    return np.sum(f(nodes) * w[None, :] * half, axis=1)


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Weights for derivatives 0..m at z from the stencil points x (Fornberg 1988)."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def _stencil(i: int, n: int, width: int) -> slice:
    lo = min(max(i - width // 2, 0), max(n - width, 0))
    return slice(lo, min(lo + width, n))


def derivative_matrix(param: np.ndarray, order: int, width: int = 5) -> list[tuple[slice, np.ndarray]]:
    """Per-point (stencil, weights) for the ``order``-th derivative in ``param``.

    Centred where possible, one-sided at the ends of the array.
    """
    n = len(param)
    width = min(width, n)
    if width <= order:
        raise ValueError(f"need more than {order} points for derivative of order {order}")
    out = []
    for i in range(n):
        sl = _stencil(i, n, width)
        w = fornberg_weights(param[i], param[sl], order)[:, order]
        out.append((sl, w))
    return out


def apply(ops: list[tuple[slice, np.ndarray]], values: np.ndarray) -> np.ndarray:
    """Weighted sums of differences from the point's own value.

    Derivative weights sum to zero, so the result is unchanged in exact
    arithmetic, but a large common offset no longer feeds rounding into the
    sum (a constant differentiates to exactly zero).
    """
    values = np.asarray(values, dtype=float)
    out = np.empty((len(ops),) + values.shape[1:])
    for i, (sl, w) in enumerate(ops):
        out[i] = np.tensordot(w, values[sl] - values[i], axes=(0, 0))
    return out


def segment_slices(segment: np.ndarray) -> list[slice]:
    """Contiguous runs of equal segment id."""
    segment = np.asarray(segment)
    if len(segment) == 0:
        return []
    cuts = np.flatnonzero(np.diff(segment) != 0) + 1
    bounds = np.concatenate([[0], cuts, [len(segment)]])
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def d_dparam(values, param, segment, order: int = 1, width: int = 5) -> np.ndarray:
    """Derivative in the sampling parameter, never differencing across segments."""
    values = np.asarray(values, dtype=float)
    out = np.full(values.shape, np.nan)
    for sl in segment_slices(segment):
        p = param[sl]
        if len(p) <= order:
            continue
        ops = derivative_matrix(p, order, width)
        out[sl] = apply(ops, values[sl])
    return out


def s_derivatives(values, s, param, segment, width: int = 5, dsdp=None):
    """(f_s, f_ss) by the chain rule through the sampling parameter.

    f_ss is taken as d/ds of f_s rather than from (f'' s' - f' s'') / s'^3:
    near peaks s' varies much faster than f_s, and the one-line formula then
    cancels two large terms.  ``dsdp`` (exact ds/dparam at the samples)
    avoids differencing s itself, whose increments are swamped by rounding
    where the curve barely moves.
    """
    if dsdp is None:
        s1 = d_dparam(s, param, segment, 1, width)
    else:
        s1 = np.asarray(dsdp, dtype=float)
    if np.ndim(values) > 1:
        s1 = s1.reshape(s1.shape + (1,) * (np.ndim(values) - 1))
    fs = d_dparam(values, param, segment, 1, width) / s1
    fss = d_dparam(fs, param, segment, 1, width) / s1
    return fs, fss


def periodic_d(values: np.ndarray, h: float, order: int, axis: int = -1) -> np.ndarray:
    """Spectral derivative on a periodic uniform grid of spacing ``h``.

    Rotation orbits are sampled uniformly in the angle, so along that axis
    the data are trigonometric polynomials of low degree and the spectral
    derivative is exact up to rounding.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    k = 2 * np.pi * np.fft.rfftfreq(n, d=h)
    if order == 1 and n % 2 == 0:
        k[-1] = 0.0  # the Nyquist mode has no odd part
    shape = [1] * values.ndim
    shape[axis] = len(k)
    factor = ((1j * k) ** order).reshape(shape)
    return np.fft.irfft(np.fft.rfft(values, axis=axis) * factor, n=n, axis=axis)
