"""Euler-Lagrange equation, first integral and constant-curvature critical curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _numerics as nm
from .core import DomainError, ModelParams, PhasePoint

# relative tolerance for the equality cases rho = 4 mu^2
EXACT_RTOL = 1e-12


def first_integral_xy(x, y, rho: float, mu: float, log_x=None):
    """F(x, y) = y^2 log^2 x + mu^2 x^2 + rho (1 - log x)^2 x^2, vectorised."""
    x = np.asarray(x, dtype=float)
    L = np.log(x) if log_x is None else log_x
    return y * y * L * L + mu * mu * x * x + rho * (1.0 - L) ** 2 * x * x


def first_integral(p: PhasePoint, params: ModelParams) -> float:
    return float(first_integral_xy(p.x, p.y, params.rho, params.mu))


def kappa_s_squared(kappa, params: ModelParams):
    """kappa_s^2 from the first integral; negative outside the orbit's kappa range."""
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa == 0):
        raise DomainError("kappa must be nonzero")
    rho, mu, d = params.rho, params.mu, params.d
    out = kappa**4 / mu**4 * (
        d * kappa**2 * np.exp(-2.0 * mu / kappa) - mu**2 * kappa**2 - rho * (kappa - mu) ** 2
    )
    return float(out) if out.ndim == 0 else out


def killing_profile(kappa, mu: float):
    """(G, G - 1) with G = (1 - mu/kappa) e^{mu/kappa}.

    G - 1 is written so that rounding stays proportional to |mu/kappa| near
    peaks, where G is within (mu/kappa)^2 of 1 and differences of G itself
    would lose most of their digits.
    """
    b = mu / np.asarray(kappa, dtype=float)
    G = (1.0 - b) * np.exp(b)
    em = np.expm1(b)
    return G, (em - b) - b * em


def profile_ss(kappa, mu: float, s, param, segment, width: int = 7, dsdp=None):
    """G_ss along a sampled curve, from G - 1 wherever |mu/kappa| < 1/2."""
    G, Gm1 = killing_profile(kappa, mu)
    _, far = nm.s_derivatives(G, s, param, segment, width=width, dsdp=dsdp)
    _, near = nm.s_derivatives(Gm1, s, param, segment, width=width, dsdp=dsdp)
    return np.where(np.abs(mu / np.asarray(kappa)) < 0.5, near, far)


def _el_rest(kappa, rho, mu):
    b = mu / kappa
    return (rho * (1.0 - b) - mu * kappa) * np.exp(b)


def el_pointwise(samples, params: ModelParams, width: int = 7) -> np.ndarray:
    """h'' + (rho (1 - mu/k) - mu k) e^{mu/k} at every sample (NaN where undefined).

    h = (1 - mu/kappa) e^{mu/kappa}; h'' is differenced in the sampling
    parameter and converted to arc length by the chain rule, which reduces to
    centred second differences when the samples are uniform in s.
    """
    kappa = np.asarray(samples.kappa, dtype=float)
    s = np.asarray(samples.s, dtype=float)
    if len(s) < 5:
        raise DomainError("el_residual needs at least 5 samples")
    # graded grids put consecutive samples closer than rounding near peaks
    if np.any(np.diff(s) < 0) or s[-1] <= s[0]:
        raise DomainError("arc length must be increasing")
    if np.any(kappa == 0):
        raise DomainError("kappa = 0 sample")
    rest = _el_rest(kappa, params.rho, params.mu)
    param = getattr(samples, "param", None)
    segment = getattr(samples, "segment", None)
    if param is None or segment is None:
        param, segment = s, np.zeros(len(s), dtype=int)
    dsdp = getattr(samples, "dsdp", None)
    out = profile_ss(kappa, params.mu, s, param, segment, width, dsdp) + rest
    # drop one-sided stencils at segment ends
    for sl in nm.segment_slices(segment):
        out[sl.start : sl.start + width // 2] = np.nan
        out[sl.stop - width // 2 : sl.stop] = np.nan
    return out


def el_residual(
    samples, params: ModelParams, peak_margin: float = 0.05, x_floor: float = 1e-3, width: int = 7
) -> float:
    """Max |EL| over interior samples with |x - 1| >= peak_margin and x >= x_floor.

    Near a peak h'' grows like 1/log x, and towards the endpoint x -> 0 the
    samples crowd together in s far faster than h changes, so second
    differences there measure rounding rather than the equation.
    """
    r = el_pointwise(samples, params, width)
    x = np.asarray(samples.x)
    mask = np.isfinite(r) & (np.abs(x - 1.0) >= peak_margin) & (x >= x_floor)
    if not np.any(mask):
        raise DomainError("no interior samples away from peaks")
    return float(np.max(np.abs(r[mask])))


@dataclass(frozen=True)
class ConstantCurvatureSolution:
    kappa0: float
    kind: str  # parallel | circle | hypercycle
    sign_branch: str  # + | -

    def residual(self, rho: float, mu: float) -> float:
        return abs(self.kappa0**2 - rho * (self.kappa0 / mu - 1.0))


def constant_curvature_solutions(rho: float, mu: float) -> list[ConstantCurvatureSolution]:
    """Critical curves of constant curvature: kappa0 = (rho +- sqrt(rho^2 - 4 mu^2 rho)) / (2 mu)."""
    if mu == 0:
        raise DomainError("mu must be nonzero")
    if rho == 0:
        return []
    disc = rho * rho - 4.0 * mu * mu * rho
    if rho > 0:
        gap = rho - 4.0 * mu * mu
        if abs(gap) <= EXACT_RTOL * rho:
            return [ConstantCurvatureSolution(math.copysign(math.sqrt(rho), mu), "circle", "+")]
        if gap < 0:
            return []
    root = math.sqrt(disc)
    out = []
    for sign, label in ((1.0, "+"), (-1.0, "-")):
        k0 = (rho + sign * root) / (2.0 * mu)
        if rho > 0:
            kind = "parallel"
        else:
            kind = "hypercycle" if k0 * k0 < -rho else "circle"
        out.append(ConstantCurvatureSolution(k0, kind, label))
    return out


def _edge_value(p, g, at):
    """Quadratic extrapolation of g(p) to ``at`` from (up to) three samples."""
    k = min(len(p), 3)
    if k == 1:
        return float(g[0])
    coef = np.polyfit(p[:k] - at, g[:k], k - 1)
    return float(coef[-1])


def energy_theta(samples, mu: float) -> float:
    """Trapezoidal value of int kappa e^{mu/kappa} ds over the sampled arc.

    With a sampling parameter available the trapezoid runs in that parameter
    (integrand times ds/dparam), which stays smooth where kappa blows up.
    Segments meet at integer parameter values; the integrand jumps there
    (it changes sign across a peak), so each side is extrapolated to the
    junction instead of joining the last samples by a straight line.
    """
    kappa = np.asarray(samples.kappa, dtype=float)
    s = np.asarray(samples.s, dtype=float)
    if np.any(kappa == 0) or not np.all(np.isfinite(kappa)):
        raise DomainError("energy needs finite nonzero curvature at every sample")
    f = kappa * np.exp(mu / kappa)
    param = getattr(samples, "param", None)
    segment = getattr(samples, "segment", None)
    if param is None or segment is None:
        return float(np.trapezoid(f, s))
    param = np.asarray(param, dtype=float)
    sp = getattr(samples, "dsdp", None)
    if sp is None:
        sp = nm.d_dparam(s, param, np.asarray(segment), 1, 5)
    g = f * np.asarray(sp, dtype=float)
    total = 0.0
    slices = nm.segment_slices(segment)
    for sl in slices:
        total += float(np.trapezoid(g[sl], param[sl]))
    for a, b in zip(slices[:-1], slices[1:]):
        i, j = a.stop - 1, b.start
        c = float(math.floor(param[j]))
        if param[i] < c < param[j]:
            ga = _edge_value(param[i::-1][:3], g[i::-1][:3], c)
            gb = _edge_value(param[j : j + 3], g[j : j + 3], c)
            total += 0.5 * (g[i] + ga) * (c - param[i]) + 0.5 * (gb + g[j]) * (param[j] - c)
        else:
            total += 0.5 * (f[i] + f[j]) * (s[j] - s[i])
    return total
