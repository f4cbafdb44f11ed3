"""The planar system x' = y, y' = Q2(x, y) whose orbits are the level sets of F.

x = exp(mu/kappa) and y = dx/ds.  The line x = 1 (kappa infinite) is a
singular line of the system; orbits reach it at finite arc length, which is
where the critical curves have their peaks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import DomainError, ModelParams, PhasePoint
from .euler_lagrange import EXACT_RTOL, first_integral_xy


class IntegrationError(RuntimeError):
    """The orbit integrator could not continue (step size underflow)."""


def _q2(x, y, rho, mu):
    L = np.log(x)
    return (-mu * mu * x * x - rho * x * x * L * L + rho * x * x * L - y * y * L) / (x * L * L)


def vector_field_Q(p: PhasePoint, params: ModelParams) -> tuple[float, float]:
    """(y, y') at a phase point; undefined on the line x = 1."""
    return float(p.y), float(_q2(p.x, p.y, params.rho, params.mu))


def jacobian(x: float, y: float, params: ModelParams) -> np.ndarray:
    """Analytic Jacobian of (y, Q2) at (x, y)."""
    rho, mu = params.rho, params.mu
    L = math.log(x)
    num = -mu * mu * x * x - rho * x * x * L * L + rho * x * x * L - y * y * L
    dnum = -2 * mu * mu * x - 2 * rho * x * L * L - 2 * rho * x * L + 2 * rho * x * L + rho * x - y * y / x
    den = x * L * L
    dden = L * L + 2 * L
    dq_dx = (dnum * den - num * dden) / den**2
    dq_dy = -2 * y * L / den
    return np.array([[0.0, 1.0], [dq_dx, dq_dy]])


@dataclass(frozen=True)
class SingularPoint:
    x: float
    kind: str  # center | saddle | degenerate
    eigenvalues: tuple[complex, complex]
    branch: str  # + | -

    @property
    def log_x(self) -> float:
        return math.log(self.x)


def _classify_eigen(lam2: float, scale: float) -> tuple[str, tuple[complex, complex]]:
    if abs(lam2) <= 1e-12 * max(1.0, scale):
        return "degenerate", (0j, 0j)
    if lam2 > 0:
        r = math.sqrt(lam2)
        return "saddle", (complex(r, 0), complex(-r, 0))
    r = math.sqrt(-lam2)
    return "center", (complex(0, r), complex(0, -r))


def singular_points(rho: float, mu: float) -> list[SingularPoint]:
    """Equilibria (x, 0) with mu^2 = rho log x (1 - log x).

    Eigenvalues are +-sqrt(rho (1 - 2 log x) / log^2 x), read off the
    Jacobian of the system at the equilibrium.
    """
    if mu == 0:
        raise DomainError("mu must be nonzero")
    if rho == 0:
        return []
    gap = rho - 4.0 * mu * mu
    if rho > 0 and abs(gap) <= EXACT_RTOL * rho:
        return [SingularPoint(math.exp(0.5), "degenerate", (0j, 0j), "+")]
    if rho > 0 and gap < 0:
        return []
    root = math.sqrt(rho * rho - 4.0 * mu * mu * rho)
    out = []
    for sign, label in ((1.0, "+"), (-1.0, "-")):
        L = (rho + sign * root) / (2.0 * rho)
        lam2 = rho * (1.0 - 2.0 * L) / (L * L)
        kind, eig = _classify_eigen(lam2, abs(rho))
        out.append(SingularPoint(math.exp(L), kind, eig, label))
    return sorted(out, key=lambda p: p.x)


def _pm(rho: float, mu: float) -> tuple[float, float]:
    """(x_plus, x_minus): the center and saddle of the system."""
    pts = {p.branch: p.x for p in singular_points(rho, mu)}
    return pts["+"], pts["-"]


def braid_window(rho: float, mu: float) -> tuple[float, float] | None:
    """Values of d whose level set has a closed orbit around the center (rho > 4 mu^2)."""
    if mu == 0:
        raise DomainError("mu must be nonzero")
    if not rho > 4.0 * mu * mu or abs(rho - 4.0 * mu * mu) <= EXACT_RTOL * rho:
        return None
    xp, xm = _pm(rho, mu)
    return rho * xp * xp * math.log(xm), rho * xm * xm * math.log(xp)


@dataclass(frozen=True)
class OrbitTopology:
    roots: tuple[float, ...]
    components: int
    has_braid_component: bool
    anchor: bool = False

    @property
    def x0(self) -> float | None:
        """Turning point of the component reaching x = 0 (None in the anchor regime)."""
        return self.roots[0] if self.roots else None


def _F0(x, rho, mu):
    return first_integral_xy(x, 0.0, rho, mu)


def _root(f, a, b):
    return brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


_TINY = 1e-300


def orbit_x_intersections(params: ModelParams) -> OrbitTopology:
    """Roots of F(x, 0) = d, bracketed by the extrema of F(., 0).

    For rho = 0 and rho <= 4 mu^2, F(., 0) increases from 0 to infinity.  For
    rho > 4 mu^2 it has a maximum at the saddle and a minimum at the center.
    For rho < 0 it falls from 0 to a minimum at the center, rises to a
    maximum at the saddle and then decreases without bound.
    """
    rho, mu, d = params.rho, params.mu, params.d
    g = lambda x: float(_F0(x, rho, mu)) - d

    def grow(a):
        b = max(2.0 * a, 2.0)
        while g(b) * g(a) > 0:
            b *= 2.0
            if b > 1e300:
                raise DomainError("could not bracket a root of F(x, 0) = d")
        return b

    def upper_increasing():
        return max(math.sqrt(d) / abs(mu), 1.0) * 1.01 + 1.0

    if rho >= 0 and (rho == 0 or rho - 4.0 * mu * mu <= EXACT_RTOL * rho):
        return OrbitTopology((_root(g, _TINY, upper_increasing()),), 1, False)

    xp, xm = _pm(rho, mu)
    Fp, Fm = float(_F0(xp, rho, mu)), float(_F0(xm, rho, mu))
    if rho > 0:
        roots = []
        if d < Fm:
            roots.append(_root(g, _TINY, xm))
        if Fp < d < Fm:
            roots.append(_root(g, xm, xp))
        if d > Fp:
            roots.append(_root(g, xp, upper_increasing()))
        if d == Fp:
            roots.append(xp)
        if d == Fm:
            roots.append(xm)
        braid = Fp < d < Fm
        return OrbitTopology(tuple(sorted(roots)), 2 if braid else 1, braid)

    # rho < 0
    if d > Fm:
        return OrbitTopology((), 0, False, anchor=True)
    roots = []
    if d < 0:
        if d < Fp:
            raise DomainError(f"d = {d} lies below the minimum {Fp} of F(x, 0)")
        roots += [_root(g, _TINY, xp), _root(g, xp, xm)] if d > Fp else [xp]
    elif d < Fm:
        roots.append(_root(g, xp, xm))
    else:
        roots.append(xm)
    roots.append(_root(g, xm, grow(xm)) if d < Fm else xm)
    roots = tuple(sorted(set(roots)))
    return OrbitTopology(roots, 2, False)


@dataclass
class OrbitTrace:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    drift: float
    stop_reason: str  # s_max | peak | endpoint | x_max | period
    period: float | None = None
    params: ModelParams | None = None

    @property
    def points(self) -> list[tuple[float, PhasePoint]]:
        return [(float(s), PhasePoint(float(x), float(y))) for s, x, y in zip(self.s, self.x, self.y)]

    @property
    def f_drift(self) -> np.ndarray:
        p = self.params
        return np.abs(first_integral_xy(self.x, self.y, p.rho, p.mu) - p.d) / abs(p.d)


def trace_orbit(
    start: PhasePoint,
    params: ModelParams,
    s_max: float,
    rtol: float = 1e-13,
    atol: float = 1e-15,
    peak_eps: float = 1e-3,
    x_min: float = 1e-6,
    detect_period: bool = False,
    max_step: float = np.inf,
    x_max: float = np.inf,
) -> OrbitTrace:
    """Integrate the phase system from ``start`` with DOP853 and event stops.

    Stops at ``s_max``, when |x - 1| drops to ``peak_eps`` (peak event), when
    x drops to ``x_min`` (endpoint event), when x grows to ``x_max`` or, with
    ``detect_period``, when y crosses zero upwards after leaving the start.
    Unbounded orbits (the outer ones of the hyperbolic plane) need ``x_max``:
    F is then a difference of terms growing like x^2 log^2 x and its drift
    relative to d loses meaning once x is large.  Even before that, an
    integration error of relative size rtol in those terms shows up in
    F - d magnified by about x^2 log^2 x / d, which is why the default rtol
    sits one decade above the floor DOP853 accepts.  The azimuth psi is
    integrated alongside from psi_s = -mu x / (d - rho u^2).
    """
    rho, mu, d = params.rho, params.mu, params.d
    F0 = float(first_integral_xy(start.x, start.y, rho, mu))
    if abs(F0 - d) > 1e-8 * max(1.0, abs(d)):
        raise DomainError(f"start is not on the level set: F = {F0}, d = {d}")

    def rhs(s, z):
        x, y, _ = z
        L = math.log(x)
        u = (1.0 - L) * x
        return [y, _q2(x, y, rho, mu), -mu * x / (d - rho * u * u)]

    def peak(s, z):
        return abs(z[0] - 1.0) - peak_eps

    peak.terminal = True
    peak.direction = -1

    def endpoint(s, z):
        return z[0] - x_min

    endpoint.terminal = True
    endpoint.direction = -1

    def ceiling(s, z):
        return z[0] - x_max

    ceiling.terminal = True
    ceiling.direction = 1

    def ycross(s, z):
        return z[1]

    ycross.direction = 1
    events = [peak, endpoint, ceiling] + ([ycross] if detect_period else [])
    sol = solve_ivp(
        rhs,
        (0.0, s_max),
        [start.x, start.y, 0.0],
        method="DOP853",
        rtol=rtol,
        atol=atol,
        events=events,
        max_step=max_step,
    )
    if sol.status == -1:
        raise IntegrationError(f"{sol.message} at s = {sol.t[-1]}, x = {sol.y[0, -1]}")
    s, x, y, psi = sol.t, sol.y[0], sol.y[1], sol.y[2]
    reason = "s_max"
    if len(sol.t_events[0]):
        reason = "peak"
    elif len(sol.t_events[1]):
        reason = "endpoint"
    elif len(sol.t_events[2]):
        reason = "x_max"
    period = None
    if detect_period:
        t_ev = sol.t_events[3]
        later = t_ev[t_ev > 1e-9 * max(1.0, s_max)]
        if len(later):
            period = float(later[0])
            keep = s < period
            ev_state = sol.y_events[3][t_ev > 1e-9 * max(1.0, s_max)][0]
            s = np.append(s[keep], period)
            x = np.append(x[keep], ev_state[0])
            y = np.append(y[keep], ev_state[1])
            psi = np.append(psi[keep], ev_state[2])
            reason = "period"
    F = first_integral_xy(x, y, rho, mu)
    drift = float(np.max(np.abs(F - d)) / abs(d))
    return OrbitTrace(s, x, y, psi, drift, reason, period, params)
