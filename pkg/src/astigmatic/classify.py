"""Shape taxonomy of the critical curves and the closure test for braids.

Where exact thresholds exist they are used directly:

* arch       d <= rho + mu^2            (F(1, y) = rho + mu^2 for every y)
* deltoid    d = d_*                    (endpoint azimuth vanishes)
* bridge     subcases at d = mu^2 e^2   (F(e, 0) = mu^2 e^2)

On the sphere with rho > 4 mu^2 the transitions between the anti-types are
only known qualitatively, and the label is read off two measured azimuths
of the half-curve: P at the peak and A at the endpoint x -> 0.  The
half-curve leaves the symmetry axis at azimuth 0, climbs to P and falls
back to A; every multiple of pi it passes is a return to the axis, hence a
self-intersection with the mirror half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from . import _numerics as nm
from .core import DomainError, ModelParams, PhasePoint, azimuth_scale, embed_coords, metric_dot
from .curves import CurveSamples, X_MIN, _D_near, _dpsidx, _dsdx, psi_limit_at_zero, psi_of_x, solve_d_star
from .euler_lagrange import EXACT_RTOL
from .phase_plane import IntegrationError, _pm, braid_window, orbit_x_intersections, trace_orbit

LABELS = (
    "arch",
    "fishtail",
    "deltoid",
    "bridge_high",
    "bridge_axis",
    "bridge_low",
    "anti_arch",
    "anti_fishtail",
    "anti_deltoid",
    "anti_bridge",
    "cross",
    "braid",
    "hypercycle",
    "anchor",
)

# relative width of the bands in d reported as deltoid / bridge_axis
EQUALITY_RTOL = 1e-4


@dataclass
class ShapeClass:
    label: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")

    def to_dict(self) -> dict:
        return {"label": self.label, "diagnostics": self.diagnostics}


# ---------------------------------------------------------------------------
# thresholds


@lru_cache(maxsize=256)
def _d_star_cached(rho: float, mu: float) -> float | None:
    try:
        return solve_d_star(rho, mu)
    except DomainError:
        return None


def d_star(rho: float, mu: float) -> float | None:
    """Deltoid threshold, or None where it is not defined."""
    mu = abs(mu)
    if rho == 0:
        return mu * mu * math.e**2 / 4.0
    if rho > 4 * mu * mu * (1 + EXACT_RTOL):
        return None
    return _d_star_cached(float(rho), float(mu))


def thresholds(params: ModelParams) -> dict:
    rho, mu = params.rho, abs(params.mu)
    win = braid_window(rho, mu) if rho > 0 else None
    return {
        "arch_bound": rho + mu * mu,
        "d_star": d_star(rho, mu),
        "bridge_axis_bound": mu * mu * math.e**2,
        "braid_window": list(win) if win else None,
    }


def _close(a: float, b: float, rtol: float = EQUALITY_RTOL) -> bool:
    return abs(a - b) <= rtol * abs(b)


def _bridge_subcase(d: float, mu: float) -> str:
    axis = mu * mu * math.e**2
    if _close(d, axis):
        return "bridge_axis"
    return "bridge_high" if d < axis else "bridge_low"


def theta_d(params: ModelParams) -> float | None:
    """Angle at which a low bridge in the plane crosses the geodesic beta."""
    mu, d = abs(params.mu), params.d
    if params.rho != 0 or d <= mu * mu * math.e**2:
        return None
    return math.acos(-mu * math.e / math.sqrt(d))


# ---------------------------------------------------------------------------
# azimuth features


def _axis_hits(lo: float, hi: float, period: float | None) -> int:
    """Axis values (0, or multiples of ``period``) strictly inside (lo, hi)."""
    if hi <= lo:
        return 0
    if period is None:
        return int(lo < 0.0 < hi)
    return int(math.ceil(hi / period) - math.floor(lo / period) - 1)


def azimuth_features(params: ModelParams) -> dict:
    """Chart azimuths P (peak) and A (endpoint) of the half-curve through x0."""
    p = params.normalized()
    topo = orbit_x_intersections(p)
    if topo.anchor:
        raise DomainError("no turning point in the anchor regime")
    x0 = topo.x0
    k = azimuth_scale(p.rho, p.d)
    A = k * psi_limit_at_zero(p, x0)
    P = k * psi_of_x(1.0, p, x0) if x0 > 1.0 else None
    period = math.pi if p.rho > 0 else None
    if P is None:
        hits = _axis_hits(A, 0.0, period)
    else:
        hits = _axis_hits(0.0, P, period) + _axis_hits(A, P, period)
    return {"x0": x0, "endpoint_azimuth": A, "peak_azimuth": P, "self_intersections": hits}


def _band(params: ModelParams, key: str) -> float:
    """Width in azimuth matching the relative band EQUALITY_RTOL in d."""
    d = params.d
    h = 1e-5 * d
    fp = azimuth_features(params.with_d(d + h))[key]
    fm = azimuth_features(params.with_d(d - h))[key]
    return abs(fp - fm) / (2 * h) * EQUALITY_RTOL * d


def _feature_label(params: ModelParams, feat: dict) -> str:
    """Lookup for rho > 4 mu^2, from the azimuths P and A (see module docstring)."""
    P, A = feat["peak_azimuth"], feat["endpoint_azimuth"]
    if P is None:
        return "arch"
    pi = math.pi
    m = round(P / pi)
    if m >= 1 and abs(P - m * pi) <= _band(params, "peak_azimuth"):
        return "anti_arch"
    wraps = _axis_hits(0.0, P, pi)
    tower = _axis_hits(A, P, pi)
    if wraps == 0:
        if abs(A) <= _band(params, "endpoint_azimuth"):
            return "deltoid"
        if tower == 0:
            return _bridge_subcase(params.d, abs(params.mu)) if P <= 0.5 * pi else "anti_bridge"
        return "fishtail" if tower == 1 else "cross"
    if wraps == 1:
        if abs(A - pi) <= _band(params, "endpoint_azimuth"):
            return "anti_deltoid"
        if A < pi and tower == 1:
            return "anti_fishtail"
    return "cross"


def _threshold_label(params: ModelParams, x0: float) -> str:
    mu, d = abs(params.mu), params.d
    if x0 <= 1.0 or d <= params.rho + mu * mu:
        return "arch"
    ds = d_star(params.rho, mu)
    if ds is None:
        raise DomainError("deltoid threshold is undefined for these parameters")
    if _close(d, ds):
        return "deltoid"
    if d < ds:
        return "fishtail"
    return _bridge_subcase(d, mu)


def _beta_count(x0: float) -> int:
    return 2 if x0 > math.e * (1 + 1e-15) else 0


# ---------------------------------------------------------------------------
# classification


def classify(params: ModelParams) -> list[tuple[str, ShapeClass]]:
    """Label every component of the level set F = d as (component, ShapeClass)."""
    p = params.normalized()
    rho, mu, d = p.rho, p.mu, p.d
    if rho < 0 and d <= 0:
        raise DomainError("only level sets with d > 0 are classified in the hyperbolic plane")
    topo = orbit_x_intersections(p)
    out: list[tuple[str, ShapeClass]] = []
    if topo.anchor:
        _, xm = _pm(rho, mu)
        return [("anchor", ShapeClass("anchor", {"x0": None, "saddle_level": rho * xm * xm * math.log(_pm(rho, mu)[0])}))]

    feat = azimuth_features(p)
    x0 = feat["x0"]
    diag = dict(feat)
    diag["beta_crossings"] = _beta_count(x0)
    if rho > 4 * mu * mu * (1 + EXACT_RTOL):
        label = _feature_label(p, feat)
        win = braid_window(rho, mu)
        diag["braid_window"] = list(win)
        diag["feature_based"] = True
    else:
        label = _threshold_label(p, x0)
        th = theta_d(p)
        if th is not None:
            diag["theta_d"] = th
    out.append(("inner", ShapeClass(label, diag)))

    if topo.has_braid_component:
        r2, r3 = topo.roots[1], topo.roots[2]
        bd = {"x_range": [r2, r3], "braid_window": list(braid_window(rho, mu))}
        try:
            bd["curvature_period"] = curvature_period(p)
            bd["rotation_number"] = rotation_number(p)
        except DomainError:
            pass
        out.append(("braid", ShapeClass("braid", bd)))
    if rho < 0:
        out.append(("outer", ShapeClass("hypercycle", {"x0": topo.roots[-1]})))
    return out


def classification_report(params: ModelParams) -> dict:
    comps = classify(params)
    return {
        "rho": params.rho,
        "mu": params.mu,
        "d": params.d,
        "components": [dict(component=c, **sc.to_dict()) for c, sc in comps],
        "thresholds": thresholds(params),
    }


# ---------------------------------------------------------------------------
# braids: curvature period and closure


def _braid_roots(params: ModelParams) -> tuple[float, float]:
    p = params.normalized()
    if not (p.rho > 0 and braid_window(p.rho, p.mu)):
        raise DomainError("curvature is periodic only for rho > 4 mu^2 with d inside the braid window")
    topo = orbit_x_intersections(p)
    if not topo.has_braid_component:
        lo, hi = braid_window(p.rho, p.mu)
        raise DomainError(f"d = {p.d} lies outside the braid window ({lo}, {hi})")
    return topo.roots[1], topo.roots[2]


def _braid_integral(kernel, params: ModelParams) -> float:
    """int_{r2}^{r3} kernel dr with r = r2 + (r3 - r2)(1 - cos t)/2, t in [0, pi]."""
    p = params.normalized()
    r2, r3 = _braid_roots(p)
    h = r3 - r2

    def f(t):
        r = r2 + 0.5 * h * (1.0 - math.cos(t))
        a, b = 0.5 * h * (1.0 - math.cos(t)), 0.5 * h * (1.0 + math.cos(t))
        ref, delta = (r2, -a) if a < b else (r3, b)
        D = float(_D_near(r, ref, delta, p.rho, p.mu))
        return kernel(r, p.rho, p.mu, p.d, D) * 0.5 * h * math.sin(t)

    val, err = quad(f, 0.0, math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)
    if err > 1e-10 * max(1.0, abs(val)):
        raise DomainError(f"braid quadrature did not converge ({err:.1e})")
    return val


def curvature_period(params: ModelParams) -> float:
    """Arc length of one period of the curvature along a braid."""
    return 2.0 * _braid_integral(_dsdx, params)


def rotation_number(params: ModelParams) -> float:
    """I(d) / (2 pi): chart rotation over one curvature period in units of a full turn."""
    p = params.normalized()
    dpsi = -2.0 * _braid_integral(_dpsidx, p)
    return azimuth_scale(p.rho, p.d) * abs(dpsi) / (2 * math.pi)


def traced_period(params: ModelParams) -> tuple[float, float]:
    """(period, rotation number) from direct orbit integration, as a cross-check."""
    p = params.normalized()
    r2, _ = _braid_roots(p)
    T = curvature_period(p)
    tr = trace_orbit(PhasePoint(r2, 0.0), p, 1.5 * T, rtol=1e-13, atol=1e-15, detect_period=True)
    if tr.period is None:
        raise IntegrationError("no period detected along the braid orbit")
    rot = azimuth_scale(p.rho, p.d) * abs(tr.psi[-1]) / (2 * math.pi)
    return tr.period, rot


def linearized_period(rho: float, mu: float) -> float:
    """Small-amplitude limit of the braid period, 2 pi / |Im lambda| at the center."""
    xp, _ = _pm(rho, abs(mu))
    L = math.log(xp)
    lam2 = rho * (1 - 2 * L) / (L * L)
    if lam2 >= 0:
        raise DomainError("the singular point is not a center")
    return 2 * math.pi / math.sqrt(-lam2)


@dataclass(frozen=True)
class ClosureResult:
    rotation: float | None
    fraction: Fraction | None
    reason: str

    @property
    def closed(self) -> bool:
        return self.fraction is not None


def closed_curve_check(params: ModelParams, q_max: int = 30, tol: float = 1e-4) -> ClosureResult:
    """Whether the braid closes up: I(d) / (2 pi) within ``tol`` of p/q with q <= q_max.

    Every real number is close to some rational, so the verdict is closure
    within tolerance only.  There are no closed critical curves for rho <= 0.
    """
    if params.rho <= 0:
        return ClosureResult(None, None, "no closed critical curves for rho <= 0")
    try:
        rot = rotation_number(params)
    except DomainError as exc:
        return ClosureResult(None, None, str(exc))
    fr = Fraction(rot).limit_denominator(q_max)
    if abs(float(fr) - rot) < tol:
        return ClosureResult(rot, fr, f"rotation within {tol} of {fr}")
    return ClosureResult(rot, None, f"no p/q with q <= {q_max} within {tol}")


# ---------------------------------------------------------------------------
# crossings with beta


@dataclass(frozen=True)
class BetaCrossing:
    position: np.ndarray
    angle: float
    s: float
    kind: str  # regular | endpoint


def _beta_direction(psi: float, params: ModelParams) -> np.ndarray:
    p = params.normalized()
    h = 1e-6
    a = embed_coords(0.0, psi + h, p.rho, p.d)
    b = embed_coords(0.0, psi - h, p.rho, p.d)
    v = (a - b) / (2 * h)
    return v / math.sqrt(abs(metric_dot(v, v, p.rho)))


def beta_crossings(samples: CurveSamples) -> list[BetaCrossing]:
    """Points where the curve meets beta (first coordinate u = 0) and the angle there.

    The angle is between the unit tangent (direction of increasing s) and
    the direction of increasing azimuth along beta.  The endpoints x -> 0
    reach beta only in the limit; they are reported at the last sample.
    """
    p = samples.params
    g = metric_dot
    T = nm.d_dparam(samples.coords, samples.param, samples.segment, 1, 5)
    sp = samples.dsdp if samples.dsdp is not None else nm.d_dparam(samples.s, samples.param, samples.segment, 1, 5)
    T = T / sp[:, None]
    mu_sign = -1.0 if p.mu < 0 else 1.0
    u = samples.u
    out = []

    def angle_at(Tv, psi):
        e = _beta_direction(mu_sign * psi, p)
        if p.mu < 0:
            e = e * np.array([1.0, -1.0] + [1.0] * (len(e) - 2))
        c = g(Tv, e, p.rho) / math.sqrt(abs(g(Tv, Tv, p.rho)))
        return math.acos(max(-1.0, min(1.0, c)))

    for i in np.flatnonzero(u[:-1] * u[1:] < 0):
        t = u[i] / (u[i] - u[i + 1])
        pos = (1 - t) * samples.coords[i] + t * samples.coords[i + 1]
        Tv = (1 - t) * T[i] + t * T[i + 1]
        psi = (1 - t) * samples.psi[i] + t * samples.psi[i + 1]
        out.append(BetaCrossing(pos, angle_at(Tv, psi), float((1 - t) * samples.s[i] + t * samples.s[i + 1]), "regular"))
    if samples.component == "inner" and samples.x_range and samples.x_range[0] <= X_MIN * (1 + 1e-12):
        for i in (0, len(samples) - 1):
            if np.all(np.isfinite(T[i])):
                out.append(BetaCrossing(samples.coords[i], angle_at(T[i], samples.psi[i]), float(samples.s[i]), "endpoint"))
    out.sort(key=lambda c: c.s)
    return out


def axis_self_intersections(samples: CurveSamples) -> int:
    """Returns of the s > 0 half to the symmetry axis, counted from the samples."""
    p = samples.params
    half = samples.s > 0
    a = azimuth_scale(p.rho, p.d) * samples.psi[half]
    if p.rho > 0:
        a = np.sin(a)
    sg = np.sign(a)
    sg = sg[sg != 0]
    return int(np.count_nonzero(sg[:-1] * sg[1:] < 0))
