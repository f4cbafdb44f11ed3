"""Critical curves assembled from the quadratures psi(x) and s(x).

Every curve is built half at a time.  A half-curve starts at a point of
symmetry (a turning point x0 where the curve meets its symmetry axis, or a
peak in the anchor regime) and runs monotonically in x.  Along it

    ds   = |log x| / sqrt(D(x)) |dx|
    dpsi = -mu x log x / ((d - rho u^2) sqrt(D(x))) dx

with u = (1 - log x) x and D(x) = d - F(x, 0).  Each half is split into
segments at peaks, and each segment is parametrised by a smooth sigma in
[0, 1] chosen so that the sigma-integrands have no singularity: quadratic
contact at turning points, x - 1 proportional to a power of sigma at peaks,
and sigma linear in log x towards x -> 0 and x -> infinity.  s and psi are
cumulative Gauss-Legendre sums over the panels between sample nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import _numerics as nm
from .core import AmbientPoint, DomainError, ModelParams, embed_coords, signature_for, azimuth_scale
from .phase_plane import _pm, orbit_x_intersections
from .euler_lagrange import ConstantCurvatureSolution, first_integral_xy

X_MIN = 1e-8
PSI_CUTOFF = 1e-12
COMPONENTS = ("inner", "outer", "braid", "anchor")


@dataclass
class CurveSamples:
    """A sampled critical curve.

    ``param``/``segment`` record the sampling parameter; ``segment`` changes
    value wherever the parametrisation is not smooth (at peaks), so finite
    differences never straddle a peak.
    """

    s: np.ndarray
    x: np.ndarray
    kappa: np.ndarray
    psi: np.ndarray
    coords: np.ndarray
    param: np.ndarray
    segment: np.ndarray
    params: ModelParams
    component: str = "inner"
    x0: float | None = None
    x_range: tuple[float, float] | None = None
    meta: dict = field(default_factory=dict)
    dsdp: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.s)

    @property
    def u(self) -> np.ndarray:
        """(1 - log x) x, the Killing-speed profile G = (1 - mu/kappa) e^{mu/kappa}."""
        return (1.0 - np.log(self.x)) * self.x

    G = u

    @property
    def peaks(self) -> list[int]:
        """Indices i such that x crosses 1 between samples i and i + 1."""
        t = np.sign(self.x - 1.0)
        return [int(i) for i in np.flatnonzero(t[:-1] * t[1:] < 0)]

    @property
    def signature(self) -> str:
        return signature_for(self.params.rho)

    @property
    def positions(self) -> list[AmbientPoint]:
        sig = self.signature
        return [AmbientPoint(c, sig) for c in self.coords]

    @property
    def turning_index(self) -> int | None:
        if self.x0 is None:
            return None
        i = int(np.argmin(np.abs(self.s)))
        return i if self.s[i] == 0.0 else None

    def endpoint_azimuth(self) -> float:
        """Chart azimuth at the far end of the s > 0 half."""
        return azimuth_scale(self.params.rho, self.params.d) * float(self.meta.get("psi_end", self.psi[-1]))

    def mask_away_from_peaks(self, margin: float) -> np.ndarray:
        return np.abs(self.x - 1.0) >= margin

    def subset(self, idx) -> "CurveSamples":
        idx = np.asarray(idx)
        return replace(
            self,
            s=self.s[idx],
            x=self.x[idx],
            kappa=self.kappa[idx],
            psi=self.psi[idx],
            coords=self.coords[idx],
            param=self.param[idx],
            segment=self.segment[idx],
            meta=dict(self.meta),
            dsdp=None if self.dsdp is None else self.dsdp[idx],
        )

    @classmethod
    def constant_curvature(
        cls, sol: ConstantCurvatureSolution, rho: float, mu: float, length: float = 2.0, n: int = 201
    ) -> "CurveSamples":
        """Uniform samples of the constant-curvature critical curve ``sol``.

        Its orbit is the singular point x = exp(mu/kappa0), so d = F(x, 0).
        """
        x = math.exp(mu / sol.kappa0)
        d = float(first_integral_xy(x, 0.0, rho, mu))
        u = (1.0 - math.log(x)) * x
        s = np.linspace(-0.5 * length, 0.5 * length, n)
        psi = -mu * x / (d - rho * u * u) * s
        params = ModelParams(rho, mu, d)
        coords = embed_coords(np.full(n, u), psi, rho, d)
        return cls(
            s=s,
            x=np.full(n, x),
            kappa=np.full(n, sol.kappa0),
            psi=psi,
            coords=coords,
            param=s.copy(),
            segment=np.zeros(n, dtype=int),
            params=params,
            component=sol.kind,
            meta={"constant_curvature": True},
            dsdp=np.ones(n),
        )


# ---------------------------------------------------------------------------
# integrands


def _D(x, rho, mu, d):
    return d - first_integral_xy(x, 0.0, rho, mu)


def _D_near(x, x_ref, delta, rho, mu):
    """F(x_ref, 0) - F(x, 0) for delta = x_ref - x, without cancellation.

    Close to a turning point x_ref the plain difference d - F(x, 0) keeps
    only a few digits; here both squares are split as (a - b)(a + b) and
    the difference of logarithms goes through log1p.
    """
    L0 = math.log(x_ref)
    g0 = x_ref * (1.0 - L0)
    g = x * (1.0 - np.log(x))
    dg = delta * (1.0 - L0) - x * np.log1p(delta / x)
    return mu * mu * delta * (x_ref + x) + rho * (g0 + g) * dg


def _dsdx(x, rho, mu, d, D=None):
    L = np.log(x)
    D = _D(x, rho, mu, d) if D is None else D
    return np.abs(L) / np.sqrt(D)


def _dpsidx(x, rho, mu, d, D=None):
    L = np.log(x)
    u = (1.0 - L) * x
    D = _D(x, rho, mu, d) if D is None else D
    return -mu * x * L / ((d - rho * u * u) * np.sqrt(D))


# ---------------------------------------------------------------------------
# independent quadrature route (scipy adaptive)

_QUAD = dict(epsabs=1e-14, epsrel=1e-12, limit=400)


def _quad(f, a, b, points=None):
    val, err = quad(f, a, b, points=points, **_QUAD)
    if not np.isfinite(val) or err > 1e-9:
        raise DomainError(f"quadrature did not converge (estimated error {err:.2e})")
    return val


def _inner_x0(params: ModelParams) -> float:
    topo = orbit_x_intersections(params)
    if topo.anchor or not topo.roots:
        raise DomainError("the orbit does not meet the x-axis (anchor regime)")
    return topo.roots[0]


def _check_range(x, x0):
    if not 0 < x <= x0 * (1 + 1e-15):
        raise DomainError(f"need 0 < x <= x0 = {x0}, got {x}")


def _w_integral(kernel, x, x0, params):
    """int_x^x0 kernel(r) dr with r = x0 - w^2 removing the 1/sqrt endpoint."""
    p = params.normalized()
    if x >= x0:
        return 0.0
    wmax = math.sqrt(x0 - x)

    def f(w):
        r = x0 - w * w
        # d - F(r, 0) written relative to the turning point: the plain
        # difference can round below zero right next to x0
        return 2.0 * w * kernel(r, p.rho, p.mu, p.d, D=float(_D_near(r, x0, w * w, p.rho, p.mu)))

    pts = None
    if 1.0 < x0 and x < 1.0 and x0 - 1.0 > 1e-8 * wmax * wmax:
        pts = [math.sqrt(x0 - 1.0)]
    return _quad(f, 0.0, wmax, points=pts)


def psi_of_x(x: float, params: ModelParams, x0: float | None = None) -> float:
    """Azimuth mu int_x^x0 r log r / ((d - rho u^2) sqrt(D)) dr on the inner half-curve."""
    x0 = _inner_x0(params) if x0 is None else x0
    _check_range(x, x0)
    val = -_w_integral(_dpsidx, x, x0, params)
    return -val if params.mu < 0 else val


def arc_length_of_x(x: float, params: ModelParams, x0: float | None = None) -> float:
    """Arc length from x up to the turning point x0."""
    x0 = _inner_x0(params) if x0 is None else x0
    _check_range(x, x0)
    return _w_integral(_dsdx, x, x0, params)


def _psi_tail(eps: float, params: ModelParams) -> float:
    """psi(0) - psi(eps) from the leading behaviour mu r log r / d^{3/2} of the integrand."""
    p = params.normalized()
    return p.mu * (0.5 * eps * eps * math.log(eps) - 0.25 * eps * eps) / p.d**1.5


def psi_limit_at_zero(params: ModelParams, x0: float | None = None) -> float:
    """lim psi(x) as x -> 0+: quadrature down to 1e-12 plus the analytic tail."""
    x0 = _inner_x0(params) if x0 is None else x0
    eps = min(PSI_CUTOFF, 0.5 * x0)
    val = psi_of_x(eps, params, x0)
    tail = _psi_tail(eps, params)
    return val + (tail if params.mu > 0 else -tail)


def endpoint_azimuth(params: ModelParams) -> float:
    """sqrt(|rho| d) psi(0) (sqrt(d) psi(0) when rho = 0)."""
    return azimuth_scale(params.rho, params.d) * psi_limit_at_zero(params)


def _d_star_bracket(rho: float, mu: float) -> tuple[float, float]:
    m2 = mu * mu
    # arch bound; in the hyperbolic plane only d > 0 is in play
    lo = max(rho + m2, 0.0) if rho < 0 else rho + m2
    if rho < 0:
        _, xm = _pm(rho, mu)
        hi = float(first_integral_xy(xm, 0.0, rho, mu))
        if hi <= lo:
            raise DomainError("no peaked inner curves: the saddle level lies below rho + mu^2")
        return lo, hi
    if rho > 4 * m2 * (1 + 1e-12):
        raise DomainError("rho > 4 mu^2: the endpoint azimuth is not monotone here, use the feature classifier")
    return lo, math.inf


def solve_d_star(rho: float, mu: float, check_points: int = 12) -> float:
    """The d at which the endpoint azimuth vanishes (deltoid transition).

    The azimuth is negative just above the arch bound and positive further
    up, though not monotone in between.  A scan of the bracket checks that it
    changes sign exactly once before Brent's method refines the crossing.
    """
    if mu == 0:
        raise DomainError("mu must be nonzero")
    mu = abs(mu)
    lo, hi = _d_star_bracket(rho, mu)
    f = lambda d: psi_limit_at_zero(ModelParams(rho, mu, d))
    width = hi - lo if math.isfinite(hi) else max(1.0, abs(lo))
    a = None
    # right at the arch bound the turning point merges with the peak and the
    # quadrature degrades, so step away from it until it is trustworthy
    for frac in (1e-9, 1e-6, 1e-4, 1e-3, 1e-2):
        try:
            if f(lo + frac * width) < 0:
                a = lo + frac * width
                break
        except DomainError:
            continue
    if a is None:
        raise DomainError(f"endpoint azimuth is not negative just above the arch bound {lo}")
    if not math.isfinite(hi):
        b = max(2.0 * a, a + 1.0)
        while f(b) <= 0:
            b = 2.0 * b
            if b > 1e8:
                raise DomainError(f"could not bracket d_* in [{a}, {b}]")
    else:
        # stay clear of the saddle level, where the turning point is a double root
        for frac in (0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 0.9, 0.99):
            b = a + frac * (hi - a)
            if f(b) > 0:
                break
    grid = np.linspace(a, b, check_points)
    vals = np.array([f(t) for t in grid])
    flips = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if len(flips) != 1:
        raise DomainError(f"endpoint azimuth changes sign {len(flips)} times on [{a}, {b}]")
    i = int(flips[0])
    return brentq(f, grid[i], grid[i + 1], xtol=1e-14, rtol=1e-15, maxiter=200)


# ---------------------------------------------------------------------------
# graded construction


@dataclass
class _Segment:
    x: callable
    dx: callable
    nodes: np.ndarray  # sigma nodes in (0, 1]
    a0: float | None = None  # |x''(0)| / 2 when sigma = 0 is a turning point
    a1: float | None = None  # the same at sigma = 1
    D: callable | None = None  # d - F(x(sigma), 0) evaluated stably near turning points


def _cos_map(a, b, p):
    """x = b + (a - b) cos^p(pi sigma / 2): a at sigma = 0 (quadratic), b at sigma = 1."""
    h = 0.5 * math.pi

    def x(sg):
        return b + (a - b) * np.cos(h * sg) ** p

    def dx(sg):
        c = np.cos(h * sg)
        return -(a - b) * p * c ** (p - 1) * np.sin(h * sg) * h

    return x, dx


def _log_map(x_start, t_end, slope=1.0):
    """log(x / x_start) = a sigma + (t_end - a) sigma^3 with a = sign(t_end) min(|t_end|, slope).

    Linear contact with moderate slope at sigma = 0 (a peak), and spacing in
    log x that widens towards the far end, where x is exponentially small or
    large and the curve hardly moves.
    """
    a = math.copysign(min(abs(t_end), slope), t_end)
    c = t_end - a

    def x(sg):
        return x_start * np.exp(a * sg + c * sg**3)

    def dx(sg):
        return x(sg) * (a + 3 * c * sg * sg)

    return x, dx


def _integrate_segment(seg: _Segment, p: ModelParams, order: int):
    rho, mu, d = p.rho, p.mu, p.d
    edges = np.concatenate([[0.0], seg.nodes])
    tail = seg.nodes[-1] < 1.0
    if tail:
        edges = np.append(edges, 1.0)
    Df = seg.D if seg.D is not None else (lambda sg: None)
    fs = lambda sg: _dsdx(seg.x(sg), rho, mu, d, Df(sg)) * np.abs(seg.dx(sg))
    fp = lambda sg: _dpsidx(seg.x(sg), rho, mu, d, Df(sg)) * seg.dx(sg)
    ds = np.cumsum(nm.panel_integrals(fs, edges, order))
    dp = np.cumsum(nm.panel_integrals(fp, edges, order))
    k = len(seg.nodes)
    speed = fs(seg.nodes)
    if seg.a1 is not None and seg.nodes[-1] == 1.0:
        speed[-1] = _center_speed(float(seg.x(1.0)), seg.a1, p)
    return ds[:k], dp[:k], ds[-1], dp[-1], speed


def _half(segments: list[_Segment], p: ModelParams, order: int):
    """Cumulative s, psi, x, local sigma and segment index along one half."""
    out = {"s": [], "psi": [], "x": [], "sigma": [], "seg": [], "dsdp": []}
    s0 = psi0 = 0.0
    for k, seg in enumerate(segments):
        s, psi, s_tot, psi_tot, dsdp = _integrate_segment(seg, p, order)
        out["dsdp"].append(dsdp)
        out["s"].append(s0 + s)
        out["psi"].append(psi0 + psi)
        out["x"].append(seg.x(seg.nodes))
        out["sigma"].append(seg.nodes)
        out["seg"].append(np.full(len(seg.nodes), k))
        s0 += s_tot
        psi0 += psi_tot
    res = {k: np.concatenate(v) for k, v in out.items()}
    res["s_total"] = s0
    res["psi_total"] = psi0
    return res


def _nodes(n: int, include_end: bool) -> np.ndarray:
    h = 1.0 / n
    j = np.arange(1, n + 1 if include_end else n)
    return j * h


def _outer_x_max(x0: float, factor: float = 10.0) -> float:
    return factor * x0


def _stable_D(x_of, refs, p: ModelParams, reach: float = 0.25):
    """d - F(x(sigma), 0) switching to the divided-difference form near turning points.

    ``refs`` pairs each turning point with sigma -> x_ref - x(sigma) computed
    directly from the map, so the small offset itself carries no rounding.
    """

    def D(sg):
        x = x_of(sg)
        out = _D(x, p.rho, p.mu, p.d)
        best = np.full(np.shape(x), np.inf)
        for x_ref, delta_of in refs:
            with np.errstate(divide="ignore"):
                dl = delta_of(sg)
            use = (np.abs(dl) < reach * x_ref) & (np.abs(dl) < best)
            if np.any(use):
                out = np.where(use, _D_near(x, x_ref, dl, p.rho, p.mu), out)
                best = np.where(use, np.abs(dl), best)
        return out

    return D


def _plan(params: ModelParams, component: str, n: int, x_max, x_min, peak_power):
    """Segments of the two halves and whether they mirror each other."""
    p = params
    if p.rho < 0 and p.d <= 0:
        raise DomainError("only level sets d > 0 are built in the hyperbolic plane")
    topo = orbit_x_intersections(p)
    t_min = -math.log(x_min)
    if component == "anchor":
        if not topo.anchor:
            raise DomainError("anchor component exists only for rho < 0 above the saddle level")
        _, xm = _pm(p.rho, p.mu)
        x_max = 10.0 * xm if x_max is None else x_max
        left = _Segment(*_log_map(1.0, -t_min), _nodes(n, True))
        right = _Segment(*_log_map(1.0, math.log(x_max)), _nodes(n, True))
        return {"left": [left], "right": [right], "mirror": False, "center": None, "x0": None, "x_range": (x_min, x_max)}
    if topo.anchor:
        raise DomainError(f"component {component!r} is unavailable in the anchor regime; use 'anchor'")
    if component == "inner":
        x0 = topo.roots[0]
        if x0 <= 1.0:
            T = math.log(x0 / x_min)
            xf = lambda sg: x0 * np.exp(-T * sg * sg)
            D = _stable_D(xf, [(x0, lambda sg: -x0 * np.expm1(-T * sg * sg))], p)
            segs = [_Segment(xf, lambda sg: -2 * T * sg * x0 * np.exp(-T * sg * sg), _nodes(n, True), x0 * T, D=D)]
        else:
            n_mid = max(n // 2, 8)
            xf, dxf = _cos_map(x0, 1.0, peak_power)
            hp = 0.5 * math.pi
            delta = lambda sg: -(x0 - 1.0) * np.expm1(peak_power * np.log(np.cos(hp * sg)))
            D = _stable_D(xf, [(x0, delta)], p)
            mid = _Segment(xf, dxf, _nodes(n_mid, False), (x0 - 1.0) * peak_power * math.pi**2 / 8, D=D)
            out = _Segment(*_log_map(1.0, -t_min), _nodes(n - n_mid, True))
            segs = [mid, out]
        center = x0 if x0 != 1.0 else None
        return {"left": segs, "right": segs, "mirror": True, "center": center, "x0": x0, "x_range": (x_min, x0)}
    if component == "outer":
        if p.rho >= 0 or len(topo.roots) < 2:
            raise DomainError("outer component exists only for rho < 0 with two x-axis cuts")
        x0 = topo.roots[-1]
        x_max = _outer_x_max(x0) if x_max is None else x_max
        T = math.log(x_max / x0)
        xf = lambda sg: x0 * np.exp(T * sg * sg)
        D = _stable_D(xf, [(x0, lambda sg: -x0 * np.expm1(T * sg * sg))], p)
        segs = [_Segment(xf, lambda sg: 2 * T * sg * x0 * np.exp(T * sg * sg), _nodes(n, True), x0 * T, D=D)]
        return {"left": segs, "right": segs, "mirror": True, "center": x0, "x0": x0, "x_range": (x0, x_max)}
    if component == "braid":
        if not topo.has_braid_component:
            raise DomainError("braid component exists only for rho > 4 mu^2 with d inside the braid window")
        r2, r3 = topo.roots[1], topo.roots[2]
        x = lambda sg: r3 - (r3 - r2) * 0.5 * (1 - np.cos(math.pi * sg))
        dx = lambda sg: -(r3 - r2) * 0.5 * math.pi * np.sin(math.pi * sg)
        refs = [
            (r3, lambda sg: (r3 - r2) * np.sin(0.5 * math.pi * sg) ** 2),
            (r2, lambda sg: -(r3 - r2) * np.cos(0.5 * math.pi * sg) ** 2),
        ]
        a = (r3 - r2) * math.pi**2 / 4
        segs = [_Segment(x, dx, _nodes(n, True), a, a, D=_stable_D(x, refs, p))]
        return {"left": segs, "right": segs, "mirror": True, "center": r3, "x0": r3, "x_range": (r2, r3)}
    raise DomainError(f"unknown component {component!r}; expected one of {COMPONENTS}")


def _center_speed(x0: float, a0: float, p: ModelParams) -> float:
    """ds/dsigma at a turning point, the limit of |log x| |x'| / sqrt(D)."""
    L = math.log(x0)
    u = (1.0 - L) * x0
    dF = abs(2 * p.mu * p.mu * x0 - 2 * p.rho * u * L)
    return 2.0 * abs(L) * math.sqrt(a0 / dF)


def build_curve(
    params: ModelParams,
    component: str = "inner",
    n: int = 2000,
    x_max: float | None = None,
    x_min: float = X_MIN,
    peak_power: int = 1,
    order: int = 16,
) -> CurveSamples:
    """Sample the critical curve with first-integral value d.

    ``n`` is the number of samples per half-curve.  For mu < 0 the curve of
    |mu| is reflected in the x2 coordinate.
    """
    if n < 8:
        raise DomainError("n must be at least 8")
    p = params.normalized()
    plan = _plan(p, component, n, x_max, x_min, peak_power)
    right = _half(plan["right"], p, order)
    left = right if plan["mirror"] else _half(plan["left"], p, order)
    nseg_l = len(plan["left"])

    # left half is traversed backwards, with s -> -s (and psi -> -psi when mirrored)
    sgn = -1.0 if plan["mirror"] else 1.0
    parts_s = [-left["s"][::-1]]
    parts_psi = [sgn * left["psi"][::-1]]
    parts_x = [left["x"][::-1]]
    parts_param = [-(left["seg"] + left["sigma"])[::-1]]
    # merged central segment only when the centre is a smooth point of the curve
    smooth_center = plan["mirror"]
    seg_l = (nseg_l - 1 - left["seg"])[::-1]
    seg_r = right["seg"] + (nseg_l - 1 if smooth_center else nseg_l)
    parts_seg = [seg_l]
    parts_dsdp = [left["dsdp"][::-1]]
    if plan["center"] is not None:
        parts_dsdp.append([_center_speed(plan["center"], plan["right"][0].a0, p)])
        parts_s.append([0.0])
        parts_psi.append([0.0])
        parts_x.append([plan["center"]])
        parts_param.append([0.0])
        parts_seg.append([nseg_l - 1])
    parts_s.append(right["s"])
    parts_psi.append(right["psi"])
    parts_x.append(right["x"])
    parts_param.append(right["seg"] + right["sigma"])
    parts_seg.append(seg_r)
    parts_dsdp.append(right["dsdp"])

    s = np.concatenate(parts_s)
    psi = np.concatenate(parts_psi)
    x = np.concatenate(parts_x)
    param = np.concatenate(parts_param).astype(float)
    segment = np.concatenate(parts_seg).astype(int)

    if params.mu < 0:
        psi = -psi
    L = np.log(x)
    kappa = np.where(L == 0, np.inf, params.mu / np.where(L == 0, 1.0, L))
    u = (1.0 - L) * x
    coords = embed_coords(u, psi, p.rho, p.d)
    meta = {
        "psi_end": (right["psi_total"] + (_psi_tail(x_min, p) if plan["x_range"][0] == x_min and component == "inner" else 0.0))
        * (-1 if params.mu < 0 else 1),
        "s_half": right["s_total"],
        "x_min": x_min,
        "peak_power": peak_power,
        "n_half": n,
    }
    if not plan["mirror"]:
        meta["s_left"] = left["s_total"]
    return CurveSamples(
        s=s,
        x=x,
        kappa=kappa,
        psi=psi,
        coords=coords,
        param=param,
        segment=segment,
        params=params,
        component=component,
        x0=plan["x0"],
        x_range=plan["x_range"],
        meta=meta,
        dsdp=np.concatenate(parts_dsdp),
    )


def euclidean_closed_form(x, d: float):
    """Plane position at x on the normalised Euclidean curve (rho = 0, mu = 1)."""
    x = np.asarray(x, dtype=float)
    if d <= 0:
        raise DomainError("d must be positive")
    sd = math.sqrt(d)
    if np.any(x <= 0) or np.any(x > sd * (1 + 1e-15)):
        raise DomainError(f"need 0 < x <= sqrt(d) = {sd}")
    x = np.minimum(x, sd)
    L = np.log(x)
    q = np.sqrt(np.maximum(d - x * x, 0.0))
    first = (1.0 - L) * x / sd
    second = (q * (L - 1.0) + sd * np.log((sd + q) / x)) / sd
    return np.stack([first, second], axis=-1)


@dataclass(frozen=True)
class DilationReport:
    lam: float
    max_position_error: float
    max_arclength_error: float
    ok: bool


def dilation_check(params: ModelParams, lam: float, n: int = 2000, tol: float = 1e-6) -> DilationReport:
    """Compare the (lam mu, lam^2 d) curve with the (mu, d) curve shrunk by 1/lam.

    Energy index and curvature scale together, so x = exp(mu/kappa) is
    unchanged and both curves share their sample nodes; arc length scales
    by 1/lam.
    """
    if params.rho != 0:
        raise DomainError("dilations are not isometries-up-to-scale of curved space forms; dilation_check needs rho = 0")
    if not lam > 0:
        raise DomainError("lambda must be positive")
    a = build_curve(params, n=n)
    b = build_curve(ModelParams(0.0, lam * params.mu, lam * lam * params.d), n=n)
    pos = float(np.max(np.abs(b.coords - a.coords / lam)))
    arc = float(np.max(np.abs(b.s - a.s / lam)))
    return DilationReport(lam, pos, arc, pos < tol and arc < tol)


def curve_diagnostics(samples: CurveSamples, peak_exclusion: float = 1e-3, width: int = 7) -> dict:
    """Self-checks of a built curve from its samples alone.

    unit_speed_error   max | <T, T> - 1 | with T = dX/ds by finite differences
    quadric_residual   max distance of the samples from the model quadric
    f_drift            max |F(x, x_s) - d| / |d| with x_s by finite differences

    Samples within ``peak_exclusion`` of a peak and those without a centred
    stencil are left out.
    """
    from .core import metric_dot, quadric_residual

    p = samples.params
    sp = samples.dsdp if samples.dsdp is not None else nm.d_dparam(samples.s, samples.param, samples.segment, 1, width)
    T = nm.d_dparam(samples.coords, samples.param, samples.segment, 1, width) / sp[:, None]
    speed = metric_dot(T, T, p.rho)
    xs = nm.d_dparam(samples.x, samples.param, samples.segment, 1, width) / sp
    F = first_integral_xy(samples.x, xs, p.rho, p.mu)
    mask = np.isfinite(speed) & (np.abs(samples.x - 1.0) > peak_exclusion)
    for sl in nm.segment_slices(samples.segment):
        mask[sl.start : sl.start + width // 2] = False
        mask[sl.stop - width // 2 : sl.stop] = False
    if not np.any(mask):
        raise DomainError("no interior samples to check")
    q = quadric_residual(samples.coords, p.rho)
    return {
        "unit_speed_error": float(np.max(np.abs(speed[mask] - 1.0))),
        "quadric_residual": float(np.max(np.abs(q))),
        "f_drift": float(np.max(np.abs(F[mask] - p.d)) / abs(p.d)),
    }
