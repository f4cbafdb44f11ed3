"""Rotational surfaces swept by critical curves, and their principal curvatures.

A critical curve gamma lies in the totally geodesic slice x4 = 0 of the
3-dimensional space form.  Rotating the slice about the geodesic beta
(first coordinate zero) sweeps a surface whose principal curvatures are

    kappa2 = -kappa,     kappa1 = (G_ss / G + rho) / kappa,

with G = (1 - mu/kappa) e^{mu/kappa}; it has constant astigmatism
1/kappa1 - 1/kappa2 = 1/mu.  The finite-difference mode recomputes both
curvatures from the mesh alone and serves as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _numerics as nm
from .core import DomainError, ModelParams, metric_diag, metric_dot, quadric_residual, signature_for
from .curves import CurveSamples, build_curve
from .euler_lagrange import constant_curvature_solutions, profile_ss

# rows of a mesh are kept away from peaks (kappa infinite) and from the
# rotation axis, where G vanishes and the surface pinches to a point
PEAK_EXCLUSION = 1e-3
X_FLOOR = 0.05


@dataclass
class SurfaceMesh:
    """Vertices X[i, j] = rotation by t[j] of curve sample rows[i].

    ``kappa1``/``kappa2`` and the principal radii ``r1``/``r2`` are filled in
    by :func:`principal_curvatures`; radii are kept separately because
    kappa1 is unbounded where the surface meets the rotation axis while its
    inverse stays small.
    """

    vertices: np.ndarray  # (ns, nt, dim)
    t: np.ndarray
    curve: CurveSamples
    rows: np.ndarray
    row_segment: np.ndarray
    params: ModelParams
    rotation: str = "circular"  # circular | boost
    kappa1: np.ndarray | None = None
    kappa2: np.ndarray | None = None
    r1: np.ndarray | None = None
    r2: np.ndarray | None = None
    mode: str | None = None
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.vertices.shape[0], self.vertices.shape[1]

    @property
    def dim(self) -> int:
        return self.vertices.shape[2]

    @property
    def signature(self) -> str:
        return signature_for(self.params.rho)

    @property
    def s(self) -> np.ndarray:
        return self.curve.s[self.rows]

    @property
    def x(self) -> np.ndarray:
        return self.curve.x[self.rows]

    def quadric_residual(self) -> float:
        if self.params.rho == 0:
            return 0.0
        return float(np.max(np.abs(quadric_residual(self.vertices, self.params.rho))))


# ---------------------------------------------------------------------------
# construction


def _rotate(coords: np.ndarray, t: np.ndarray, rho: float, rotation: str) -> np.ndarray:
    c, s = np.cos(t)[None, :], np.sin(t)[None, :]
    g1 = coords[:, 0:1]
    if rho == 0:
        return np.stack([g1 * c, np.broadcast_to(coords[:, 1:2], (len(coords), len(t))), g1 * s], axis=-1)
    ns, nt = len(coords), len(t)
    if rotation == "boost":
        g3 = coords[:, 2:3]
        return np.stack(
            [
                np.broadcast_to(coords[:, 0:1], (ns, nt)),
                np.broadcast_to(coords[:, 1:2], (ns, nt)),
                g3 * np.cosh(t)[None, :],
                g3 * np.sinh(t)[None, :],
            ],
            axis=-1,
        )
    return np.stack(
        [g1 * c, np.broadcast_to(coords[:, 1:2], (ns, nt)), np.broadcast_to(coords[:, 2:3], (ns, nt)), g1 * s],
        axis=-1,
    )


def default_rows(
    samples: CurveSamples, ns: int | None = None, x_floor: float = X_FLOOR, peak_exclusion: float = PEAK_EXCLUSION
) -> np.ndarray:
    """Indices of roughly ``ns`` samples, evenly strided, away from peaks and the axis ends."""
    x = samples.x
    ok = (np.abs(x - 1.0) >= peak_exclusion) & (x >= x_floor) & np.isfinite(samples.kappa)
    idx = np.flatnonzero(ok)
    if len(idx) == 0:
        raise DomainError("no curve samples left after excluding peaks and the axis ends")
    if ns is None or ns >= len(idx):
        return idx
    stride = max(1, len(idx) // ns)
    return idx[::stride]


def _row_segments(samples: CurveSamples, rows: np.ndarray) -> np.ndarray:
    """Segment id per row, new whenever the curve segment or the stride changes."""
    seg = samples.segment[rows]
    gaps = np.diff(rows)
    stride = np.median(gaps) if len(gaps) else 1
    cut = (np.diff(seg) != 0) | (gaps != stride)
    return np.concatenate([[0], np.cumsum(cut)]).astype(int)


def rotate_curve(
    samples: CurveSamples,
    params: ModelParams | None = None,
    nt: int = 64,
    rows: np.ndarray | None = None,
    ns: int | None = None,
) -> SurfaceMesh:
    """Sweep the curve around beta.

    rho = 0:  X = (g1 cos t, g2, g1 sin t).
    rho != 0: X = (g1 cos t, g2, g3, g1 sin t), a rotation in the (x1, x4)
    plane fixing beta.  A hyperbolic circle with d < 0 sits in the
    boost-invariant chart, whose axis direction is x3; it is swept by the
    boost (x3, x4) -> x3 (cosh t, sinh t), t in [-1, 1).
    """
    params = samples.params if params is None else params
    if nt < 8:
        raise DomainError("nt must be at least 8")
    if rows is None:
        rows = default_rows(samples, ns) if ns is not None else np.arange(len(samples))
    rows = np.asarray(rows, dtype=int)
    rotation = "boost" if params.rho < 0 and params.d < 0 else "circular"
    if rotation == "boost":
        t = -1.0 + 2.0 * np.arange(nt) / nt
    else:
        t = 2 * math.pi * np.arange(nt) / nt
    V = _rotate(samples.coords[rows], t, params.rho, rotation)
    return SurfaceMesh(V, t, samples, rows, _row_segments(samples, rows), params, rotation)


def surface_for(params: ModelParams, component: str = "inner", n: int = 2000, ns: int = 200, nt: int = 64) -> SurfaceMesh:
    """Build the curve and mesh ``ns`` of its samples (the default 200 x 64 grid)."""
    curve = build_curve(params, component=component, n=n)
    return rotate_curve(curve, params, nt=nt, rows=default_rows(curve, ns))


def row_congruence(mesh: SurfaceMesh) -> float:
    """Max distance between column j + 1 and column j rotated by the grid step."""
    dt = mesh.t[1] - mesh.t[0]
    V = mesh.vertices
    c, s = math.cos(dt), math.sin(dt)
    W = V[:, :-1].copy()
    if mesh.rotation == "boost":
        ch, sh = math.cosh(dt), math.sinh(dt)
        a, b = V[:, :-1, 2], V[:, :-1, 3]
        W[..., 2], W[..., 3] = ch * a + sh * b, sh * a + ch * b
    else:
        j = 2 if mesh.dim == 3 else 3
        a, b = V[:, :-1, 0], V[:, :-1, j]
        W[..., 0], W[..., j] = c * a - s * b, s * a + c * b
    return float(np.max(np.abs(W - V[:, 1:])))


def orbit_speed(mesh: SurfaceMesh) -> np.ndarray:
    """|dX/dt| per row (the Killing speed of the rotation)."""
    V = mesh.vertices[:, 0]
    if mesh.rotation == "boost":
        return np.abs(V[:, 2])
    return np.abs(V[:, 0])


# ---------------------------------------------------------------------------
# principal curvatures


def _analytic(mesh: SurfaceMesh, width: int = 7):
    c = mesh.curve
    p = mesh.params
    kappa = c.kappa
    G = c.u
    if c.meta.get("constant_curvature"):
        Gss = np.zeros_like(G)
    else:
        Gss = profile_ss(kappa, c.params.mu, c.s, c.param, c.segment, width, c.dsdp)
    r = mesh.rows
    k, g, gss = kappa[r], G[r], Gss[r]
    if np.any(~np.isfinite(gss)):
        bad = r[~np.isfinite(gss)]
        raise DomainError(f"G_ss unavailable at curve samples {bad[:5].tolist()} (too close to a segment end)")
    denom = gss + p.rho * g
    k1 = denom / (g * k)
    k2 = -k
    r1 = g * k / denom
    r2 = -1.0 / k
    return k1, k2, r1, r2


def _cross4(a, b, c):
    """Vector orthogonal (Euclidean) to a, b, c in R^4, row-wise."""
    M = np.stack([a, b, c], axis=-2)
    out = np.empty(a.shape)
    cols = [0, 1, 2, 3]
    for k in range(4):
        sub = M[..., [j for j in cols if j != k]]
        out[..., k] = (-1) ** k * np.linalg.det(sub)
    return out


def _fd_derivs(mesh: SurfaceMesh, width: int = 5):
    V = mesh.vertices
    ns, nt, dim = V.shape
    p_rows = mesh.curve.param[mesh.rows]
    seg = mesh.row_segment
    flat = V.reshape(ns, nt * dim)
    Xp = nm.d_dparam(flat, p_rows, seg, 1, width).reshape(V.shape)
    Xpp = nm.d_dparam(flat, p_rows, seg, 2, width).reshape(V.shape)
    if mesh.rotation == "boost":
        tseg = np.zeros(nt, dtype=int)
        VT = np.swapaxes(V, 0, 1).reshape(nt, ns * dim)
        Xt = np.swapaxes(nm.d_dparam(VT, mesh.t, tseg, 1, width).reshape(nt, ns, dim), 0, 1)
        Xtt = np.swapaxes(nm.d_dparam(VT, mesh.t, tseg, 2, width).reshape(nt, ns, dim), 0, 1)
    else:
        h = mesh.t[1] - mesh.t[0]
        Xt = nm.periodic_d(V, h, 1, axis=1)
        Xtt = nm.periodic_d(V, h, 2, axis=1)
    XpT = np.swapaxes(Xp, 0, 1).reshape(nt, ns * dim)
    if mesh.rotation == "boost":
        Xpt = np.swapaxes(nm.d_dparam(XpT, mesh.t, np.zeros(nt, dtype=int), 1, width).reshape(nt, ns, dim), 0, 1)
    else:
        Xpt = nm.periodic_d(Xp, mesh.t[1] - mesh.t[0], 1, axis=1)
    return Xp, Xt, Xpp, Xpt, Xtt


def _finite_difference(mesh: SurfaceMesh, width: int = 5):
    p = mesh.params
    rho = p.rho
    V = mesh.vertices
    Xp, Xt, Xpp, Xpt, Xtt = _fd_derivs(mesh, width)
    g = lambda a, b: metric_dot(a, b, rho)
    if mesh.dim == 3:
        n = np.cross(Xp, Xt)
    else:
        J = metric_diag(rho, 4)
        n = _cross4(Xp, Xt, V) * J
    nn = g(n, n)
    n = n / np.sqrt(np.abs(nn))[..., None]
    E, F, Gm = g(Xp, Xp), g(Xp, Xt), g(Xt, Xt)
    L, M, N = g(Xpp, n), g(Xpt, n), g(Xtt, n)
    I = np.stack([np.stack([E, F], -1), np.stack([F, Gm], -1)], -2)
    II = np.stack([np.stack([L, M], -1), np.stack([M, N], -1)], -2)
    S = np.linalg.solve(I, II)
    ev, evec = np.linalg.eig(S)
    ev = ev.real
    # the eigenvector closer to the profile direction d/dp carries kappa2
    prof = np.abs(evec[..., 0, :].real) * np.sqrt(np.abs(E))[..., None]
    circ = np.abs(evec[..., 1, :].real) * np.sqrt(np.abs(Gm))[..., None]
    along = prof / np.maximum(np.hypot(prof, circ), 1e-300)
    i2 = np.argmax(along, axis=-1)
    k2 = np.take_along_axis(ev, i2[..., None], -1)[..., 0]
    k1 = np.take_along_axis(ev, (1 - i2)[..., None], -1)[..., 0]
    # align the normal with the analytic convention kappa2 = -kappa
    kappa = mesh.curve.kappa[mesh.rows][:, None]
    flip = np.where(np.sign(k2) == np.sign(-kappa), 1.0, -1.0)
    k1, k2 = k1 * flip, k2 * flip
    # rows without a centred stencil in the profile direction are not interior
    for sl in nm.segment_slices(mesh.row_segment):
        for i in list(range(sl.start, sl.start + width // 2)) + list(range(sl.stop - width // 2, sl.stop)):
            k1[i], k2[i] = np.nan, np.nan
    with np.errstate(divide="ignore"):
        return k1, k2, 1.0 / k1, 1.0 / k2


def principal_curvatures(
    mesh: SurfaceMesh, params: ModelParams | None = None, mode: str = "analytic", width: int = 7
) -> SurfaceMesh:
    """Return a copy of ``mesh`` with kappa1, kappa2 (and radii) per vertex."""
    if params is not None and params != mesh.params:
        mesh = replace(mesh, params=params)
    kappa = mesh.curve.kappa[mesh.rows]
    if np.any(kappa == 0) or np.any(~np.isfinite(kappa)):
        i = int(np.flatnonzero((kappa == 0) | ~np.isfinite(kappa))[0])
        raise DomainError(f"curvature is zero or infinite at row {i}")
    if np.any(np.abs(kappa - mesh.params.mu) <= 1e-14 * abs(mesh.params.mu)):
        i = int(np.flatnonzero(np.abs(kappa - mesh.params.mu) <= 1e-14 * abs(mesh.params.mu))[0])
        raise DomainError(f"kappa = mu at row {i}: G vanishes identically there")
    nt = mesh.shape[1]
    if mode == "analytic":
        k1, k2, r1, r2 = _analytic(mesh)
        tile = lambda a: np.repeat(a[:, None], nt, axis=1)
        k1, k2, r1, r2 = map(tile, (k1, k2, r1, r2))
    elif mode == "finite_difference":
        k1, k2, r1, r2 = _finite_difference(mesh, width)
    else:
        raise DomainError(f"mode must be 'analytic' or 'finite_difference', got {mode!r}")
    return replace(mesh, kappa1=k1, kappa2=k2, r1=r1, r2=r2, mode=mode)


def astigmatism_field(mesh: SurfaceMesh) -> np.ndarray:
    """(1/kappa1 - 1/kappa2) - 1/mu per vertex."""
    if mesh.r1 is None:
        raise DomainError("principal curvatures are not attached; call principal_curvatures first")
    return mesh.r1 - mesh.r2 - 1.0 / mesh.params.mu


def astigmatism_deviation(mesh: SurfaceMesh, params: ModelParams | None = None) -> float:
    """max |(1/kappa1 - 1/kappa2) - 1/mu| over vertices with finite curvature data."""
    if params is not None and params != mesh.params:
        mesh = replace(mesh, params=params)
    if mesh.r1 is None:
        mesh = principal_curvatures(mesh)
    dev = astigmatism_field(mesh)
    if np.any(mesh.kappa1 == 0) or np.any(mesh.kappa2 == 0):
        i = np.argwhere((mesh.kappa1 == 0) | (mesh.kappa2 == 0))[0]
        raise DomainError(f"vanishing principal curvature at vertex {tuple(int(v) for v in i)}")
    ok = np.isfinite(dev)
    if not np.any(ok):
        raise DomainError("no vertex with finite principal curvatures")
    return float(np.max(np.abs(dev[ok])))


def mean_curvature(mesh: SurfaceMesh) -> np.ndarray:
    if mesh.kappa1 is None:
        raise DomainError("principal curvatures are not attached")
    return 0.5 * (mesh.kappa1 + mesh.kappa2)


# ---------------------------------------------------------------------------
# Gauss-Codazzi


def gauss_codazzi_pointwise(samples: CurveSamples, params: ModelParams | None = None, width: int = 5) -> np.ndarray:
    """d/ds[(G_ss + G (kappa^2 + rho)) / kappa] - kappa_s G per sample (NaN near segment ends)."""
    p = samples.params if params is None else params
    if len(samples) < 3 * width:
        raise DomainError("too few samples for the Gauss-Codazzi residual")
    kappa = samples.kappa
    G = samples.u
    args = (samples.s, samples.param, samples.segment)
    Gss = profile_ss(kappa, samples.params.mu, *args, width=width, dsdp=samples.dsdp)
    q = (Gss + G * (kappa**2 + p.rho)) / kappa
    qs, _ = nm.s_derivatives(q, *args, width=width, dsdp=samples.dsdp)
    ks, _ = nm.s_derivatives(kappa, *args, width=width, dsdp=samples.dsdp)
    return qs - ks * G


def gauss_codazzi_residual(
    samples: CurveSamples,
    params: ModelParams | None = None,
    width: int = 5,
    peak_margin: float = 0.05,
    x_floor: float = X_FLOOR,
) -> float:
    """Max Gauss-Codazzi residual over samples away from peaks and the axis ends."""
    if samples.meta.get("constant_curvature"):
        return 0.0
    r = gauss_codazzi_pointwise(samples, params, width)
    x = samples.x
    ok = np.isfinite(r) & (np.abs(x - 1.0) >= peak_margin) & (x >= x_floor)
    if not np.any(ok):
        raise DomainError("no samples left for the Gauss-Codazzi residual")
    return float(np.max(np.abs(r[ok])))


# ---------------------------------------------------------------------------
# special surfaces


@dataclass(frozen=True)
class HopfRadii:
    r1: float
    r2: float
    m2: float
    m2_literal: float  # |rho^2 +- sqrt(rho^2 - 4 mu^2 rho)|, the reading without the factor rho

    def __iter__(self):
        return iter((self.r1, self.r2))


def hopf_torus_radii(rho: float, mu: float, branch: str = "+") -> HopfRadii:
    """Radii of the product torus S^1(r1) x S^1(r2) swept by a constant-curvature parallel.

    m^2 = |rho^2 +- rho sqrt(rho^2 - 4 mu^2 rho)|, r1 = sqrt(2) mu / m,
    r2 = sqrt(m^2 - 2 mu^2 rho) / (sqrt(rho) m), so r1^2 + r2^2 = 1/rho.
    """
    if not rho > 0:
        raise DomainError("Hopf tori live in the 3-sphere: rho > 0")
    if mu == 0:
        raise DomainError("mu must be nonzero")
    if branch not in ("+", "-"):
        raise DomainError("branch must be '+' or '-'")
    disc = rho * rho - 4 * mu * mu * rho
    if disc < -1e-12 * rho * rho:
        raise DomainError(f"no constant-curvature parallels: mu^2 = {mu * mu} > rho / 4")
    if abs(disc) <= 1e-12 * rho * rho:
        # the degenerate ratio rho = 4 mu^2, within the same tolerance the phase plane uses
        disc = 0.0
    sign = 1.0 if branch == "+" else -1.0
    root = math.sqrt(disc)
    m2 = abs(rho * rho + sign * rho * root)
    if m2 <= 2 * mu * mu * rho:
        raise DomainError(f"branch {branch} gives m^2 = {m2} <= 2 mu^2 rho")
    m = math.sqrt(m2)
    r1 = math.sqrt(2.0) * abs(mu) / m
    r2 = math.sqrt(m2 - 2 * mu * mu * rho) / (math.sqrt(rho) * m)
    return HopfRadii(r1, r2, m2, abs(rho * rho + sign * root))


def _closed_length(kappa0: float, rho: float) -> float | None:
    q = kappa0 * kappa0 + rho
    return 2 * math.pi / math.sqrt(q) if q > 0 else None


def cylinder_surface(rho: float, mu: float, which: int = 0, ns: int = 64, nt: int = 64) -> SurfaceMesh:
    """Surface swept by the constant-curvature critical curve number ``which``.

    Closed curves (circles, parallels) are sampled over one full turn; the
    open hypercycle over unit length.
    """
    sols = constant_curvature_solutions(rho, mu)
    if not sols:
        if rho == 0:
            raise DomainError("there are no critical curves of constant curvature in the plane")
        raise DomainError(f"no constant-curvature critical curves for rho = {rho}, mu = {mu}")
    if not 0 <= which < len(sols):
        raise DomainError(f"which must be in [0, {len(sols)}), got {which}")
    sol = sols[which]
    length = _closed_length(sol.kappa0, rho) or 1.0
    curve = CurveSamples.constant_curvature(sol, rho, mu, length=length, n=ns)
    mesh = rotate_curve(curve, curve.params, nt=nt)
    mesh.meta.update(kind=sol.kind, kappa0=sol.kappa0, branch=sol.sign_branch)
    return mesh
