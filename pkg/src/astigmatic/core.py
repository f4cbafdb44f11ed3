"""Parameter and coordinate types shared by every module.

The 2-dimensional space form of curvature ``rho`` is realised inside affine
3-space: the plane ``x3 = 0`` for ``rho = 0``, the sphere ``|x|^2 = 1/rho`` for
``rho > 0`` and the upper sheet of ``x1^2 + x2^2 - x3^2 = 1/rho`` for
``rho < 0`` (Lorentzian metric ``dx1^2 + dx2^2 - dx3^2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class DomainError(ValueError):
    """Input lies outside the domain where an operation is defined."""


@dataclass(frozen=True)
class ModelParams:
    """The triple (rho, mu, d).

    ``rho`` is the sectional curvature, ``mu`` the energy index and ``d`` the
    value of the first integral.  The astigmatism constant is ``c = 1/mu``.
    """

    rho: float
    mu: float
    d: float

    def __post_init__(self):
        for name in ("rho", "mu", "d"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.mu == 0:
            raise DomainError("mu must be nonzero")
        if self.rho >= 0 and self.d <= 0:
            raise DomainError("d > 0 is required when rho >= 0 (F is a sum of nonnegative terms)")

    @property
    def c(self) -> float:
        return 1.0 / self.mu

    @property
    def flipped(self) -> bool:
        """True when mu < 0, i.e. the orientation-reversed problem."""
        return self.mu < 0

    def normalized(self) -> "ModelParams":
        """Same curves with mu > 0 (orientation reversal)."""
        return replace(self, mu=abs(self.mu)) if self.mu < 0 else self

    def with_d(self, d: float) -> "ModelParams":
        return replace(self, d=d)


@dataclass(frozen=True)
class PhasePoint:
    """A point (x, y) of the phase plane, x = exp(mu/kappa), y = dx/ds."""

    x: float
    y: float = 0.0

    def __post_init__(self):
        if not (self.x > 0) or self.x == 1.0:
            raise DomainError(f"phase point needs x > 0 and x != 1, got x={self.x}")


SIGNATURES = ("euclidean", "spherical", "lorentzian")


def signature_for(rho: float) -> str:
    if rho == 0:
        return "euclidean"
    return "spherical" if rho > 0 else "lorentzian"


def metric_diag(rho: float, dim: int) -> np.ndarray:
    """Diagonal of the ambient metric; the minus sign sits on x3 when rho < 0."""
    if dim not in (3, 4):
        raise DomainError(f"ambient dimension must be 3 or 4, got {dim}")
    g = np.ones(dim)
    if rho < 0:
        g[2] = -1.0
    return g


@dataclass(frozen=True)
class AmbientPoint:
    coords: np.ndarray
    signature: str = "euclidean"

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.shape not in ((3,), (4,)):
            raise DomainError(f"ambient point must be a 3- or 4-vector, got shape {c.shape}")
        if self.signature not in SIGNATURES:
            raise DomainError(f"unknown signature {self.signature!r}")
        object.__setattr__(self, "coords", c)

    def residual(self, rho: float) -> float:
        return float(quadric_residual(self.coords, rho))


def metric_dot(a, b, rho: float):
    """Ambient inner product: Euclidean for rho >= 0, minus sign on x3 otherwise.

    Works row-wise on stacked vectors.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[-1] != b.shape[-1]:
        raise DomainError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    g = metric_diag(rho, a.shape[-1])
    out = np.sum(a * b * g, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def quadric_residual(coords, rho: float):
    """<X, X> - 1/rho for rho != 0, |x3| (distance to the plane) for rho = 0."""
    coords = np.asarray(coords, dtype=float)
    if rho == 0:
        out = np.abs(coords[..., 2])
        if coords.shape[-1] == 4:
            out = out + np.abs(coords[..., 3])
        return out
    return metric_dot(coords, coords, rho) - 1.0 / rho


def kappa_from_x(x, mu: float):
    """kappa = mu / log x."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(x == 1.0):
        raise DomainError("kappa_from_x needs x > 0 and x != 1")
    out = mu / np.log(x)
    return float(out) if out.ndim == 0 else out


def x_from_kappa(kappa, mu: float):
    """x = exp(mu/kappa); x -> 1 as |kappa| -> infinity."""
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa == 0):
        raise DomainError("x_from_kappa needs kappa != 0")
    out = np.exp(mu / kappa)
    return float(out) if out.ndim == 0 else out


def embed_coords(u, v, rho: float, d: float) -> np.ndarray:
    """Vectorised chart (u, v) -> R^3 onto the model of M^2(rho).

    The second and third components carry the factor 1/sqrt(|rho|) that puts
    the image on the quadric; with it the curve (u, v) = ((1 - log x) x, psi)
    is unit speed.  For rho < 0 and d < 0 (only reachable by the circle
    solution) the boost-invariant chart is used instead, with the u-direction
    along the timelike axis.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if rho == 0:
        if d <= 0:
            raise DomainError("d > 0 is required for rho = 0")
        sd = math.sqrt(d)
        return np.stack([u / sd, sd * v, np.zeros(np.broadcast(u, v).shape)], axis=-1)
    q = d - rho * u * u
    if np.any(q < -1e-14 * max(1.0, abs(d))):
        raise DomainError("rho*u^2 > d: point is off the model")
    q = np.maximum(q, 0.0)
    if rho > 0:
        sd = math.sqrt(d)
        r = np.sqrt(q / (d * rho))
        w = math.sqrt(rho * d) * v
        return np.stack([u / sd, r * np.sin(w), r * np.cos(w)], axis=-1)
    if d > 0:
        sd = math.sqrt(d)
        r = np.sqrt(q / (-d * rho))
        w = math.sqrt(-rho * d) * v
        return np.stack([u / sd, r * np.sinh(w), r * np.cosh(w)], axis=-1)
    if d < 0:
        r = np.sqrt(q / (d * rho))
        w = math.sqrt(rho * d) * v
        return np.stack([r * np.cos(w), r * np.sin(w), u / math.sqrt(-d)], axis=-1)
    raise DomainError("d = 0 has no chart")


def embed_phi(u: float, v: float, params: ModelParams) -> AmbientPoint:
    """Chart of M^2(rho) adapted to the critical curves with first-integral value d."""
    if params.rho != 0 and params.rho * u * u - params.d > 1e-14 * max(1.0, abs(params.d)):
        raise DomainError(f"rho*u^2 = {params.rho * u * u} exceeds d = {params.d}")
    return AmbientPoint(embed_coords(u, v, params.rho, params.d), signature_for(params.rho))


def azimuth_scale(rho: float, d: float) -> float:
    """Factor turning psi into the chart angle (or x2 coordinate when rho = 0)."""
    return math.sqrt(abs(rho) * d) if rho != 0 else math.sqrt(d)
