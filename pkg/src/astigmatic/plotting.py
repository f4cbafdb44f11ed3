"""Figures rendered off-screen (Agg) next to the data files the CLI writes."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .curves import CurveSamples  # noqa: E402
from .euler_lagrange import first_integral_xy  # noqa: E402
from .export import project_mesh  # noqa: E402
from .phase_plane import singular_points  # noqa: E402
from .surfaces import SurfaceMesh  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.2,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}
_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def planar_view(samples: CurveSamples) -> np.ndarray:
    """2D picture of the curve: the plane itself, or a disc model of the sphere / hyperbolic plane."""
    c = samples.coords
    rho = samples.params.rho
    if rho == 0:
        return c[:, :2]
    R = 1.0 / math.sqrt(abs(rho))
    if rho > 0:
        # stereographic from the point of the sphere opposite the curve's mean position
        pole = -np.sign(np.mean(c[:, 2])) or -1.0
        return R * c[:, :2] / (R - pole * c[:, 2])[:, None]
    return R * c[:, :2] / (R + c[:, 2])[:, None]


def plot_curve(samples: CurveSamples, path: Path, title: str | None = None) -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 4.2))
        P = planar_view(samples)
        breaks = set(samples.peaks)
        start = 0
        for i in sorted(breaks) + [len(P) - 1]:
            ax.plot(P[start : i + 1, 0], P[start : i + 1, 1], color="k")
            start = i + 1
        for i in breaks:
            q = 0.5 * (P[i] + P[i + 1])
            ax.plot(*q, "o", ms=3, color="tab:red")
        if samples.params.rho < 0:
            ax.add_patch(plt.Circle((0, 0), 1 / math.sqrt(-samples.params.rho), fill=False, lw=0.5, color="0.6"))
        ax.axhline(0.0, color="0.75", lw=0.5)
        ax.axvline(0.0, color="0.75", lw=0.5)
        ax.set_aspect("equal")
        p = samples.params
        ax.set_title(title or f"rho={p.rho:g}, mu={p.mu:g}, d={p.d:g} ({samples.component})")
        return _save(fig, path)


def plot_curvature(samples: CurveSamples, path: Path, clip: float = 20.0) -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.0))
        k = np.clip(samples.kappa, -clip, clip)
        seg = samples.segment
        for sid in np.unique(seg):
            m = seg == sid
            ax.plot(samples.s[m], k[m], color="k")
        ax.set_xlabel("s")
        ax.set_ylabel("kappa")
        return _save(fig, path)


def plot_phase(params, path: Path, x_max: float | None = None, levels: int = 24) -> Path:
    """Level sets of F(x, y) with the level d highlighted and the singular points marked."""
    pts = singular_points(params.rho, params.mu)
    xs = [p.x for p in pts] + [1.0, math.e]
    x_max = x_max or 1.6 * max(xs + [math.sqrt(abs(params.d)) / abs(params.mu)])
    X, Y = np.meshgrid(np.linspace(1e-3, x_max, 400), np.linspace(-3, 3, 300))
    F = first_integral_xy(X, Y, params.rho, params.mu)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        ax.contour(X, Y, F, levels=levels, colors="0.7", linewidths=0.5)
        ax.contour(X, Y, F, levels=[params.d], colors="k", linewidths=1.2)
        ax.axvline(1.0, color="tab:red", lw=0.6, ls="--")
        for p in pts:
            ax.plot(p.x, 0.0, "o" if p.kind == "center" else "s", ms=4, label=f"{p.kind} x={p.x:.3f}")
        if pts:
            ax.legend(loc="upper right", fontsize=7)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        return _save(fig, path)


def plot_surface(mesh: SurfaceMesh, path: Path) -> Path:
    P, info = project_mesh(mesh)
    with plt.rc_context(_STYLE):
        fig = plt.figure(figsize=(5.0, 5.0))
        ax = fig.add_subplot(projection="3d")
        for sid in np.unique(mesh.row_segment):
            m = mesh.row_segment == sid
            Q = P[m]
            if mesh.rotation == "circular":
                Q = np.concatenate([Q, Q[:, :1]], axis=1)
            ax.plot_surface(Q[..., 0], Q[..., 2], Q[..., 1], color="0.8", edgecolor="0.3", linewidth=0.1, shade=True)
        ax.set_title(info["projection"])
        return _save(fig, path)


def plot_sweep(d: np.ndarray, labels: list[str], path: Path) -> Path:
    names = list(dict.fromkeys(labels))
    code = np.array([names.index(lab) for lab in labels])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.5, 0.4 + 0.35 * len(names)))
        ax.scatter(d, code, s=4, color="k")
        ax.set_yticks(range(len(names)), names)
        ax.set_xlabel("d")
        return _save(fig, path)
