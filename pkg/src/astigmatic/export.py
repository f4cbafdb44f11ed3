"""File writers: JSON reports, CSV tables and OBJ meshes.

Everything written here is a pure function of its inputs.  Floats are
printed with repr precision, keys are sorted, and nothing time-dependent
goes into a data file, so identical runs give byte-identical output.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import DomainError
from .surfaces import SurfaceMesh

SCHEMA_VERSION = "1.0"


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict) -> Path:
    payload = dict(payload)
    payload.setdefault("schema_version", SCHEMA_VERSION)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def write_csv(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else "nan"
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


# ---------------------------------------------------------------------------
# projections of 4D meshes


def _stereo_pole(V: np.ndarray, R: float) -> int:
    """Signed axis (1-based, sign = side) whose pole is farthest from the mesh."""
    best, best_d = 1, -1.0
    for k in range(4):
        for sgn in (1, -1):
            pole = np.zeros(4)
            pole[k] = sgn * R
            dist = float(np.min(np.linalg.norm(V - pole, axis=-1)))
            if dist > best_d:
                best, best_d = sgn * (k + 1), dist
    return best


def project_mesh(mesh: SurfaceMesh) -> tuple[np.ndarray, dict]:
    """3D coordinates for display and a description of the map used."""
    V = mesh.vertices
    rho = mesh.params.rho
    if mesh.dim == 3:
        return V.copy(), {"projection": "identity", "ambient": "R3"}
    if rho > 0:
        R = 1.0 / math.sqrt(rho)
        code = _stereo_pole(V.reshape(-1, 4), R)
        k, sgn = abs(code) - 1, math.copysign(1.0, code)
        keep = [i for i in range(4) if i != k]
        denom = R - sgn * V[..., k]
        P = R * V[..., keep] / denom[..., None]
        return P, {
            "projection": "stereographic",
            "ambient": "S3",
            "radius": R,
            "pole_axis": k,
            "pole_sign": int(sgn),
            "kept_axes": keep,
        }
    R = 1.0 / math.sqrt(-rho)
    t = V[..., 2]
    if np.any(t <= 0):
        raise DomainError("vertices off the upper sheet of the hyperboloid")
    keep = [0, 1, 3]
    P = R * V[..., keep] / (R + t)[..., None]
    return P, {"projection": "poincare_ball", "ambient": "H3", "radius": R, "timelike_axis": 2, "kept_axes": keep}


def write_obj(path: Path, mesh: SurfaceMesh) -> tuple[Path, Path | None]:
    """Quad mesh in OBJ; 4D meshes are projected and the map recorded in a sidecar JSON.

    Axes are written as (x, y, z) = (P0, P1, P2), so the profile's second
    coordinate, which runs along the symmetry geodesic, points up.
    """
    P, info = project_mesh(mesh)
    ns, nt = mesh.shape
    closed = mesh.rotation == "circular"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# rotational surface rho={mesh.params.rho!r} mu={mesh.params.mu!r} d={mesh.params.d!r}", f"# grid {ns} x {nt}"]
    for v in P.reshape(-1, 3):
        lines.append("v {!r} {!r} {!r}".format(*map(float, v)))
    idx = lambda i, j: i * nt + (j % nt) + 1
    jmax = nt if closed else nt - 1
    for i in range(ns - 1):
        if mesh.row_segment[i] != mesh.row_segment[i + 1]:
            continue
        for j in range(jmax):
            lines.append(f"f {idx(i, j)} {idx(i + 1, j)} {idx(i + 1, j + 1)} {idx(i, j + 1)}")
    path.write_text("\n".join(lines) + "\n")
    side = None
    if mesh.dim == 4:
        side = write_json(
            path.with_suffix(".projection.json"),
            dict(info, obj=path.name, rho=mesh.params.rho, mu=mesh.params.mu, d=mesh.params.d, grid=[ns, nt]),
        )
    return path, side


def surface_csv(path: Path, mesh: SurfaceMesh) -> Path:
    """Per-vertex table: grid indices, s, t, x, ambient coordinates and curvature data."""
    ns, nt = mesh.shape
    dim = mesh.dim
    header = ["i", "j", "s", "t", "x"] + [f"X{k + 1}" for k in range(dim)] + ["kappa1", "kappa2", "astigmatism_error"]
    k1 = mesh.kappa1 if mesh.kappa1 is not None else np.full((ns, nt), np.nan)
    k2 = mesh.kappa2 if mesh.kappa2 is not None else np.full((ns, nt), np.nan)
    err = mesh.r1 - mesh.r2 - 1.0 / mesh.params.mu if mesh.r1 is not None else np.full((ns, nt), np.nan)
    s, x = mesh.s, mesh.x

    def rows():
        for i in range(ns):
            for j in range(nt):
                yield [i, j, s[i], mesh.t[j], x[i], *mesh.vertices[i, j], k1[i, j], k2[i, j], err[i, j]]

    return write_csv(path, header, rows())
