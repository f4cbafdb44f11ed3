"""Command-line front end: ``astig {classify,curve,surface,phase,sweep}``.

Exit codes: 0 success, 1 internal error or a failed verification check,
2 invalid parameters.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classify import classification_report, classify, curvature_period, thresholds, traced_period
from .core import DomainError, ModelParams, PhasePoint
from .curves import COMPONENTS, build_curve, curve_diagnostics
from .euler_lagrange import el_residual
from .export import surface_csv, write_csv, write_json, write_obj
from .phase_plane import IntegrationError, braid_window, orbit_x_intersections, singular_points, trace_orbit
from .surfaces import (
    astigmatism_deviation,
    cylinder_surface,
    default_rows,
    mean_curvature,
    principal_curvatures,
    rotate_curve,
    row_congruence,
)

log = logging.getLogger("astigmatic")

FORMATS = ("json", "csv", "obj", "plotdata", "png")
DEFAULT_FORMATS = {
    "classify": ("json",),
    "curve": ("json", "csv", "plotdata", "png"),
    "surface": ("json", "csv", "obj", "png"),
    "phase": ("json", "csv", "png"),
    "sweep": ("csv", "png"),
}
TOLERANCES = {
    "el": 1e-5,
    "speed": 1e-6,
    "drift": 1e-8,
    "quadric": 1e-9,
    "astig": 1e-6,
    "astig_fd": 1e-3,
}


class UsageError(Exception):
    """Invalid command-line configuration (exit code 2)."""


@dataclass
class RunConfig:
    command: str
    rho: float
    mu: float
    d: float | None = None
    d_range: tuple[float, float, float] | None = None
    n: int = 2000
    nt: int = 64
    ns: int = 200
    out: Path = Path("astig_out")
    formats: tuple[str, ...] = ()
    tol: dict = field(default_factory=lambda: dict(TOLERANCES))
    workers: int = 1
    component: str = "inner"
    cylinder: int | None = None

    def __post_init__(self):
        if self.d_range is not None and self.command != "sweep":
            raise UsageError("a d-range is only accepted by the sweep subcommand")
        if self.command == "sweep" and self.d_range is None:
            raise UsageError("sweep needs --d-min, --d-max and --d-step")
        if self.command in ("classify", "curve") and self.d is None:
            raise UsageError(f"{self.command} needs --d")
        if self.command == "surface" and self.d is None and self.cylinder is None:
            raise UsageError("surface needs --d or --cylinder")

    def params(self, d: float | None = None) -> ModelParams:
        return ModelParams(self.rho, self.mu, self.d if d is None else d)

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def stem(self) -> str:
        d = "" if self.d is None else f"_d{self.d:g}"
        return f"{self.command}_rho{self.rho:g}_mu{self.mu:g}{d}"


def _check(report: dict, name: str, value: float, tol: float) -> None:
    ok = bool(np.isfinite(value) and value < tol)
    report.setdefault("checks", {})[name] = {"value": value, "tol": tol, "ok": ok}


def _all_ok(report: dict) -> bool:
    return all(c["ok"] for c in report.get("checks", {}).values())


# ---------------------------------------------------------------------------
# subcommands


def cmd_classify(cfg: RunConfig) -> int:
    p = cfg.params()
    rep = classification_report(p)
    rep["feature_based"] = any(c["diagnostics"].get("feature_based") for c in rep["components"])
    for c in rep["components"]:
        print(f"{c['component']}: {c['label']}")
    if cfg.wants("json"):
        write_json(cfg.out / f"{cfg.stem()}.json", rep)
    return 0


def _curve_rows(c):
    dim = c.coords.shape[1]
    header = ["s", "x", "kappa", "psi", "segment"] + [f"X{k + 1}" for k in range(dim)]
    rows = ([c.s[i], c.x[i], c.kappa[i], c.psi[i], int(c.segment[i]), *c.coords[i]] for i in range(len(c)))
    return header, rows


def cmd_curve(cfg: RunConfig) -> int:
    from . import plotting

    p = cfg.params()
    c = build_curve(p, component=cfg.component, n=cfg.n)
    diag = curve_diagnostics(c)
    rep = {"rho": p.rho, "mu": p.mu, "d": p.d, "component": cfg.component, "n_samples": len(c)}
    rep["x0"] = c.x0
    rep["peaks"] = len(c.peaks)
    rep["arc_length"] = float(c.s[-1] - c.s[0])
    _check(rep, "unit_speed", diag["unit_speed_error"], cfg.tol["speed"])
    _check(rep, "f_drift", diag["f_drift"], cfg.tol["drift"])
    _check(rep, "el_residual", el_residual(c, p), cfg.tol["el"])
    if p.rho != 0:
        _check(rep, "quadric", diag["quadric_residual"], cfg.tol["quadric"])
    if cfg.component == "inner" and c.x_range[0] <= 1e-8 * (1 + 1e-12):
        rep["endpoint_azimuth"] = c.endpoint_azimuth()
    if cfg.component == "braid":
        T = curvature_period(p)
        rep["curvature_period"] = T
        rep["curvature_period_traced"] = traced_period(p)[0]
        log.info("curvature period %.12g", T)
    stem = f"{cfg.stem()}_{cfg.component}"
    if cfg.wants("csv"):
        header, rows = _curve_rows(c)
        write_csv(cfg.out / f"{stem}.csv", header, rows)
    if cfg.wants("plotdata"):
        P = plotting.planar_view(c)
        write_csv(cfg.out / f"{stem}_plot.csv", ["s", "px", "py", "kappa"], ([c.s[i], *P[i], c.kappa[i]] for i in range(len(c))))
    if cfg.wants("png"):
        plotting.plot_curve(c, cfg.out / f"{stem}.png")
        plotting.plot_curvature(c, cfg.out / f"{stem}_kappa.png")
    if cfg.wants("json"):
        write_json(cfg.out / f"{stem}.json", rep)
    return 0 if _all_ok(rep) else 1


def cmd_surface(cfg: RunConfig) -> int:
    from . import plotting

    if cfg.cylinder is not None:
        mesh = cylinder_surface(cfg.rho, cfg.mu, cfg.cylinder, ns=max(cfg.ns // 2, 16), nt=cfg.nt)
        p = mesh.params
        stem = f"surface_rho{cfg.rho:g}_mu{cfg.mu:g}_cylinder{cfg.cylinder}"
    else:
        p = cfg.params()
        curve = build_curve(p, component=cfg.component, n=cfg.n)
        mesh = rotate_curve(curve, p, nt=cfg.nt, rows=default_rows(curve, cfg.ns))
        stem = f"{cfg.stem()}_{cfg.component}"
    an = principal_curvatures(mesh, mode="analytic")
    fd = principal_curvatures(mesh, mode="finite_difference")
    rep = {"rho": p.rho, "mu": p.mu, "d": p.d, "grid": list(mesh.shape), "rotation": mesh.rotation}
    rep.update({k: v for k, v in mesh.meta.items()})
    _check(rep, "astigmatism_analytic", astigmatism_deviation(an), cfg.tol["astig"])
    _check(rep, "astigmatism_finite_difference", astigmatism_deviation(fd), cfg.tol["astig_fd"])
    if p.rho != 0:
        _check(rep, "quadric", mesh.quadric_residual(), cfg.tol["quadric"])
    _check(rep, "row_congruence", row_congruence(mesh), 1e-10)
    if cfg.cylinder is not None:
        H = mean_curvature(an)
        rep["mean_curvature"] = float(np.max(np.abs(H)))
        rep["kappa1"] = float(an.kappa1[0, 0])
        rep["kappa2"] = float(an.kappa2[0, 0])
    if cfg.wants("obj"):
        obj, side = write_obj(cfg.out / f"{stem}.obj", mesh)
        rep["obj"] = obj.name
        rep["projection_sidecar"] = side.name if side else None
    if cfg.wants("csv"):
        surface_csv(cfg.out / f"{stem}_curvatures.csv", an)
    if cfg.wants("png"):
        plotting.plot_surface(mesh, cfg.out / f"{stem}.png")
    if cfg.wants("json"):
        write_json(cfg.out / f"{stem}_verification.json", rep)
    return 0 if _all_ok(rep) else 1


def cmd_phase(cfg: RunConfig) -> int:
    from . import plotting

    pts = singular_points(cfg.rho, cfg.mu)
    rep = {
        "rho": cfg.rho,
        "mu": cfg.mu,
        "singular_points": [
            {"x": q.x, "x_2dp": round(q.x, 2), "kind": q.kind, "branch": q.branch, "eigenvalues": [[e.real, e.imag] for e in q.eigenvalues]}
            for q in pts
        ],
        "braid_window": list(braid_window(cfg.rho, cfg.mu) or []) or None,
    }
    stem = cfg.stem()
    if cfg.d is not None:
        p = cfg.params()
        topo = orbit_x_intersections(p)
        rep["d"] = p.d
        rep["roots"] = list(topo.roots)
        orbits = []
        for k, r in enumerate(topo.roots):
            try:
                tr = trace_orbit(
                    PhasePoint(r, 0.0),
                    p,
                    s_max=20.0,
                    detect_period=topo.has_braid_component and k == 1,
                    x_max=10.0 * max(topo.roots),
                )
            except (DomainError, IntegrationError) as exc:
                log.warning("orbit from x=%g not traced: %s", r, exc)
                continue
            orbits.append((k, tr))
            _check(rep, f"f_drift_orbit{k}", tr.drift, cfg.tol["drift"])
        rep["orbits"] = [{"index": k, "start_x": float(tr.x[0]), "stop": tr.stop_reason, "s_end": float(tr.s[-1]), "period": tr.period} for k, tr in orbits]
        if cfg.wants("csv"):
            def rows():
                for k, tr in orbits:
                    fd = tr.f_drift
                    for i in range(len(tr.s)):
                        yield [k, tr.s[i], tr.x[i], tr.y[i], tr.psi[i], fd[i]]

            write_csv(cfg.out / f"{stem}_orbits.csv", ["orbit", "s", "x", "y", "psi", "f_drift"], rows())
        if cfg.wants("png"):
            plotting.plot_phase(p, cfg.out / f"{stem}.png")
    if cfg.wants("json"):
        write_json(cfg.out / f"{stem}_singular_points.json", rep)
    for q in pts:
        print(f"{q.kind} x={q.x:.4f}")
    return 0 if _all_ok(rep) else 1


def _sweep_point(args):
    rho, mu, d = args
    try:
        comps = classify(ModelParams(rho, mu, d))
    except DomainError as exc:
        return [(d, "", "invalid", math.nan, math.nan, math.nan, str(exc))]
    out = []
    for comp, sc in comps:
        g = sc.diagnostics.get
        out.append((d, comp, sc.label, g("x0") or math.nan, g("endpoint_azimuth", math.nan), g("peak_azimuth") or math.nan, ""))
    return out


def sweep_grid(d_min: float, d_max: float, step: float) -> np.ndarray:
    if not step > 0:
        raise UsageError("--d-step must be positive")
    count = int(math.floor((d_max - d_min) / step + 1e-9)) + 1
    if count <= 0 or d_max < d_min:
        raise UsageError("empty d-range")
    return np.round(d_min + step * np.arange(count), 12)


def cmd_sweep(cfg: RunConfig) -> int:
    from . import plotting

    grid = sweep_grid(*cfg.d_range)
    # thresholds first, so an unusable (rho, mu) fails before the sweep starts
    th = thresholds(ModelParams(cfg.rho, cfg.mu, max(float(grid[-1]), 1e-12)))
    jobs = [(cfg.rho, cfg.mu, float(d)) for d in grid]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_sweep_point, jobs, chunksize=8))
    else:
        results = [_sweep_point(j) for j in jobs]
    rows = [r for res in results for r in res]
    stem = f"sweep_rho{cfg.rho:g}_mu{cfg.mu:g}"
    if cfg.wants("csv"):
        write_csv(cfg.out / f"{stem}.csv", ["d", "component", "label", "x0", "endpoint_azimuth", "peak_azimuth", "note"], rows)
    if cfg.wants("json"):
        write_json(cfg.out / f"{stem}_thresholds.json", {"rho": cfg.rho, "mu": cfg.mu, "thresholds": th})
    inner = [(r[0], r[2]) for r in rows if r[1] in ("inner", "anchor", "")]
    if cfg.wants("png"):
        plotting.plot_sweep(np.array([a for a, _ in inner]), [b for _, b in inner], cfg.out / f"{stem}.png")
    last = None
    for d, lab in inner:
        if lab != last:
            print(f"d={d:g}: {lab}")
            last = lab
    return 0


COMMANDS = {"classify": cmd_classify, "curve": cmd_curve, "surface": cmd_surface, "phase": cmd_phase, "sweep": cmd_sweep}


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="astig", description="Critical curves of int kappa exp(mu/kappa) and their constant astigmatism surfaces.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--rho", type=float, required=True)
        sp.add_argument("--mu", type=float, required=True)
        sp.add_argument("--d", type=float)
        sp.add_argument("--d-min", type=float)
        sp.add_argument("--d-max", type=float)
        sp.add_argument("--d-step", type=float)
        sp.add_argument("--n", type=int, default=2000, help="samples per half-curve")
        sp.add_argument("--nt", type=int, default=64, help="rotation samples")
        sp.add_argument("--ns", type=int, default=200, help="profile rows of a surface mesh")
        sp.add_argument("--out", type=Path, default=None, help="output directory (default $ASTIG_OUT_DIR or ./astig_out)")
        sp.add_argument("--format", default=None, help=f"comma-separated subset of {','.join(FORMATS)}")
        sp.add_argument("--component", default="inner", choices=COMPONENTS)
        sp.add_argument("--cylinder", type=int, default=None, help="surface: index of the constant-curvature solution")
        sp.add_argument("--workers", type=int, default=1)
        for key, val in TOLERANCES.items():
            sp.add_argument(f"--tol-{key.replace('_', '-')}", type=float, default=val, dest=f"tol_{key}")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    out = ns.out or Path(os.environ.get("ASTIG_OUT_DIR", "astig_out"))
    if ns.format is None:
        formats = DEFAULT_FORMATS[ns.command]
    else:
        formats = tuple(f.strip() for f in ns.format.split(",") if f.strip())
        bad = [f for f in formats if f not in FORMATS]
        if bad:
            raise UsageError(f"unknown format(s) {bad}; choose from {FORMATS}")
    rng = None
    given = [ns.d_min, ns.d_max, ns.d_step]
    if any(v is not None for v in given):
        if not all(v is not None for v in given):
            raise UsageError("--d-min, --d-max and --d-step go together")
        rng = (ns.d_min, ns.d_max, ns.d_step)
    if ns.n < 8 or ns.nt < 8 or ns.ns < 8:
        raise UsageError("--n, --nt and --ns must be at least 8")
    if ns.workers < 1:
        raise UsageError("--workers must be at least 1")
    tol = {k: getattr(ns, f"tol_{k}") for k in TOLERANCES}
    return RunConfig(
        command=ns.command,
        rho=ns.rho,
        mu=ns.mu,
        d=ns.d,
        d_range=rng,
        n=ns.n,
        nt=ns.nt,
        ns=ns.ns,
        out=out,
        formats=formats,
        tol=tol,
        workers=ns.workers,
        component=ns.component,
        cylinder=ns.cylinder,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(ns)
        if cfg.command == "sweep" and cfg.d is not None:
            raise UsageError("sweep takes a d-range, not --d")
        return COMMANDS[cfg.command](cfg)
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
