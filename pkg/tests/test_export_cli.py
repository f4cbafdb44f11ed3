import csv
import json
import math

import numpy as np
import pytest

from astigmatic import cli
from astigmatic.core import ModelParams
from astigmatic.export import SCHEMA_VERSION, project_mesh, write_csv, write_json, write_obj
from astigmatic.surfaces import cylinder_surface, default_rows, rotate_curve

from conftest import curve


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# writers


def test_json_is_sorted_and_finite(tmp_path):
    p = write_json(tmp_path / "a.json", {"b": np.float64(1.5), "a": [np.int64(2), math.inf], "ok": np.bool_(True)})
    data = json.loads(p.read_text())
    assert data == {"a": [2, None], "b": 1.5, "ok": True, "schema_version": SCHEMA_VERSION}
    assert list(data) == sorted(data)


def test_csv_floats_round_trip(tmp_path):
    vals = [0.1, 1 / 3, math.pi * 1e-17, math.nan]
    p = write_csv(tmp_path / "a.csv", ["v"], ([v] for v in vals))
    got = [float(r["v"]) for r in read_csv(p)]
    assert got[:3] == vals[:3]
    assert math.isnan(got[3])


def test_obj_for_planar_mesh_has_no_sidecar(tmp_path):
    c = curve(0.0, 1.0, 1.55)
    m = rotate_curve(c, c.params, nt=16, rows=default_rows(c, 40))
    obj, side = write_obj(tmp_path / "m.obj", m)
    assert side is None
    ns, nt = m.shape
    lines = obj.read_text().splitlines()
    assert sum(ln.startswith("v ") for ln in lines) == ns * nt
    faces = [ln for ln in lines if ln.startswith("f ")]
    assert faces and all(len(f.split()) == 5 for f in faces)
    assert max(int(i) for f in faces for i in f.split()[1:]) <= ns * nt


@pytest.mark.parametrize("rho,mu,d,kind", [(1.0, 1.0, 2.5, "stereographic"), (-1.0, 1.25, 1.5, "poincare_ball")])
def test_4d_mesh_gets_projection_sidecar(tmp_path, rho, mu, d, kind):
    c = curve(rho, mu, d)
    m = rotate_curve(c, c.params, nt=16, rows=default_rows(c, 40))
    obj, side = write_obj(tmp_path / "m.obj", m)
    info = json.loads(side.read_text())
    assert info["projection"] == kind
    assert info["obj"] == obj.name and info["grid"] == list(m.shape)
    assert info["schema_version"] == SCHEMA_VERSION
    P, _ = project_mesh(m)
    assert np.all(np.isfinite(P))
    if kind == "poincare_ball":
        assert np.max(np.linalg.norm(P, axis=-1)) < info["radius"]


def test_stereographic_projection_is_inverted_by_formula():
    m = cylinder_surface(1.0, 0.4, 0, ns=16, nt=16)
    P, info = project_mesh(m)
    R, k, sgn = info["radius"], info["pole_axis"], info["pole_sign"]
    # inverse stereographic map from the chosen pole
    n2 = np.sum(P * P, axis=-1)
    V = np.empty(P.shape[:-1] + (4,))
    V[..., info["kept_axes"]] = 2 * R * R * P / (n2 + R * R)[..., None]
    V[..., k] = sgn * R * (n2 - R * R) / (n2 + R * R)
    assert np.max(np.abs(V - m.vertices)) < 1e-12


# ---------------------------------------------------------------------------
# command line


def test_classify_prints_labels(tmp_path, capsys):
    assert run(tmp_path, "classify", "--rho", "0", "--mu", "1", "--d", "1.55") == 0
    assert capsys.readouterr().out.strip() == "inner: fishtail"
    data = json.loads((tmp_path / "classify_rho0_mu1_d1.55.json").read_text())
    assert data["schema_version"] == SCHEMA_VERSION
    assert data["components"][0]["label"] == "fishtail"
    assert data["thresholds"]["d_star"] == pytest.approx(math.e**2 / 4, rel=1e-14)


def test_outputs_are_byte_identical(tmp_path):
    args = ["curve", "--rho", "1", "--mu", "1", "--d", "2.5", "--format", "json,csv,plotdata"]
    assert run(tmp_path / "a", *args) == 0
    assert run(tmp_path / "b", *args) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    assert len(names) == 3
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_curve_outputs_and_checks(tmp_path):
    assert run(tmp_path, "curve", "--rho", "0", "--mu", "1", "--d", "1.8472640247326626") == 0
    stem = "curve_rho0_mu1_d1.84726_inner"
    rep = json.loads((tmp_path / f"{stem}.json").read_text())
    assert all(c["ok"] for c in rep["checks"].values())
    assert set(rep["checks"]) == {"unit_speed", "f_drift", "el_residual"}
    assert abs(rep["endpoint_azimuth"]) < 1e-6
    rows = read_csv(tmp_path / f"{stem}.csv")
    assert len(rows) == rep["n_samples"]
    assert {"s", "x", "kappa", "psi", "X1", "X2"} <= set(rows[0])
    for name in (f"{stem}.png", f"{stem}_kappa.png", f"{stem}_plot.csv"):
        assert (tmp_path / name).stat().st_size > 0
    assert (tmp_path / f"{stem}.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_braid_curve_reports_period(tmp_path):
    assert run(tmp_path, "curve", "--rho", "1", "--mu", "0.45", "--d", "1.23", "--component", "braid", "--format", "json") == 0
    rep = json.loads((tmp_path / "curve_rho1_mu0.45_d1.23_braid.json").read_text())
    assert abs(rep["curvature_period"] - rep["curvature_period_traced"]) < 1e-8
    assert "quadric" in rep["checks"]


def test_failed_verification_exits_one(tmp_path):
    assert run(tmp_path, "curve", "--rho", "0", "--mu", "1", "--d", "1.55", "--n", "400", "--format", "json", "--tol-el", "1e-20") == 1
    rep = json.loads((tmp_path / "curve_rho0_mu1_d1.55_inner.json").read_text())
    assert rep["checks"]["el_residual"]["ok"] is False


def test_internal_error_exits_one(tmp_path, monkeypatch, capsys):
    def boom(cfg):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.COMMANDS, "classify", boom)
    assert run(tmp_path, "classify", "--rho", "0", "--mu", "1", "--d", "1") == 1
    assert "boom" in capsys.readouterr().err


@pytest.mark.parametrize(
    "args",
    [
        ["classify", "--rho", "1", "--mu", "0.6", "--d", "-1"],
        ["classify", "--rho", "0", "--mu", "0", "--d", "1"],
        ["classify", "--rho", "0", "--mu", "1"],
        ["curve", "--rho", "0", "--mu", "1", "--d", "1", "--component", "braid"],
        ["curve", "--rho", "0", "--mu", "1", "--d", "1", "--d-min", "1", "--d-max", "2", "--d-step", "0.1"],
        ["curve", "--rho", "0", "--mu", "1", "--d", "1", "--n", "4"],
        ["surface", "--rho", "0", "--mu", "1"],
        ["surface", "--rho", "0", "--mu", "1", "--cylinder", "0"],
        ["sweep", "--rho", "0", "--mu", "1", "--d-min", "2", "--d-max", "1", "--d-step", "0.1"],
        ["sweep", "--rho", "0", "--mu", "1", "--d-min", "1", "--d-max", "2"],
        ["sweep", "--rho", "0", "--mu", "1", "--d-min", "1", "--d-max", "2", "--d-step", "0"],
        ["classify", "--rho", "0", "--mu", "1", "--d", "1", "--format", "xml"],
        ["classify", "--rho", "abc", "--mu", "1", "--d", "1"],
        ["bogus"],
    ],
)
def test_invalid_parameters_exit_two(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("ASTIG_OUT_DIR", str(tmp_path / "env"))
    assert cli.main(["classify", "--rho", "0", "--mu", "1", "--d", "1"]) == 0
    assert (tmp_path / "env" / "classify_rho0_mu1_d1.json").exists()


def test_surface_command_writes_mesh_and_sidecar(tmp_path):
    assert run(tmp_path, "surface", "--rho", "1", "--mu", "1", "--d", "2.5", "--ns", "100", "--nt", "32") == 0
    stem = "surface_rho1_mu1_d2.5_inner"
    rep = json.loads((tmp_path / f"{stem}_verification.json").read_text())
    ns, nt = rep["grid"]
    assert nt == 32 and ns >= 100 and rep["rotation"] == "circular"
    assert all(c["ok"] for c in rep["checks"].values())
    assert rep["projection_sidecar"] == f"{stem}.projection.json"
    assert (tmp_path / rep["projection_sidecar"]).exists()
    assert len(read_csv(tmp_path / f"{stem}_curvatures.csv")) == ns * nt
    assert (tmp_path / f"{stem}.png").stat().st_size > 0


def test_clifford_cylinder_is_minimal(tmp_path):
    assert run(tmp_path, "surface", "--rho", "1", "--mu", "0.5", "--cylinder", "0", "--format", "json,obj") == 0
    rep = json.loads((tmp_path / "surface_rho1_mu0.5_cylinder0_verification.json").read_text())
    assert rep["mean_curvature"] < 1e-6
    assert rep["kappa1"] == pytest.approx(-rep["kappa2"], rel=1e-12)


def test_phase_command(tmp_path, capsys):
    assert run(tmp_path, "phase", "--rho", "1", "--mu", "0.45", "--d", "1.23") == 0
    out = capsys.readouterr().out.split("\n")
    assert out[0].startswith("saddle") and out[1].startswith("center")
    stem = "phase_rho1_mu0.45_d1.23"
    rep = json.loads((tmp_path / f"{stem}_singular_points.json").read_text())
    assert [q["kind"] for q in rep["singular_points"]] == ["saddle", "center"]
    assert len(rep["roots"]) == 3 and len(rep["orbits"]) == 3
    rows = read_csv(tmp_path / f"{stem}_orbits.csv")
    assert max(float(r["f_drift"]) for r in rows) < 1e-8
    assert (tmp_path / f"{stem}.png").stat().st_size > 0


def test_phase_without_level(tmp_path):
    assert run(tmp_path, "phase", "--rho", "-1", "--mu", "1", "--format", "json") == 0
    rep = json.loads((tmp_path / "phase_rho-1_mu1_singular_points.json").read_text())
    assert [q["x_2dp"] for q in rep["singular_points"]] == [0.54, 5.04]


def test_sweep_serial_and_parallel_agree(tmp_path, capsys):
    args = ["sweep", "--rho", "1", "--mu", "0.45", "--d-min", "1.2", "--d-max", "1.3", "--d-step", "0.02"]
    assert run(tmp_path / "one", *args) == 0
    printed = capsys.readouterr().out
    assert run(tmp_path / "four", *args, "--workers", "4") == 0
    name = "sweep_rho1_mu0.45.csv"
    assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "four" / name).read_bytes()
    rows = read_csv(tmp_path / "one" / name)
    assert [float(r["d"]) for r in rows if r["component"] == "inner"] == pytest.approx([1.2, 1.22, 1.24, 1.26, 1.28, 1.3])
    assert any(r["component"] == "braid" for r in rows)
    assert "d=1.2: arch" in printed
    assert (tmp_path / "one" / "sweep_rho1_mu0.45.png").stat().st_size > 0


def test_sweep_grid_is_inclusive():
    g = cli.sweep_grid(0.5, 10.0, 0.01)
    assert len(g) == 951 and g[0] == 0.5 and g[-1] == 10.0
    assert cli.sweep_grid(1.0, 1.0, 0.1).tolist() == [1.0]


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "astigmatic", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("astig ")
