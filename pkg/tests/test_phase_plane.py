import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from astigmatic.classify import curvature_period, linearized_period
from astigmatic.core import DomainError, ModelParams, PhasePoint
from astigmatic.euler_lagrange import first_integral_xy
from astigmatic.phase_plane import (
    braid_window,
    jacobian,
    orbit_x_intersections,
    singular_points,
    trace_orbit,
    vector_field_Q,
)


def _oracle_points(rho, mu):
    """Roots of rho L^2 - rho L + mu^2 = 0 by numpy, as x = e^L."""
    L = np.roots([rho, -rho, mu * mu])
    return sorted(math.exp(v.real) for v in L if abs(v.imag) < 1e-12)


def _fd_jacobian(x, params, h=1e-6):
    J = np.empty((2, 2))
    for k, (dx, dy) in enumerate(((h, 0.0), (0.0, h))):
        a = np.array(vector_field_Q(PhasePoint(x + dx, dy), params))
        b = np.array(vector_field_Q(PhasePoint(x - dx, -dy), params))
        J[:, k] = (a - b) / (2 * h)
    return J


@pytest.mark.parametrize(
    "rho,mu,expected",
    [
        # figure captions: (0.54 centre, 5.04 saddle) and (1.22 saddle, 2.22 centre)
        (-1.0, 1.0, [(0.54, "center"), (5.04, "saddle")]),
        (-1.0, -1.0, [(0.54, "center"), (5.04, "saddle")]),
        (1.0, 0.4, [(1.22, "saddle"), (2.22, "center")]),
    ],
)
def test_singular_points_match_captions(rho, mu, expected):
    pts = singular_points(rho, mu)
    assert len(pts) == 2
    for p, (v, k) in zip(pts, expected):
        assert p.kind == k
        assert abs(p.x - v) < 0.01


@given(rho=st.floats(-6, 6).filter(lambda r: abs(r) > 1e-2), mu=st.floats(0.05, 2.0))
@settings(max_examples=200, deadline=None)
def test_singular_points_against_oracle(rho, mu):
    pts = singular_points(rho, mu)
    if rho > 0 and abs(rho - 4 * mu * mu) <= 1e-12 * rho:
        return
    oracle = _oracle_points(rho, mu)
    assert len(pts) == len(oracle)
    for p, x in zip(pts, oracle):
        assert p.x == pytest.approx(x, rel=1e-9)
        L = math.log(p.x)
        assert abs(mu * mu - rho * L * (1 - L)) < 1e-10 * max(1.0, abs(rho) * L * L)


@pytest.mark.parametrize("rho,mu", [(-1.0, 1.0), (1.0, 0.4), (3.0, 0.5), (-0.4, 2.0)])
def test_eigenvalues_match_fd_jacobian(rho, mu):
    params = ModelParams(rho, mu, 1.0 if rho > 0 else 0.5)
    for p in singular_points(rho, mu):
        J = _fd_jacobian(p.x, params)
        ev = np.sort_complex(np.linalg.eigvals(J))
        assert np.allclose(ev, np.sort_complex(np.array(p.eigenvalues)), atol=1e-6)
        Ja = jacobian(p.x, 0.0, params)
        assert np.allclose(Ja, J, atol=1e-6)


@pytest.mark.parametrize("mu", [0.25, 0.5, 1.0, 3.0])
def test_degenerate_point_at_sqrt_e(mu):
    pts = singular_points(4 * mu * mu, mu)
    assert len(pts) == 1
    assert pts[0].kind == "degenerate"
    assert abs(pts[0].x - math.sqrt(math.e)) < 1e-10


def test_no_singular_points():
    assert singular_points(0.0, 1.0) == []
    assert singular_points(1.0, 0.6) == []
    with pytest.raises(DomainError):
        singular_points(1.0, 0.0)


@given(
    rho=st.floats(-3, 3),
    mu=st.floats(0.1, 2.0),
    x=st.floats(0.05, 8.0).filter(lambda v: abs(v - 1) > 1e-2),
    y=st.floats(-3, 3),
)
@settings(max_examples=300, deadline=None)
def test_level_sets_are_orbits(rho, mu, x, y):
    """grad F . Q = 0, with grad F by complex-step differentiation of F written out afresh."""
    params = ModelParams(rho, mu, 1.0)

    def F(a, b):
        L = np.log(a)
        return b * b * L * L + mu * mu * a * a + rho * (1 - L) ** 2 * a * a

    h = 1e-30
    Fx = F(x + 1j * h, y).imag / h
    Fy = F(x, y + 1j * h).imag / h
    qx, qy = vector_field_Q(PhasePoint(x, y), params)
    scale = abs(Fx * qx) + abs(Fy * qy) + 1.0
    assert abs(Fx * qx + Fy * qy) < 1e-9 * scale


def test_braid_window_closed_form():
    lo, hi = braid_window(1.0, 0.45)
    pts = {p.branch: p.x for p in singular_points(1.0, 0.45)}
    xp, xm = pts["+"], pts["-"]
    assert lo == pytest.approx(xp * xp * math.log(xm), abs=1e-12)
    assert hi == pytest.approx(xm * xm * math.log(xp), abs=1e-12)
    # the window is bounded by the centre and saddle levels of F(., 0)
    assert lo == pytest.approx(float(first_integral_xy(xp, 0.0, 1.0, 0.45)), rel=1e-12)
    assert hi == pytest.approx(float(first_integral_xy(xm, 0.0, 1.0, 0.45)), rel=1e-12)
    assert braid_window(1.0, 0.5) is None
    assert braid_window(0.0, 1.0) is None


@pytest.mark.parametrize(
    "rho,mu,d,n_roots,braid",
    [
        (0.0, 1.0, 2.0, 1, False),
        (1.0, 0.45, 1.23, 3, True),
        (1.0, 0.45, 1.4, 1, False),
        (-1.0, 1.25, 3.0, 2, False),
        (-1.0, 1.0, -0.2, 3, False),
    ],
)
def test_orbit_roots(rho, mu, d, n_roots, braid):
    topo = orbit_x_intersections(ModelParams(rho, mu, d))
    assert len(topo.roots) == n_roots
    assert topo.has_braid_component is braid
    for r in topo.roots:
        assert abs(first_integral_xy(r, 0.0, rho, mu) - d) < 1e-12 * max(1.0, d)


def test_anchor_regime_has_no_roots():
    topo = orbit_x_intersections(ModelParams(-1.0, 1.25, 36.0))
    assert topo.anchor and topo.roots == () and topo.x0 is None


@pytest.mark.parametrize(
    "rho,mu,d,start",
    [
        (0.0, 1.0, 9.0, None),
        (1.0, 0.45, 1.23, 1),
        (1.0, 1.0, 2.5, None),
        (-1.0, 1.25, 3.0, None),
        (-1.0, 1.25, 20.0, -1),
    ],
)
def test_trace_orbit_conserves_first_integral(rho, mu, d, start):
    p = ModelParams(rho, mu, d)
    topo = orbit_x_intersections(p)
    x0 = topo.roots[start if start is not None else 0]
    tr = trace_orbit(PhasePoint(x0, 0.0), p, s_max=10.0, x_max=10 * max(topo.roots))
    assert tr.drift < 1e-8
    assert np.max(tr.f_drift) == pytest.approx(tr.drift)


def test_trace_orbit_drift_shrinks_with_tolerance():
    p = ModelParams(1.0, 0.45, 1.23)
    r2 = orbit_x_intersections(p).roots[1]
    drifts = [trace_orbit(PhasePoint(r2, 0.0), p, 30.0, rtol=r, atol=r * 1e-2).drift for r in (1e-6, 5e-7, 2.5e-7)]
    assert drifts[1] <= drifts[0] * 1.5 and drifts[2] <= drifts[1] * 1.5
    assert drifts[2] < drifts[0]


def test_trace_orbit_rejects_off_level_start():
    with pytest.raises(DomainError):
        trace_orbit(PhasePoint(0.5, 0.0), ModelParams(0.0, 1.0, 2.0), s_max=1.0)


def test_trace_orbit_stops_before_peak():
    p = ModelParams(0.0, 1.0, 2.0)
    x0 = orbit_x_intersections(p).roots[0]
    tr = trace_orbit(PhasePoint(x0, 0.0), p, s_max=10.0)
    assert tr.stop_reason == "peak"
    assert abs(tr.x[-1] - 1.0) == pytest.approx(1e-3, rel=1e-6)


def test_braid_period_tends_to_linearized_period():
    lo, hi = braid_window(1.0, 0.45)
    T_lin = linearized_period(1.0, 0.45)
    gaps = []
    for eps in (1e-2, 1e-3, 1e-4):
        T = curvature_period(ModelParams(1.0, 0.45, lo + eps * (hi - lo)))
        gaps.append(abs(T / T_lin - 1))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3
