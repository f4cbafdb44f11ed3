import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from astigmatic.core import DomainError, ModelParams, PhasePoint
from astigmatic.curves import CurveSamples
from astigmatic.euler_lagrange import (
    constant_curvature_solutions,
    el_pointwise,
    el_residual,
    energy_theta,
    first_integral,
    first_integral_xy,
    kappa_s_squared,
    killing_profile,
)

from conftest import curve

# (rho, mu, d, component) covering every geometry and curve family
EL_CASES = [
    (0.0, 1.0, 0.8, "inner"),
    (0.0, 1.0, 1.55, "inner"),
    (0.0, 1.0, 9.0, "inner"),
    (1.0, 1.0, 2.5, "inner"),
    (1.0, 0.45, 1.23, "inner"),
    (1.0, 0.45, 1.23, "braid"),
    (1.0, 0.45, 1.4, "inner"),
    (-1.0, 1.25, 3.0, "inner"),
    (-1.0, 1.25, 20.0, "outer"),
    (-1.0, 1.25, 36.0, "anchor"),
]


def test_hyperbolic_levels_below_zero_are_not_built():
    with pytest.raises(DomainError):
        curve(-1.0, 1.0, -0.2)


def test_first_integral_values():
    assert first_integral(PhasePoint(math.e, 0.0), ModelParams(0.0, 1.0, 1.0)) == pytest.approx(math.e**2, rel=1e-15)
    # F(1, y) = mu^2 + rho whatever y is
    for y in (-3.0, 0.0, 2.5):
        assert first_integral_xy(1.0, y, -0.7, 1.3) == pytest.approx(1.3**2 - 0.7, rel=1e-15)


def test_killing_profile_minus_one_is_accurate_near_peaks():
    kappa = np.array([1e3, 1e5, -1e6, 1e8])
    mu = 1.0
    G, Gm1 = killing_profile(kappa, mu)
    b = mu / kappa
    # G - 1 = -sum_{n >= 2} (n - 1) b^n / n!, summed from the small end
    series = -sum((n - 1) * b**n / math.factorial(n) for n in range(12, 1, -1))
    # rounding is a few ulps of b, far below the ulp of 1 that G - 1 would cost
    assert np.all(np.abs(Gm1 - series) <= 8 * np.finfo(float).eps * np.abs(b))
    assert np.allclose(G, 1 + Gm1, rtol=1e-15)


@pytest.mark.parametrize("rho,mu,d,component", EL_CASES)
def test_el_residual_on_built_curves(rho, mu, d, component):
    c = curve(rho, mu, d, component)
    assert el_residual(c, c.params) < 1e-5


def test_el_residual_catches_wrong_parameters():
    c = curve(0.0, 1.0, 1.55)
    assert el_residual(c, ModelParams(0.0, 1.05, 1.55)) > 1e-2
    assert el_residual(c, ModelParams(0.2, 1.0, 1.55)) > 1e-2


def test_el_residual_catches_perturbed_curvature():
    c = curve(1.0, 1.0, 2.5)
    rng = np.random.default_rng(7)
    bumped = c.subset(np.arange(len(c)))
    bumped.kappa = c.kappa * (1 + 1e-3 * np.sin(3 * c.s) + 1e-6 * rng.standard_normal(len(c)))
    assert el_residual(bumped, c.params) > 1e-3


def test_el_pointwise_marks_stencil_ends():
    c = curve(0.0, 1.0, 1.55)
    r = el_pointwise(c, c.params)
    assert np.isnan(r[0]) and np.isnan(r[-1])


@pytest.mark.parametrize(
    "rho,mu,expected",
    [
        (0.0, 1.0, []),
        (1.0, 0.6, []),
        (1.0, 0.5, ["circle"]),
        (1.0, 0.4, ["parallel", "parallel"]),
        (-1.0, 1.0, ["circle", "hypercycle"]),
        (-1.0, 0.3, ["circle", "hypercycle"]),
    ],
)
def test_constant_curvature_case_analysis(rho, mu, expected):
    sols = constant_curvature_solutions(rho, mu)
    assert sorted(s.kind for s in sols) == expected
    for s in sols:
        assert s.residual(rho, mu) < 1e-12 * max(1.0, s.kappa0**2)


@given(rho=st.floats(-5, 5).filter(lambda r: abs(r) > 1e-3), mu=st.floats(0.05, 3.0))
@settings(max_examples=200, deadline=None)
def test_constant_curvature_orientation_symmetry(rho, mu):
    a = sorted(abs(s.kappa0) for s in constant_curvature_solutions(rho, mu))
    b = sorted(abs(s.kappa0) for s in constant_curvature_solutions(rho, -mu))
    assert a == pytest.approx(b, rel=1e-14)


@pytest.mark.parametrize("rho,mu", [(1.0, 0.4), (1.0, 0.5), (2.0, 0.3), (-1.0, 1.0), (-0.5, 2.0)])
def test_constant_curvature_solutions_are_critical(rho, mu):
    for sol in constant_curvature_solutions(rho, mu):
        c = CurveSamples.constant_curvature(sol, rho, mu, length=1.0, n=101)
        assert np.nanmax(np.abs(el_pointwise(c, c.params))) < 1e-10


def test_kappa_s_squared_matches_built_curve():
    c = curve(1.0, 1.0, 2.5)
    from astigmatic._numerics import s_derivatives

    ks, _ = s_derivatives(c.kappa, c.s, c.param, c.segment, width=7, dsdp=c.dsdp)
    ok = (np.abs(c.x - 1) > 0.05) & (c.x > 0.05) & np.isfinite(ks)
    pred = kappa_s_squared(c.kappa[ok], c.params)
    assert np.max(np.abs(ks[ok] ** 2 - pred) / (1 + pred)) < 1e-6


def _energy_oracle(rho, mu, d, x_min=1e-8):
    """2 mu int sign(log x) x / sqrt(d - F(x, 0)) dx over the inner half-curve."""
    g = lambda x: d - first_integral_xy(x, 0.0, rho, mu)
    x0 = brentq(g, 1e-12, 50.0, xtol=1e-15)
    f = lambda w: 2 * w * math.copysign(1.0, math.log(x0 - w * w)) * (x0 - w * w) / math.sqrt(g(x0 - w * w))
    wmax = math.sqrt(x0 - x_min)
    pts = [math.sqrt(x0 - 1.0)] if x0 > 1 else None
    val, _ = quad(f, 0, wmax, points=pts, epsabs=1e-13, epsrel=1e-12, limit=400)
    return 2 * mu * val


# oracle values from _energy_oracle, frozen
ENERGY = {(0.0, 1.0, 1.55): 0.4764994752, (1.0, 1.0, 2.5): 0.6387913037}


@pytest.mark.parametrize("key", sorted(ENERGY))
def test_energy_matches_quadrature_oracle(key):
    assert _energy_oracle(*key) == pytest.approx(ENERGY[key], abs=1e-9)
    e2, e4 = (energy_theta(curve(*key, n=n), key[1]) for n in (2000, 4000))
    # second-order trapezoid: the error at n = 2000 is about 1e-6 and drops fourfold per doubling
    assert e2 == pytest.approx(ENERGY[key], abs=2e-6)
    assert (4 * e4 - e2) / 3 == pytest.approx(ENERGY[key], abs=2e-8)


def test_energy_converges_at_second_order():
    ref = ENERGY[(0.0, 1.0, 1.55)]
    errs = [abs(energy_theta(curve(0.0, 1.0, 1.55, n=n), 1.0) - ref) for n in (250, 500, 1000)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) > 1.5


def test_energy_sign_flips_with_orientation():
    a = energy_theta(curve(0.0, 1.0, 1.55), 1.0)
    b = energy_theta(curve(0.0, -1.0, 1.55), -1.0)
    assert b == pytest.approx(-a, rel=1e-12)


def test_energy_rejects_infinite_curvature():
    c = curve(0.0, 1.0, 1.55)
    bad = c.subset(np.arange(len(c)))
    bad.kappa = bad.kappa.copy()
    bad.kappa[5] = np.inf
    with pytest.raises(DomainError):
        energy_theta(bad, 1.0)
