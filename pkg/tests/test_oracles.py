"""Oracle layer: series evaluation, root finding, shooting profiles."""

import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from logcave.oracles import (
    OracleError,
    analytic_solution,
    bessel_j,
    bessel_j0_first_root,
    oracle_error,
    shoot_principal_eigenvalue,
)


def test_bessel_trivial_values():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


def test_bessel_against_scipy():
    xs = np.linspace(0.0, 50.0, 401)
    for x in xs:
        assert abs(bessel_j(0, float(x)) - scipy.special.j0(x)) <= 1e-12
        assert abs(bessel_j(1, float(x)) - scipy.special.j1(x)) <= 1e-12


def test_bessel_range_and_order_errors():
    with pytest.raises(OracleError):
        bessel_j(2, 1.0)
    with pytest.raises(OracleError):
        bessel_j(0, -0.5)
    with pytest.raises(OracleError):
        bessel_j(0, 50.5)


def test_first_root(fx):
    j01 = bessel_j0_first_root()
    assert abs(bessel_j(0, j01)) < 1e-13
    assert abs(j01 - fx["bessel"]["j01"]) < 1e-13
    assert abs(j01 - 2.404825557695773) < 1e-12
    assert abs(bessel_j(1, j01) - fx["bessel"]["J1_at_j01"]) < 1e-13


@given(st.floats(min_value=0.5, max_value=11.0))
@settings(max_examples=25, deadline=None)
def test_bessel_derivative_identities(x):
    # J0' = -J1 and J1' = J0 - J1/x, via 5-point numerical differentiation
    h = 1e-3
    for order, exact in ((0, -bessel_j(1, x)), (1, bessel_j(0, x) - bessel_j(1, x) / x)):
        d = (bessel_j(order, x - 2 * h) - 8 * bessel_j(order, x - h)
             + 8 * bessel_j(order, x + h) - bessel_j(order, x + 2 * h)) / (12 * h)
        assert abs(d - exact) < 1e-10


def test_rectangle_solution_exact():
    sol = analytic_solution("rectangle", {"a": math.pi, "b": math.pi})
    assert sol.lam == pytest.approx(2.0, abs=1e-15)
    assert sol.u(math.pi / 2, math.pi / 2) == pytest.approx(1.0, abs=1e-15)


def test_disk_solution(fx):
    sol = analytic_solution("disk", {"rho": 1.0})
    assert abs(sol.lam - fx["disk"]["lambda"]) < 1e-12
    assert abs(sol.lam - 5.783185962947) < 1e-9
    # boundary gradient magnitude
    assert abs(sol.boundary_grad_norm_g - fx["disk"]["grad_u_boundary"]) < 1e-12


def test_hemisphere_matches_cosine(fx):
    sol = analytic_solution("spherical-cap", {"theta0": math.pi / 2})
    assert abs(sol.lam - 2.0) < 1e-10
    ts, fs, _ = sol.params["profile_table"]
    assert np.max(np.abs(fs - np.cos(ts))) < 1e-9
    assert fx["hemisphere"]["profile_vs_cos_sup"] < 1e-9


def test_cap_params_recorded(fx):
    sol = analytic_solution("spherical-cap", {"theta0": math.pi / 3})
    assert abs(sol.params["chart_radius"] - math.tan(math.pi / 6)) < 1e-14
    assert abs(sol.lam - fx["cap_pi_3"]["lambda"]) < 1e-10


def test_eigen_equation_spot_checks(rng):
    # -Lap_g u = lam u from the analytic evaluators at random interior points
    cases = [
        ("disk", {"rho": 1.0}, lambda x, y: 1.0, 0.95),
        ("spherical-cap", {"theta0": math.pi / 3}, None, None),
        ("hyperbolic-ball", {"radius": 1.0}, None, None),
    ]
    for kind, params, _, _ in cases:
        sol = analytic_solution(kind, params)
        if kind == "disk":
            rmax, conf = 0.95, lambda x, y: 1.0
        elif kind == "spherical-cap":
            rmax = 0.95 * math.tan(params["theta0"] / 2)
            conf = lambda x, y: ((1 + x * x + y * y) / 2.0) ** 2
        else:
            rmax = 0.95 * math.tanh(params["radius"] / 2)
            conf = lambda x, y: ((1 - x * x - y * y) / 2.0) ** 2
        for _ in range(40):
            r = rmax * math.sqrt(rng.uniform(0.0, 1.0))
            th = rng.uniform(0, 2 * math.pi)
            x, y = r * math.cos(th), r * math.sin(th)
            uxx, _, uyy = sol.hess_u(x, y)
            lap_g = conf(x, y) * (float(uxx) + float(uyy))
            assert abs(lap_g + sol.lam * float(sol.u(x, y))) < 1e-10 * max(1.0, sol.lam)


def test_shooting_monotonicity():
    caps = [analytic_solution("spherical-cap", {"theta0": t}).lam
            for t in (math.pi / 4, math.pi / 3, math.pi / 2)]
    assert caps[0] > caps[1] > caps[2]
    balls = [analytic_solution("hyperbolic-ball", {"radius": r}).lam
             for r in (0.75, 1.0, 1.5)]
    assert balls[0] > balls[1] > balls[2]


def test_shooting_rejects_bad_params():
    with pytest.raises(OracleError):
        analytic_solution("spherical-cap", {"theta0": 2.0})
    with pytest.raises(OracleError):
        analytic_solution("hyperbolic-ball", {"radius": -1.0})


def test_oracle_error_identical(cases, oracles_by_kind):
    sol = cases.solution("disk", 64)
    oracle = oracles_by_kind["disk"]
    synthetic = type(sol)(
        grid=sol.grid, chart=sol.chart, domain=sol.domain, lam=oracle.lam,
        u=np.where(sol.grid.inside, np.asarray(oracle.u(sol.grid.X, sol.grid.Y)), 0.0),
        residual=0.0, iterations=0, tol=0.0,
    )
    lam_rel, u_err, grad_err = oracle_error(synthetic, oracle)
    assert lam_rel == 0.0
    assert u_err == 0.0
    assert grad_err < 2e-3  # central differences vs analytic gradient


def test_oracle_error_numeric_disk(cases, oracles_by_kind):
    lam_rel, u_err, grad_err = oracle_error(cases.solution("disk", 128), oracles_by_kind["disk"])
    assert lam_rel <= 1e-3
    assert u_err <= 1e-3
    assert grad_err <= 5e-3


def test_oracle_error_geometry_mismatch(cases, oracles_by_kind):
    with pytest.raises(OracleError):
        oracle_error(cases.solution("rectangle", 32), oracles_by_kind["disk"])


def test_wrong_kind():
    with pytest.raises(OracleError):
        analytic_solution("triangle", {})
