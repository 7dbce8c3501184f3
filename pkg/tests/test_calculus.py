"""Derived fields, covariant Hessians, worst directions."""

import math

import numpy as np
import pytest

import logcave as lc
from logcave.calculus import (
    SafeBandError,
    derived_fields,
    hessian_g,
    hessian_of_log,
    laplacian_g,
    solution_fields,
    worst_direction,
    worst_direction_field,
)
from logcave.eigensolver import EigenSolution, build_grid

PI = math.pi


def synthetic_solution(chart, domain, h, u_eval, lam):
    """EigenSolution carrying an analytic field sampled on the grid."""
    grid = build_grid(domain, h)
    u = np.where(grid.inside, np.asarray(u_eval(grid.X, grid.Y), dtype=float), 0.0)
    return EigenSolution(grid=grid, chart=chart, domain=domain, lam=lam, u=u,
                         residual=0.0, iterations=0, tol=0.0)


def bulk_mask(fields, fraction=0.5):
    g = fields.sol.grid
    return fields.derived.safe & (g.dist >= fraction * np.nanmax(g.dist[g.inside]))


def test_gradient_vanishes_at_center(cases):
    F = cases.fields("rectangle", 128)
    j, i = F.sol.max_node()
    assert F.derived.grad_v_sq[j, i] < 1e-6


def test_eigenfunction_identity_v(cases, rng):
    # Lap v + |grad v|^2 = -lam, with Lap v from direct differencing of v
    # and the gradient from the chain-rule fields (independent routes)
    for case in ("rectangle", "disk", "cap"):
        F = cases.fields(case, 128)
        sol = F.sol
        lap_v = laplacian_g(F.derived.v, sol.chart, sol.grid)
        mask = bulk_mask(F)
        resid = lap_v + F.derived.grad_v_sq + sol.lam
        worst = np.nanmax(np.abs(resid[mask]))
        assert worst <= 200.0 * sol.grid.h**2 * (1.0 + sol.lam)


def test_eigenfunction_identity_w(cases):
    # Lap w + |grad w|^2 / w = -lam w / 2
    for case in ("rectangle", "disk"):
        F = cases.fields(case, 128)
        sol = F.sol
        w = np.sqrt(sol.u)
        lap_w = laplacian_g(w, sol.chart, sol.grid)
        mask = bulk_mask(F)
        resid = lap_w + F.derived.grad_w_sq / w + 0.5 * sol.lam * w
        assert np.nanmax(np.abs(resid[mask])) <= 200.0 * sol.grid.h**2 * (1.0 + sol.lam)


def test_disk_gradient_vs_oracle(cases, fx):
    F = cases.fields("disk", 128)
    g = F.sol.grid
    j = np.argmin(np.abs(g.Y[:, 0]))
    i = np.argmin(np.abs(g.X[0, :] - 0.5))
    grad = math.sqrt(F.derived.grad_u_sq[j, i])
    assert grad == pytest.approx(fx["disk"]["grad_u_at_r05"], abs=2e-3)


def test_hessian_exact_on_quadratic(charts):
    dom = lc.rectangle(2.0, 2.0)
    grid = build_grid(dom, 0.05)
    f = grid.X**2 + 3.0 * grid.X * grid.Y - grid.Y**2
    H = hessian_g(f, charts["euclidean"], grid)
    m = grid.stencil_ok_mask()
    assert np.max(np.abs(H.hxx[m] - 2.0)) < 1e-10
    assert np.max(np.abs(H.hxy[m] - 3.0)) < 1e-10
    assert np.max(np.abs(H.hyy[m] + 2.0)) < 1e-10


def test_hemisphere_hessian_closed_form(charts):
    # u = cos(theta) = (1 - r^2)/(1 + r^2): Hess_g(log u) has eigenvalue -1
    # tangentially and -sec^2(theta) radially
    dom = lc.disk(1.0)
    sol = synthetic_solution(charts["sphere"], dom, 1.0 / 96,
                             lambda x, y: (1 - x**2 - y**2) / (1 + x**2 + y**2), 2.0)
    der = derived_fields(sol)
    H = hessian_of_log(sol, der)
    g = sol.grid
    r = np.hypot(g.X, g.Y)
    mask = der.safe & (r > 0.1) & (r < 0.75)
    sxx, sxy, syy = H.emtwophi * H.hxx, H.emtwophi * H.hxy, H.emtwophi * H.hyy
    mean, delta = 0.5 * (sxx + syy), 0.5 * (sxx - syy)
    disc = np.hypot(delta, sxy)
    mu_hi, mu_lo = mean + disc, mean - disc
    theta = 2.0 * np.arctan(r)
    sec2 = 1.0 / np.cos(theta) ** 2
    assert np.nanmax(np.abs(mu_hi[mask] + 1.0)) < 5e-3
    assert np.nanmax(np.abs((mu_lo[mask] + sec2[mask]) / sec2[mask])) < 5e-3


def test_rectangle_hessian_diagonal(cases):
    F = cases.fields("rectangle", 128)
    g = F.sol.grid
    mask = bulk_mask(F, 0.4)
    with np.errstate(divide="ignore"):
        csc2x = 1.0 / np.sin(g.X) ** 2
        csc2y = 1.0 / np.sin(g.Y) ** 2
    h2 = g.h**2
    assert np.nanmax(np.abs((F.hess_v.hxx + csc2x)[mask])) < 300 * h2
    assert np.nanmax(np.abs((F.hess_v.hyy + csc2y)[mask])) < 300 * h2
    assert np.nanmax(np.abs(F.hess_v.hxy[mask])) < 300 * h2


def test_worst_direction_trivial():
    # S = e^{-2 phi} H = diag(-2, -5), b = 1
    phi = 0.3
    e2 = math.exp(-2 * phi)
    H = (-2.0 / e2, 0.0, -5.0 / e2)
    mu, X, iso = worst_direction(H, 1.0, e2, phi)
    assert mu == pytest.approx(-1.0, abs=1e-14)
    assert not iso
    assert X[1] == 0.0
    # g-unit: e^{2 phi} |X|^2 = 1
    assert math.exp(2 * phi) * (X[0] ** 2 + X[1] ** 2) == pytest.approx(1.0, abs=1e-14)


def test_worst_direction_isotropic_flag():
    mu, X, iso = worst_direction((-3.0, 0.0, -3.0), 0.0, 1.0, 0.0)
    assert iso and mu == pytest.approx(-3.0)


def test_rectangle_center_direction(cases):
    F = cases.fields("rectangle", 128)
    j, i = F.sol.max_node()
    assert F.mu_max[j, i] == pytest.approx(-1.0, abs=5e-4)


def test_rotation_invariance(charts):
    # a 90-degree rotation maps the grid to itself; Hess_g must commute with it
    dom = lc.disk(1.0)
    grid = build_grid(dom, 1.0 / 48)

    def f(x, y):
        return np.sin(x + 0.3 * y**2) + 0.2 * x * y

    fld = f(grid.X, grid.Y)
    fld_rot = f(grid.Y, -grid.X)  # f composed with rotation by -90 degrees
    H = hessian_g(fld, charts["sphere"], grid)
    Hr = hessian_g(fld_rot, charts["sphere"], grid)
    m = grid.stencil_ok_mask()
    # for R = [[0,-1],[1,0]], (R^T H R) at Rp: hxx' (p) = hyy(Rp), etc.
    hyy_at_rot = np.rot90(H.hyy, k=-1)
    hxx_at_rot = np.rot90(H.hxx, k=-1)
    hxy_at_rot = np.rot90(H.hxy, k=-1)
    mm = m & np.rot90(m, k=-1)
    assert np.nanmax(np.abs(Hr.hxx[mm] - hyy_at_rot[mm])) < 1e-10
    assert np.nanmax(np.abs(Hr.hyy[mm] - hxx_at_rot[mm])) < 1e-10
    assert np.nanmax(np.abs(Hr.hxy[mm] + hxy_at_rot[mm])) < 1e-10


def test_trace_identity(cases):
    for case in ("disk", "cap"):
        F = cases.fields(case, 128)
        sol = F.sol
        tr = F.hess_v.emtwophi * (F.hess_v.hxx + F.hess_v.hyy)
        lap_v = laplacian_g(F.derived.v, sol.chart, sol.grid)
        mask = bulk_mask(F)
        assert np.nanmax(np.abs((tr - lap_v)[mask])) <= 300 * sol.grid.h**2 * (1 + sol.lam**2)


def test_safe_band_guard(cases):
    F = cases.fields("disk", 128)
    der = F.derived
    jj, ii = np.nonzero(F.sol.grid.inside & ~der.safe)
    with pytest.raises(SafeBandError):
        der.require_safe(int(jj[0]), int(ii[0]))
    jj, ii = np.nonzero(der.safe)
    der.require_safe(int(jj[0]), int(ii[0]))


def test_band_bookkeeping(cases):
    F = cases.fields("disk", 128)
    der = F.derived
    assert der.n_dropped == 0
    assert der.band_excluded > 0
    assert der.band_excluded == int(np.count_nonzero(F.sol.grid.inside & ~der.safe))
