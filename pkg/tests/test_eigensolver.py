"""Grid assembly, cut fractions, principal eigenpair, convergence."""

import json
import math

import numpy as np
import pytest

import logcave as lc
from logcave.eigensolver import (
    AssemblyError,
    ConvergenceError,
    assemble_operator,
    build_grid,
    convergence_study,
    principal_eigenpair,
    solution_to_files,
)

PI = math.pi


def test_rectangle_interior_count(charts):
    dom = lc.rectangle(PI, PI, center=(PI / 2, PI / 2))
    op = assemble_operator(charts["euclidean"], dom, PI / 64)
    assert op.grid.n_inside == 63 * 63
    assert op.symmetric
    assert op.grid.folded == 0
    # exactly symmetric matrix on a cut-free grid
    asym = abs(op.stiffness - op.stiffness.T).max()
    assert asym == 0.0


def test_disk_cut_fractions(charts):
    op = assemble_operator(charts["euclidean"], lc.disk(1.0), 1.0 / 64)
    g = op.grid
    fr = g.frac[g.inside]
    assert np.all(fr > 0.0) and np.all(fr <= 1.0)
    assert np.any(fr < 1.0)
    assert not op.symmetric
    # every inside node's axis neighbors are inside or carry a cut fraction
    jj, ii = np.nonzero(g.inside)
    for k, (di, dj) in enumerate([(1, 0), (-1, 0), (0, 1), (0, -1)]):
        nb = g.inside[jj + dj, ii + di]
        assert np.all(nb | (g.frac[jj, ii, k] < 1.0) | (g.frac[jj, ii, k] == 1.0))


def test_cap_weight_entries(charts):
    rho = math.tan(PI / 6)
    dom = lc.disk(rho)
    op = assemble_operator(charts["sphere"], dom, rho / 64)
    g = op.grid
    r2 = g.X[g.inside] ** 2 + g.Y[g.inside] ** 2
    expected = (2.0 / (1.0 + r2)) ** 2
    assert np.max(np.abs(op.weight - expected)) < 1e-14


def test_rectangle_lambda(cases):
    sol = cases.solution("rectangle", 128)
    assert abs(sol.lam - 2.0) / 2.0 <= 1e-3


def test_disk_lambda(cases, fx):
    sol = cases.solution("disk", 128)
    lam = fx["disk"]["lambda"]
    assert abs(sol.lam - lam) / lam <= 1e-3


def test_hemisphere_lambda(cases):
    sol = cases.solution("hemisphere", 128)
    assert abs(sol.lam - 2.0) / 2.0 <= 2e-3


def test_positivity_and_normalization(cases):
    for case in ("rectangle", "disk", "hemisphere"):
        sol = cases.solution(case, 128)
        vals = sol.u[sol.grid.inside]
        assert float(vals.min()) > 0.0
        assert float(vals.max()) == 1.0


def test_maximum_is_interior(cases):
    for case in ("disk", "cap", "ball"):
        sol = cases.solution(case, 128)
        j, i = sol.max_node()
        assert sol.grid.inside[j, i]
        assert not sol.grid.boundary_adjacent[j, i]
        assert sol.grid.dist[j, i] > 5 * sol.grid.h


def test_residual_below_tolerance(cases):
    sol = cases.solution("disk", 128)
    assert sol.residual <= 1e-6 * sol.lam


def test_domain_monotonicity(charts):
    lam1 = lc.solve_geometry(charts["euclidean"], lc.disk(1.0), level=64).lam
    lam2 = lc.solve_geometry(charts["euclidean"], lc.disk(1.2), level=64).lam
    assert lam1 > lam2


def test_convergence_order_rectangle(cases):
    cs = cases.study("rectangle")
    assert abs(cs.observed_order - 2.0) <= 0.3
    assert cs.monotone
    assert abs(cs.lam_extrapolated - 2.0) / 2.0 <= 1e-4


def test_convergence_disk_richardson(cases, fx):
    cs = cases.study("disk")
    lam = fx["disk"]["lambda"]
    assert abs(cs.lam_extrapolated - lam) / lam <= 1e-4


def test_convergence_cap_vs_shooting(cases, fx):
    cs = cases.study("cap")
    lam = fx["cap_pi_3"]["lambda"]
    assert abs(cs.lam_extrapolated - lam) / lam <= 1e-3


def test_level_validation(charts):
    with pytest.raises(AssemblyError):
        convergence_study(charts["euclidean"], lc.disk(1.0), [32, 48, 64])
    with pytest.raises(AssemblyError):
        convergence_study(charts["euclidean"], lc.disk(1.0), [32, 64])


def test_too_coarse_grid_errors(charts):
    with pytest.raises(AssemblyError):
        assemble_operator(charts["euclidean"], lc.disk(1.0), 0.5)


def test_nonconvergence_carries_residual(charts):
    op = assemble_operator(charts["euclidean"], lc.disk(1.0), 1.0 / 32)
    with pytest.raises(ConvergenceError) as exc:
        principal_eigenpair(op, tol=1e-14, max_iter=2)
    assert exc.value.residual is not None and exc.value.residual > 0


def test_grid_pads_and_distances(charts):
    g = build_grid(lc.disk(1.0), 1.0 / 32)
    ins = g.inside
    assert np.all(np.isfinite(g.dist[ins]))
    assert np.nanmax(g.dist[ins]) <= 1.0 + 1e-12
    # pad ring: no inside node touches the array border
    assert not ins[0, :].any() and not ins[-1, :].any()
    assert not ins[:, 0].any() and not ins[:, -1].any()


def test_solution_files_roundtrip(cases, tmp_path):
    sol = cases.solution("rectangle", 32)
    jpath, cpath = solution_to_files(sol, tmp_path / "sol")
    meta = json.loads(jpath.read_text())
    assert meta["lambda"] == sol.lam
    assert meta["n_inside"] == sol.grid.n_inside
    rows = cpath.read_text().strip().splitlines()
    assert rows[0] == "x,y,u"
    assert len(rows) - 1 == sol.grid.n_inside
