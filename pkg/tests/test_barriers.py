"""Closed-form constants: branch formulas, presets, regions, barrier fields."""

import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

import logcave as lc
from logcave.barriers import (
    HypothesisError,
    barrier_field,
    boundary_alpha,
    concavity_regions,
    hyperbolic_printed_d,
    interior_alpha,
    interior_d,
    preset_constants,
)
from logcave.geometry import CurvatureBudget, curvature_budget

PI = math.pi


def budget(kl, ku, ricci=0.0):
    return CurvatureBudget(kl, ku, ku - kl, ricci)


# ---------------------------------------------------------------------------
# interior alpha
# ---------------------------------------------------------------------------

def test_alpha_closed_form_sphere_case():
    assert interior_alpha(2.0, 1.0, 1.0, 0.0, 0.0) == pytest.approx(2 * math.sqrt(2) - 2, abs=1e-14)


def test_alpha_euclidean_case(fx):
    lam = fx["disk"]["lambda"]
    assert interior_alpha(lam, 0.0, 1.0, 0.0, 0.0) == pytest.approx(
        fx["disk"]["euclidean_alpha"], abs=1e-12)
    assert interior_alpha(lam, 0.0, 1.0, 0.0, 0.0) == pytest.approx(0.54380, abs=1e-5)


def test_alpha_admissibility_boundary():
    with pytest.raises(HypothesisError):
        interior_alpha(2.0, 1.0, 2 * 0.3 + 0.1, 0.1, 0.3)  # c == 2 pinch + eps exactly


def test_alpha_negative_branch_needs_gradient():
    with pytest.raises(HypothesisError):
        interior_alpha(5.0, -1.0, 3.0, 0.0, 0.0)
    val = interior_alpha(5.0, -1.0, 3.0, 0.0, 0.0, grad_sup_sq=4.0)
    assert val > 0.0


def test_alpha_negative_branch_admissibility():
    with pytest.raises(HypothesisError):
        interior_alpha(5.0, -1.0, 2.0, 0.0, 0.0, grad_sup_sq=4.0)  # c = 2 pinch - 2 kl


@given(c=st.floats(min_value=0.5, max_value=5.0), dc=st.floats(min_value=0.01, max_value=2.0))
@settings(max_examples=40, deadline=None)
def test_alpha_monotone_in_c(c, dc):
    assert interior_alpha(3.0, 0.5, c + dc, 0.1, 0.1) > interior_alpha(3.0, 0.5, c, 0.1, 0.1)


@given(p=st.floats(min_value=0.0, max_value=0.4), dp=st.floats(min_value=0.01, max_value=0.3))
@settings(max_examples=40, deadline=None)
def test_alpha_decreasing_in_pinch_and_eps(p, dp):
    assert interior_alpha(3.0, 0.5, 2.0, 0.1, p + dp) < interior_alpha(3.0, 0.5, 2.0, 0.1, p)
    assert interior_alpha(3.0, 0.5, 2.0, 0.1 + dp, p) < interior_alpha(3.0, 0.5, 2.0, 0.1, p)


@given(lam=st.floats(min_value=2.0, max_value=50.0))
@settings(max_examples=60, deadline=None)
def test_sphere_preset_formula_equivalence(lam):
    # the sphere-case formula is the nonnegative branch at kl = 1, c = 1,
    # eps = 0, pinch = 0
    direct = (math.sqrt((lam + 2.0) ** 2 + 8.0 * lam) - (lam + 2.0)) / lam
    assert abs(interior_alpha(lam, 1.0, 1.0, 0.0, 0.0) - direct) < 1e-12


def test_alpha_branches_match_symbolic_roots(rng):
    a = sp.symbols("a", positive=True)
    for _ in range(5):
        lam = float(rng.uniform(2, 20))
        kl = float(rng.uniform(0, 2))
        c = float(rng.uniform(0.5, 4))
        eps = float(rng.uniform(0, 0.2))
        P = float(rng.uniform(0, min(0.2, (c - eps) / 2 * 0.9)))
        expr = -sp.Rational(1, 2) * a**2 * lam - (lam + 2 * kl) * a + 4 * (c - eps - 2 * P)
        roots = [float(r) for r in sp.solve(sp.Eq(expr, 0), a) if float(r) > 0]
        assert interior_alpha(lam, kl, c, eps, P) == pytest.approx(max(roots), rel=1e-10)
    for _ in range(5):
        lam = float(rng.uniform(2, 20))
        kl = float(rng.uniform(-2, -0.1))
        eps = float(rng.uniform(0, 0.2))
        c = float(rng.uniform(-2 * kl + eps + 0.2, -2 * kl + eps + 3))
        G = float(rng.uniform(1, 10))
        expr = -sp.Rational(1, 2) * a**2 * G - (lam + 2 * kl) * a + 4 * (c - eps + 2 * kl)
        roots = [float(r) for r in sp.solve(sp.Eq(expr, 0), a) if float(r) > 0]
        assert interior_alpha(lam, kl, c, eps, 0.0, grad_sup_sq=G) == pytest.approx(
            max(roots), rel=1e-10)


# ---------------------------------------------------------------------------
# interior d
# ---------------------------------------------------------------------------

@given(lam=st.floats(min_value=0.5, max_value=50.0))
@settings(max_examples=40, deadline=None)
def test_d_flat_case(lam):
    assert interior_d(lam, 0.0, 1.0, 0.0, 0.0, n=2) == pytest.approx(math.sqrt(lam / 2), rel=1e-12)


def test_d_examples():
    # positive curvature makes the constant term unnecessary at lam = 2
    assert interior_d(2.0, 1.0, 1.0, 0.0, 0.0, n=2) == 0.0
    assert interior_d(5.0, -1.0, 3.0, 0.0, 0.0) == pytest.approx(5.0, abs=1e-14)


def test_d_requires_eps_with_ricci():
    with pytest.raises(HypothesisError):
        interior_d(2.0, 1.0, 1.0, 0.0, 0.5, n=2)
    assert interior_d(2.0, 1.0, 1.0, 0.5, 0.5, n=2) >= 0.0


def test_hyperbolic_printed_d(fx):
    d = hyperbolic_printed_d(5.0, 2)
    assert d == pytest.approx(0.5 * (math.sqrt(59) - 3.0), abs=1e-14)
    assert d == pytest.approx(fx["constants"]["hyperbolic_d_lambda5_n2"], abs=1e-12)
    assert d == pytest.approx(2.34057, abs=1e-5)
    # the printed root satisfies 2 d^2 + 2 (n+1) d - 5 lam = 0
    assert 2 * d * d + 6 * d - 25.0 == pytest.approx(0.0, abs=1e-10)


@given(lam=st.floats(min_value=0.5, max_value=30.0),
       kl=st.floats(min_value=0.0, max_value=2.0),
       c=st.floats(min_value=0.3, max_value=4.0),
       eps=st.floats(min_value=0.05, max_value=1.0),
       ricci=st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=60, deadline=None)
def test_d_root_property_nonneg(lam, kl, c, eps, ricci):
    d = interior_d(lam, kl, c, eps, ricci, n=2)
    q = 2 * d * d + 2 * 3 * kl * d + (2 * kl - c) * lam - (9.0 / (4 * eps)) * ricci**2
    assert q >= -1e-10 or d == 0.0
    if d > 0.0:
        assert q == pytest.approx(0.0, abs=1e-8)


@given(lam=st.floats(min_value=0.5, max_value=30.0),
       kl=st.floats(min_value=-3.0, max_value=-0.05),
       extra=st.floats(min_value=0.01, max_value=3.0))
@settings(max_examples=40, deadline=None)
def test_d_root_property_negative_branch(lam, kl, extra):
    c = -2 * kl + extra
    d = interior_d(lam, kl, c, 0.0, 0.0)
    assert d * d + (2 * kl - c) * lam == pytest.approx(0.0, abs=1e-9)


def test_d_symbolic_roots(rng):
    dd = sp.symbols("d", positive=True)
    for _ in range(5):
        lam = float(rng.uniform(1, 20))
        kl = float(rng.uniform(0, 1.5))
        c = float(rng.uniform(2 * kl + 0.1, 2 * kl + 3))  # keep a positive root
        expr = 2 * dd**2 + 2 * 3 * kl * dd + (2 * kl - c) * lam
        roots = [float(r) for r in sp.solve(sp.Eq(expr, 0), dd) if sp.im(r) == 0 and float(r) > 0]
        got = interior_d(lam, kl, c, 0.0, 0.0, n=2)
        if roots:
            assert got == pytest.approx(max(roots), rel=1e-9)
        else:
            assert got == 0.0


# ---------------------------------------------------------------------------
# boundary bound and presets
# ---------------------------------------------------------------------------

def test_boundary_alpha_disk(cases, fx):
    alpha_bd, info = boundary_alpha(cases.solution("disk", 128))
    assert alpha_bd == pytest.approx(fx["disk"]["alpha_bd"], rel=5e-3)
    assert info["II_min"] == pytest.approx(1.0, abs=1e-9)


def test_boundary_alpha_rectangle_fails(cases):
    with pytest.raises(HypothesisError):
        boundary_alpha(cases.solution("rectangle", 32))


def test_preset_euclidean_disk(cases, fx):
    cs = cases.study("disk")
    sol = cs.solutions[-1]
    bud = curvature_budget(sol.chart, sol.domain)
    c = preset_constants("euclidean-convex", sol.lam_best, bud, sol=sol)
    assert c.valid
    assert c.alpha == pytest.approx(fx["disk"]["euclidean_alpha"], abs=2e-6)
    assert c.d == pytest.approx(fx["disk"]["euclidean_d"], abs=2e-6)
    assert c.binding == "interior"
    assert c.details["alpha_bd"] == pytest.approx(fx["disk"]["alpha_bd"], rel=5e-3)
    assert c.alpha < c.details["alpha_bd"]


def test_preset_sphere_cap(cases, fx):
    cs = cases.study("cap")
    sol = cs.solutions[-1]
    bud = curvature_budget(sol.chart, sol.domain)
    c = preset_constants("sphere-convex", sol.lam_best, bud, sol=sol)
    assert c.valid
    assert c.d == 0.0 and c.c == 1.0
    assert c.alpha == pytest.approx(fx["cap_pi_3"]["sphere_alpha"], abs=2e-5)


def test_preset_sphere_rejects_shallow_cap(charts):
    # a cap with boundary II below 1/3 fails the preset hypothesis
    theta0 = 1.3  # cot(1.3) ~ 0.278 < 1/3
    sol = lc.solve_geometry(charts["sphere"], lc.spherical_cap(theta0), level=48)
    bud = curvature_budget(charts["sphere"], sol.domain)
    c = preset_constants("sphere-convex", sol.lam, bud, sol=sol)
    assert not c.valid
    assert any("1/3" in h for h in c.failed_hypotheses)


def test_preset_pinched_sphere(cases):
    sol = cases.solution("perturbed-cap", 128)
    bud = curvature_budget(sol.chart, sol.domain)
    c = preset_constants("pinched-sphere", sol.lam, bud, sol=sol)
    assert c.valid
    assert c.c == 1.0 and c.eps == 0.5 and c.d == 0.0
    assert c.details["alpha_is_reconstruction"]
    assert 0.0 < c.alpha < 1.0


def test_preset_einstein_on_sphere(cases):
    sol = cases.solution("cap", 128)
    bud = curvature_budget(sol.chart, sol.domain)
    c = preset_constants("einstein-nonneg", sol.lam, bud, sol=sol)
    assert c.valid
    assert c.c == 1.0  # 2 pinch + 1 with zero pinch
    lam = sol.lam
    s = 1.5
    expected_d = max(-s + math.sqrt(s * s - (1 - 0 - 0.25) * lam), 0.0)
    assert c.d == pytest.approx(expected_d, rel=1e-12)


def test_preset_hyperbolic(cases, fx):
    cs = cases.study("ball")
    sol = cs.solutions[-1]
    bud = curvature_budget(sol.chart, sol.domain)
    c = preset_constants("hyperbolic-ball", sol.lam_best, bud, sol=sol)
    assert c.valid
    assert c.c == 3.0
    assert c.d == pytest.approx(hyperbolic_printed_d(sol.lam_best, 2), rel=1e-12)
    assert c.details["d_quadratic"] == pytest.approx(math.sqrt(5 * sol.lam_best), rel=1e-12)
    assert c.d < c.details["d_quadratic"]
    assert c.alpha > 0.0


def test_preset_manual():
    bud = budget(0.0, 0.0)
    c = preset_constants("manual", 2.0, bud, manual={"alpha": 0.5, "c": 1.0, "d": 1.0})
    assert c.valid and c.alpha == 0.5 and c.provenance == "manual"


def test_preset_unknown():
    with pytest.raises(HypothesisError):
        preset_constants("nonsense", 2.0, budget(0.0, 0.0))


def test_preset_wrong_chart_flags(cases):
    sol = cases.solution("disk", 64)
    bud = curvature_budget(sol.chart, sol.domain)
    c = preset_constants("sphere-convex", sol.lam, bud, sol=sol)
    assert not c.valid
    assert any("sphere" in h for h in c.failed_hypotheses)


# ---------------------------------------------------------------------------
# strictness regions and barrier field
# ---------------------------------------------------------------------------

def test_regions_space_form():
    r = concavity_regions(budget(1.0, 1.0), 2.0)
    assert r.u_star == 0.0
    assert r.grad_v_threshold == math.inf


def test_regions_pinched():
    r = concavity_regions(budget(1.0, 4.0), 2.0)
    assert r.u_star == pytest.approx(math.sqrt(3) / 2, abs=1e-14)
    assert r.u_star == pytest.approx(0.86603, abs=1e-5)


def test_regions_gradient_threshold_series_limit():
    # as pinch -> 0 the threshold approaches 2 kl lam / (3 Rd)
    lam, Rd = 3.0, 1.0
    r = concavity_regions(CurvatureBudget(1.0, 1.0 + 1e-9, 1e-9, Rd), lam)
    assert r.grad_v_threshold == pytest.approx(2.0 * lam / (3.0 * Rd), rel=1e-6)
    # and the closed form at moderate pinch matches the quadratic root
    P = 0.2
    r2 = concavity_regions(CurvatureBudget(1.0, 1.0 + P, P, Rd), lam)
    t = r2.grad_v_threshold
    assert -2 * P * t * t - 3 * Rd * t + 2 * 1.0 * lam == pytest.approx(0.0, abs=1e-9)


def test_regions_requires_positive_upper():
    with pytest.raises(HypothesisError):
        concavity_regions(budget(-1.0, -1.0), 2.0)


def test_barrier_field_values(cases):
    F = cases.fields("rectangle", 128)
    b, pos = barrier_field(F.derived, 0.0, 1.0, 0.0)
    j, i = F.sol.max_node()
    assert b[j, i] == 0.0
    b1, _ = barrier_field(F.derived, 0.0, 1.0, 1.0)
    assert b1[j, i] == -1.0
    assert not pos[j, i]


def test_barrier_field_disk_hand_evaluation(cases, fx):
    # b at a node near r = 0.5 against the closed-form eigenfunction
    F = cases.fields("disk", 128)
    g = F.sol.grid
    j = np.argmin(np.abs(g.Y[:, 0]))
    i = np.argmin(np.abs(g.X[0, :] - 0.5))
    alpha, c, d = 0.5, 1.0, 1.0
    b, _ = barrier_field(F.derived, alpha, c, d)
    u = fx["disk"]["u_at_r05"]
    gr = fx["disk"]["grad_u_at_r05"]
    expected = alpha * gr**2 / (4 * u) + c * math.log(u) - d
    assert b[j, i] == pytest.approx(expected, abs=2e-3)
