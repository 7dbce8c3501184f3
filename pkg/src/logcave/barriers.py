"""Closed-form admissible constants for the barrier b = alpha |grad sqrt(u)|^2 + c log(u) - d.

The interior admissibility conditions come from a maximum-principle argument
and reduce to quadratics whose extreme roots are returned here.

Nonnegative curvature lower bound (kl >= 0), using |grad u|^2 <= lam:

    alpha <= ( sqrt((lam + 2 kl)^2 + 8 lam (c - eps - 2 P)) - (lam + 2 kl) ) / lam,
    requires c > 2 P + eps;
    d >= max{ ( -(n+1) kl + sqrt(((n+1) kl)^2 - (4 kl - 2 c) lam + (9/(2 eps)) Rd^2) ) / 2, 0 }.

Negative curvature lower bound (kl < 0), using the gradient sup G = sup |grad u|_g^2:

    alpha <= ( sqrt((lam + 2 kl)^2 + 8 G (c - eps - 2 P + 2 kl)) - (lam + 2 kl) ) / G,
    requires c > 2 P - 2 kl + eps;
    d >= sqrt( (c - 2 kl) lam + (9/(4 eps)) Rd^2 ).

Here P is the curvature pinching (kappa_upper - kappa_lower) and Rd the sup of
|nabla Ric|_g.  The eps-terms drop identically when Rd = 0, which is the only
case where eps = 0 is admitted.  Independent of c and eps, the boundary
asymptotics force the strict bound

    alpha < 4 min over the boundary of II(X, X) / |grad u|,

recovered numerically from the solved eigenfunction by one-sided second-order
normal differences.  Presets package the standard instantiations (see
`PRESETS`); preset names describe the geometry they apply to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .calculus import DerivedFields
from .geometry import CurvatureBudget, boundary_geometry, convexity_check


class HypothesisError(ValueError):
    """A stated precondition of a constants formula is violated."""


def interior_alpha(lam: float, kappa_lower: float, c: float, eps: float, pinch: float,
                   grad_sup_sq: float | None = None) -> float:
    """Largest interior-admissible alpha for the given branch (see module doc)."""
    if kappa_lower >= 0.0:
        margin = c - 2.0 * pinch - eps
        if margin <= 0.0:
            raise HypothesisError(
                f"need c > 2*pinch + eps (c={c}, pinch={pinch}, eps={eps})")
        base = lam + 2.0 * kappa_lower
        return (math.sqrt(base * base + 8.0 * lam * margin) - base) / lam
    margin = c - 2.0 * pinch + 2.0 * kappa_lower - eps
    if margin <= 0.0:
        raise HypothesisError(
            f"need c > 2*pinch - 2*kappa_lower + eps (c={c}, pinch={pinch}, "
            f"kappa_lower={kappa_lower}, eps={eps})")
    if grad_sup_sq is None or grad_sup_sq <= 0.0:
        raise HypothesisError("negative-curvature branch needs grad_sup_sq > 0")
    base = lam + 2.0 * kappa_lower
    return (math.sqrt(base * base + 8.0 * grad_sup_sq * margin) - base) / grad_sup_sq


def interior_d(lam: float, kappa_lower: float, c: float, eps: float,
               ricci_deriv_sup: float, n: int = 2) -> float:
    """Minimal admissible d for the given branch (see module doc)."""
    if ricci_deriv_sup > 0.0 and eps <= 0.0:
        raise HypothesisError("eps must be positive when ricci_deriv_sup > 0")
    ric_term_half = (9.0 / (2.0 * eps)) * ricci_deriv_sup**2 if ricci_deriv_sup > 0.0 else 0.0
    ric_term_quarter = (9.0 / (4.0 * eps)) * ricci_deriv_sup**2 if ricci_deriv_sup > 0.0 else 0.0
    if kappa_lower >= 0.0:
        s = (n + 1.0) * kappa_lower
        disc = s * s - (4.0 * kappa_lower - 2.0 * c) * lam + ric_term_half
        if disc < 0.0:
            return 0.0
        return max(0.5 * (-s + math.sqrt(disc)), 0.0)
    return math.sqrt((c - 2.0 * kappa_lower) * lam + ric_term_quarter)


def hyperbolic_printed_d(lam: float, n: int = 2) -> float:
    """d from the hyperbolic-space estimate as printed: the root of
    2 d^2 + 2 (n+1) d - 5 lam = 0, i.e. (sqrt(10 lam + (n+1)^2) - (n+1)) / 2."""
    return 0.5 * (math.sqrt(10.0 * lam + (n + 1.0) ** 2) - (n + 1.0))


# ---------------------------------------------------------------------------
# Boundary bound from the solved eigenfunction
# ---------------------------------------------------------------------------


def boundary_gradient_samples(sol, n_samples: int = 256, depth_steps: float = 3.0):
    """Boundary II and |grad u|_g samples.

    At each boundary point the normal derivative of u is recovered by the
    one-sided second-order formula (4 u(delta) - u(2 delta)) / (2 delta) along
    the inward chart normal with delta = depth_steps * h, using bilinear
    interpolation of the node values; |grad u|_g = e^{-phi} |du/dn|.
    """
    grid = sol.grid
    dom = sol.domain
    chart = sol.chart
    interp = RegularGridInterpolator(
        (grid.Y[:, 0], grid.X[0, :]), sol.u, method="linear", bounds_error=False, fill_value=0.0
    )
    delta = depth_steps * grid.h
    ss = np.linspace(0.0, dom.perimeter, n_samples, endpoint=False)
    out = []
    for s in ss:
        try:
            p, tan, nrm, ke = dom.boundary_frame(float(s))
        except Exception:
            continue  # rectangle corner parameters are skipped
        _, _, kg = boundary_geometry(chart, dom, float(s))
        p1 = (p[0] - delta * nrm[0], p[1] - delta * nrm[1])
        p2 = (p[0] - 2.0 * delta * nrm[0], p[1] - 2.0 * delta * nrm[1])
        u1 = float(interp((p1[1], p1[0])))
        u2 = float(interp((p2[1], p2[0])))
        dn = (4.0 * u1 - u2) / (2.0 * delta)
        grad_g = math.exp(-chart.phi(p[0], p[1])) * abs(dn)
        out.append((float(s), float(kg), grad_g, p))
    return out


def boundary_alpha(sol, domain=None, chart=None, n_samples: int = 256):
    """Boundary admissibility bound alpha_bd = 4 min II / |grad u| over the boundary.

    Returns (alpha_bd, info) with the binding sample recorded; raises
    HypothesisError when min II <= 0 (non-uniformly-convex boundary).
    """
    domain = domain or sol.domain
    chart = chart or sol.chart
    if domain.shape == "rectangle":
        raise HypothesisError("boundary bound undefined: flat edges give II = 0")
    samples = boundary_gradient_samples(sol, n_samples=n_samples)
    kgs = np.array([s[1] for s in samples])
    grads = np.array([s[2] for s in samples])
    if float(kgs.min()) <= 0.0:
        raise HypothesisError(f"min boundary II = {kgs.min():.3g} <= 0: not uniformly convex")
    ratios = kgs / grads
    k = int(np.argmin(ratios))
    alpha_bd = 4.0 * float(ratios[k])
    info = {
        "alpha_bd": alpha_bd,
        "binding_s": samples[k][0],
        "binding_point": samples[k][3],
        "II_at_binding": float(kgs[k]),
        "grad_u_at_binding": float(grads[k]),
        "II_min": float(kgs.min()),
        "grad_u_max": float(grads.max()),
        "n_samples": len(samples),
    }
    return alpha_bd, info


def gradient_sup_sq(sol, derived: DerivedFields, boundary_info=None) -> float:
    """Numerical sup of |grad u|_g^2 over interior nodes and boundary samples."""
    interior = float(np.nanmax(np.where(derived.stencil_ok, derived.grad_u_sq, np.nan)))
    if boundary_info is not None:
        return max(interior, boundary_info.get("grad_u_max", 0.0) ** 2)
    return interior


# ---------------------------------------------------------------------------
# Constants container and presets
# ---------------------------------------------------------------------------

# strict boundary inequality: keep alpha below alpha_bd by this factor
BOUNDARY_SAFETY = 0.999

PRESETS = (
    "sphere-convex",      # unit-curvature sphere, boundary II > 1/3; d = 0
    "euclidean-convex",   # flat chart, uniformly convex; d = sqrt(lam/2)
    "pinched-sphere",     # kl ~ 1, pinch < 1/4, |nabla Ric| < (n+1)/9; c = 1, eps = 1/2
    "einstein-nonneg",    # parallel Ricci, kl >= 0; c = 2 pinch + 1, eps = 0
    "hyperbolic-ball",    # curvature -1 space form; c = 3
    "general",            # user-chosen c, eps through the two-branch machinery
    "manual",             # explicit alpha, c, d, eps
)


@dataclass(frozen=True)
class BarrierConstants:
    """(alpha, c, d, eps) with provenance and hypothesis-validity flags."""

    alpha: float
    c: float
    d: float
    eps: float
    provenance: str
    valid: bool
    failed_hypotheses: tuple = ()
    binding: str = "interior"
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "alpha": self.alpha,
            "c": self.c,
            "d": self.d,
            "eps": self.eps,
            "provenance": self.provenance,
            "valid": self.valid,
            "failed_hypotheses": list(self.failed_hypotheses),
            "binding": self.binding,
            "details": {k: v for k, v in self.details.items() if not isinstance(v, (list, tuple)) or len(v) < 16},
        }


def _cap_by_boundary(alpha_interior, sol, details, failed):
    """min(alpha_interior, BOUNDARY_SAFETY * alpha_bd); records the binding side."""
    try:
        alpha_bd, info = boundary_alpha(sol)
    except HypothesisError as e:
        failed.append(str(e))
        details["alpha_interior"] = alpha_interior
        return alpha_interior, "interior"
    details.update(info)
    details["alpha_interior"] = alpha_interior
    details["boundary_safety"] = BOUNDARY_SAFETY
    capped = BOUNDARY_SAFETY * alpha_bd
    if alpha_interior <= capped:
        return alpha_interior, "interior"
    return capped, "boundary"


def preset_constants(preset: str, lam: float, budget: CurvatureBudget, sol=None,
                     n: int = 2, manual: dict | None = None) -> BarrierConstants:
    """Fully populated BarrierConstants for a named preset.

    Hypothesis failures do not raise; they are recorded in failed_hypotheses
    with valid=False so that downstream checks can report 'indeterminate'.
    """
    if preset not in PRESETS:
        raise HypothesisError(f"unknown preset {preset!r}; options: {PRESETS}")
    kl, ku = budget.kappa_lower, budget.kappa_upper
    P, Rd = budget.pinch, budget.ricci_deriv_sup
    failed: list = []
    details: dict = {"lambda": lam, "kappa_lower": kl, "kappa_upper": ku,
                     "pinch": P, "ricci_deriv_sup": Rd, "n": n}
    binding = "interior"

    if preset == "manual":
        m = manual or {}
        return BarrierConstants(
            alpha=float(m.get("alpha", 0.0)), c=float(m.get("c", 1.0)),
            d=float(m.get("d", 0.0)), eps=float(m.get("eps", 0.0)),
            provenance="manual", valid=True,
            failed_hypotheses=("hypotheses not machine-checked (manual constants)",),
            details=details,
        )

    if preset == "sphere-convex":
        c, eps, d = 1.0, 0.0, 0.0
        if abs(kl - 1.0) > 1e-9 or abs(ku - 1.0) > 1e-9 or Rd > 1e-12:
            failed.append("chart is not the unit-curvature sphere")
        if sol is not None:
            _, ii_min = convexity_check(sol.chart, sol.domain)
            details["II_min"] = ii_min
            if not ii_min > 1.0 / 3.0:
                failed.append(f"boundary II must exceed 1/3 (min II = {ii_min:.5f})")
        else:
            failed.append("boundary II > 1/3 unchecked: no solution provided")
        alpha = interior_alpha(lam, 1.0, c, eps, 0.0)
        details["alpha_interior"] = alpha
        if sol is not None and not failed:
            try:
                alpha_bd, info = boundary_alpha(sol)
                details.update(info)
                if alpha >= alpha_bd:
                    failed.append("interior formula does not clear the boundary bound")
            except HypothesisError as e:
                failed.append(str(e))

    elif preset == "euclidean-convex":
        c, eps = 1.0, 0.0
        d = math.sqrt(lam / 2.0)
        if abs(kl) > 1e-12 or abs(ku) > 1e-12:
            failed.append("chart is not euclidean")
        if sol is None:
            failed.append("boundary bound needs a solution")
            alpha = interior_alpha(lam, 0.0, c, eps, 0.0)
            details["alpha_interior"] = alpha
        else:
            alpha_int = interior_alpha(lam, 0.0, c, eps, 0.0)
            alpha, binding = _cap_by_boundary(alpha_int, sol, details, failed)

    elif preset == "pinched-sphere":
        c, eps, d = 1.0, 0.5, 0.0
        if not P < 0.25:
            failed.append(f"pinch must be < 1/4 (pinch = {P:.5f})")
        if not Rd < (n + 1.0) / 9.0:
            failed.append(f"|nabla Ric| must be < (n+1)/9 (sup = {Rd:.5f})")
        if kl < 0.0:
            failed.append("curvature lower bound must be nonnegative")
        try:
            alpha_int = interior_alpha(lam, kl, c, eps, P)
        except HypothesisError as e:
            failed.append(str(e))
            alpha_int = float("nan")
        if sol is not None and math.isfinite(alpha_int):
            alpha, binding = _cap_by_boundary(alpha_int, sol, details, failed)
        else:
            alpha = alpha_int
            details["alpha_interior"] = alpha_int
        details["alpha_is_reconstruction"] = True

    elif preset == "einstein-nonneg":
        c = 2.0 * P + 1.0
        eps = 0.0
        if kl < 0.0:
            failed.append("curvature lower bound must be nonnegative")
        if Rd > 1e-12:
            failed.append("Ricci tensor must be parallel (|nabla Ric| = 0)")
        s = (n + 1.0) * kl / 2.0
        d = max(-s + math.sqrt(s * s - (kl - P - 0.25) * lam), 0.0)
        alpha_int = interior_alpha(lam, max(kl, 0.0), c, eps, P)
        if sol is not None:
            alpha, binding = _cap_by_boundary(alpha_int, sol, details, failed)
        else:
            alpha = alpha_int
            details["alpha_interior"] = alpha_int

    elif preset == "hyperbolic-ball":
        c, eps = 3.0, 0.0
        if abs(kl + 1.0) > 1e-9 or abs(ku + 1.0) > 1e-9 or Rd > 1e-12:
            failed.append("chart is not the curvature -1 hyperbolic plane")
        d = hyperbolic_printed_d(lam, n)
        details["d_printed"] = d
        details["d_quadratic"] = interior_d(lam, -1.0, c, eps, 0.0, n)
        if sol is None:
            failed.append("negative-curvature branch needs the solved gradient sup")
            alpha = float("nan")
        else:
            from .calculus import derived_fields

            der = derived_fields(sol)
            try:
                _, binfo = boundary_alpha(sol)
            except HypothesisError as e:
                failed.append(str(e))
                binfo = None
            G = gradient_sup_sq(sol, der, binfo)
            details["grad_sup_sq"] = G
            alpha_int = interior_alpha(lam, -1.0, c, eps, 0.0, grad_sup_sq=G)
            if binfo is not None:
                details.update(binfo)
                details["alpha_interior"] = alpha_int
                details["boundary_safety"] = BOUNDARY_SAFETY
                capped = BOUNDARY_SAFETY * binfo["alpha_bd"]
                alpha, binding = (alpha_int, "interior") if alpha_int <= capped else (capped, "boundary")
            else:
                alpha = alpha_int
                details["alpha_interior"] = alpha_int

    elif preset == "general":
        m = manual or {}
        c = float(m.get("c", 1.0))
        eps = float(m.get("eps", 0.0 if Rd == 0.0 else 0.5))
        grad_sup = None
        if kl < 0.0 and sol is not None:
            from .calculus import derived_fields

            grad_sup = gradient_sup_sq(sol, derived_fields(sol))
            details["grad_sup_sq"] = grad_sup
        try:
            alpha_int = interior_alpha(lam, kl, c, eps, P, grad_sup_sq=grad_sup)
        except HypothesisError as e:
            failed.append(str(e))
            alpha_int = float("nan")
        d = interior_d(lam, kl, c, eps, Rd, n) if not failed else float("nan")
        if sol is not None and math.isfinite(alpha_int):
            alpha, binding = _cap_by_boundary(alpha_int, sol, details, failed)
        else:
            alpha = alpha_int
            details["alpha_interior"] = alpha_int

    provenance = preset
    return BarrierConstants(
        alpha=float(alpha), c=float(c), d=float(d), eps=float(eps),
        provenance=provenance, valid=not failed, failed_hypotheses=tuple(failed),
        binding=binding, details=details,
    )


# ---------------------------------------------------------------------------
# Strict-concavity regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcavityRegions:
    u_star: float | None          # strict concavity predicted on {u > u_star}
    grad_v_threshold: float       # strong log-concavity below this |grad v|


def concavity_regions(budget: CurvatureBudget, lam: float) -> ConcavityRegions:
    """Thresholds of the zero-barrier strictness arguments.

    u_star = sqrt(1 - kl/ku) needs kl > 0 (parallel-Ricci context); the
    gradient threshold is ( sqrt(9 Rd^2 + 16 P kl lam) - 3 Rd ) / (4 P), with
    its P -> 0 limit 2 kl lam / (3 Rd) evaluated by series to avoid
    cancellation, and +inf when P = Rd = 0.
    """
    kl, ku = budget.kappa_lower, budget.kappa_upper
    P, Rd = budget.pinch, budget.ricci_deriv_sup
    if ku <= 0.0:
        raise HypothesisError("strict-region thresholds need kappa_upper > 0")
    u_star = math.sqrt(max(1.0 - kl / ku, 0.0)) if kl > 0.0 else None

    if Rd == 0.0 and P == 0.0:
        thr = math.inf
    elif Rd == 0.0:
        thr = math.sqrt(kl * lam / P) if kl > 0.0 else 0.0
    else:
        x = 16.0 * P * kl * lam / (9.0 * Rd * Rd)
        if abs(x) < 1e-6:
            thr = (2.0 * kl * lam / (3.0 * Rd)) * (1.0 - x / 4.0)
        else:
            thr = (math.sqrt(9.0 * Rd * Rd + 16.0 * P * kl * lam) - 3.0 * Rd) / (4.0 * P)
    return ConcavityRegions(u_star=u_star, grad_v_threshold=float(thr))


def barrier_field(derived: DerivedFields, t: float, c: float, d: float):
    """Node values of b(x, t) = t |grad sqrt(u)|^2 + c v - d and the {b > 0} mask."""
    b = t * derived.grad_w_sq + c * derived.v - d
    positive = derived.stencil_ok & (b > 0.0)
    return b, positive
