"""Numerical verification of the concavity estimates on a solved eigenfunction.

Each check reduces to a signed worst margin over the trusted node band and a
status:

    pass            the claim holds beyond the printed tolerance
    fail            the claim is violated beyond the tolerance
    indeterminate   within tolerance of equality, hypotheses unverified, or
                    the check is diagnostic-only

Tolerances default to 50 h^2 scaled by the local field magnitude and are
recorded in every report.  Strict inequalities (the main Hessian bound, the
strict-concavity regions) demand the margin clear of zero by the tolerance;
one-sided bounds (log-concavity, the gradient estimate) pass within it.

The barrier operator of a direction field X and barrier b is evaluated in its
2-D reduction: with e2 the g-unit direction orthogonal to X and K the Gauss
curvature (so Ric = K g and nabla Ric = dK (x) g),

    B(b, X) = -2 b^2 + 2 <grad b, grad v>_g
              - 2 K [ (dv(e2))^2 + Hess v(e2, e2) ]
              - 2 b K - dK(grad v) + 2 dK(X) dv(X) + Lap_g b.

On space forms dK = 0 and the constant-curvature closed form used for
cross-checks keeps only the first five terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .barriers import BarrierConstants, ConcavityRegions, barrier_field, concavity_regions
from .calculus import SolutionFields, _dx, _dy, laplacian_g
from .geometry import CurvatureBudget, boundary_geometry

TOL_COEFF = 50.0


@dataclass
class VerificationReport:
    name: str
    status: str
    worst_margin: float
    worst_location: tuple | None
    tolerance: float
    h: float
    series: dict | None = None
    notes: list = field(default_factory=list)

    def as_dict(self):
        return {
            "name": self.name,
            "status": self.status,
            "worst_margin": self.worst_margin,
            "worst_location": list(self.worst_location) if self.worst_location else None,
            "tolerance": self.tolerance,
            "h": self.h,
            "series": self.series,
            "notes": list(self.notes),
        }


def _worst(grid, margins, mask):
    """(worst margin, its (x, y) location, flat index) over a masked array."""
    vals = np.where(mask, margins, -np.inf)
    k = int(np.argmax(vals))
    j, i = np.unravel_index(k, margins.shape)
    return float(margins[j, i]), (float(grid.X[j, i]), float(grid.Y[j, i])), (j, i)


def check_log_concavity(fields: SolutionFields, tol_scale: float = 1.0) -> VerificationReport:
    """Largest metric Hessian eigenvalue of v over the safe band; the solution
    is numerically log-concave when it stays below the tolerance."""
    grid = fields.sol.grid
    mask = fields.derived.safe & np.isfinite(fields.mu_max)
    tol = TOL_COEFF * grid.h**2 * tol_scale * (1.0 + np.abs(fields.mu_max) + np.abs(fields.mu_min))
    worst, loc, (j, i) = _worst(grid, fields.mu_max, mask)
    ok = np.all(fields.mu_max[mask] <= tol[mask])
    status = "pass" if ok else "fail"
    return VerificationReport(
        name="log-concavity", status=status, worst_margin=worst, worst_location=loc,
        tolerance=float(tol[j, i]), h=grid.h,
        notes=[f"nodes checked: {int(mask.sum())}"],
    )


def check_barrier_inequality(fields: SolutionFields, constants: BarrierConstants,
                             t: float | None = None, tol_scale: float = 1.0,
                             name: str = "main-inequality") -> VerificationReport:
    """Strict negativity of mu_max + b over the safe band, b evaluated at
    barrier time t (defaults to alpha)."""
    grid = fields.sol.grid
    t = constants.alpha if t is None else t
    b, _ = barrier_field(fields.derived, t, constants.c, constants.d)
    margins = fields.mu_max + b
    mask = fields.derived.safe & np.isfinite(margins)
    tol = TOL_COEFF * grid.h**2 * tol_scale * (1.0 + np.abs(b))
    worst, loc, (j, i) = _worst(grid, margins, mask)
    notes = [f"t = {t:.6g}", f"nodes checked: {int(mask.sum())}"]
    if not constants.valid:
        status = "indeterminate"
        notes += [f"constants hypotheses unverified: {hyp}" for hyp in constants.failed_hypotheses]
    elif np.all(margins[mask] < -tol[mask]):
        status = "pass"
    elif np.any(margins[mask] > tol[mask]):
        status = "fail"
    else:
        status = "indeterminate"
    return VerificationReport(
        name=name, status=status, worst_margin=worst, worst_location=loc,
        tolerance=float(tol[j, i]), h=grid.h, notes=notes,
    )


# ---------------------------------------------------------------------------
# Barrier operator
# ---------------------------------------------------------------------------


class BarrierOperatorEvaluator:
    """Pointwise barrier-operator evaluation for a fixed barrier field.

    Precomputes the barrier derivatives and curvature data; `generic` carries
    the full 2-D reduction including the curvature-gradient terms, while
    `spaceform` is the independent constant-curvature closed form used to
    cross-check it.
    """

    def __init__(self, fields: SolutionFields, b: np.ndarray):
        sol = fields.sol
        grid = sol.grid
        der = fields.derived
        self.fields = fields
        self.grid = grid
        self.b = b
        self.bx = _dx(b, grid.h)
        self.by = _dy(b, grid.h)
        self.lap_b = laplacian_g(b, der.chart, grid)
        self.K = np.asarray(der.chart.gauss_curvature(grid.X, grid.Y), dtype=float)
        Kx, Ky = der.chart.grad_gauss_curvature(grid.X, grid.Y)
        self.Kx = np.asarray(Kx, dtype=float)
        self.Ky = np.asarray(Ky, dtype=float)
        self.valid = (
            der.safe
            & np.isfinite(self.bx) & np.isfinite(self.by) & np.isfinite(self.lap_b)
            & np.isfinite(fields.hess_v.hxx)
        )

    def _frame(self, j, i, X):
        """g-unit X and its g-unit perpendicular, from any nonzero chart vector."""
        ephi = math.exp(self.fields.derived.phi[j, i])
        nrm = math.hypot(X[0], X[1]) * ephi
        if nrm == 0.0:
            raise ValueError("direction must be nonzero")
        Xx, Xy = X[0] / nrm, X[1] / nrm
        return (Xx, Xy), (-Xy, Xx)

    def generic(self, j: int, i: int, X) -> float:
        """Full barrier operator at node (j, i) in direction X (chart comps)."""
        if not self.valid[j, i]:
            raise ValueError(f"node ({j}, {i}) outside the evaluable band")
        der = self.fields.derived
        hv = self.fields.hess_v
        (Xx, Xy), (e2x, e2y) = self._frame(j, i, X)
        em2 = der.emtwophi[j, i]
        vx, vy = der.vx[j, i], der.vy[j, i]
        bv = self.b[j, i]

        dv_e2 = vx * e2x + vy * e2y
        hess_e2 = hv.hxx[j, i] * e2x * e2x + 2.0 * hv.hxy[j, i] * e2x * e2y + hv.hyy[j, i] * e2y * e2y
        grad_inner = em2 * (self.bx[j, i] * vx + self.by[j, i] * vy)
        K = self.K[j, i]
        dK_gradv = em2 * (self.Kx[j, i] * vx + self.Ky[j, i] * vy)
        dK_X = self.Kx[j, i] * Xx + self.Ky[j, i] * Xy
        dv_X = vx * Xx + vy * Xy
        return (
            -2.0 * bv * bv
            + 2.0 * grad_inner
            - 2.0 * K * (dv_e2 * dv_e2 + hess_e2)
            - 2.0 * bv * K
            - dK_gradv
            + 2.0 * dK_X * dv_X
            + self.lap_b[j, i]
        )

    def spaceform(self, j: int, i: int, X) -> float:
        """Constant-curvature closed form (independent cross-check path)."""
        chart = self.fields.derived.chart
        if not chart.is_space_form:
            raise ValueError("spaceform evaluation needs a space-form chart")
        K = chart.space_form_curvature
        der = self.fields.derived
        hv = self.fields.hess_v
        (Xx, Xy), (e2x, e2y) = self._frame(j, i, X)
        vx, vy = der.vx[j, i], der.vy[j, i]
        dv_e2 = vx * e2x + vy * e2y
        hess_e2 = (
            hv.hxx[j, i] * e2x**2 + 2.0 * hv.hxy[j, i] * e2x * e2y + hv.hyy[j, i] * e2y**2
        )
        bv = self.b[j, i]
        grad_inner = der.emtwophi[j, i] * (self.bx[j, i] * vx + self.by[j, i] * vy)
        return (
            self.lap_b[j, i]
            + 2.0 * grad_inner
            - 2.0 * bv * (bv + K)
            - 2.0 * K * (dv_e2**2 + hess_e2)
        )


def barrier_operator_eval(fields: SolutionFields, b: np.ndarray, node, X) -> float:
    """One-shot generic barrier-operator value at node = (j, i)."""
    return BarrierOperatorEvaluator(fields, b).generic(node[0], node[1], X)


def check_barrier_criteria(fields: SolutionFields, constants: BarrierConstants,
                           t: float | None = None, touch_tol: float | None = None,
                           tol_scale: float = 1.0) -> VerificationReport:
    """Barrier-criteria check at near-touching nodes.

    Wherever b > 0 and mu_max + b is within the touching tolerance of zero,
    the barrier operator must be positive in the worst direction.  With no
    near-touching nodes at this resolution the criteria hold vacuously.
    """
    grid = fields.sol.grid
    t = constants.alpha if t is None else t
    b, positive = barrier_field(fields.derived, t, constants.c, constants.d)
    margins = fields.mu_max + b
    if touch_tol is None:
        touch = np.maximum(1e-3, 10.0 * grid.h**2 * (1.0 + np.abs(b)))
    else:
        touch = np.full_like(b, touch_tol)
    ev = BarrierOperatorEvaluator(fields, b)
    flagged = fields.derived.safe & positive & (margins >= -touch) & np.isfinite(margins)
    evaluable = flagged & ev.valid
    notes = [f"t = {t:.6g}", f"near-touching nodes: {int(flagged.sum())}",
             f"evaluable: {int(evaluable.sum())}"]
    if not constants.valid:
        notes += [f"constants hypotheses unverified: {hyp}" for hyp in constants.failed_hypotheses]

    if not np.any(flagged):
        return VerificationReport(
            name="barrier-criteria", status="pass" if constants.valid else "indeterminate",
            worst_margin=math.inf, worst_location=None, tolerance=0.0, h=grid.h,
            notes=notes + ["criteria vacuous at this resolution"],
        )
    if not np.any(evaluable):
        return VerificationReport(
            name="barrier-criteria", status="indeterminate", worst_margin=math.nan,
            worst_location=None, tolerance=0.0, h=grid.h,
            notes=notes + ["near-touching nodes outside the derivative band"],
        )
    jj, ii = np.nonzero(evaluable)
    Bvals = np.array([
        ev.generic(j, i, (fields.dir_x[j, i], fields.dir_y[j, i])) for j, i in zip(jj, ii)
    ])
    k = int(np.argmin(Bvals))
    worst = float(Bvals[k])
    loc = (float(grid.X[jj[k], ii[k]]), float(grid.Y[jj[k], ii[k]]))
    tol = TOL_COEFF * grid.h**2 * tol_scale * (1.0 + abs(worst))
    if not constants.valid:
        status = "indeterminate"
    elif worst > 0.0:
        status = "pass"
    elif worst < -tol:
        status = "fail"
    else:
        status = "indeterminate"
    series = {"B_values": Bvals[:200].tolist()}
    return VerificationReport(
        name="barrier-criteria", status=status, worst_margin=worst, worst_location=loc,
        tolerance=tol, h=grid.h, series=series, notes=notes,
    )


def continuity_sweep(fields: SolutionFields, constants: BarrierConstants,
                     steps: int = 11, tol_scale: float = 1.0) -> VerificationReport:
    """Deform the barrier from t = 0 to t = alpha and require the strict
    Hessian bound at every step; at t = 0 the margin must already be strictly
    negative, and at the grid maximum of u the t = 0 barrier value is exactly -d."""
    if steps < 5:
        raise ValueError("sweep needs at least 5 steps")
    grid = fields.sol.grid
    ts = np.linspace(0.0, constants.alpha, steps)
    worsts, statuses = [], []
    for tv in ts:
        rep = check_barrier_inequality(fields, constants, t=float(tv), tol_scale=tol_scale,
                                       name="main-inequality")
        worsts.append(rep.worst_margin)
        statuses.append(rep.status)
    jmax, imax = fields.sol.max_node()
    b0 = 0.0 * fields.derived.grad_w_sq[jmax, imax] + constants.c * fields.derived.v[jmax, imax] - constants.d
    notes = [f"b(u-max node, t=0) = {b0!r} (expected -d = {-constants.d!r})"]

    anomaly = statuses[-1] == "pass" and any(s == "fail" for s in statuses[:-1])
    if anomaly:
        notes.append("anomaly: an intermediate step fails while t = alpha passes")
    diffs = np.diff(worsts)
    notes.append(
        "worst margin monotone non-decreasing in t" if np.all(diffs >= -1e-12)
        else "worst margin not monotone in t (reported, not asserted)"
    )
    if not constants.valid:
        status = "indeterminate"
    elif any(s == "fail" for s in statuses) or worsts[0] >= 0.0:
        status = "fail"
    elif all(s == "pass" for s in statuses):
        status = "pass"
    else:
        status = "indeterminate"
    series = {"t": [float(tv) for tv in ts], "worst_margin": [float(w) for w in worsts],
              "status": statuses, "b_at_max_t0": float(b0)}
    return VerificationReport(
        name="continuity-sweep", status=status, worst_margin=float(max(worsts)),
        worst_location=None, tolerance=TOL_COEFF * grid.h**2 * tol_scale, h=grid.h,
        series=series, notes=notes,
    )


def check_gradient_bound(fields: SolutionFields, tol_scale: float = 1.0) -> VerificationReport:
    """Classical gradient estimate |grad u|_g^2 <= lam (1 - u^2) for the
    sup-normalized eigenfunction, checked at every safe-band node (equality is
    attained at the maximum, so this is a one-sided bound within tolerance)."""
    sol = fields.sol
    grid = sol.grid
    margins = fields.derived.grad_u_sq - sol.lam * (1.0 - sol.u**2)
    mask = fields.derived.safe & np.isfinite(margins)
    tol = TOL_COEFF * grid.h**2 * tol_scale * (1.0 + sol.lam)
    worst, loc, _ = _worst(grid, margins, mask)
    status = "pass" if worst <= tol else "fail"
    return VerificationReport(
        name="gradient-bound", status=status, worst_margin=worst, worst_location=loc,
        tolerance=float(tol), h=grid.h, notes=[f"nodes checked: {int(mask.sum())}"],
    )


# ---------------------------------------------------------------------------
# Boundary probe
# ---------------------------------------------------------------------------


def _u_interpolator(sol):
    grid = sol.grid
    return RegularGridInterpolator((grid.Y[:, 0], grid.X[0, :]), sol.u,
                                   method="cubic", bounds_error=False, fill_value=0.0)


def _probe_point_quantities(iu, chart, p, tan, delta):
    """(u, du(T-hat), du(n-dir grad comps), Hess_g u(T,T) metric) at point p by
    differencing the cubic interpolant of u along the chart tangent T-hat."""
    ux = (float(iu((p[1], p[0] + delta))) - float(iu((p[1], p[0] - delta)))) / (2 * delta)
    uy = (float(iu((p[1] + delta, p[0]))) - float(iu((p[1] - delta, p[0])))) / (2 * delta)
    u0 = float(iu((p[1], p[0])))
    up = float(iu((p[1] + delta * tan[1], p[0] + delta * tan[0])))
    um = float(iu((p[1] - delta * tan[1], p[0] - delta * tan[0])))
    d2T = (up - 2.0 * u0 + um) / (delta * delta)
    phx, phy = chart.dphi(p[0], p[1])
    gTx = float(phx) * (tan[0] ** 2 - tan[1] ** 2) + 2.0 * float(phy) * tan[0] * tan[1]
    gTy = -float(phy) * (tan[0] ** 2 - tan[1] ** 2) + 2.0 * float(phx) * tan[0] * tan[1]
    em2 = math.exp(-2.0 * chart.phi(p[0], p[1]))
    hess_uTT = em2 * (d2T - gTx * ux - gTy * uy)
    duT = ux * tan[0] + uy * tan[1]
    grad_u_sq = em2 * (ux * ux + uy * uy)
    return u0, duT, grad_u_sq, hess_uTT


def boundary_probe(fields: SolutionFields, samples: int = 8, offsets=None,
                   constants: BarrierConstants | None = None, t: float | None = None,
                   tol_scale: float = 1.0) -> VerificationReport:
    """Boundary asymptotics along inward normal lines.

    At each boundary sample x0 with tangent T, second fundamental form II and
    recovered |grad u(x0)|, and for a decreasing sequence of normal offsets:

      (a) the tangential ratio u * Hess v(T, T) / (-II |grad u(x0)|), which
          should approach 1 at the boundary;
      (b) the scaled barrier b u against II |grad u(x0)|: with valid preset
          constants the finest-offset value must stay strictly below;
      (c) the growth product (t |grad sqrt(u)|^2) u, which stays bounded
          (approaching t |grad u(x0)|^2 / 4).

    All values come from normal-line evaluation of a cubic interpolant of u
    (independent of the bulk node fields).  Hess u(T, T) is extrapolated
    linearly to the boundary from the two finest offsets and reported
    alongside -II |grad u(x0)|.
    """
    sol = fields.sol
    grid = sol.grid
    dom = sol.domain
    chart = sol.chart
    h = grid.h
    if offsets is None:
        offsets = [16.0 * h, 8.0 * h, 4.0 * h]
    offsets = sorted(float(o) for o in offsets)[::-1]
    if offsets[-1] < 2.0 * h - 1e-12:
        raise ValueError(f"offsets must stay >= 2h = {2*h:.4g}")

    iu = _u_interpolator(sol)
    tval = (constants.alpha if t is None else t) if constants is not None else None
    delta = 3.0 * h
    rows = []
    hess_u_extrap = []
    bu_margins = []
    for s in np.linspace(0.0, dom.perimeter, samples, endpoint=False):
        try:
            p0, tan, nrm, _ke = dom.boundary_frame(float(s))
        except Exception:
            continue
        _, _, II = boundary_geometry(chart, dom, float(s))
        u1 = float(iu((p0[1] - delta * nrm[1], p0[0] - delta * nrm[0])))
        u2 = float(iu((p0[1] - 2 * delta * nrm[1], p0[0] - 2 * delta * nrm[0])))
        grad0 = math.exp(-chart.phi(p0[0], p0[1])) * abs((4.0 * u1 - u2) / (2.0 * delta))
        per_offset = []
        for dist in offsets:
            p = (p0[0] - dist * nrm[0], p0[1] - dist * nrm[1])
            uu, duT, gusq, hess_uTT = _probe_point_quantities(iu, chart, p, tan, delta)
            # metric Hess v(T,T) for the g-unit tangent via the chain rule
            emphi = math.exp(-chart.phi(p[0], p[1]))
            dvT_g = (duT / uu) * emphi
            hess_vTT = hess_uTT / uu - dvT_g * dvT_g
            ratio = uu * hess_vTT / (-II * grad0) if II * grad0 != 0.0 else math.nan
            entry = {"dist": dist, "u": uu, "ratio": ratio,
                     "hess_uTT": uu * (hess_vTT + dvT_g * dvT_g)}
            if tval is not None:
                gw = gusq / (4.0 * uu)
                bb = tval * gw + constants.c * math.log(uu) - constants.d
                entry["b_u"] = bb * uu
                entry["growth"] = tval * gw * uu
            per_offset.append(entry)
        f1, f2 = per_offset[-1]["hess_uTT"], per_offset[-2]["hess_uTT"]
        d1, d2 = per_offset[-1]["dist"], per_offset[-2]["dist"]
        extrap = f1 + d1 * (f1 - f2) / (d2 - d1)
        hess_u_extrap.append((extrap, -II * grad0))
        if tval is not None and math.isfinite(per_offset[-1].get("b_u", math.nan)):
            bu_margins.append(per_offset[-1]["b_u"] - II * grad0)
        rows.append({"s": float(s), "II": II, "grad_u0": grad0, "offsets": per_offset})

    if not rows:
        raise ValueError("no smooth boundary samples available")
    series = {"samples": rows, "offsets": offsets,
              "hess_u_boundary": [{"extrapolated": e, "expected": x} for e, x in hess_u_extrap]}
    notes = []
    finest_ratios = [r["offsets"][-1]["ratio"] for r in rows]
    notes.append(f"tangential ratio at finest offset: "
                 f"min {min(finest_ratios):.4f}, max {max(finest_ratios):.4f}")
    trend_ok = all(
        abs(r["offsets"][-1]["ratio"] - 1.0) <= abs(r["offsets"][0]["ratio"] - 1.0) + 1e-9
        for r in rows if all(math.isfinite(o["ratio"]) for o in r["offsets"])
    )
    notes.append("ratio converges toward 1 over offsets" if trend_ok
                 else "ratio trend toward 1 not monotone (reported)")

    if constants is None:
        status = "indeterminate"
        worst = math.nan
        notes.append("no constants supplied: barrier growth bound not asserted")
        loc = None
        tol = 0.0
    elif not constants.valid:
        status = "indeterminate"
        worst = max(bu_margins) if bu_margins else math.nan
        notes += [f"constants hypotheses unverified: {hyp}" for hyp in constants.failed_hypotheses]
        loc = None
        tol = 0.0
    else:
        worst = max(bu_margins)
        k = int(np.argmax(bu_margins))
        loc = (rows[k]["s"], offsets[-1])
        tol = TOL_COEFF * h**2 * tol_scale * (1.0 + abs(rows[k]["II"] * rows[k]["grad_u0"]))
        status = "pass" if worst < -tol else ("fail" if worst > tol else "indeterminate")
        notes.append("finest-offset b*u stays below II |grad u| at every sample"
                     if status == "pass" else "boundary growth bound margin reported above")
    return VerificationReport(
        name="boundary-probe", status=status, worst_margin=float(worst),
        worst_location=loc, tolerance=float(tol), h=h, series=series, notes=notes,
    )


def check_strict_region(fields: SolutionFields, budget: CurvatureBudget, lam: float,
                        tol_scale: float = 1.0) -> VerificationReport:
    """Strict concavity of v on {u > u*} and on the strong-concavity gradient
    sublevel set (positive-lower-curvature setting)."""
    grid = fields.sol.grid
    notes = []
    if budget.kappa_lower <= 0.0:
        return VerificationReport(
            name="strict-region", status="indeterminate", worst_margin=math.nan,
            worst_location=None, tolerance=0.0, h=grid.h,
            notes=["needs a positive curvature lower bound"],
        )
    regions: ConcavityRegions = concavity_regions(budget, lam)
    tol = TOL_COEFF * grid.h**2 * tol_scale * (1.0 + np.abs(fields.mu_max))

    mask_u = fields.derived.safe & (fields.sol.u > regions.u_star) & np.isfinite(fields.mu_max)
    mask_g = (fields.derived.safe & np.isfinite(fields.derived.grad_v_sq)
              & (np.sqrt(fields.derived.grad_v_sq) < regions.grad_v_threshold)
              & np.isfinite(fields.mu_max))
    notes.append(f"u* = {regions.u_star:.6g}; nodes in value region: {int(mask_u.sum())}")
    notes.append(f"|grad v| threshold = {regions.grad_v_threshold:.6g}; "
                 f"nodes in gradient region: {int(mask_g.sum())}")

    sub = []
    for mname, mask in (("value-region", mask_u), ("gradient-region", mask_g)):
        if not np.any(mask):
            sub.append((mname, "indeterminate", math.nan, None, 0.0))
            notes.append(f"{mname} empty at this grid")
            continue
        worst, loc, (j, i) = _worst(grid, fields.mu_max, mask)
        if np.all(fields.mu_max[mask] < -tol[mask]):
            st = "pass"
        elif np.any(fields.mu_max[mask] > tol[mask]):
            st = "fail"
        else:
            st = "indeterminate"
        sub.append((mname, st, worst, loc, float(tol[j, i])))

    stats = [s[1] for s in sub]
    if "fail" in stats:
        status = "fail"
    elif all(s == "indeterminate" for s in stats):
        status = "indeterminate"
    elif "indeterminate" in stats:
        status = "pass"  # one region empty, the asserted one passes
    else:
        status = "pass"
    finite = [s for s in sub if s[3] is not None]
    if finite:
        k = int(np.argmax([s[2] for s in finite]))
        worst, loc, tol_at = finite[k][2], finite[k][3], finite[k][4]
    else:
        worst, loc, tol_at = math.nan, None, 0.0
    series = {"regions": [
        {"name": s[0], "status": s[1], "worst_margin": s[2]} for s in sub
    ], "u_star": regions.u_star, "grad_v_threshold": regions.grad_v_threshold}
    return VerificationReport(
        name="strict-region", status=status, worst_margin=float(worst), worst_location=loc,
        tolerance=tol_at, h=grid.h, series=series, notes=notes,
    )


def check_half_log_concavity(fields: SolutionFields, exclusion: float = 1e-3) -> VerificationReport:
    """Diagnostic for the stronger concavity of -sqrt(-log u): reports the
    worst eigenvalue of e^{-2 phi} (Hess v - (dv (x) dv) / (2 v)).  Never
    asserted; a small neighborhood of the maximum (v > -exclusion) is excluded
    because the expression degenerates at v = 0.
    """
    der = fields.derived
    grid = fields.sol.grid
    hv = fields.hess_v
    with np.errstate(divide="ignore", invalid="ignore"):
        mxx = hv.hxx - der.vx * der.vx / (2.0 * der.v)
        mxy = hv.hxy - der.vx * der.vy / (2.0 * der.v)
        myy = hv.hyy - der.vy * der.vy / (2.0 * der.v)
    with np.errstate(invalid="ignore"):
        sxx, sxy, syy = hv.emtwophi * mxx, hv.emtwophi * mxy, hv.emtwophi * myy
        mu = 0.5 * (sxx + syy) + np.hypot(0.5 * (sxx - syy), sxy)
    mask = der.safe & (der.v < -exclusion) & np.isfinite(mu)
    worst, loc, _ = _worst(grid, mu, mask)
    return VerificationReport(
        name="half-log-concavity", status="indeterminate", worst_margin=worst,
        worst_location=loc, tolerance=0.0, h=grid.h,
        series={"excluded_above_u": math.exp(-exclusion)},
        notes=["conjecture diagnostic only, never asserted",
               f"excluded neighborhood of the maximum: v > -{exclusion:g}"],
    )


def zero_barrier_chain(fields: SolutionFields, budget: CurvatureBudget,
                       touch_tol: float = 0.05):
    """Data for the zero-barrier positivity chain at near-touching nodes.

    Returns (B values, lower bounds 2 kl lam - 2 P |grad v|^2 - 3 Rd |grad v|)
    at safe nodes where mu_max >= -touch_tol (the setting where the maximal
    direction has vanishing Hessian value); both arrays empty when no node
    qualifies at this resolution.
    """
    sol = fields.sol
    b = np.zeros_like(sol.u)
    ev = BarrierOperatorEvaluator(fields, b)
    mask = fields.derived.safe & ev.valid & (fields.mu_max >= -touch_tol)
    jj, ii = np.nonzero(mask)
    Bvals, bounds = [], []
    gv = np.sqrt(fields.derived.grad_v_sq)
    for j, i in zip(jj, ii):
        Bvals.append(ev.generic(j, i, (fields.dir_x[j, i], fields.dir_y[j, i])))
        bounds.append(
            2.0 * budget.kappa_lower * sol.lam
            - 2.0 * budget.pinch * fields.derived.grad_v_sq[j, i]
            - 3.0 * budget.ricci_deriv_sup * gv[j, i]
        )
    return np.array(Bvals), np.array(bounds)
