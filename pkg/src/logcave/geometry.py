"""Conformal charts, convex domains, and curvature bookkeeping.

All surfaces are described in a single 2-D coordinate chart with a conformal
metric g = e^{2 phi(x,y)} (dx^2 + dy^2).  The supported charts are

    euclidean             phi = 0
    sphere-stereographic  phi = log(2 / (1 + x^2 + y^2))      (Gauss curvature +1)
    hyperbolic-poincare   phi = log(2 / (1 - x^2 - y^2))      (Gauss curvature -1),
                          valid only on x^2 + y^2 < 1
    perturbed-sphere      phi = phi_sphere + eps * psi(x,y)   for a smooth psi

Gauss curvature is K = -e^{-2 phi} Lap0(phi) with Lap0 the flat Laplacian.
Boundary geometry uses the conformal geodesic-curvature formula

    k_g = e^{-phi} (k_e + d phi / d n),

where k_e is the Euclidean curvature of the chart curve (positive for the
counterclockwise boundary of a convex region) and n the outward chart normal.
The sign convention is pinned by closed-form oracles: a chart disk of radius
tan(theta0/2) on the sphere chart is a geodesic circle of polar radius theta0
with k_g = cot(theta0), and a chart disk of radius tanh(R/2) on the Poincare
disk has k_g = coth(R).

In two dimensions the Ricci tensor is K g, so nabla Ric = dK (x) g and
|nabla Ric|^2 = 2 |dK|_g^2; the curvature budget records
ricci_deriv_sup = sqrt(2) * sup |dK|_g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp
from scipy.optimize import brentq


class GeometryError(ValueError):
    """Invalid geometric input (bad chart point, corner parameter, ...)."""


CHART_KINDS = (
    "euclidean",
    "sphere-stereographic",
    "hyperbolic-poincare",
    "perturbed-sphere",
)


@dataclass(frozen=True)
class MetricChart:
    """Conformal chart with analytic evaluators through second order in phi.

    The evaluator attributes are vectorized callables of (x, y).  `valid` is
    False for a perturbed-sphere chart whose computed curvature changes sign
    on the check window.
    """

    kind: str
    epsilon: float = 0.0
    psi: str | None = None
    valid: bool = True
    _ev: dict = field(default=None, repr=False, compare=False)

    def _check_point(self, x, y):
        if self.kind == "hyperbolic-poincare":
            r2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
            if np.any(r2 >= 1.0):
                raise GeometryError("hyperbolic chart evaluated at x^2+y^2 >= 1")

    def phi(self, x, y):
        self._check_point(x, y)
        return self._ev["phi"](x, y)

    def dphi(self, x, y):
        """Chart gradient (phi_x, phi_y)."""
        self._check_point(x, y)
        return self._ev["phi_x"](x, y), self._ev["phi_y"](x, y)

    def d2phi(self, x, y):
        """Chart second derivatives (phi_xx, phi_xy, phi_yy)."""
        self._check_point(x, y)
        return (
            self._ev["phi_xx"](x, y),
            self._ev["phi_xy"](x, y),
            self._ev["phi_yy"](x, y),
        )

    def conformal_factor(self, x, y):
        """e^{2 phi}: the weight of the generalized eigenproblem."""
        return np.exp(2.0 * self.phi(x, y))

    def gauss_curvature(self, x, y):
        self._check_point(x, y)
        return self._ev["K"](x, y)

    def grad_gauss_curvature(self, x, y):
        """Chart gradient (K_x, K_y); identically zero on space forms."""
        self._check_point(x, y)
        return self._ev["K_x"](x, y), self._ev["K_y"](x, y)

    @property
    def is_space_form(self) -> bool:
        return self.kind in ("euclidean", "sphere-stereographic", "hyperbolic-poincare")

    @property
    def space_form_curvature(self) -> float:
        return {"euclidean": 0.0, "sphere-stereographic": 1.0, "hyperbolic-poincare": -1.0}[
            self.kind
        ]


def _const_ev(c):
    return lambda x, y: np.broadcast_to(np.float64(c), np.broadcast_shapes(np.shape(x), np.shape(y))).copy() if np.ndim(x) or np.ndim(y) else float(c)


def _spaceform_evaluators(sign):
    """Closed forms for phi = log(2/(1 + sign*r^2)); sign = +1 sphere, -1 hyperbolic."""

    def s(x, y):
        return 1.0 + sign * (np.asarray(x, dtype=float) ** 2 + np.asarray(y, dtype=float) ** 2)

    return {
        "phi": lambda x, y: np.log(2.0) - np.log(s(x, y)),
        "phi_x": lambda x, y: -2.0 * sign * np.asarray(x, dtype=float) / s(x, y),
        "phi_y": lambda x, y: -2.0 * sign * np.asarray(y, dtype=float) / s(x, y),
        "phi_xx": lambda x, y: -2.0 * sign / s(x, y)
        + 4.0 * np.asarray(x, dtype=float) ** 2 / s(x, y) ** 2,
        "phi_xy": lambda x, y: 4.0
        * np.asarray(x, dtype=float)
        * np.asarray(y, dtype=float)
        / s(x, y) ** 2,
        "phi_yy": lambda x, y: -2.0 * sign / s(x, y)
        + 4.0 * np.asarray(y, dtype=float) ** 2 / s(x, y) ** 2,
        "K": _const_ev(sign),
        "K_x": _const_ev(0.0),
        "K_y": _const_ev(0.0),
    }


_EUCLID_EV = {k: _const_ev(0.0) for k in ("phi", "phi_x", "phi_y", "phi_xx", "phi_xy", "phi_yy", "K", "K_x", "K_y")}


def _perturbed_evaluators(epsilon, psi_expr):
    x, y = sp.symbols("x y", real=True)
    psi = sp.sympify(psi_expr, locals={"x": x, "y": y})
    phi = sp.log(2) - sp.log(1 + x**2 + y**2) + sp.Float(epsilon) * psi
    K = -sp.exp(-2 * phi) * (sp.diff(phi, x, 2) + sp.diff(phi, y, 2))
    exprs = {
        "phi": phi,
        "phi_x": sp.diff(phi, x),
        "phi_y": sp.diff(phi, y),
        "phi_xx": sp.diff(phi, x, 2),
        "phi_xy": sp.diff(phi, x, y),
        "phi_yy": sp.diff(phi, y, 2),
        "K": sp.simplify(K),
        "K_x": sp.diff(K, x),
        "K_y": sp.diff(K, y),
    }
    ev = {}
    for name, e in exprs.items():
        f = sp.lambdify((x, y), e, "numpy")
        # lambdify of constant expressions drops the broadcast; wrap it
        ev[name] = (lambda g: lambda xx, yy: np.broadcast_to(
            np.asarray(g(xx, yy), dtype=float), np.broadcast_shapes(np.shape(xx), np.shape(yy))
        ).copy() if np.ndim(xx) or np.ndim(yy) else float(g(xx, yy)))(f)
    return ev


def make_chart(kind: str, epsilon: float = 0.0, psi: str | None = None,
               check_window: float = 1.5) -> MetricChart:
    """Build a MetricChart of the given kind.

    For perturbed-sphere charts, psi is a sympy expression string in x, y and
    epsilon the perturbation amplitude; curvature positivity is checked on a
    41x41 sample of the disk of radius `check_window` and recorded in `valid`.
    """
    if kind not in CHART_KINDS:
        raise GeometryError(f"unknown chart kind {kind!r}")
    if kind == "euclidean":
        ev = _EUCLID_EV
    elif kind == "sphere-stereographic":
        ev = _spaceform_evaluators(+1)
    elif kind == "hyperbolic-poincare":
        ev = _spaceform_evaluators(-1)
    else:
        if psi is None:
            raise GeometryError("perturbed-sphere chart needs a psi expression")
        ev = _perturbed_evaluators(epsilon, psi)

    valid = True
    if kind == "perturbed-sphere":
        t = np.linspace(-check_window, check_window, 41)
        X, Y = np.meshgrid(t, t)
        keep = X**2 + Y**2 <= check_window**2
        Kv = ev["K"](X, Y)
        valid = bool(np.all(np.asarray(Kv)[keep] > 0.0))
    return MetricChart(kind=kind, epsilon=float(epsilon), psi=psi, valid=valid, _ev=ev)


# ---------------------------------------------------------------------------
# Boundary curves
# ---------------------------------------------------------------------------

_ARC_SAMPLES = 4096


class _SmoothCurve:
    """Closed C^2 curve gamma(t), t in [0, 2pi), traversed counterclockwise.

    Subclasses provide gamma/dgamma/d2gamma; arc length s and its inverse come
    from a dense cumulative table.
    """

    def __init__(self):
        t = np.linspace(0.0, 2.0 * math.pi, _ARC_SAMPLES + 1)
        gx, gy = self.dgamma(t)
        speed = np.hypot(gx, gy)
        # cumulative trapezoid arc length over the uniform t grid
        seg = 0.5 * (speed[1:] + speed[:-1]) * (t[1] - t[0])
        s = np.concatenate([[0.0], np.cumsum(seg)])
        self._t_table = t
        self._s_table = s
        self.perimeter = float(s[-1])

    def t_of_s(self, s):
        s = np.mod(s, self.perimeter)
        return np.interp(s, self._s_table, self._t_table)

    def point_at_s(self, s):
        return self.gamma(self.t_of_s(s))

    def nearest_parameter(self, px, py, newton_iters=12):
        """Parameter of the closest curve point, via table scan + Newton."""
        px = np.asarray(px, dtype=float)
        py = np.asarray(py, dtype=float)
        t0 = self._initial_guess(px, py)
        t = t0
        for _ in range(newton_iters):
            gx, gy = self.gamma(t)
            dx, dy = self.dgamma(t)
            ddx, ddy = self.d2gamma(t)
            rx, ry = px - gx, py - gy
            grad = -(rx * dx + ry * dy)
            hess = dx * dx + dy * dy - (rx * ddx + ry * ddy)
            hess = np.where(np.abs(hess) < 1e-14, 1e-14, hess)
            t = t - grad / hess
        return t

    def _initial_guess(self, px, py):
        raise NotImplementedError

    def unsigned_distance(self, px, py):
        t = self.nearest_parameter(px, py)
        gx, gy = self.gamma(t)
        return np.hypot(np.asarray(px) - gx, np.asarray(py) - gy)

    def euclid_curvature(self, t):
        dx, dy = self.dgamma(t)
        ddx, ddy = self.d2gamma(t)
        return (dx * ddy - dy * ddx) / np.power(dx * dx + dy * dy, 1.5)

    def outward_normal(self, t):
        dx, dy = self.dgamma(t)
        speed = np.hypot(dx, dy)
        return dy / speed, -dx / speed

    def tangent(self, t):
        dx, dy = self.dgamma(t)
        speed = np.hypot(dx, dy)
        return dx / speed, dy / speed


class _Circle(_SmoothCurve):
    def __init__(self, cx, cy, rho):
        self.cx, self.cy, self.rho = cx, cy, rho
        super().__init__()

    def gamma(self, t):
        return self.cx + self.rho * np.cos(t), self.cy + self.rho * np.sin(t)

    def dgamma(self, t):
        return -self.rho * np.sin(t), self.rho * np.cos(t)

    def d2gamma(self, t):
        return -self.rho * np.cos(t), -self.rho * np.sin(t)

    def _initial_guess(self, px, py):
        return np.arctan2(py - self.cy, px - self.cx)

    def unsigned_distance(self, px, py):
        return np.abs(np.hypot(np.asarray(px) - self.cx, np.asarray(py) - self.cy) - self.rho)


class _Ellipse(_SmoothCurve):
    def __init__(self, cx, cy, a, b):
        self.cx, self.cy, self.a, self.b = cx, cy, a, b
        super().__init__()

    def gamma(self, t):
        return self.cx + self.a * np.cos(t), self.cy + self.b * np.sin(t)

    def dgamma(self, t):
        return -self.a * np.sin(t), self.b * np.cos(t)

    def d2gamma(self, t):
        return -self.a * np.cos(t), -self.b * np.sin(t)

    def _initial_guess(self, px, py):
        return np.arctan2(self.a * (np.asarray(py) - self.cy), self.b * (np.asarray(px) - self.cx))


class _RadialCurve(_SmoothCurve):
    """r = r(t) > 0 around the center, r given as a sympy expression in t."""

    def __init__(self, cx, cy, profile):
        self.cx, self.cy = cx, cy
        t = sp.symbols("t", real=True)
        r = sp.sympify(profile, locals={"t": t, "theta": t})
        self._r = sp.lambdify(t, r, "numpy")
        self._rp = sp.lambdify(t, sp.diff(r, t), "numpy")
        self._rpp = sp.lambdify(t, sp.diff(r, t, 2), "numpy")
        super().__init__()

    def _rv(self, f, t):
        return np.broadcast_to(np.asarray(f(t), dtype=float), np.shape(t)).copy() if np.ndim(t) else float(f(t))

    def gamma(self, t):
        r = self._rv(self._r, t)
        return self.cx + r * np.cos(t), self.cy + r * np.sin(t)

    def dgamma(self, t):
        r = self._rv(self._r, t)
        rp = self._rv(self._rp, t)
        return rp * np.cos(t) - r * np.sin(t), rp * np.sin(t) + r * np.cos(t)

    def d2gamma(self, t):
        r = self._rv(self._r, t)
        rp = self._rv(self._rp, t)
        rpp = self._rv(self._rpp, t)
        c, s = np.cos(t), np.sin(t)
        return (rpp - r) * c - 2 * rp * s, (rpp - r) * s + 2 * rp * c

    def _initial_guess(self, px, py):
        return np.arctan2(np.asarray(py) - self.cy, np.asarray(px) - self.cx)


@dataclass(frozen=True)
class DomainSpec:
    """Convex region in chart coordinates with boundary machinery.

    shape is one of disk | ellipse | rectangle | radial.  `params` holds the
    shape parameters (rho / a, b / profile).  The boundary of the rectangle is
    only piecewise C^2; it is kept as the documented negative example and is
    never marked uniformly convex.
    """

    shape: str
    params: dict
    center: tuple = (0.0, 0.0)
    _curve: object = field(default=None, repr=False, compare=False)

    # ---- basic predicates -------------------------------------------------

    def contains(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cx, cy = self.center
        if self.shape == "disk":
            return np.hypot(x - cx, y - cy) < self.params["rho"]
        if self.shape == "ellipse":
            return ((x - cx) / self.params["a"]) ** 2 + ((y - cy) / self.params["b"]) ** 2 < 1.0
        if self.shape == "rectangle":
            return (np.abs(x - cx) < self.params["a"] / 2.0) & (np.abs(y - cy) < self.params["b"] / 2.0)
        if self.shape == "radial":
            t = np.arctan2(y - cy, x - cx)
            r_at = self._curve._rv(self._curve._r, t)
            return np.hypot(x - cx, y - cy) < r_at
        raise GeometryError(f"unknown shape {self.shape!r}")

    def signed_distance(self, x, y):
        """Chart distance to the boundary, negative inside."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        cx, cy = self.center
        if self.shape == "disk":
            return np.hypot(x - cx, y - cy) - self.params["rho"]
        if self.shape == "rectangle":
            dx = np.abs(x - cx) - self.params["a"] / 2.0
            dy = np.abs(y - cy) - self.params["b"] / 2.0
            outside = np.hypot(np.maximum(dx, 0.0), np.maximum(dy, 0.0))
            inside = np.minimum(np.maximum(dx, dy), 0.0)
            return outside + inside
        dist = self._curve.unsigned_distance(x, y)
        sign = np.where(self.contains(x, y), -1.0, 1.0)
        return sign * dist

    # ---- boundary parametrization (arc length s) --------------------------

    @property
    def perimeter(self) -> float:
        if self.shape == "rectangle":
            return 2.0 * (self.params["a"] + self.params["b"])
        return self._curve.perimeter

    @property
    def is_smooth(self) -> bool:
        return self.shape != "rectangle"

    def _rect_locate(self, s):
        """Edge index and offset for the rectangle walk, ccw from (cx+a/2, cy-b/2)."""
        a, b = self.params["a"], self.params["b"]
        s = math.fmod(s, self.perimeter)
        if s < 0:
            s += self.perimeter
        corners = [0.0, b, b + a, 2 * b + a, self.perimeter]
        for edge in range(4):
            if s < corners[edge + 1]:
                return edge, s - corners[edge]
        return 3, s - corners[3]

    def rectangle_corner_params(self):
        a, b = self.params["a"], self.params["b"]
        return (0.0, b, b + a, 2 * b + a)

    def boundary_point(self, s):
        if self.shape == "rectangle":
            a, b = self.params["a"], self.params["b"]
            cx, cy = self.center
            edge, o = self._rect_locate(float(s))
            if edge == 0:
                return (cx + a / 2.0, cy - b / 2.0 + o)
            if edge == 1:
                return (cx + a / 2.0 - o, cy + b / 2.0)
            if edge == 2:
                return (cx - a / 2.0, cy + b / 2.0 - o)
            return (cx - a / 2.0 + o, cy - b / 2.0)
        t = self._curve.t_of_s(s)
        return self._curve.gamma(t)

    def boundary_frame(self, s):
        """(point, unit tangent, outward unit normal, euclidean curvature) at s.

        Rectangle corners (within 1e-9 of a corner parameter) raise, since the
        curvature is undefined there.
        """
        if self.shape == "rectangle":
            s = float(s)
            for c in self.rectangle_corner_params():
                w = math.fmod(s - c, self.perimeter)
                if min(abs(w), abs(abs(w) - self.perimeter)) < 1e-9:
                    raise GeometryError("boundary curvature undefined at rectangle corner")
            edge, o = self._rect_locate(s)
            tangents = [(0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (1.0, 0.0)]
            normals = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
            return self.boundary_point(s), tangents[edge], normals[edge], 0.0
        t = self._curve.t_of_s(s)
        p = self._curve.gamma(t)
        tx, ty = self._curve.tangent(t)
        nx, ny = self._curve.outward_normal(t)
        ke = self._curve.euclid_curvature(t)
        return (float(p[0]), float(p[1])), (float(tx), float(ty)), (float(nx), float(ny)), float(ke)

    def bbox(self):
        cx, cy = self.center
        if self.shape == "disk":
            r = self.params["rho"]
            return (cx - r, cy - r, cx + r, cy + r)
        if self.shape == "ellipse":
            a, b = self.params["a"], self.params["b"]
            return (cx - a, cy - b, cx + a, cy + b)
        if self.shape == "rectangle":
            a, b = self.params["a"], self.params["b"]
            return (cx - a / 2.0, cy - b / 2.0, cx + a / 2.0, cy + b / 2.0)
        t = np.linspace(0, 2 * math.pi, 2049)
        gx, gy = self._curve.gamma(t)
        return (float(gx.min()), float(gy.min()), float(gx.max()), float(gy.max()))

    @property
    def grid_scale(self) -> float:
        """Length scale that a grid "level" divides (radius / semi-axis / side)."""
        if self.shape == "disk":
            return self.params["rho"]
        if self.shape == "ellipse":
            return max(self.params["a"], self.params["b"])
        if self.shape == "rectangle":
            return max(self.params["a"], self.params["b"])
        t = np.linspace(0, 2 * math.pi, 2049)
        return float(np.max(self._curve._rv(self._curve._r, t)))


def disk(rho: float, center=(0.0, 0.0)) -> DomainSpec:
    curve = _Circle(center[0], center[1], float(rho))
    return DomainSpec("disk", {"rho": float(rho)}, tuple(center), curve)


def ellipse(a: float, b: float, center=(0.0, 0.0)) -> DomainSpec:
    curve = _Ellipse(center[0], center[1], float(a), float(b))
    return DomainSpec("ellipse", {"a": float(a), "b": float(b)}, tuple(center), curve)


def rectangle(a: float, b: float, center=(0.0, 0.0)) -> DomainSpec:
    return DomainSpec("rectangle", {"a": float(a), "b": float(b)}, tuple(center), None)


def radial(profile: str, center=(0.0, 0.0)) -> DomainSpec:
    curve = _RadialCurve(center[0], center[1], profile)
    return DomainSpec("radial", {"profile": profile}, tuple(center), curve)


def spherical_cap(theta0: float) -> DomainSpec:
    """Geodesic ball of polar radius theta0 on the unit sphere: a chart disk
    of radius tan(theta0/2) centered at the stereographic origin."""
    return disk(math.tan(theta0 / 2.0))


def hyperbolic_ball(radius: float) -> DomainSpec:
    """Geodesic ball of radius R in the hyperbolic plane: a chart disk of
    radius tanh(R/2) centered at the Poincare-disk origin."""
    return disk(math.tanh(radius / 2.0))


# ---------------------------------------------------------------------------
# Boundary geometry and convexity
# ---------------------------------------------------------------------------


def boundary_geometry(chart: MetricChart, domain: DomainSpec, s):
    """Boundary data at arc-length parameter s.

    Returns (point, g-unit outward normal in chart components, k_g) where k_g
    is the geodesic curvature of the boundary, i.e. the boundary second
    fundamental form of the 2-D domain.
    """
    p, _tan, n, ke = domain.boundary_frame(s)
    phx, phy = chart.dphi(p[0], p[1])
    dn_phi = phx * n[0] + phy * n[1]
    emphi = math.exp(-chart.phi(p[0], p[1]))
    kg = emphi * (ke + dn_phi)
    normal_g = (emphi * n[0], emphi * n[1])
    return p, normal_g, float(kg)


def convexity_check(chart: MetricChart, domain: DomainSpec, n_samples: int = 1024):
    """(uniformly_convex, min boundary second fundamental form).

    Smooth shapes: min of k_g over n_samples boundary points.  Rectangles are
    handled edge-wise with corners excluded and are never uniformly convex.
    """
    L = domain.perimeter
    if domain.shape == "rectangle":
        kgs = []
        corners = domain.rectangle_corner_params()
        edge_lens = [domain.params["b"], domain.params["a"], domain.params["b"], domain.params["a"]]
        for c, el in zip(corners, edge_lens):
            for f in np.linspace(0.05, 0.95, max(2, n_samples // 8)):
                _, _, kg = boundary_geometry(chart, domain, c + f * el)
                kgs.append(kg)
        return False, float(min(kgs))
    ss = np.linspace(0.0, L, n_samples, endpoint=False)
    kgs = [boundary_geometry(chart, domain, s)[2] for s in ss]
    mn = float(min(kgs))
    return mn > 0.0, mn


# ---------------------------------------------------------------------------
# Curvature budget
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureBudget:
    """Curvature bounds over a domain: kappa_lower <= K <= kappa_upper,
    pinch = kappa_upper - kappa_lower, and ricci_deriv_sup = sup |nabla Ric|_g."""

    kappa_lower: float
    kappa_upper: float
    pinch: float
    ricci_deriv_sup: float
    exact: bool = True
    refinement_delta: float = 0.0

    def as_dict(self):
        return {
            "kappa_lower": self.kappa_lower,
            "kappa_upper": self.kappa_upper,
            "pinch": self.pinch,
            "ricci_deriv_sup": self.ricci_deriv_sup,
            "exact": self.exact,
            "refinement_delta": self.refinement_delta,
        }


def curvature_budget(chart: MetricChart, domain: DomainSpec, n_samples: int = 96) -> CurvatureBudget:
    """Curvature extrema and sup |nabla Ric|_g over the closed domain.

    Space forms are exact.  Perturbed charts are sampled on an n x n grid of
    the bounding box restricted to the closed domain (plus boundary points),
    with one 4x local refinement pass around each extremal sample; the change
    from refinement is reported as `refinement_delta`.
    """
    if chart.is_space_form:
        k = chart.space_form_curvature
        return CurvatureBudget(k, k, 0.0, 0.0, exact=True)

    xmin, ymin, xmax, ymax = domain.bbox()
    xs = np.linspace(xmin, xmax, n_samples)
    ys = np.linspace(ymin, ymax, n_samples)
    X, Y = np.meshgrid(xs, ys)
    keep = domain.signed_distance(X, Y) <= 0.0
    bs = np.linspace(0.0, domain.perimeter, 4 * n_samples, endpoint=False)
    bp = np.array([domain.boundary_point(s) for s in bs])
    px = np.concatenate([X[keep], bp[:, 0]])
    py = np.concatenate([Y[keep], bp[:, 1]])
    if px.size == 0:
        raise GeometryError("empty sample set for curvature budget")

    K = np.asarray(chart.gauss_curvature(px, py))
    kmin0, kmax0 = float(K.min()), float(K.max())

    def refine(i0):
        hx = (xs[1] - xs[0]) if len(xs) > 1 else 0.0
        hy = (ys[1] - ys[0]) if len(ys) > 1 else 0.0
        cx, cy = px[i0], py[i0]
        rx = np.linspace(cx - hx, cx + hx, 9)
        ry = np.linspace(cy - hy, cy + hy, 9)
        RX, RY = np.meshgrid(rx, ry)
        m = domain.signed_distance(RX, RY) <= 0.0
        if not np.any(m):
            return np.array([chart.gauss_curvature(cx, cy)])
        return np.asarray(chart.gauss_curvature(RX[m], RY[m]))

    k_lo = min(kmin0, float(refine(int(np.argmin(K))).min()))
    k_hi = max(kmax0, float(refine(int(np.argmax(K))).max()))
    delta = max(kmin0 - k_lo, k_hi - kmax0)

    Kx, Ky = chart.grad_gauss_curvature(px, py)
    gradK_g = np.exp(-np.asarray(chart.phi(px, py))) * np.hypot(np.asarray(Kx), np.asarray(Ky))
    ricci = math.sqrt(2.0) * float(gradK_g.max())
    return CurvatureBudget(k_lo, k_hi, k_hi - k_lo, ricci, exact=False, refinement_delta=delta)
