"""Metric differential quantities of a discrete eigenfunction.

Derivatives of the eigenfunction u are taken with second-order central
differences; quantities of v = log u and w = sqrt(u) are then assembled
through exact pointwise identities rather than by differencing the singular
log field (whose fourth derivative grows like dist^-4 and would poison the
band edge):

    grad v = grad u / u,      |grad w|_g^2 = |grad u|_g^2 / (4 u),
    Hess v = Hess u / u - (du (x) du) / u^2.

Metric quantities come from the conformal factor: |grad f|_g^2 =
e^{-2 phi} (f_x^2 + f_y^2), Lap_g f = e^{-2 phi} (f_xx + f_yy), and the
covariant Hessian carries the conformal Christoffel correction

    (Hess f)_xx = f_xx - phi_x f_x + phi_y f_y,
    (Hess f)_xy = f_xy - phi_y f_x - phi_x f_y,
    (Hess f)_yy = f_yy + phi_x f_x - phi_y f_y.

Eigenvalues of the Hessian relative to g are the eigenvalues of e^{-2 phi} H
with H the chart component matrix.  Fields are trusted on the safe band
(distance >= 2h from the boundary with a full 3x3 interior neighborhood); the
strip between boundary and safe band is excluded and probed separately by the
boundary machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigensolver import EigenSolution
from .geometry import MetricChart

_U_FLOOR = 1e-300


class SafeBandError(ValueError):
    """Field evaluation requested outside the trusted node band."""


def _dx(f, h):
    g = np.full_like(f, np.nan)
    g[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2.0 * h)
    return g


def _dy(f, h):
    g = np.full_like(f, np.nan)
    g[1:-1, :] = (f[2:, :] - f[:-2, :]) / (2.0 * h)
    return g


def _dxx(f, h):
    g = np.full_like(f, np.nan)
    g[:, 1:-1] = (f[:, 2:] - 2.0 * f[:, 1:-1] + f[:, :-2]) / (h * h)
    return g


def _dyy(f, h):
    g = np.full_like(f, np.nan)
    g[1:-1, :] = (f[2:, :] - 2.0 * f[1:-1, :] + f[:-2, :]) / (h * h)
    return g


def _dxy(f, h):
    g = np.full_like(f, np.nan)
    g[1:-1, 1:-1] = (f[2:, 2:] + f[:-2, :-2] - f[2:, :-2] - f[:-2, 2:]) / (4.0 * h * h)
    return g


@dataclass
class DerivedFields:
    """v = log u and gradient fields on the trusted band."""

    grid: object
    chart: MetricChart
    v: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    grad_u_sq: np.ndarray  # metric |grad u|_g^2
    grad_v_sq: np.ndarray
    grad_w_sq: np.ndarray
    phi: np.ndarray
    emtwophi: np.ndarray
    stencil_ok: np.ndarray
    safe: np.ndarray
    n_dropped: int
    band_excluded: int

    def require_safe(self, j: int, i: int):
        if not self.safe[j, i]:
            raise SafeBandError(f"node ({j}, {i}) lies outside the safe band")


def derived_fields(sol: EigenSolution, chart: MetricChart | None = None) -> DerivedFields:
    """Gradient fields of u and v = log u on the safe band."""
    chart = chart or sol.chart
    grid = sol.grid
    h = grid.h
    u = sol.u
    inside = grid.inside

    dropped = inside & (u < _U_FLOOR)
    usable = inside & ~dropped
    usafe = np.where(usable, u, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(usable, np.log(usafe), np.nan)

    phi = np.asarray(chart.phi(grid.X, grid.Y), dtype=float)
    emtwophi = np.exp(-2.0 * phi)

    ux, uy = _dx(u, h), _dy(u, h)
    vx = np.where(usable, ux / usafe, np.nan)
    vy = np.where(usable, uy / usafe, np.nan)
    grad_u_sq = emtwophi * (ux * ux + uy * uy)
    grad_v_sq = np.where(usable, grad_u_sq / (usafe * usafe), np.nan)
    grad_w_sq = np.where(usable, grad_u_sq / (4.0 * usafe), np.nan)

    stencil_ok = grid.stencil_ok_mask() & usable
    safe = grid.safe_band_mask() & usable
    band_excluded = int(np.count_nonzero(inside & ~safe))
    return DerivedFields(
        grid=grid, chart=chart, v=v, ux=ux, uy=uy, vx=vx, vy=vy,
        grad_u_sq=grad_u_sq, grad_v_sq=grad_v_sq, grad_w_sq=grad_w_sq,
        phi=phi, emtwophi=emtwophi, stencil_ok=stencil_ok, safe=safe,
        n_dropped=int(np.count_nonzero(dropped)), band_excluded=band_excluded,
    )


@dataclass
class HessianField:
    """Chart components of a covariant Hessian plus the e^{-2 phi} factor."""

    hxx: np.ndarray
    hxy: np.ndarray
    hyy: np.ndarray
    emtwophi: np.ndarray
    valid: np.ndarray


def _christoffel_hessian(fx, fy, fxx, fxy, fyy, chart, grid):
    phx, phy = chart.dphi(grid.X, grid.Y)
    phx = np.asarray(phx, dtype=float)
    phy = np.asarray(phy, dtype=float)
    hxx = fxx - phx * fx + phy * fy
    hxy = fxy - phy * fx - phx * fy
    hyy = fyy + phx * fx - phy * fy
    return hxx, hxy, hyy


def hessian_g(f: np.ndarray, chart: MetricChart, grid) -> HessianField:
    """Covariant Hessian of a node field by direct central differences."""
    h = grid.h
    fx, fy = _dx(f, h), _dy(f, h)
    hxx, hxy, hyy = _christoffel_hessian(fx, fy, _dxx(f, h), _dxy(f, h), _dyy(f, h), chart, grid)
    emtwophi = np.exp(-2.0 * np.asarray(chart.phi(grid.X, grid.Y), dtype=float))
    valid = np.isfinite(hxx) & np.isfinite(hxy) & np.isfinite(hyy)
    return HessianField(hxx=hxx, hxy=hxy, hyy=hyy, emtwophi=emtwophi, valid=valid)


def hessian_of_log(sol: EigenSolution, derived: DerivedFields) -> HessianField:
    """Covariant Hessian of v = log u assembled from u-differences through
    Hess v = Hess u / u - (du (x) du) / u^2 (stable near the boundary)."""
    grid = sol.grid
    h = grid.h
    u = sol.u
    chart = derived.chart
    huxx, huxy, huyy = _christoffel_hessian(
        derived.ux, derived.uy, _dxx(u, h), _dxy(u, h), _dyy(u, h), chart, grid
    )
    usable = np.isfinite(derived.v)
    usafe = np.where(usable, u, 1.0)
    hxx = np.where(usable, huxx / usafe - derived.vx * derived.vx, np.nan)
    hxy = np.where(usable, huxy / usafe - derived.vx * derived.vy, np.nan)
    hyy = np.where(usable, huyy / usafe - derived.vy * derived.vy, np.nan)
    valid = np.isfinite(hxx) & np.isfinite(hxy) & np.isfinite(hyy)
    return HessianField(hxx=hxx, hxy=hxy, hyy=hyy, emtwophi=derived.emtwophi, valid=valid)


def laplacian_g(f: np.ndarray, chart: MetricChart, grid) -> np.ndarray:
    """Laplace-Beltrami of a node field: e^{-2 phi} times the 5-point stencil."""
    emtwophi = np.exp(-2.0 * np.asarray(chart.phi(grid.X, grid.Y), dtype=float))
    return emtwophi * (_dxx(f, grid.h) + _dyy(f, grid.h))


_ISO_TOL = 1e-13


def worst_direction(hess_node, b: float, emtwophi_node: float, phi_node: float = None):
    """Largest metric Hessian eigenvalue plus b, and its g-unit direction.

    hess_node is the chart component triple (hxx, hxy, hyy).  Returns
    (mu_max, (Xx, Xy), isotropic); for an isotropic Hessian any direction
    maximizes, the first chart axis is returned with the flag set.
    """
    hxx, hxy, hyy = hess_node
    sxx, sxy, syy = emtwophi_node * hxx, emtwophi_node * hxy, emtwophi_node * hyy
    mean = 0.5 * (sxx + syy)
    delta = 0.5 * (sxx - syy)
    disc = float(np.hypot(delta, sxy))
    mu = mean + disc + b
    scale = abs(sxx) + abs(syy) + 1.0
    iso = disc <= _ISO_TOL * scale
    if iso:
        vx, vy = 1.0, 0.0
    elif abs(sxy) > _ISO_TOL * scale:
        vx, vy = sxy, disc - delta
    elif delta >= 0.0:
        vx, vy = 1.0, 0.0
    else:
        vx, vy = 0.0, 1.0
    nrm = float(np.hypot(vx, vy))
    vx, vy = vx / nrm, vy / nrm
    if phi_node is None:
        phi_node = -0.5 * np.log(emtwophi_node)
    s = float(np.exp(-phi_node))
    return float(mu), (vx * s, vy * s), bool(iso)


def worst_direction_field(hess: HessianField, b=0.0):
    """Vectorized worst_direction over the grid; directions are g-unit chart
    components.  Returns (mu_max, dir_x, dir_y, isotropic)."""
    sxx = hess.emtwophi * hess.hxx
    sxy = hess.emtwophi * hess.hxy
    syy = hess.emtwophi * hess.hyy
    mean = 0.5 * (sxx + syy)
    delta = 0.5 * (sxx - syy)
    disc = np.hypot(delta, sxy)
    mu = mean + disc + b
    scale = np.abs(sxx) + np.abs(syy) + 1.0
    iso = disc <= _ISO_TOL * scale
    vx = np.where(iso, 1.0, np.where(np.abs(sxy) > _ISO_TOL * scale, sxy, np.where(delta >= 0, 1.0, 0.0)))
    vy = np.where(iso, 0.0, np.where(np.abs(sxy) > _ISO_TOL * scale, disc - delta, np.where(delta >= 0, 0.0, 1.0)))
    nrm = np.hypot(vx, vy)
    nrm = np.where(nrm == 0.0, 1.0, nrm)
    gscale = np.sqrt(hess.emtwophi)
    return mu, vx / nrm * gscale, vy / nrm * gscale, iso


def min_eigenvalue_field(hess: HessianField):
    sxx = hess.emtwophi * hess.hxx
    sxy = hess.emtwophi * hess.hxy
    syy = hess.emtwophi * hess.hyy
    return 0.5 * (sxx + syy) - np.hypot(0.5 * (sxx - syy), sxy)


@dataclass
class SolutionFields:
    """Bundle of the derived fields a verification pass consumes."""

    sol: EigenSolution
    derived: DerivedFields
    hess_v: HessianField
    mu_max: np.ndarray  # top eigenvalue of e^{-2 phi} Hess(v), no barrier
    mu_min: np.ndarray
    dir_x: np.ndarray
    dir_y: np.ndarray
    isotropic: np.ndarray


def solution_fields(sol: EigenSolution) -> SolutionFields:
    der = derived_fields(sol)
    hv = hessian_of_log(sol, der)
    mu, dx_, dy_, iso = worst_direction_field(hv)
    return SolutionFields(sol=sol, derived=der, hess_v=hv, mu_max=mu,
                          mu_min=min_eigenvalue_field(hv), dir_x=dx_, dir_y=dy_, isotropic=iso)
