"""Pipeline orchestration and report emission.

`run` executes solve -> derive -> constants -> checks for a validated config
and writes the artifact set:

    manifest.json   resolved config, package/library versions, fixtures hash,
                    timestamp (the only artifact carrying a timestamp)
    report.json     machine-readable results; byte-identical for identical
                    config + fixtures
    report.txt      aligned human-readable summary
    solution.json / solution.csv     eigenpair metadata + node table
    u.csv, v.csv, margin.csv         field tables for plotting
    sweep_margins.csv, boundary_probe.csv   per-check series
    *.svg           heatmaps (u, v, margin) with domain outline

Every number in report.json is collated from module outputs; nothing is
computed in this layer.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .barriers import preset_constants
from .calculus import solution_fields
from .config import ConfigError, chart_from_config, domain_from_config, grid_h, validate_config
from .eigensolver import convergence_study, second_eigenvalue, assemble_operator, principal_eigenpair, solution_to_files
from .geometry import convexity_check, curvature_budget
from .heatmap import render_heatmap
from .oracles import fixtures_path
from .verifier import (
    boundary_probe,
    check_barrier_criteria,
    check_barrier_inequality,
    check_gradient_bound,
    check_half_log_concavity,
    check_log_concavity,
    check_strict_region,
    continuity_sweep,
)

EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


@dataclass
class RunResult:
    exit_code: int
    report: dict
    out_dir: Path


def _write_json(path: Path, data: dict):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _field_csv(path: Path, grid, arr, mask):
    jj, ii = np.nonzero(mask & np.isfinite(arr))
    with open(path, "w") as fh:
        fh.write("x,y,value\n")
        for j, i in zip(jj, ii):
            fh.write(f"{float(grid.X[j, i])!r},{float(grid.Y[j, i])!r},{float(arr[j, i])!r}\n")
    return path


def _boundary_polyline(domain, n=256):
    ss = np.linspace(0.0, domain.perimeter, n, endpoint=False)
    return [domain.boundary_point(float(s)) for s in ss]


def _fixtures_hash():
    p = fixtures_path()
    if not p.exists():
        return None
    return hashlib.sha256(p.read_bytes()).hexdigest()


def solve_from_config(cfg: dict):
    """(solution, convergence-study-or-None) for a validated config."""
    chart = chart_from_config(cfg)
    domain = domain_from_config(cfg)
    g = cfg["grid"]
    if g.get("h"):
        op = assemble_operator(chart, domain, float(g["h"]))
        return principal_eigenpair(op), None
    level = int(g["level"])
    if g.get("richardson", True) and level >= 32:
        cs = convergence_study(chart, domain, [level // 4, level // 2, level],
                               keep_solutions=True)
        return cs.solutions[-1], cs
    op = assemble_operator(chart, domain, domain.grid_scale / level)
    return principal_eigenpair(op), None


def compute_constants(cfg: dict, sol, budget):
    """BarrierConstants per the config's constants section, or None."""
    c = cfg.get("constants", {})
    preset = c.get("preset")
    if preset is None and c.get("alpha") is None:
        return None
    if preset is None:
        preset = "manual"
    manual = {k: c[k] for k in ("alpha", "c", "d", "eps") if c.get(k) is not None}
    return preset_constants(preset, sol.lam_best, budget, sol=sol,
                            n=int(c.get("n") or 2), manual=manual or None)


def _run_checks(cfg, fields, budget, constants):
    tol_scale = float(cfg["tolerances"]["tol_scale"])
    touch = cfg["tolerances"]["touch_tol"]
    reports = []
    skipped = []
    for check in cfg["checks"]:
        if check in ("main-inequality", "barrier-criteria", "sweep") and constants is None:
            skipped.append({"check": check, "reason": "no constants configured"})
            continue
        if check == "log-concavity":
            reports.append(check_log_concavity(fields, tol_scale))
        elif check == "main-inequality":
            reports.append(check_barrier_inequality(fields, constants, tol_scale=tol_scale))
        elif check == "barrier-criteria":
            reports.append(check_barrier_criteria(fields, constants, touch_tol=touch,
                                                  tol_scale=tol_scale))
        elif check == "sweep":
            reports.append(continuity_sweep(fields, constants,
                                            steps=int(cfg["sweep"]["steps"]),
                                            tol_scale=tol_scale))
        elif check == "gradient-bound":
            reports.append(check_gradient_bound(fields, tol_scale))
        elif check == "boundary-probe":
            reports.append(boundary_probe(fields, samples=int(cfg["probe"]["samples"]),
                                          offsets=cfg["probe"]["offsets"],
                                          constants=constants, tol_scale=tol_scale))
        elif check == "strict-region":
            reports.append(check_strict_region(fields, budget, fields.sol.lam,
                                               tol_scale=tol_scale))
        elif check == "half-log-concavity":
            reports.append(check_half_log_concavity(fields))
    return reports, skipped


def _text_report(report: dict) -> str:
    lines = []
    add = lines.append
    add("logcave verification report")
    add("=" * 64)
    case = report["case"]
    add(f"chart:  {case['chart']['kind']}"
        + (f" (epsilon={case['chart']['epsilon']}, psi={case['chart']['psi']})"
           if case["chart"]["kind"] == "perturbed-sphere" else ""))
    add(f"domain: {case['domain']['shape']} {case['domain']['params']}")
    add(f"grid:   h = {case['h']:.6g} ({case['n_inside']} interior nodes, "
        f"{case['folded']} folded)")
    lam = report["lambda"]
    lam_r = lam["richardson"]
    add(f"lambda: {lam['grid']:.9g}"
        + (f"   richardson: {lam_r:.9g} (order {lam['observed_order']:.2f})" if lam_r else ""))
    b = report["budget"]
    add(f"budget: kappa in [{b['kappa_lower']:.6g}, {b['kappa_upper']:.6g}], "
        f"pinch {b['pinch']:.6g}, |nabla Ric| {b['ricci_deriv_sup']:.6g}")
    cv = report["convexity"]
    add(f"boundary: uniformly convex = {cv['uniformly_convex']}, min II = {cv['II_min']:.6g}")
    c = report["constants"]
    if c:
        add(f"constants [{c['provenance']}]: alpha={c['alpha']:.6g} c={c['c']:.6g} "
            f"d={c['d']:.6g} eps={c['eps']:.6g} "
            f"(binding: {c['binding']}, {'valid' if c['valid'] else 'HYPOTHESES UNVERIFIED'})")
        for hyp in c["failed_hypotheses"]:
            add(f"    ! {hyp}")
    if report.get("spectral_gap") is not None:
        add(f"spectral gap (informational): lambda2 - lambda1 = {report['spectral_gap']:.6g}")
    add("")
    add(f"{'check':<22}{'status':<15}{'worst margin':>14}{'tolerance':>12}  location")
    add("-" * 80)
    for ch in report["checks"]:
        loc = ch["worst_location"]
        loc_s = f"({loc[0]:.4g}, {loc[1]:.4g})" if loc else "-"
        add(f"{ch['name']:<22}{ch['status']:<15}{ch['worst_margin']:>14.5g}"
            f"{ch['tolerance']:>12.3g}  {loc_s}")
    for sk in report.get("skipped_checks", []):
        add(f"{sk['check']:<22}{'skipped':<15}  ({sk['reason']})")
    add("-" * 80)
    add(f"overall: {report['overall']}")
    return "\n".join(lines) + "\n"


def run(raw_cfg: dict, out_dir=None) -> RunResult:
    """Execute the configured pipeline and write all artifacts."""
    cfg = validate_config(raw_cfg)
    out = Path(out_dir or cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)

    sol, cs = solve_from_config(cfg)
    fields = solution_fields(sol)
    budget = curvature_budget(sol.chart, sol.domain)
    uniconv, ii_min = convexity_check(sol.chart, sol.domain)
    constants = compute_constants(cfg, sol, budget)
    reports, skipped = _run_checks(cfg, fields, budget, constants)

    gap = None
    if cfg["spectral_gap"]:
        op = assemble_operator(sol.chart, sol.domain, sol.grid.h)
        lam2 = second_eigenvalue(op)
        gap = (lam2 - sol.lam) if lam2 is not None else None

    overall = "fail" if any(r.status == "fail" for r in reports) else "pass"
    report = {
        "case": {
            "chart": {"kind": sol.chart.kind, "epsilon": sol.chart.epsilon,
                      "psi": sol.chart.psi, "valid": sol.chart.valid},
            "domain": {"shape": sol.domain.shape,
                       "params": {k: v for k, v in sol.domain.params.items()
                                  if isinstance(v, (int, float, str))},
                       "center": list(sol.domain.center)},
            "h": sol.grid.h,
            "n_inside": sol.grid.n_inside,
            "folded": sol.grid.folded,
        },
        "lambda": {
            "grid": sol.lam,
            "richardson": sol.lam_richardson,
            "observed_order": cs.observed_order if cs else None,
            "residual_inf": sol.residual,
            "iterations": sol.iterations,
            "levels": {"h": cs.hs, "lambda": cs.lams} if cs else None,
        },
        "budget": budget.as_dict(),
        "convexity": {"uniformly_convex": uniconv, "II_min": ii_min},
        "constants": constants.as_dict() if constants else None,
        "checks": [r.as_dict() for r in reports],
        "skipped_checks": skipped,
        "fields": {"dropped_nodes": fields.derived.n_dropped,
                   "band_excluded": fields.derived.band_excluded},
        "spectral_gap": gap,
        "overall": overall,
        "resolved_config": cfg,
    }

    manifest = {
        "config": cfg,
        "versions": {
            "logcave": __version__,
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "python": __import__("sys").version.split()[0],
        },
        "fixtures_sha256": _fixtures_hash(),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    _write_json(out / "manifest.json", manifest)
    _write_json(out / "report.json", report)
    (out / "report.txt").write_text(_text_report(report))

    solution_to_files(sol, out / "solution")
    outline = _boundary_polyline(sol.domain)
    grid = sol.grid
    field_arrays = {
        "u": (sol.u, grid.inside),
        "v": (fields.derived.v, fields.derived.safe),
    }
    if constants is not None and math.isfinite(constants.alpha):
        from .barriers import barrier_field

        b, _ = barrier_field(fields.derived, constants.alpha, constants.c, constants.d)
        field_arrays["margin"] = (fields.mu_max + b, fields.derived.safe)
    else:
        field_arrays["margin"] = (fields.mu_max, fields.derived.safe)
    for name, (arr, mask) in field_arrays.items():
        _field_csv(out / f"{name}.csv", grid, arr, mask)
    for name in cfg["heatmaps"]:
        palette = "coolwarm" if name == "margin" else "viridis"
        render_heatmap(out / f"{name}.csv", palette, out / f"{name}.svg",
                       outline=outline, title=f"{name} field")

    for r in reports:
        if r.name == "continuity-sweep" and r.series:
            with open(out / "sweep_margins.csv", "w") as fh:
                fh.write("t,worst_margin,status\n")
                for tv, wm, st in zip(r.series["t"], r.series["worst_margin"], r.series["status"]):
                    fh.write(f"{float(tv)!r},{float(wm)!r},{st}\n")
        if r.name == "boundary-probe" and r.series:
            with open(out / "boundary_probe.csv", "w") as fh:
                fh.write("s,II,grad_u0,dist,ratio,b_u,growth\n")
                for row in r.series["samples"]:
                    for o in row["offsets"]:
                        fh.write(f"{row['s']!r},{row['II']!r},{row['grad_u0']!r},"
                                 f"{o['dist']!r},{o['ratio']!r},"
                                 f"{o.get('b_u', '')!r},{o.get('growth', '')!r}\n")

    code = EXIT_PASS if overall == "pass" else EXIT_CHECK_FAILURE
    return RunResult(exit_code=code, report=report, out_dir=out)
