"""Shared fixtures: charts, domains, and cached eigensolves.

The heavy grid solves are session-scoped and shared across test modules so
the full suite stays inside the desk-scale runtime budget.
"""

import math

import numpy as np
import pytest

import logcave as lc
from logcave.calculus import solution_fields
from logcave.eigensolver import convergence_study
from logcave.oracles import analytic_solution, load_fixtures

PI = math.pi


@pytest.fixture(scope="session")
def fx():
    return load_fixtures()


@pytest.fixture(scope="session")
def charts():
    return {
        "euclidean": lc.make_chart("euclidean"),
        "sphere": lc.make_chart("sphere-stereographic"),
        "hyperbolic": lc.make_chart("hyperbolic-poincare"),
        "perturbed": lc.make_chart("perturbed-sphere", epsilon=0.01, psi="x"),
    }


def square_domain():
    return lc.rectangle(PI, PI, center=(PI / 2, PI / 2))


_CASES = {
    "rectangle": ("euclidean", square_domain),
    "disk": ("euclidean", lambda: lc.disk(1.0)),
    "ellipse": ("euclidean", lambda: lc.ellipse(1.2, 0.8)),
    "cap": ("sphere", lambda: lc.spherical_cap(PI / 3)),
    "hemisphere": ("sphere", lambda: lc.spherical_cap(PI / 2)),
    "ball": ("hyperbolic", lambda: lc.hyperbolic_ball(1.0)),
    "perturbed-cap": ("perturbed", lambda: lc.spherical_cap(PI / 3)),
}


class CaseCache:
    """Lazily solved geometries, keyed by (case, level); studies by case."""

    def __init__(self, charts):
        self.charts = charts
        self._sols = {}
        self._studies = {}
        self._fields = {}

    def chart_domain(self, case):
        ck, dom = _CASES[case]
        return self.charts[ck], dom()

    def solution(self, case, level):
        key = (case, level)
        if key not in self._sols:
            chart, dom = self.chart_domain(case)
            self._sols[key] = lc.solve_geometry(chart, dom, level=level)
        return self._sols[key]

    def study(self, case, levels=(32, 64, 128)):
        key = (case, tuple(levels))
        if key not in self._studies:
            chart, dom = self.chart_domain(case)
            cs = convergence_study(chart, dom, list(levels), keep_solutions=True)
            self._studies[key] = cs
            self._sols[(case, levels[-1])] = cs.solutions[-1]
        return self._studies[key]

    def fields(self, case, level):
        key = (case, level)
        if key not in self._fields:
            self._fields[key] = solution_fields(self.solution(case, level))
        return self._fields[key]


@pytest.fixture(scope="session")
def cases(charts):
    return CaseCache(charts)


@pytest.fixture(scope="session")
def oracles_by_kind():
    return {
        "rectangle": analytic_solution("rectangle", {"a": PI, "b": PI}),
        "disk": analytic_solution("disk", {"rho": 1.0}),
        "cap": analytic_solution("spherical-cap", {"theta0": PI / 3}),
        "hemisphere": analytic_solution("spherical-cap", {"theta0": PI / 2}),
        "ball": analytic_solution("hyperbolic-ball", {"radius": 1.0}),
    }


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
