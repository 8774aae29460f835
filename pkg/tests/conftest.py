"""Shared suite builders for the acceptance tests.

Two seeded synthetic suites anchor the empirical criteria. Both are built
fresh per call (cheap) while the expensive long-run reference optima are
cached per seed for the whole session.
"""

import numpy as np
import pytest

from cnsopt import (
    ABSOLUTE,
    CLASSIFICATION,
    HINGE,
    REGRESSION,
    CompositeProblem,
    Regularizer,
    SyntheticSpec,
    make_synthetic,
    reference_objective,
)

SC_NU1, SC_NU2 = 0.002, 0.08
REG_NU1 = 0.005


def strongly_convex_spec(seed):
    """Hinge + elastic net classification: two well-separated clusters, mild
    margin noise, unit-norm rows."""
    return SyntheticSpec(n=1000, d=50, task=CLASSIFICATION, sparsity=0.2, noise=0.1,
                         separation=1.5, seed=seed)


def strongly_convex_problem(seed):
    data, _ = make_synthetic(strongly_convex_spec(seed))
    return CompositeProblem(data, HINGE, Regularizer(nu1=SC_NU1, nu2=SC_NU2))


def general_convex_spec(seed):
    """Absolute loss + pure l1 regression with Laplace noise."""
    return SyntheticSpec(n=600, d=50, task=REGRESSION, sparsity=0.2, noise=0.1,
                         seed=seed)


def general_convex_problem(seed):
    data, _ = make_synthetic(general_convex_spec(seed))
    return CompositeProblem(data, ABSOLUTE, Regularizer(nu1=REG_NU1))


@pytest.fixture(scope="session")
def sc_reference():
    cache = {}

    def get(seed):
        if seed not in cache:
            cache[seed] = reference_objective(
                strongly_convex_problem(seed), gamma=1e-7, iterations=60_000
            )
        return cache[seed]

    return get


@pytest.fixture(scope="session")
def gc_reference():
    cache = {}

    def get(seed):
        if seed not in cache:
            cache[seed] = reference_objective(
                general_convex_problem(seed), gamma=1e-7, iterations=80_000, gamma1=0.1
            )
        return cache[seed]

    return get


def loglog_stage_slope(reports, p_star, s_lo=3, s_hi=8):
    """Least-squares slope of log10 gap vs log10 cumulative iterations over
    the given stage window."""
    cum = np.cumsum([r.budget for r in reports])
    pts = [
        (np.log10(cum[r.s - 1]), np.log10(max(r.original_after - p_star, 1e-16)))
        for r in reports
        if s_lo <= r.s <= s_hi
    ]
    xs, ys = zip(*pts)
    return float(np.polyfit(xs, ys, 1)[0])
