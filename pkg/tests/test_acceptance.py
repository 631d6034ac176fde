"""Acceptance criteria, one test per criterion at its stated tolerance and time budget.

A summary line per criterion is printed at the end of the pytest run.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.optimize import minimize

from augustin.augustin_mean import augustin_info_order_derivative, augustin_information, augustin_operator, solve_augustin_mean
from augustin.capacity_solvers import (
    al_capacity,
    brute_force_capacity,
    cost_constrained_capacities,
    rg_capacity,
)
from augustin.core_model import CostSpec, Order, total_variation
from augustin.gaussian_analytic import (
    center_variance_residual,
    gaussian_bridge,
    parallel_waterfill,
    scalar_capacity,
    scalar_center_variance,
)
from augustin.pathological_examples import build_affine_example, build_nonusc_example, duality_gap_certificate
from augustin.renyi_divergence import (
    conditional_divergence,
    divergence_derivative_in_order,
    divergence_second_derivative_in_order,
    renyi_divergence,
)

from conftest import ORDERS, random_channel, random_prob

LN2, LN32 = math.log(2), math.log(1.5)


class Budget:
    """Context manager asserting a wall-clock limit in seconds."""

    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.2f} s, budget {self.seconds} s"


def test_criterion_1_gaussian_closed_forms():
    grid = [0.5, 0.75, 1.0, 1.5, 2.0]
    with Budget(1.0):
        for alpha, rho in itertools.product(grid, grid):
            theta = scalar_center_variance(alpha, 1.0, rho)
            assert abs(center_variance_residual(alpha, 1.0, rho, theta)) <= 1e-10
            assert theta > 1.0
            if alpha == 1.0:
                assert abs(scalar_capacity(alpha, 1.0, rho) - 0.5 * math.log1p(rho)) <= 1e-12
                assert abs(theta - (1.0 + rho)) <= 1e-12


def test_criterion_2_pathological_capacities():
    with Budget(10.0):
        W, c = build_affine_example()
        rhos = [0.5, 1.5, 2.5]
        for rho, r in zip(rhos, cost_constrained_capacities(1, W, c, rhos, tol=1e-7, inner_tol=1e-9)):
            assert abs(r.value - (rho + 1)) <= 1e-6
        for lam in (1.0, 2.0):
            assert abs(rg_capacity(1, W, lam, c, tol=1e-9).value - 1) <= 1e-6
        cert = duality_gap_certificate(1, *build_nonusc_example(), 0.0)
        assert abs(cert.primal - LN32) <= 1e-5
        assert abs(cert.gap - (LN2 - LN32)) <= 1e-5


def test_criterion_3_fixed_point_certification():
    rng = np.random.default_rng(3)
    alphas = [0.25, 0.5, 0.9, 1.5, 3.0]
    with Budget(30.0):
        for k in range(100):
            alpha = alphas[k % len(alphas)]
            nx, ny = rng.integers(2, 9, size=2)
            W, P = random_channel(rng, nx, ny), random_prob(rng, nx)
            sol = solve_augustin_mean(alpha, P, W)
            assert sol.converged
            assert total_variation(augustin_operator(alpha, P, W, sol.mean), sol.mean) <= 1e-10
            for _ in range(10):
                q = random_prob(rng, ny)
                gap = float(conditional_divergence(alpha, W, q, P)) - sol.info
                hi = float(renyi_divergence(max(alpha, 1.0), sol.mean, q))
                lo = float(renyi_divergence(min(alpha, 1.0), sol.mean, q))
                assert hi - gap >= -1e-9
                assert gap - lo >= -1e-9


def _grid_minimum(alpha, P, W):
    """Minimize the conditional divergence over q on a simplex grid, then refine by Nelder-Mead."""
    ny = W.n_outputs
    n = 200 if ny == 3 else 2000
    pts = [np.array(v) / n for v in itertools.product(range(1, n), repeat=ny - 1) if sum(v) < n]
    grid = [np.append(v, 1 - v.sum()) for v in pts]
    vals = [float(conditional_divergence(alpha, W, q, P)) for q in grid]
    start = grid[int(np.argmin(vals))]

    def f(z):
        q = np.exp(np.append(z, 0.0))
        return float(conditional_divergence(alpha, W, q / q.sum(), P))

    z0 = np.log(start[:-1] / start[-1])
    res = minimize(f, z0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
    return min(min(vals), res.fun)


def test_criterion_4_oracle_equivalence():
    rng = np.random.default_rng(4)
    with Budget(60.0):
        for k in range(20):
            alpha = ORDERS[k % len(ORDERS)]
            nx, ny = int(rng.integers(2, 6)), int(rng.integers(2, 4))
            W, P = random_channel(rng, nx, ny), random_prob(rng, nx)
            assert abs(augustin_information(alpha, P, W) - _grid_minimum(alpha, P, W)) <= 1e-6
        for k in range(20):
            alpha = ORDERS[k % len(ORDERS)]
            nx, ny = int(rng.integers(2, 4)), int(rng.integers(2, 6))
            W = random_channel(rng, nx, ny)
            assert abs(rg_capacity(alpha, W).value - brute_force_capacity(alpha, W)) <= 1e-4


def test_criterion_5_dual_path_equality():
    rng = np.random.default_rng(5)
    for alpha in (0.5, 2.0):
        for _ in range(10):
            W = random_channel(rng, 3, 3)
            c = CostSpec(rng.random(3))
            r = al_capacity(alpha, W, float(rng.uniform(0, 1)), c, cross_check=True)
            assert r.diagnostics["dual_path_gap"] <= 1e-6


# five-point central stencils; the three-point ones lose too much to rounding at 1e-5 relative
def _fd(f, a, h):
    return (f(a - 2 * h) - 8 * f(a - h) + 8 * f(a + h) - f(a + 2 * h)) / (12 * h)


def _fd2(f, a, h):
    return (-f(a - 2 * h) + 16 * f(a - h) - 30 * f(a) + 16 * f(a + h) - f(a + 2 * h)) / (12 * h * h)


def test_criterion_6_order_derivatives():
    rng = np.random.default_rng(6)
    for k in range(50):
        alpha = float(rng.choice(ORDERS)) if k % 2 else float(rng.uniform(0.2, 3.0))
        w, q = random_prob(rng, 4), random_prob(rng, 4)
        d = lambda a: float(renyi_divergence(Order(a), w, q))  # noqa: E731
        assert divergence_derivative_in_order(alpha, w, q) == pytest.approx(_fd(d, alpha, 1e-3), rel=1e-5)
        assert divergence_second_derivative_in_order(alpha, w, q) == pytest.approx(_fd2(d, alpha, 1e-3), rel=1e-5)
        W, P = random_channel(rng, 3, 4), random_prob(rng, 3)
        i = lambda a: augustin_information(Order(a), P, W, tol=1e-14)  # noqa: E731
        assert augustin_info_order_derivative(alpha, P, W) == pytest.approx(_fd(i, alpha, 1e-3), rel=1e-5)


def test_criterion_7_property_suites():
    # the suites run in test_properties.py and count toward this criterion; here their size is checked
    import test_properties as tp

    suites = [
        tp.TestDivergenceBounds.test_pinsker_lower_bound,
        tp.TestDivergenceBounds.test_total_variation_upper_bound,
        tp.TestDivergenceBounds.test_monotone_in_order,
        tp.TestDivergenceBounds.test_convex_in_second_argument,
        tp.TestDivergenceBounds.test_jointly_convex_below_one,
        tp.TestMeanBounds.test_mean_bounds,
        tp.TestAdditivity.test_information_additive,
        tp.TestAdditivity.test_al_capacity_additive,
        tp.TestCenterBounds.test_multiplier_form,
        tp.TestCenterBounds.test_constraint_form,
        tp.TestCenterBounds.test_center_continuity,
    ]
    assert tp.SLACK <= 1e-9
    for fn in suites:
        assert fn.is_hypothesis_test
        assert fn._hypothesis_internal_use_settings.max_examples >= 200


def test_criterion_8_gaussian_bridge():
    with Budget(120.0):
        for alpha in (0.5, 1.0, 2.0):
            rep = gaussian_bridge(alpha, sigma2=1.0, rho=1.0, cells=1600, half_range=8.0, n_inputs=41,
                                  input_half_range=4.0)
            assert rep.gap <= 1e-3
        r = parallel_waterfill(1, [1.0, 4.0], 1.0)
        assert np.max(np.abs(r.allocations - [1.0, 0.0])) <= 1e-9
        assert abs(r.capacity - 0.5 * math.log(2)) <= 1e-9
