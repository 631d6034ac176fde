"""Randomized inequality suites, each run on at least 200 generated cases."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from augustin.augustin_mean import augustin_information, order_one_mean, solve_augustin_mean
from augustin.capacity_solvers import (
    cost_constrained_capacity,
    ehb_gap,
    product_al_capacity_check,
    rg_capacity,
)
from augustin.core_model import Channel, CostSpec, product_channel, product_prob, total_variation
from augustin.renyi_divergence import renyi_divergence

from conftest import ORDERS, orders, seeds

SLACK = 1e-9
CASES = settings(max_examples=200)
SUB_ONE = [a for a in ORDERS if a <= 1]


def sparse_prob(rng, n):
    """Dirichlet vector that sometimes has zero entries."""
    w = rng.dirichlet(np.full(n, rng.choice([0.3, 1.0, 3.0])))
    if rng.random() < 0.3:
        w[rng.random(n) < 0.3] = 0.0
        if w.sum() == 0:
            w[rng.integers(n)] = 1.0
        w /= w.sum()
    return w


def channel(rng, nx, ny):
    return Channel(np.array([sparse_prob(rng, ny) for _ in range(nx)]))


def mix(beta, a, b):
    """``beta a + (1 - beta) b``, with a zero weight dropping an infinite term."""
    return sum(t * v for t, v in ((beta, a), (1 - beta, b)) if t > 0)


def leq(lhs, rhs, slack=SLACK):
    return math.isinf(rhs) and rhs > 0 or lhs <= rhs + slack


class TestDivergenceBounds:
    @CASES
    @given(seeds, st.floats(0.05, 5.0), st.integers(2, 6))
    def test_pinsker_lower_bound(self, seed, alpha, n):
        rng = np.random.default_rng(seed)
        w, q = sparse_prob(rng, n), sparse_prob(rng, n)
        tv = total_variation(w, q)
        assert leq(min(alpha, 1.0) / 2 * tv**2, float(renyi_divergence(alpha, w, q)))

    @CASES
    @given(seeds, st.floats(0.02, 0.98), st.integers(2, 6))
    def test_total_variation_upper_bound(self, seed, alpha, n):
        # D_1/2 <= 2 ln(2 / (2 - TV)), extended to other orders below one by the skew symmetry
        rng = np.random.default_rng(seed)
        w, q = sparse_prob(rng, n), sparse_prob(rng, n)
        tv = total_variation(w, q)
        half = math.inf if tv >= 2 else 2 * math.log(2 / (2 - tv))
        bound = half * max(1.0, alpha / (1 - alpha))
        assert leq(float(renyi_divergence(alpha, w, q)), bound)

    @CASES
    @given(seeds, st.floats(0.05, 5.0), st.floats(0.05, 5.0), st.integers(2, 6))
    def test_monotone_in_order(self, seed, a, b, n):
        rng = np.random.default_rng(seed)
        w, q = sparse_prob(rng, n), sparse_prob(rng, n)
        lo, hi = sorted((a, b))
        assert leq(float(renyi_divergence(lo, w, q)), float(renyi_divergence(hi, w, q)))

    @CASES
    @given(seeds, orders, st.floats(0.0, 1.0), st.integers(2, 6))
    def test_convex_in_second_argument(self, seed, alpha, beta, n):
        rng = np.random.default_rng(seed)
        w, q0, q1 = (sparse_prob(rng, n) for _ in range(3))
        lhs = float(renyi_divergence(alpha, w, beta * q1 + (1 - beta) * q0))
        rhs = mix(beta, float(renyi_divergence(alpha, w, q1)), float(renyi_divergence(alpha, w, q0)))
        assert leq(lhs, rhs)

    @CASES
    @given(seeds, st.sampled_from(SUB_ONE), st.floats(0.0, 1.0), st.integers(2, 6))
    def test_jointly_convex_below_one(self, seed, alpha, beta, n):
        rng = np.random.default_rng(seed)
        w0, w1, q0, q1 = (sparse_prob(rng, n) for _ in range(4))
        lhs = float(renyi_divergence(alpha, beta * w1 + (1 - beta) * w0, beta * q1 + (1 - beta) * q0))
        rhs = mix(beta, float(renyi_divergence(alpha, w1, q1)), float(renyi_divergence(alpha, w0, q0)))
        assert leq(lhs, rhs)


class TestMeanBounds:
    @CASES
    @given(seeds, orders, st.integers(2, 5), st.integers(2, 5))
    def test_mean_bounds(self, seed, alpha, nx, ny):
        rng = np.random.default_rng(seed)
        W = channel(rng, nx, ny)
        p = sparse_prob(rng, nx)
        q = solve_augustin_mean(alpha, p, W).mean.weights
        q1 = order_one_mean(p, W).weights
        for x in np.flatnonzero(p > 0):
            assert leq(float(renyi_divergence(alpha, W.rows[x], q)), -math.log(p[x]))
            assert np.all(p[x] ** (1 / min(alpha, 1.0)) * W.rows[x] <= q + SLACK)
        supp = q1 > 0
        assert np.all(q[~supp] == 0)
        bound = abs(alpha - 1) / alpha * -math.log(p[p > 0].min())
        assert np.all(np.abs(np.log(q[supp] / q1[supp])) <= bound + SLACK)


class TestAdditivity:
    @CASES
    @given(seeds, orders, st.integers(2, 3), st.integers(2, 3), st.integers(2, 3), st.integers(2, 3))
    def test_information_additive(self, seed, alpha, a, b, c, d):
        rng = np.random.default_rng(seed)
        W1, W2 = channel(rng, a, b), channel(rng, c, d)
        p1, p2 = sparse_prob(rng, a), sparse_prob(rng, c)
        s1, s2 = solve_augustin_mean(alpha, p1, W1), solve_augustin_mean(alpha, p2, W2)
        joint = solve_augustin_mean(alpha, product_prob([p1, p2]), product_channel([W1, W2]))
        assert abs(joint.info - s1.info - s2.info) <= SLACK
        assert np.max(np.abs(joint.mean.weights - product_prob([s1.mean, s2.mean]).weights)) <= SLACK

    @CASES
    @given(seeds, orders, st.floats(0.0, 2.0), st.integers(2, 3), st.integers(2, 3))
    def test_al_capacity_additive(self, seed, alpha, lam, a, b):
        rng = np.random.default_rng(seed)
        parts = [(channel(rng, a, b), CostSpec(rng.uniform(0, 1, a))),
                 (channel(rng, b, a), CostSpec(rng.uniform(0, 1, b)))]
        assert product_al_capacity_check(alpha, parts, lam) <= SLACK


class TestCenterBounds:
    @CASES
    @given(seeds, orders, st.floats(0.0, 2.0), st.integers(2, 4), st.integers(2, 4))
    def test_multiplier_form(self, seed, alpha, lam, nx, ny):
        rng = np.random.default_rng(seed)
        W = channel(rng, nx, ny)
        c = CostSpec(rng.uniform(0, 1, nx))
        res = rg_capacity(alpha, W, lam, c)
        Q = sparse_prob(rng, ny)
        assert ehb_gap(alpha, W, Q, res.value, res.center, lam=lam, c=c) >= -SLACK

    @CASES
    @given(seeds, orders, st.floats(0.05, 0.95), st.integers(2, 4), st.integers(2, 4))
    def test_constraint_form(self, seed, alpha, t, nx, ny):
        rng = np.random.default_rng(seed)
        W = channel(rng, nx, ny)
        costs = rng.uniform(0, 1, nx)
        c = CostSpec(costs)
        rho = costs.min() + t * (costs.max() - costs.min())
        res = cost_constrained_capacity(alpha, W, c, rho, tol=1e-11)
        Q = sparse_prob(rng, ny)
        assert ehb_gap(alpha, W, Q, res.value, res.center, c=c, rho=rho) >= -SLACK

    @CASES
    @given(seeds, orders, st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.integers(2, 4), st.integers(2, 4))
    def test_center_continuity(self, seed, alpha, l1, l2, nx, ny):
        rng = np.random.default_rng(seed)
        W = channel(rng, nx, ny)
        c = CostSpec(rng.uniform(0, 1, nx))
        lo, hi = sorted((l1, l2))
        r1, r2 = rg_capacity(alpha, W, lo, c), rg_capacity(alpha, W, hi, c)
        assert leq(float(renyi_divergence(alpha, r2.center, r1.center)), r1.value - r2.value)


def test_unconstrained_information_bounded_by_capacity(rng):
    W = Channel(rng.dirichlet(np.ones(4), 3))
    cap = rg_capacity(2.0, W).value
    for _ in range(20):
        assert augustin_information(2.0, rng.dirichlet(np.ones(3)), W) <= cap + SLACK
