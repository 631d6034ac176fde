import math

import numpy as np
import pytest
from scipy.optimize import minimize

from augustin.augustin_mean import (
    AugustinSolution,
    ConvergenceError,
    al_information,
    augustin_info_order_derivative,
    augustin_information,
    augustin_operator,
    csiszar_decomposition_residual,
    order_one_mean,
    poltyrev_transform,
    power_mean_measure,
    renyi_information,
    renyi_mean,
    rg_information,
    shayevitz_transform,
    solve_augustin_mean,
)
from augustin.core_model import Channel, CostSpec, Order, Prob, ValidationError, bsc, identity_channel, shannon_entropy, total_variation
from augustin.renyi_divergence import InfiniteDivergenceError, conditional_divergence, renyi_divergence

from conftest import ORDERS, random_channel, random_prob

BSC_MI = math.log(2) - (0.1 * math.log(10) + 0.9 * math.log(10 / 9))


def _grid_minimum(alpha, P, W):
    """Minimize the conditional divergence over q on a simplex grid, then refine."""
    ny = W.n_outputs
    assert ny == 3
    n = 200
    best, arg = math.inf, None
    for i in range(1, n):
        for j in range(1, n - i):
            q = np.array([i, j, n - i - j]) / n
            v = conditional_divergence(alpha, W, q, P)
            if v < best:
                best, arg = v, q

    def f(z):
        q = np.exp(z - z.max())
        return float(conditional_divergence(alpha, W, q / q.sum(), P))

    res = minimize(f, np.log(arg), method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
    return min(best, res.fun)


class TestMeans:
    def test_order_one_point_mass(self):
        W = bsc(0.2)
        assert np.allclose(order_one_mean(Prob([0.0, 1.0]), W).weights, W.rows[1])

    def test_order_one_uniform_bsc(self):
        assert np.allclose(order_one_mean(Prob.uniform(2), bsc(0.1)).weights, [0.5, 0.5])

    def test_order_one_identity(self):
        assert np.allclose(order_one_mean(Prob([0.3, 0.7]), identity_channel(2)).weights, [0.3, 0.7])

    def test_order_one_mismatch(self):
        with pytest.raises(ValidationError):
            order_one_mean(Prob.uniform(3), bsc(0.1))

    def test_power_mean_order_one(self, rng):
        W, P = random_channel(rng, 3, 4), random_prob(rng, 3)
        assert np.allclose(power_mean_measure(1, P, W).weights, order_one_mean(P, W).weights, atol=1e-15)

    @pytest.mark.parametrize("alpha", ORDERS)
    def test_power_mean_single_row(self, alpha):
        W = Channel([[0.2, 0.3, 0.5]])
        assert np.allclose(power_mean_measure(alpha, Prob([1.0]), W).weights, [0.2, 0.3, 0.5], atol=1e-14)

    def test_power_mean_hand_value(self):
        mu = power_mean_measure(2, Prob.uniform(2), identity_channel(2))
        assert np.allclose(mu.weights, [math.sqrt(0.5)] * 2, atol=1e-15)
        assert mu.mass == pytest.approx(math.sqrt(2), abs=1e-15)
        assert np.allclose(renyi_mean(2, Prob.uniform(2), identity_channel(2)).weights, [0.5, 0.5])

    def test_power_mean_needs_costs(self):
        with pytest.raises(ValidationError):
            power_mean_measure(2, Prob.uniform(2), bsc(0.1), lam=0.5)

    def test_renyi_mean_symmetric(self):
        assert np.allclose(renyi_mean(3, Prob.uniform(2), bsc(0.3)).weights, [0.5, 0.5])

    def test_renyi_mean_order_one(self, rng):
        W, P = random_channel(rng, 3, 3), random_prob(rng, 3)
        assert np.allclose(renyi_mean(1, P, W).weights, order_one_mean(P, W).weights)


class TestOperator:
    def test_order_one(self, rng):
        W, P = random_channel(rng, 3, 4), random_prob(rng, 3)
        out = augustin_operator(1, P, W, random_prob(rng, 4))
        assert np.allclose(out.weights, order_one_mean(P, W).weights)

    def test_symmetric_fixed_point(self):
        out = augustin_operator(2, Prob.uniform(2), bsc(0.1), Prob.uniform(2))
        assert np.allclose(out.weights, [0.5, 0.5], atol=1e-15)

    def test_outside_domain(self):
        with pytest.raises(InfiniteDivergenceError):
            augustin_operator(2, Prob.uniform(2), identity_channel(2), Prob([1.0, 0.0]))


class TestSolver:
    def test_order_one_closed_form(self):
        sol = solve_augustin_mean(1, Prob.uniform(2), bsc(0.1))
        assert isinstance(sol, AugustinSolution)
        assert sol.iterations == 0 and sol.converged
        assert sol.info == pytest.approx(BSC_MI, abs=1e-15)

    @pytest.mark.parametrize("alpha", ORDERS)
    @pytest.mark.parametrize("delta", [0.05, 0.3])
    def test_symmetric_mean(self, alpha, delta):
        sol = solve_augustin_mean(alpha, Prob.uniform(2), bsc(delta))
        assert np.allclose(sol.mean.weights, [0.5, 0.5], atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9, 1.5, 2.0, 5.0])
    def test_fixed_point_and_sandwich(self, rng, alpha):
        for _ in range(5):
            W, P = random_channel(rng, 4, 5), random_prob(rng, 4)
            sol = solve_augustin_mean(alpha, P, W)
            assert sol.converged and sol.residual <= 1e-12
            fp = total_variation(augustin_operator(alpha, P, W, sol.mean), sol.mean)
            assert fp <= 1e-11
            assert 0 <= sol.info <= shannon_entropy(P) + 1e-12
            for _ in range(5):
                q = random_prob(rng, 5)
                gap = conditional_divergence(alpha, W, q, P) - sol.info
                hi = renyi_divergence(max(alpha, 1.0), sol.mean, q)
                lo = renyi_divergence(min(alpha, 1.0), sol.mean, q)
                assert hi + 1e-9 >= gap >= lo - 1e-9

    def test_support_matches_order_one_mean(self):
        W = Channel([[0.5, 0.5, 0.0], [0.2, 0.8, 0.0]])
        sol = solve_augustin_mean(0.5, Prob([0.4, 0.6]), W)
        assert sol.mean.weights[2] == 0

    def test_grid_oracle(self):
        rng = np.random.default_rng(11)
        W = random_channel(rng, 3, 3)
        P = random_prob(rng, 3)
        oracle = _grid_minimum(0.5, P, W)
        assert solve_augustin_mean(0.5, P, W).info == pytest.approx(oracle, abs=1e-8)

    def test_degenerate_input_dropped(self):
        W = bsc(0.2)
        sol = solve_augustin_mean(2, Prob([1 - 1e-17, 1e-17]), W)
        assert sol.converged and sol.info == pytest.approx(0, abs=1e-12)

    def test_nonconvergence_reported(self, rng):
        W, P = random_channel(rng, 4, 5), random_prob(rng, 4)
        sol = solve_augustin_mean(3.0, P, W, tol=1e-300, max_iter=3)
        assert not sol.converged
        with pytest.raises(ConvergenceError):
            augustin_information(3.0, P, W, tol=1e-300, max_iter=3)


class TestInformation:
    @pytest.mark.parametrize("p", [[0.5, 0.5, 0.0], [0.2, 0.3, 0.5]])
    def test_identity_order_one(self, p):
        P = Prob(p)
        assert augustin_information(1, P, identity_channel(3)) == pytest.approx(shannon_entropy(P), abs=1e-14)

    @pytest.mark.parametrize("alpha", ORDERS)
    def test_single_row(self, alpha):
        W = Channel([[0.3, 0.7]])
        assert augustin_information(alpha, Prob([1.0]), W) == pytest.approx(0, abs=1e-15)
        assert renyi_information(alpha, Prob([1.0]), W) == pytest.approx(0, abs=1e-15)

    def test_bsc(self):
        assert augustin_information(1, Prob.uniform(2), bsc(0.1)) == pytest.approx(0.368065, abs=1e-6)

    def test_renyi_identity_hand_value(self):
        assert renyi_information(2, Prob.uniform(2), identity_channel(2)) == pytest.approx(math.log(2), abs=1e-15)

    def test_renyi_order_one(self, rng):
        W, P = random_channel(rng, 3, 4), random_prob(rng, 3)
        assert renyi_information(1, P, W) == pytest.approx(augustin_information(1, P, W), abs=1e-15)

    @pytest.mark.parametrize("alpha", [0.3, 0.7, 1.5, 3.0])
    def test_renyi_vs_augustin_ordering(self, rng, alpha):
        for _ in range(10):
            W, P = random_channel(rng, 3, 4), random_prob(rng, 3)
            g, i = renyi_information(alpha, P, W), augustin_information(alpha, P, W)
            assert (g <= i + 1e-12) if alpha < 1 else (g >= i - 1e-12)

    def test_al_hand_value(self):
        c = CostSpec([0.0, 1.0])
        assert al_information(1, Prob.uniform(2), bsc(0.1), 0.5, c) == pytest.approx(BSC_MI - 0.25, abs=1e-14)

    def test_al_zero_multiplier_and_point_mass(self):
        W, c = bsc(0.1), CostSpec([0.0, 1.0])
        assert al_information(2, Prob.uniform(2), W, 0.0, c) == pytest.approx(augustin_information(2, Prob.uniform(2), W))
        assert al_information(2, Prob([1.0, 0.0]), W, 0.7, c) == pytest.approx(0, abs=1e-14)

    def test_rg_reductions(self, rng):
        W, P = random_channel(rng, 3, 4), random_prob(rng, 3)
        c = CostSpec(rng.random(3))
        assert rg_information(2, P, W, 0.0, c) == pytest.approx(renyi_information(2, P, W), abs=1e-14)
        assert rg_information(1, P, W, 0.4, c) == pytest.approx(al_information(1, P, W, 0.4, c), abs=1e-14)

    @pytest.mark.parametrize("alpha", [0.4, 0.8, 1.5, 2.5])
    def test_rg_vs_al_ordering(self, rng, alpha):
        for _ in range(10):
            W, P = random_channel(rng, 3, 4), random_prob(rng, 3)
            c = CostSpec(rng.random(3))
            lam = float(rng.random())
            g, i = rg_information(alpha, P, W, lam, c), al_information(alpha, P, W, lam, c)
            assert (g <= i + 1e-12) if alpha < 1 else (g >= i - 1e-12)


class TestTransforms:
    def test_poltyrev_symmetric(self):
        t = poltyrev_transform(2, Prob.uniform(2), bsc(0.2))
        assert np.allclose(t.transformed.weights, [0.5, 0.5], atol=1e-12)

    def test_shayevitz_symmetric(self):
        t = shayevitz_transform(0.5, Prob.uniform(2), bsc(0.2))
        assert np.allclose(t.transformed.weights, [0.5, 0.5], atol=1e-12)

    @pytest.mark.parametrize("alpha,cost", [(0.5, False), (2.0, True), (0.7, True), (3.0, False)])
    def test_identity_residuals(self, rng, alpha, cost):
        for _ in range(5):
            W, P = random_channel(rng, 3, 3), random_prob(rng, 3)
            c = CostSpec(rng.random(3)) if cost else None
            lam = 0.6 if cost else None
            assert poltyrev_transform(alpha, P, W, lam, c).value_identity_residual <= 1e-9
            assert shayevitz_transform(alpha, P, W, lam, c).value_identity_residual <= 1e-9

    def test_order_one_rejected(self):
        with pytest.raises(ValidationError):
            poltyrev_transform(1, Prob.uniform(2), bsc(0.2))


class TestDecompositionAndDerivative:
    @pytest.mark.parametrize("alpha,shape", [(0.5, (3, 3)), (3.0, (2, 4)), (1.7, (4, 2))])
    def test_csiszar(self, rng, alpha, shape):
        W, P = random_channel(rng, *shape), random_prob(rng, shape[0])
        assert csiszar_decomposition_residual(alpha, P, W) <= 1e-9
        assert csiszar_decomposition_residual(alpha, Prob.uniform(2), bsc(0.1)) <= 1e-9

    @pytest.mark.parametrize("alpha", ORDERS)
    def test_identity_channel_constant(self, alpha):
        assert augustin_info_order_derivative(alpha, Prob([0.2, 0.3, 0.5]), identity_channel(3)) == pytest.approx(0, abs=1e-12)

    def test_single_row(self):
        assert augustin_info_order_derivative(2, Prob([1.0]), Channel([[0.3, 0.7]])) == 0

    @pytest.mark.parametrize("alpha", [0.4, 0.9, 1.0, 1.3, 2.5])
    def test_finite_difference(self, rng, alpha):
        h = 1e-4
        for _ in range(5):
            W, P = random_channel(rng, 3, 4), random_prob(rng, 3)
            f = lambda a: augustin_information(Order(a), P, W)  # noqa: E731
            fd = (f(alpha + h) - f(alpha - h)) / (2 * h)
            assert augustin_info_order_derivative(alpha, P, W) == pytest.approx(fd, rel=1e-5, abs=1e-10)

    def test_monotone_in_order(self, rng):
        W, P = random_channel(rng, 3, 4), random_prob(rng, 3)
        grid = np.linspace(0.2, 5, 25)
        vals = [augustin_information(a if a != 1 else 1, P, W) for a in grid]
        assert np.all(np.diff(vals) >= -1e-12)
        scaled = [(1 - a) / a * v for a, v in zip(grid, vals)]
        assert np.all(np.diff(scaled) <= 1e-12)
