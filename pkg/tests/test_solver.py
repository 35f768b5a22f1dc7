import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otnn.data import make_uniform_measure
from otnn.errors import (
    BalanceError,
    DomainError,
    ShapeError,
    SizeLimitError,
    ValidationError,
)
from otnn.solver import (
    OTParams,
    TransportPlan,
    brute_force_balanced,
    generalized_kl,
    gibbs_kernel,
    ot_objective,
    ot_objective_terms,
    sinkhorn_balanced,
    sinkhorn_unbalanced,
    squared_l2_cost,
)


def uniform(n):
    return make_uniform_measure(n)


def grid_search_2x2(C, a, b, params, rounds=8, grid=21):
    """Independent oracle: nested grid refinement over gamma in [0,1]^4.

    The objective is convex, so shrinking the box around the best grid
    point cannot lose the optimum.
    """
    lo, hi = np.zeros(4), np.ones(4)
    best, best_val = None, np.inf
    for _ in range(rounds):
        axes = [np.linspace(lo[i], hi[i], grid) for i in range(4)]
        G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
        g = G.reshape(-1, 2, 2)
        transport = (g * C).sum(axis=(1, 2))
        safe = np.where(g > 0, g, 1.0)
        xlogx = np.where(g > 0, g * np.log(safe), 0.0).sum(axis=(1, 2))

        def gkl(p, q):
            sp = np.where(p > 0, p, 1.0)
            t = np.where(p > 0, p * np.log(sp / q), 0.0)
            return t.sum(axis=1) - p.sum(axis=1) + q.sum()

        vals = transport + params.epsilon * xlogx + params.lam * (
            gkl(g.sum(axis=2), a) + gkl(g.sum(axis=1), b)
        )
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best = vals[i], G[i]
        span = (hi - lo) / (grid - 1)
        lo = np.maximum(best - span, 0.0)
        hi = np.minimum(best + span, 1.0)
    return best.reshape(2, 2), float(best_val)


class TestSquaredL2Cost:
    def test_hand_value(self):
        C = squared_l2_cost([(0.0, 0.0)], [(1.0, 1.0)])
        assert C.shape == (1, 1)
        assert C[0, 0] == pytest.approx(2.0, abs=1e-15)

    def test_zero_diagonal(self, rng):
        A = rng.normal(size=(5, 3))
        C = squared_l2_cost(A, A)
        np.testing.assert_allclose(np.diag(C), 0.0, atol=1e-12)

    def test_cosine_identity_on_unit_vectors(self, rng):
        A = rng.normal(size=(6, 4))
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        B = rng.normal(size=(5, 4))
        B /= np.linalg.norm(B, axis=1, keepdims=True)
        # independent cosine computation
        expected = 2.0 - 2.0 * np.array(
            [[float(np.dot(a, b)) for b in B] for a in A]
        )
        np.testing.assert_allclose(squared_l2_cost(A, B), expected, atol=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(ShapeError):
            squared_l2_cost([(1.0, 0.0)], [(1.0, 0.0, 0.0)])


class TestBruteForce:
    def test_antidiagonal_cost(self):
        plan = brute_force_balanced([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_array_equal(plan.matrix, [[0.5, 0.0], [0.0, 0.5]])
        assert (plan.matrix * [[0.0, 1.0], [1.0, 0.0]]).sum() == 0.0

    def test_identity_beats_swap(self):
        plan = brute_force_balanced([[1.0, 2.0], [3.0, 0.0]])
        np.testing.assert_array_equal(plan.matrix, [[0.5, 0.0], [0.0, 0.5]])
        cost = (plan.matrix * [[1.0, 2.0], [3.0, 0.0]]).sum()
        assert cost == pytest.approx(0.5)

    def test_minimal_over_all_permutations(self, rng):
        from itertools import permutations

        C = rng.random((3, 3))
        plan = brute_force_balanced(C)
        got = (plan.matrix * C).sum()
        for p in permutations(range(3)):
            alt = sum(C[i, p[i]] for i in range(3)) / 3
            assert got <= alt + 1e-15

    def test_size_limit(self):
        with pytest.raises(SizeLimitError):
            brute_force_balanced(np.zeros((9, 9)))

    def test_requires_square(self):
        with pytest.raises(ShapeError):
            brute_force_balanced(np.zeros((2, 3)))


class TestBalanced:
    def test_zero_cost_gives_product_measure(self):
        plan = sinkhorn_balanced(np.zeros((2, 2)), uniform(2), uniform(2), OTParams(0.2))
        np.testing.assert_allclose(plan.matrix, 0.25, atol=1e-12)

    def test_small_epsilon_matches_diagonal(self):
        C = np.array([[0.0, 1.0], [1.0, 0.0]])
        plan = sinkhorn_balanced(C, uniform(2), uniform(2), OTParams(0.005, max_iter=5000))
        np.testing.assert_allclose(
            plan.matrix, [[0.5, 0.0], [0.0, 0.5]], atol=1e-3
        )

    def test_random_3x3_vs_brute_force(self, rng):
        params = OTParams(0.005, max_iter=5000)
        for _ in range(10):
            C = rng.random((3, 3))
            plan = sinkhorn_balanced(C, uniform(3), uniform(3), params)
            entropic = (plan.matrix * C).sum()
            exact = (brute_force_balanced(C).matrix * C).sum()
            # residual marginal slack (tol) can push the cost a hair below optimum
            assert entropic >= exact - 1e-5
            assert entropic <= exact * 1.02

    def test_marginals_within_tol_when_converged(self, rng):
        C = rng.random((4, 6))
        a = uniform(4)
        b = uniform(6)
        params = OTParams(0.1, tol=1e-8, max_iter=5000)
        plan = sinkhorn_balanced(C, a, b, params)
        assert plan.converged
        viol = np.abs(plan.row_marginal - a).sum() + np.abs(plan.col_marginal - b).sum()
        assert viol <= params.tol

    def test_unbalanced_sums_rejected(self):
        with pytest.raises(BalanceError):
            sinkhorn_balanced(np.zeros((2, 2)), np.array([0.7, 0.7]), uniform(2), OTParams(0.2))

    def test_log_domain_safety(self, rng):
        # costs up to 100 with epsilon down to 1e-3 must stay finite
        C = rng.random((5, 5)) * 100.0
        for eps in (1e-3, 0.01, 0.2):
            plan = sinkhorn_balanced(C, uniform(5), uniform(5), OTParams(eps, max_iter=2000))
            assert np.all(np.isfinite(plan.matrix))
            assert np.all(plan.matrix >= 0)

    def test_deterministic(self, rng):
        C = rng.random((4, 4))
        p1 = sinkhorn_balanced(C, uniform(4), uniform(4), OTParams(0.05))
        p2 = sinkhorn_balanced(C, uniform(4), uniform(4), OTParams(0.05))
        assert np.array_equal(p1.matrix, p2.matrix)
        assert p1.iterations == p2.iterations


class TestUnbalanced:
    def test_large_lambda_recovers_balanced(self, rng):
        params_u = OTParams(0.1, lam=1e5, tol=1e-10, max_iter=20000)
        params_b = OTParams(0.1, tol=1e-10, max_iter=20000)
        for _ in range(5):
            C = rng.random((3, 3))
            a, b = uniform(3), uniform(3)
            pu = sinkhorn_unbalanced(C, a, b, params_u)
            pb = sinkhorn_balanced(C, a, b, params_b)
            viol = np.abs(pu.row_marginal - a).sum() + np.abs(pu.col_marginal - b).sum()
            assert viol < 1e-3
            assert abs((pu.matrix * C).sum() - (pb.matrix * C).sum()) < 1e-3

    def test_tiny_lambda_drops_huge_entry(self):
        C = np.array([[0.0, 0.0], [0.0, 50.0]])
        plan = sinkhorn_unbalanced(C, uniform(2), uniform(2), OTParams(0.2, lam=1e-6))
        assert plan.matrix[1, 1] <= 1e-6

    def test_zero_cost_vs_grid_oracle(self):
        params = OTParams(0.2, lam=0.5, tol=1e-10, max_iter=5000)
        C = np.zeros((2, 2))
        a, b = uniform(2), uniform(2)
        plan = sinkhorn_unbalanced(C, a, b, params)
        gstar, _ = grid_search_2x2(C, a, b, params)
        np.testing.assert_allclose(plan.matrix, gstar, atol=1e-3)

    def test_random_cost_vs_grid_oracle(self, rng):
        params = OTParams(0.2, lam=0.5, tol=1e-10, max_iter=5000)
        for _ in range(3):
            C = rng.random((2, 2))
            plan = sinkhorn_unbalanced(C, uniform(2), uniform(2), params)
            gstar, gval = grid_search_2x2(C, uniform(2), uniform(2), params)
            np.testing.assert_allclose(plan.matrix, gstar, atol=1e-3)
            assert ot_objective(plan, C, uniform(2), uniform(2), params) <= gval + 1e-6

    def test_marginal_violation_nonincreasing_in_lambda(self, rng):
        C = rng.random((4, 4))
        a, b = uniform(4), uniform(4)
        viols = []
        for lam in (0.1, 1.0, 10.0, 100.0, 1e5):
            plan = sinkhorn_unbalanced(C, a, b, OTParams(0.1, lam=lam, tol=1e-10, max_iter=20000))
            viols.append(
                np.abs(plan.row_marginal - a).sum() + np.abs(plan.col_marginal - b).sum()
            )
        assert all(v1 >= v2 - 1e-9 for v1, v2 in zip(viols, viols[1:]))

    def test_nonconvergence_reported_not_raised(self, rng):
        C = rng.random((3, 3))
        plan = sinkhorn_unbalanced(C, uniform(3), uniform(3), OTParams(0.1, lam=1e5, max_iter=3, tol=1e-14))
        assert not plan.converged

    def test_log_domain_safety(self, rng):
        C = rng.random((4, 4)) * 100.0
        for eps in (1e-3, 0.01):
            plan = sinkhorn_unbalanced(C, uniform(4), uniform(4), OTParams(eps, lam=0.5, max_iter=2000))
            assert np.all(np.isfinite(plan.matrix))

    def test_deterministic(self, rng):
        C = rng.random((3, 3))
        p1 = sinkhorn_unbalanced(C, uniform(3), uniform(3), OTParams(0.2))
        p2 = sinkhorn_unbalanced(C, uniform(3), uniform(3), OTParams(0.2))
        assert np.array_equal(p1.matrix, p2.matrix)


class TestObjective:
    def test_zero_cost_component(self):
        a = uniform(2)
        gamma = np.outer(a, a)
        transport, _, _ = ot_objective_terms(gamma, np.zeros((2, 2)), a, a, OTParams(1.0))
        assert transport == 0.0

    def test_hand_entropy(self):
        # uniform 2x2 plan, exact marginals: entropy = -ln 4, KL = 0
        gamma = np.full((2, 2), 0.25)
        params = OTParams(1.0, lam=7.0)
        transport, entropy, kl = ot_objective_terms(
            gamma, np.zeros((2, 2)), uniform(2), uniform(2), params
        )
        assert entropy == pytest.approx(-math.log(4.0), abs=1e-12)
        assert kl == pytest.approx(0.0, abs=1e-12)

    def test_solver_output_beats_perturbations(self, rng):
        params = OTParams(0.2, lam=0.5, tol=1e-10, max_iter=5000)
        C = rng.random((3, 3))
        a, b = uniform(3), uniform(3)
        plan = sinkhorn_unbalanced(C, a, b, params)
        base = ot_objective(plan, C, a, b, params)
        for _ in range(100):
            noise = rng.normal(scale=0.02, size=plan.matrix.shape)
            perturbed = np.maximum(plan.matrix + noise, 0.0)
            assert base <= ot_objective(perturbed, C, a, b, params) + 1e-12

    def test_negative_entry_rejected(self):
        with pytest.raises(DomainError):
            ot_objective(np.array([[-0.1, 0.2], [0.2, 0.2]]), np.zeros((2, 2)),
                         uniform(2), uniform(2), OTParams(0.2))

    def test_zero_plan_conventions(self):
        gamma = np.zeros((2, 2))
        params = OTParams(0.5, lam=2.0)
        transport, entropy, kl = ot_objective_terms(
            gamma, np.ones((2, 2)), uniform(2), uniform(2), params
        )
        assert transport == 0.0
        assert entropy == 0.0  # 0 log 0 = 0
        # generalized KL of the zero measure against a unit-mass measure
        assert kl == pytest.approx(2.0 * params.lam, abs=1e-12)


class TestProperties:
    @given(st.floats(min_value=0.0, max_value=50.0), st.floats(min_value=0.0, max_value=50.0),
           st.floats(min_value=0.1, max_value=1.0))
    @settings(max_examples=50, deadline=None)
    def test_gibbs_kernel_monotone(self, c1, c2, eps):
        k1 = gibbs_kernel(np.array(c1), eps)
        k2 = gibbs_kernel(np.array(c2), eps)
        if c1 == c2:
            assert k1 == k2
        elif c1 < c2 and (c2 - c1) / eps > 1e-12:
            assert k1 > k2

    @given(st.integers(min_value=2, max_value=5), st.integers(min_value=0, max_value=10**6))
    @settings(max_examples=20, deadline=None)
    def test_plans_nonnegative(self, n, seed):
        rng = np.random.default_rng(seed)
        C = rng.random((n, n))
        a, b = uniform(n), uniform(n)
        for plan in (
            sinkhorn_balanced(C, a, b, OTParams(0.1)),
            sinkhorn_unbalanced(C, a, b, OTParams(0.2, lam=0.5)),
        ):
            assert np.all(plan.matrix >= 0)

    def test_kl_zero_iff_equal(self, rng):
        p = rng.random(5) + 0.1
        assert generalized_kl(p, p) == pytest.approx(0.0, abs=1e-12)
        q = p.copy()
        q[0] *= 2
        assert generalized_kl(p, q) > 0
