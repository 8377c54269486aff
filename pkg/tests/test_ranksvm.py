import numpy as np
import pytest

from formchoice.ranksvm import DEFAULT_CAP, linear_q, solve_dual

from oracle_qp import brute_force_dual


def random_instance(rng, n, dim=None):
    # dim >= n keeps the hard margin feasible (general position)
    dim = dim if dim is not None else n + int(rng.integers(0, 3))
    diffs = rng.standard_normal((n, dim))
    Q = linear_q(diffs)
    c = rng.uniform(0.5, 2.5, size=n)
    return Q, c


class TestClosedForms:
    def test_single_constraint(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = float(rng.uniform(0.05, 5.0))
            c = float(rng.uniform(0.5, 3.0))
            sol = solve_dual(np.array([[q]]), np.array([c]))
            assert sol.converged
            assert abs(sol.alpha[0] - c / q) < 1e-9
            # the achieved margin is exactly the target
            assert abs(q * sol.alpha[0] - c) < 1e-9

    def test_empty_problem(self):
        sol = solve_dual(np.zeros((0, 0)), np.zeros(0))
        assert sol.converged
        assert sol.alpha.shape == (0,)

    def test_orthogonal_constraints_decouple(self):
        diffs = np.diag([1.0, 2.0, 0.5])
        c = np.array([1.0, 1.0, 2.0])
        sol = solve_dual(linear_q(diffs), c)
        assert np.allclose(sol.alpha, c / np.array([1.0, 4.0, 0.25]), atol=1e-9)


class TestOracleEquivalence:
    @pytest.mark.parametrize("seed", range(12))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        Q, c = random_instance(rng, n)
        sol = solve_dual(Q, c)
        _, ref_obj = brute_force_dual(Q, c)
        assert sol.converged
        assert abs(sol.objective - ref_obj) < 1e-6

    def test_duplicate_constraints(self):
        rng = np.random.default_rng(99)
        d = rng.standard_normal((1, 3))
        diffs = np.vstack([d, d, d])
        Q = linear_q(diffs)
        c = np.ones(3)
        sol = solve_dual(Q, c)
        _, ref_obj = brute_force_dual(Q, c)
        assert sol.converged
        # alpha is not unique here but the objective is
        assert abs(sol.objective - ref_obj) < 1e-6

    def test_low_rank_interactions(self):
        # more answers than dimensions: infeasible hard margin, cap binds
        rng = np.random.default_rng(123)
        diffs = rng.standard_normal((4, 2))
        Q = linear_q(diffs)
        c = rng.uniform(0.5, 2.0, 4)
        cap = 100.0
        sol = solve_dual(Q, c, cap=cap, tol=1e-10)
        alpha_ref, ref_obj = brute_force_dual(Q, c, cap=cap)
        assert sol.converged
        assert sol.capped
        assert abs(sol.objective - ref_obj) < 1e-6 * max(1.0, abs(ref_obj))
        assert np.allclose(sol.alpha, alpha_ref, atol=1e-5)


class TestScaling:
    def test_uniform_margin_scaling_scales_solution(self):
        rng = np.random.default_rng(5)
        Q, c = random_instance(rng, 3, 5)
        base = solve_dual(Q, c)
        for k in (2.0, 10.0, 1000.0):
            scaled = solve_dual(Q, k * c)
            assert scaled.converged
            assert np.allclose(scaled.alpha, k * base.alpha, rtol=1e-7, atol=1e-9)

    def test_ratio_change_keeps_feasibility(self):
        rng = np.random.default_rng(6)
        Q, _ = random_instance(rng, 3, 3)
        for hi in (2.0, 10.0):
            c = np.array([1.0, hi, 1.0])
            sol = solve_dual(Q, c)
            margins = Q @ sol.alpha
            assert (margins >= c - 1e-5 * hi).all()


class TestBoxCap:
    def test_cap_binds_and_flags(self):
        # near-duplicate alternatives make the required weight explode
        Q = np.array([[1e-9]])
        sol = solve_dual(Q, np.array([1.0]), cap=1e6)
        assert sol.capped
        assert sol.alpha[0] == pytest.approx(1e6)

    def test_cap_not_binding_not_flagged(self):
        sol = solve_dual(np.array([[1.0]]), np.array([1.0]))
        assert not sol.capped


class TestValidation:
    def test_rejects_nonpositive_margins(self):
        with pytest.raises(ValueError):
            solve_dual(np.eye(2), np.array([1.0, 0.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            solve_dual(np.eye(3), np.ones(2))

    def test_iteration_cap_reported(self):
        rng = np.random.default_rng(3)
        Q, c = random_instance(rng, 5, 4)
        sol = solve_dual(Q, c, max_iter=1)
        assert not sol.converged
        assert sol.iterations == 1
