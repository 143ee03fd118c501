import numpy as np
import pytest

from qssvm.qp import (
    QuadraticProgram,
    SolveOptions,
    SolveStatus,
    kkt_residuals,
    qp_objective,
    solve,
    solve_oracle,
)


def one_dim_bound():
    # min x^2/2 s.t. x >= 1
    return QuadraticProgram(np.eye(1), np.zeros(1), np.array([[1.0]]), np.array([1.0]))


def contradictory():
    # x >= 1 and -x >= 0 cannot both hold
    return QuadraticProgram(np.eye(1), np.zeros(1), np.array([[1.0], [-1.0]]),
                            np.array([1.0, 0.0]))


def random_feasible_qp(rng, singular=False):
    """Tiny convex QP with a known feasible point; compact when Q is singular."""
    p = int(rng.integers(2, 7))
    if singular:
        R = rng.standard_normal((p, max(1, p - 1)))
        Q = R @ R.T
        k = int(rng.integers(1, 3))
        A = np.vstack([rng.standard_normal((k, p)), -np.ones((1, p))])
        x0 = np.abs(rng.standard_normal(p))
        c = np.concatenate([A[:k] @ x0 - rng.random(k), [-(x0.sum() + 5.0)]])
        nonneg = np.arange(p)
    else:
        R = rng.standard_normal((p, p))
        Q = R.T @ R + 1e-3 * np.eye(p)
        k = int(rng.integers(1, 6))
        A = rng.standard_normal((k, p))
        c = A @ rng.standard_normal(p) - rng.random(k)
        nonneg = np.zeros(0, dtype=np.int64)
    return QuadraticProgram(Q, rng.standard_normal(p), A, c, nonneg=nonneg)


class TestQuadraticProgram:
    def test_rejects_asymmetric_Q(self):
        with pytest.raises(ValueError):
            QuadraticProgram(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2),
                             np.zeros((0, 2)), np.zeros(0))

    def test_rejects_indefinite_Q(self):
        with pytest.raises(ValueError):
            QuadraticProgram(np.diag([1.0, -1.0]), np.zeros(2),
                             np.zeros((0, 2)), np.zeros(0))

    def test_rejects_bad_nonneg_index(self):
        with pytest.raises(ValueError):
            QuadraticProgram(np.eye(1), np.zeros(1), np.zeros((0, 1)), np.zeros(0),
                             nonneg=np.array([3]))

    def test_dimension_checks(self):
        with pytest.raises(ValueError):
            QuadraticProgram(np.eye(2), np.zeros(2), np.ones((1, 3)), np.ones(1))


class TestSolve:
    def test_single_active_constraint(self):
        sol = solve(one_dim_bound())
        assert sol.status is SolveStatus.OPTIMAL
        assert sol.x[0] == pytest.approx(1.0, abs=1e-9)
        assert sol.dual[0] == pytest.approx(1.0, abs=1e-9)

    def test_symmetric_split(self):
        # min (x^2+y^2)/2 s.t. x+y >= 2 -> (1, 1)
        qp = QuadraticProgram(np.eye(2), np.zeros(2), np.array([[1.0, 1.0]]), np.array([2.0]))
        sol = solve(qp)
        assert sol.status is SolveStatus.OPTIMAL
        assert np.allclose(sol.x, [1.0, 1.0], atol=1e-9)

    def test_unconstrained(self):
        qp = QuadraticProgram(np.eye(2), np.array([-1.0, 2.0]), np.zeros((0, 2)), np.zeros(0))
        sol = solve(qp)
        assert sol.status is SolveStatus.OPTIMAL
        assert np.allclose(sol.x, [1.0, -2.0], atol=1e-10)

    def test_nonnegativity_bound_active(self):
        # min (x+1)^2/2: unconstrained optimum -1, bound forces 0
        qp = QuadraticProgram(np.eye(1), np.ones(1), np.zeros((0, 1)), np.zeros(0),
                              nonneg=np.array([0]))
        sol = solve(qp)
        assert sol.status is SolveStatus.OPTIMAL
        assert abs(sol.x[0]) <= 1e-10
        assert sol.bound_dual[0] == pytest.approx(1.0, abs=1e-8)

    def test_infeasible_certified(self):
        sol = solve(contradictory())
        assert sol.status is SolveStatus.INFEASIBLE

    def test_optimal_residuals_within_tolerance(self):
        rng = np.random.default_rng(11)
        opts = SolveOptions()
        for _ in range(40):
            qp = random_feasible_qp(rng)
            sol = solve(qp, opts)
            assert sol.status is SolveStatus.OPTIMAL
            res = sol.residuals
            assert res.primal_infeasibility <= opts.tol_primal
            assert res.dual_infeasibility <= opts.tol_dual
            assert res.complementarity_gap <= opts.tol_gap
            assert sol.dual.min(initial=0.0) >= -opts.tol_dual
            assert sol.bound_dual.min(initial=0.0) >= -opts.tol_dual

    def test_reported_residuals_match_recomputation(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            qp = random_feasible_qp(rng)
            sol = solve(qp)
            fresh = kkt_residuals(qp, sol)
            assert all(abs(a - b) <= 1e-12 for a, b in zip(fresh, sol.residuals))

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        qp = random_feasible_qp(rng)
        a, b = solve(qp), solve(qp)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.dual, b.dual)
        assert a.objective == b.objective

    def test_start_shift_changes_path_not_solution(self):
        rng = np.random.default_rng(14)
        qp = random_feasible_qp(rng)
        a = solve(qp)
        b = solve(qp, SolveOptions(start_shift=0.5))
        assert np.abs(a.x - b.x).max() <= 1e-6

    def test_bad_options_rejected(self):
        with pytest.raises(ValueError):
            SolveOptions(tol_primal=0.0)
        with pytest.raises(ValueError):
            SolveOptions(max_iterations=0)


class TestOracle:
    def test_single_active_constraint(self):
        sol = solve_oracle(one_dim_bound())
        assert sol.status is SolveStatus.OPTIMAL
        assert sol.x[0] == pytest.approx(1.0, abs=1e-10)

    def test_infeasible(self):
        assert solve_oracle(contradictory()).status is SolveStatus.INFEASIBLE

    def test_size_limits(self):
        with pytest.raises(ValueError):
            solve_oracle(QuadraticProgram(np.eye(9), np.zeros(9), np.zeros((0, 9)),
                                          np.zeros(0)))

    def test_agreement_with_solve(self):
        rng = np.random.default_rng(15)
        for trial in range(50):
            qp = random_feasible_qp(rng, singular=trial % 3 == 0)
            a = solve(qp)
            b = solve_oracle(qp)
            assert a.status is SolveStatus.OPTIMAL
            assert b.status is SolveStatus.OPTIMAL
            gap = abs(a.objective - b.objective)
            assert gap <= 1e-6 * (1.0 + abs(b.objective))


class TestKktResiduals:
    def test_optimal_point_clean(self):
        sol = solve(one_dim_bound())
        res = kkt_residuals(one_dim_bound(), sol)
        assert max(res) <= 1e-8

    def test_perturbed_point_detected(self):
        qp = one_dim_bound()
        sol = solve(qp)
        shifted = type(sol)(
            x=sol.x + 1e-3, dual=sol.dual, bound_dual=sol.bound_dual,
            status=sol.status, residuals=sol.residuals, iterations=sol.iterations,
            objective=sol.objective,
        )
        res = kkt_residuals(qp, shifted)
        assert res.dual_infeasibility >= 1e-4

    def test_zero_problem(self):
        qp = QuadraticProgram(np.zeros((1, 1)), np.zeros(1), np.zeros((0, 1)), np.zeros(0))
        sol = solve(qp)
        assert max(kkt_residuals(qp, sol)) == 0.0

    def test_objective_helper(self):
        qp = one_dim_bound()
        assert qp_objective(qp, np.array([2.0])) == pytest.approx(2.0)
