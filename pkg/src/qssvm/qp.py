"""Convex quadratic programming with certified KKT residuals.

Solves
    minimize    x' Q x / 2 + q' x
    subject to  A x >= c,   x_j >= 0 for j in nonneg

with a primal-dual interior-point method (Mehrotra predictor-corrector
on the normal equations) followed by an active-set polish that solves
the KKT equality system of the identified active set.  An active-set
enumeration oracle for tiny instances provides an independent check.

Reported residuals are absolute; a solution is Optimal only when all
three are at or below the configured tolerances, so callers with large
problem data are expected to scale the tolerances accordingly.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.optimize

__all__ = [
    "QuadraticProgram",
    "QpSolution",
    "ResidualTriple",
    "SolveOptions",
    "SolveStatus",
    "kkt_residuals",
    "qp_objective",
    "solve",
    "solve_oracle",
]


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_FAILURE = "numerical_failure"


class ResidualTriple(NamedTuple):
    primal_infeasibility: float
    dual_infeasibility: float
    complementarity_gap: float

    def worst(self) -> float:
        return max(self)


@dataclass(frozen=True)
class QuadraticProgram:
    """Convex QP data.  Q must be symmetric PSD (up to 1e-8 * ||Q||)."""

    Q: np.ndarray
    q: np.ndarray
    A: np.ndarray
    c: np.ndarray
    nonneg: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        q = np.asarray(self.q, dtype=float)
        A = np.asarray(self.A, dtype=float)
        c = np.asarray(self.c, dtype=float)
        nonneg = np.unique(np.asarray(self.nonneg, dtype=np.int64))
        p = q.shape[0]
        if Q.shape != (p, p):
            raise ValueError(f"Q has shape {Q.shape}, expected {(p, p)}")
        if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12 * (1.0 + np.abs(Q).max(initial=0.0))):
            raise ValueError("Q is not symmetric")
        Q = 0.5 * (Q + Q.T)
        if A.size == 0:
            A = A.reshape(0, p)
        if A.ndim != 2 or A.shape[1] != p:
            raise ValueError(f"A has shape {A.shape}, expected (*, {p})")
        if c.shape != (A.shape[0],):
            raise ValueError("c length must match the number of constraint rows")
        if nonneg.size and (nonneg.min() < 0 or nonneg.max() >= p):
            raise ValueError("nonneg indices out of range")
        _assert_psd(Q)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "nonneg", nonneg)

    @property
    def p(self) -> int:
        return self.q.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[0]


def _assert_psd(Q: np.ndarray):
    """PSD up to tolerance: Cholesky of Q shifted by 1e-8 ||Q||_F must succeed."""
    p = Q.shape[0]
    if p == 0:
        return
    shift = 1e-8 * np.linalg.norm(Q, "fro") + 1e-12
    try:
        scipy.linalg.cholesky(Q + shift * np.eye(p), lower=True)
    except scipy.linalg.LinAlgError:
        raise ValueError("Q is not positive semidefinite (up to tolerance)") from None


@dataclass(frozen=True)
class SolveOptions:
    """Solver tolerances and safeguards.

    Tolerances are on the absolute residuals.  static_regularization is
    added to the diagonal of the Newton system when its factorization
    fails, escalating tenfold up to 1e-6 before giving up.  start_shift
    perturbs the interior starting point; distinct shifts give distinct
    iterate paths, which is useful for solution-uniqueness checks.
    """

    tol_primal: float = 1e-8
    tol_dual: float = 1e-8
    tol_gap: float = 1e-8
    max_iterations: int = 200
    static_regularization: float = 1e-10
    max_regularization: float = 1e-6
    start_shift: float = 0.0

    def __post_init__(self):
        if min(self.tol_primal, self.tol_dual, self.tol_gap) <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    dual: np.ndarray        # multipliers of the A x >= c rows
    bound_dual: np.ndarray  # length-p multipliers of x >= 0, zero off nonneg
    status: SolveStatus
    residuals: ResidualTriple
    iterations: int
    objective: float


def qp_objective(qp: QuadraticProgram, x: np.ndarray) -> float:
    return float(0.5 * x @ qp.Q @ x + qp.q @ x)


def kkt_residuals(qp: QuadraticProgram, sol: QpSolution) -> ResidualTriple:
    """Absolute KKT residuals of a candidate solution, recomputed from scratch."""
    return _kkt_residuals(qp, sol.x, sol.dual, sol.bound_dual)


def _kkt_residuals(qp, x, dual, bound_dual) -> ResidualTriple:
    slack = qp.A @ x - qp.c if qp.k else np.zeros(0)
    primal = float(max(0.0, -slack.min(initial=0.0)))
    if qp.nonneg.size:
        primal = max(primal, float(max(0.0, -x[qp.nonneg].min())))
    grad = qp.Q @ x + qp.q
    if qp.k:
        grad = grad - qp.A.T @ dual
    grad = grad - bound_dual
    dual_inf = float(np.abs(grad).max(initial=0.0))
    comp = float(np.abs(dual * slack).max(initial=0.0))
    if qp.nonneg.size:
        comp = max(comp, float(np.abs(bound_dual[qp.nonneg] * x[qp.nonneg]).max()))
    return ResidualTriple(primal, dual_inf, comp)


def _dual_negativity(dual, bound_dual, nonneg) -> float:
    worst = float(max(0.0, -dual.min(initial=0.0)))
    if nonneg.size:
        worst = max(worst, float(max(0.0, -bound_dual[nonneg].min())))
    return worst


# ---------------------------------------------------------------------------
# interior-point solver
# ---------------------------------------------------------------------------


def _fold_bounds(qp: QuadraticProgram):
    """Append one row per nonnegativity bound so all constraints read Ahat x >= chat."""
    if qp.nonneg.size == 0:
        return qp.A, qp.c
    E = np.zeros((qp.nonneg.size, qp.p))
    E[np.arange(qp.nonneg.size), qp.nonneg] = 1.0
    return np.vstack([qp.A, E]), np.concatenate([qp.c, np.zeros(qp.nonneg.size)])


def _split_duals(qp: QuadraticProgram, lam: np.ndarray):
    dual = lam[: qp.k].copy()
    bound_dual = np.zeros(qp.p)
    if qp.nonneg.size:
        bound_dual[qp.nonneg] = lam[qp.k :]
    return dual, bound_dual


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not neg.any():
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


class _NewtonSolver:
    """Factorizes the step system: normal equations first, augmented LU fallback.

    Diagonal regularization is applied relative to the matrix scale,
    escalating tenfold from static_regularization up to max_regularization
    before falling back.
    """

    def __init__(self, Q, Ahat, opts: SolveOptions):
        self.Q = Q
        self.Ahat = Ahat
        self.opts = opts
        self._cho = None
        self._lu = None
        self._d = None

    def factor(self, d: np.ndarray) -> bool:
        self._d = d
        self._cho = self._lu = None
        M = self.Q + (self.Ahat.T * d) @ self.Ahat
        try:
            self._cho = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
            return True
        except scipy.linalg.LinAlgError:
            pass
        # Augmented (quasi-definite) system: stays nonsingular without any
        # shift when a null direction of Q is seen by some constraint row,
        # which is exactly the case the normal equations lose to roundoff.
        # Rows are equilibrated before the LU: the barrier diagonal spans
        # many orders of magnitude and would poison partial pivoting.
        p, k = self.Q.shape[0], self.Ahat.shape[0]
        K = np.zeros((p + k, p + k))
        K[:p, :p] = self.Q
        K[:p, p:] = -self.Ahat.T
        K[p:, :p] = self.Ahat
        K[p:, p:] = np.diag(1.0 / d)
        row_scale = np.abs(K).max(axis=1)
        row_scale[row_scale == 0.0] = 1.0
        try:
            lu = scipy.linalg.lu_factor(K / row_scale[:, None], check_finite=False)
            if np.abs(np.diag(lu[0])).min() > 0.0:
                self._lu = lu
                self._K = K
                self._row_scale = row_scale
                return True
        except (scipy.linalg.LinAlgError, ValueError):
            pass
        unit = max(1.0, float(np.abs(np.diag(M)).max(initial=0.0)))
        reg = self.opts.static_regularization
        while reg <= self.opts.max_regularization:
            try:
                self._cho = scipy.linalg.cho_factor(
                    M + (reg * unit) * np.eye(p), lower=True, check_finite=False
                )
                return True
            except scipy.linalg.LinAlgError:
                reg *= 10.0
        return False

    def step(self, r_d, r_p, r_c, s, lam):
        d = self._d
        if self._cho is not None:
            rhs = -r_d - self.Ahat.T @ (r_c / s + d * r_p)
            dx = scipy.linalg.cho_solve(self._cho, rhs, check_finite=False)
            ds = self.Ahat @ dx + r_p
            dlam = -(r_c + lam * ds) / s
        else:
            p = self.Q.shape[0]
            rhs = np.concatenate([-r_d, -r_p - r_c / lam])
            sol = scipy.linalg.lu_solve(self._lu, rhs / self._row_scale, check_finite=False)
            resid = rhs - self._K @ sol
            sol = sol + scipy.linalg.lu_solve(self._lu, resid / self._row_scale, check_finite=False)
            dx = sol[:p]
            dlam = sol[p:]
            ds = self.Ahat @ dx + r_p
        return dx, ds, dlam


def _polish(qp: QuadraticProgram, Ahat, chat, active: np.ndarray):
    """Refine against the KKT equality system of the identified active set.

    Variables whose nonnegativity row is active are pinned to exactly
    zero and eliminated, so the reduced system stays small and well
    scaled even when the linear term is huge; their multipliers are then
    recovered from the gradient.  One step of iterative refinement keeps
    the equality residuals near machine precision.  Returns (x, lam) with
    inactive multipliers zeroed, or None when the solve fails.
    """
    p, k = qp.p, qp.k
    pinned = qp.nonneg[active[k:]] if qp.nonneg.size else np.zeros(0, dtype=np.int64)
    free = np.setdiff1d(np.arange(p), pinned, assume_unique=False)
    eq = np.flatnonzero(active[:k])
    nf, ne = free.size, eq.size
    K = np.zeros((nf + ne, nf + ne))
    K[:nf, :nf] = qp.Q[np.ix_(free, free)]
    if ne:
        Aeq = qp.A[np.ix_(eq, free)]
        K[:nf, nf:] = -Aeq.T
        K[nf:, :nf] = Aeq
    rhs = np.concatenate([-qp.q[free], qp.c[eq]])
    if rhs.size == 0:
        sol = rhs
    else:
        # row equilibration keeps mixed scales (huge linear terms vs unit
        # constraint rows) from poisoning the least-squares rank decisions
        row_scale = np.maximum(np.abs(K).max(axis=1, initial=0.0), np.abs(rhs))
        row_scale[row_scale == 0.0] = 1.0
        Ks = K / row_scale[:, None]
        try:
            sol, *_ = scipy.linalg.lstsq(Ks, rhs / row_scale, lapack_driver="gelsd",
                                         check_finite=False)
            for _ in range(2):
                resid = rhs - K @ sol
                if np.abs(resid).max(initial=0.0) <= 1e-14 * (1.0 + np.abs(rhs).max()):
                    break
                corr, *_ = scipy.linalg.lstsq(Ks, resid / row_scale, lapack_driver="gelsd",
                                              check_finite=False)
                sol = sol + corr
        except (scipy.linalg.LinAlgError, ValueError):
            return None
    if not np.all(np.isfinite(sol)):
        return None
    x = np.zeros(p)
    x[free] = sol[:nf]
    lam = np.zeros(Ahat.shape[0])
    lam[eq] = sol[nf:]
    if pinned.size:
        # bound multipliers balance the gradient at the pinned coordinates
        grad = qp.Q @ x + qp.q
        if ne:
            grad = grad - qp.A[eq].T @ lam[eq]
        bound_lam = np.zeros(p)
        bound_lam[pinned] = grad[pinned]
        row_of = np.full(p, -1, dtype=np.int64)
        row_of[qp.nonneg] = k + np.arange(qp.nonneg.size)
        lam[row_of[pinned]] = bound_lam[pinned]
    return x, lam


def _evaluate(qp, x, lam):
    dual, bound_dual = _split_duals(qp, lam)
    res = _kkt_residuals(qp, x, dual, bound_dual)
    neg = _dual_negativity(dual, bound_dual, qp.nonneg)
    return dual, bound_dual, res, neg


def _meets(res: ResidualTriple, neg: float, opts: SolveOptions) -> bool:
    return (
        res.primal_infeasibility <= opts.tol_primal
        and res.dual_infeasibility <= opts.tol_dual
        and res.complementarity_gap <= opts.tol_gap
        and neg <= opts.tol_dual
    )


def _solve_unconstrained(qp: QuadraticProgram, opts: SolveOptions) -> QpSolution:
    x, *_ = scipy.linalg.lstsq(qp.Q, -qp.q, check_finite=False)
    dual = np.zeros(0)
    bound_dual = np.zeros(qp.p)
    res = _kkt_residuals(qp, x, dual, bound_dual)
    status = SolveStatus.OPTIMAL if _meets(res, 0.0, opts) else SolveStatus.ITERATION_LIMIT
    return QpSolution(x, dual, bound_dual, status, res, 0, qp_objective(qp, x))


def solve(qp: QuadraticProgram, opts: SolveOptions | None = None) -> QpSolution:
    """Solve a convex QP; deterministic for identical inputs and options.

    Optimal status certifies that the recomputed absolute KKT residuals
    are within the configured tolerances and all multipliers are
    nonnegative up to tol_dual.  Infeasible is returned only after a
    phase-1 elastic problem certifies an empty feasible set.
    """
    if opts is None:
        opts = SolveOptions()
    Ahat, chat = _fold_bounds(qp)
    if Ahat.shape[0] == 0:
        return _solve_unconstrained(qp, opts)
    sol = _ipm(qp, Ahat, chat, opts)
    suspect = sol.status in (SolveStatus.ITERATION_LIMIT, SolveStatus.NUMERICAL_FAILURE)
    if suspect and sol.residuals.primal_infeasibility > opts.tol_primal:
        if _phase1_certifies_infeasible(qp, Ahat, chat, opts):
            return replace(sol, status=SolveStatus.INFEASIBLE)
    return sol


def _starting_point(qp: QuadraticProgram, Ahat, chat):
    """Least-squares primal/dual guess shifted into the interior.

    Solves regularized normal equations for a primal point and for
    multipliers matching the gradient, then pushes slacks and duals
    positive; this keeps the initial residuals commensurate with the
    data even when the linear term is huge.
    """
    p, k = qp.p, Ahat.shape[0]
    eps = 1e-8 * (1.0 + float(np.abs(qp.Q).max(initial=0.0)) + float(np.abs(Ahat).max(initial=0.0)))
    try:
        M1 = qp.Q + Ahat.T @ Ahat + eps * np.eye(p)
        x = scipy.linalg.cho_solve(
            scipy.linalg.cho_factor(M1, lower=True, check_finite=False),
            Ahat.T @ chat - qp.q, check_finite=False,
        )
        M2 = Ahat @ Ahat.T + eps * np.eye(k)
        lam = scipy.linalg.cho_solve(
            scipy.linalg.cho_factor(M2, lower=True, check_finite=False),
            Ahat @ (qp.Q @ x + qp.q), check_finite=False,
        )
    except scipy.linalg.LinAlgError:
        x = np.zeros(p)
        lam = np.ones(k)
    s = Ahat @ x - chat
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(s)) and np.all(np.isfinite(lam))):
        x, s, lam = np.zeros(p), -chat.copy(), np.ones(k)
    dp = max(0.0, float(-1.5 * s.min(initial=0.0))) + 1e-2
    dd = max(0.0, float(-1.5 * lam.min(initial=0.0))) + 1e-2
    s_h = s + dp
    lam_h = lam + dd
    cross = float(s_h @ lam_h)
    s = s_h + 0.5 * cross / max(float(lam_h.sum()), 1e-12)
    lam = lam_h + 0.5 * cross / max(float(s_h.sum()), 1e-12)
    return x, s, lam


def _ipm(qp: QuadraticProgram, Ahat, chat, opts: SolveOptions) -> QpSolution:
    p, k = qp.p, Ahat.shape[0]
    fact = _NewtonSolver(qp.Q, Ahat, opts)

    x, s, lam = _starting_point(qp, Ahat, chat)
    if opts.start_shift:
        x = x + opts.start_shift
        s = s * (1.0 + abs(opts.start_shift)) + abs(opts.start_shift)
        lam = lam * (1.0 + abs(opts.start_shift)) + abs(opts.start_shift)

    best = None  # (worst_metric, x, lam, iterations)

    def consider(x_c, lam_c, it):
        # rank candidates by violation relative to each tolerance, so the
        # kept point is the one closest to satisfying all of them at once
        nonlocal best
        dual, bound_dual, res, neg = _evaluate(qp, x_c, lam_c)
        metric = max(
            res.primal_infeasibility / opts.tol_primal,
            res.dual_infeasibility / opts.tol_dual,
            res.complementarity_gap / opts.tol_gap,
            neg / opts.tol_dual,
        )
        if best is None or metric < best[0] * (1.0 - 1e-12):
            best = (metric, x_c.copy(), lam_c.copy(), it)
        return res, neg

    iterations = 0
    mu_history = []
    mu0 = float(s @ lam) / k
    polish_from = 1e-4 * (1.0 + mu0)
    polish_budget = 12
    mu_at_last_polish = np.inf
    dual_blowup = 1e14 * (1.0 + float(np.abs(qp.q).max(initial=0.0)))

    def try_polish(s_c, lam_c, it):
        nonlocal polish_budget, mu_at_last_polish
        polish_budget -= 1
        polished = _polish(qp, Ahat, chat, s_c <= lam_c)
        if polished is None:
            return None
        return consider(*polished, it)

    for iteration in range(1, opts.max_iterations + 1):
        iterations = iteration
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(s)) and np.all(np.isfinite(lam))):
            break
        if float(lam.max(initial=0.0)) > dual_blowup:
            break  # diverging duals: likely infeasible, settled by phase 1
        r_d = qp.Q @ x + qp.q - Ahat.T @ lam
        r_p = Ahat @ x - s - chat
        mu = float(s @ lam) / k
        mu_history.append(mu)

        res, neg = consider(x, lam, iteration)
        if _meets(res, neg, opts):
            if polish_budget > 0:  # hand back the cleanest point available
                try_polish(s, lam, iteration)
            break
        if polish_budget > 0 and mu < polish_from and mu < 0.25 * mu_at_last_polish:
            mu_at_last_polish = mu
            outcome = try_polish(s, lam, iteration)
            if outcome is not None and _meets(*outcome, opts):
                break
        if len(mu_history) > 30 and mu > 0.9 * mu_history[-31]:
            break  # barrier stalled: fall through to the final polish and phase 1

        if not fact.factor(lam / s):
            metric, bx, blam, bit = best
            dual, bound_dual, res, _ = _evaluate(qp, bx, blam)
            return QpSolution(
                bx, dual, bound_dual, SolveStatus.NUMERICAL_FAILURE, res, bit, qp_objective(qp, bx)
            )

        # predictor
        dx_a, ds_a, dlam_a = fact.step(r_d, r_p, s * lam, s, lam)
        alpha_p = min(1.0, _max_step(s, ds_a))
        alpha_d = min(1.0, _max_step(lam, dlam_a))
        mu_aff = float((s + alpha_p * ds_a) @ (lam + alpha_d * dlam_a)) / k
        sigma = min(1.0, max((mu_aff / mu) ** 3, 1e-12)) if mu > 0 else 0.0

        # corrector
        dx, ds, dlam = fact.step(r_d, r_p, s * lam + ds_a * dlam_a - sigma * mu, s, lam)
        eta = 0.9995
        alpha_p = min(1.0, eta * _max_step(s, ds))
        alpha_d = min(1.0, eta * _max_step(lam, dlam))
        if not (np.isfinite(alpha_p) and np.isfinite(alpha_d)):
            break
        for _ in range(6):  # damp steps that would blow the barrier back up
            mu_new = float((s + alpha_p * ds) @ (lam + alpha_d * dlam)) / k
            if mu_new <= 2.0 * mu or not np.isfinite(mu_new):
                break
            alpha_p *= 0.5
            alpha_d *= 0.5
        x = x + alpha_p * dx
        s = s + alpha_p * ds
        lam = lam + alpha_d * dlam
        floor = 1e-30 * (1.0 + float(np.abs(chat).max(initial=0.0)))
        s = np.maximum(s, floor)
        lam = np.maximum(lam, floor)

    # final polish attempt from the best iterate found
    metric, bx, blam, bit = best
    s_b = Ahat @ bx - chat
    polished = _polish(qp, Ahat, chat, s_b <= blam)
    if polished is not None:
        consider(*polished, iterations)
    metric, bx, blam, bit = best
    dual, bound_dual, res, neg = _evaluate(qp, bx, blam)
    status = SolveStatus.OPTIMAL if _meets(res, neg, opts) else SolveStatus.ITERATION_LIMIT
    return QpSolution(bx, dual, bound_dual, status, res, iterations, qp_objective(qp, bx))


def _phase1_certifies_infeasible(qp: QuadraticProgram, Ahat, chat, opts) -> bool:
    """Elastic feasibility problem: min 1't + delta/2 ||(x,t)||^2 s.t. Ahat x + t >= chat, t >= 0."""
    p, k = qp.p, Ahat.shape[0]
    scale = 1.0 + float(np.abs(chat).max(initial=0.0)) + float(np.abs(Ahat).max(initial=0.0))
    delta = 1e-8 * scale
    Q1 = delta * np.eye(p + k)
    q1 = np.concatenate([np.zeros(p), np.ones(k)])
    A1 = np.hstack([Ahat, np.eye(k)])
    phase1 = QuadraticProgram(Q1, q1, A1, chat, nonneg=np.arange(p, p + k))
    p1_opts = SolveOptions(
        tol_primal=1e-9 * scale,
        tol_dual=1e-9 * scale,
        tol_gap=1e-9 * scale,
        max_iterations=opts.max_iterations,
    )
    sol = _ipm(phase1, *_fold_bounds(phase1), p1_opts)
    total_violation = float(sol.x[p:].sum())
    return total_violation > 1e-6 * (1.0 + float(np.abs(chat).max(initial=0.0)))


# ---------------------------------------------------------------------------
# active-set enumeration oracle
# ---------------------------------------------------------------------------


def solve_oracle(qp: QuadraticProgram, tol: float = 1e-8) -> QpSolution:
    """Exact reference solution of a tiny QP by enumerating active sets.

    Every subset of constraint rows (including nonnegativity rows) is
    treated as a candidate active set; each equality-constrained QP is
    solved and the best feasible KKT point kept.  Infeasibility is
    certified with a feasibility LP.  Limits: p <= 8 and at most 12
    constraint rows in total.
    """
    Ahat, chat = _fold_bounds(qp)
    p, k = qp.p, Ahat.shape[0]
    if p > 8 or k > 12:
        raise ValueError(f"oracle limits exceeded: p={p}, constraints={k}")
    if k == 0:
        return _solve_unconstrained(qp, SolveOptions())

    scale = 1.0 + max(
        float(np.abs(qp.Q).max(initial=0.0)),
        float(np.abs(qp.q).max(initial=0.0)),
        float(np.abs(chat).max(initial=0.0)),
    )
    feas_tol = tol * scale
    best = None  # (objective, x, lam)
    for size in range(0, min(p, k) + 1):
        for subset in combinations(range(k), size):
            active = np.zeros(k, dtype=bool)
            active[list(subset)] = True
            polished = _polish(qp, Ahat, chat, active)
            if polished is None:
                continue
            x, lam = polished
            # the lstsq solution must actually satisfy the KKT equalities
            grad = qp.Q @ x + qp.q - Ahat.T @ lam
            if np.abs(grad).max(initial=0.0) > feas_tol:
                continue
            if active.any() and np.abs(Ahat[active] @ x - chat[active]).max() > feas_tol:
                continue
            if (Ahat @ x - chat).min() < -feas_tol:
                continue
            if lam.min(initial=0.0) < -feas_tol:
                continue
            obj = qp_objective(qp, x)
            if best is None or obj < best[0] - 1e-15 * scale:
                best = (obj, x, lam)

    if best is not None:
        obj, x, lam = best
        dual, bound_dual = _split_duals(qp, np.maximum(lam, 0.0))
        res = _kkt_residuals(qp, x, dual, bound_dual)
        return QpSolution(x, dual, bound_dual, SolveStatus.OPTIMAL, res, 0, obj)

    lp = scipy.optimize.linprog(
        c=np.zeros(p), A_ub=-Ahat, b_ub=-chat, bounds=[(None, None)] * p, method="highs"
    )
    status = SolveStatus.INFEASIBLE if lp.status == 2 else SolveStatus.ITERATION_LIMIT
    x = np.zeros(p)
    dual, bound_dual = _split_duals(qp, np.zeros(k))
    res = _kkt_residuals(qp, x, dual, bound_dual)
    return QpSolution(x, dual, bound_dual, status, res, 0, qp_objective(qp, x))
