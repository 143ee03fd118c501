"""Executable checks for the properties the trained models rely on.

Covers the data assumptions (full column rank, all-ones vector outside
the column space), positive definiteness of the quadratic-form matrix G
(directly and through its Schur complement), separability certificates,
KKT verification of every variant including the L1 subdifferential, and
the flattening comparison against the linear SVM.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import models
from .halfvec import Dataset, DesignCache, assemble_design, hvec, hvec_index_pairs, quad_eval
from .models import (
    NotLinearlySeparable,
    SolverFailure,
    TrainConfig,
    TrainReport,
    QuadSurfaceModel,
    Variant,
)
from .qp import QuadraticProgram, SolveOptions, SolveStatus, solve

__all__ = [
    "SeparabilityKind",
    "SeparabilityCertificate",
    "KktReport",
    "check_assumptions",
    "is_G_pd",
    "schur_complement_pd",
    "check_separability",
    "verify_kkt",
    "verify_model_kkt",
    "restricted_pin_multipliers",
    "compare_with_svm",
    "svm_equivalence_lhs",
    "curvature",
    "hard_margin_c_interval",
]


def check_assumptions(dataset: Dataset) -> dict:
    """Rank and column-space checks on the sample matrix.

    a1: X has full column rank (singular values above a relative cutoff).
    a2: the all-ones vector is not in the column space of X (the
    least-squares residual of fitting it exceeds 1e-8 * sqrt(m)).
    """
    X = dataset.X
    m, n = X.shape
    sv = np.linalg.svd(X, compute_uv=False)
    a1 = bool(sv.size and sv[-1] > 1e-10 * sv[0] * max(m, n))
    ones = np.ones(m)
    coef, *_ = np.linalg.lstsq(X, ones, rcond=None)
    residual = float(np.linalg.norm(X @ coef - ones))
    a2 = bool(residual > 1e-8 * np.sqrt(m))
    return {"a1": a1, "a2": a2}


def _spectral_pd(S: np.ndarray) -> bool:
    eig = np.linalg.eigvalsh(S)
    norm2 = float(max(abs(eig[0]), abs(eig[-1])))
    return bool(eig[0] > 1e-8 * norm2)


def is_G_pd(cache: DesignCache) -> bool:
    """Positive definiteness of G by direct eigenvalue test."""
    return _spectral_pd(cache.G)


def schur_complement_pd(cache: DesignCache) -> bool:
    """Equivalent test on the Schur complement of G's identity block."""
    P = cache.s.shape[1]
    G11 = cache.G[:P, :P]
    G12 = cache.G[:P, P:]
    schur = G11 - (G12 @ G12.T) / (2.0 * cache.m)
    return _spectral_pd(schur)


class SeparabilityKind(Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    NONE = "none"


@dataclass(frozen=True)
class SeparabilityCertificate:
    kind: SeparabilityKind
    witness: tuple[np.ndarray, np.ndarray, float] | None  # (W, b, c)
    min_margin: float | None


def check_separability(dataset: Dataset, kind) -> SeparabilityCertificate:
    """Search for a margin-1 separator of the requested kind.

    Solves min ||vars||^2 / 2 subject to y f(x) >= 1; a feasible point is
    a strict separator (margin >= 1 > 0), infeasibility certifies that no
    separator exists.
    """
    if isinstance(kind, str):
        kind = SeparabilityKind(kind.lower())
    if kind is SeparabilityKind.NONE:
        raise ValueError("request LINEAR or QUADRATIC")
    X, y, n = dataset.X, dataset.y.astype(float), dataset.n
    if kind is SeparabilityKind.LINEAR:
        A = np.hstack([y[:, None] * X, y[:, None]])
    else:
        rows, cols = hvec_index_pairs(n)
        S = X[:, rows] * X[:, cols]
        S[:, rows == cols] *= 0.5
        A = np.hstack([y[:, None] * S, y[:, None] * X, y[:, None]])
    p = A.shape[1]
    qp = QuadraticProgram(np.eye(p), np.zeros(p), A, np.ones(dataset.m))
    scale = max(1.0, float(np.abs(A).max()))
    opts = SolveOptions(tol_primal=1e-8 * scale, tol_dual=1e-8 * scale, tol_gap=1e-8 * scale)
    sol = solve(qp, opts)
    if sol.status is SolveStatus.INFEASIBLE:
        return SeparabilityCertificate(SeparabilityKind.NONE, None, None)
    if sol.status is not SolveStatus.OPTIMAL:
        raise SolverFailure(f"separability solve ended with status {sol.status.value}")
    if kind is SeparabilityKind.LINEAR:
        W = np.zeros((n, n))
        b = sol.x[:n].copy()
        c = float(sol.x[n])
    else:
        from .halfvec import unhvec

        P = S.shape[1]
        W = unhvec(sol.x[:P])
        b = sol.x[P : P + n].copy()
        c = float(sol.x[P + n])
    margin = float(np.min(y * quad_eval(W, b, c, X)))
    return SeparabilityCertificate(kind, (W, b, c), margin)


@dataclass(frozen=True)
class KktReport:
    """Worst violation per category of a variant's optimality system."""

    stationarity: float
    primal_feasibility: float
    complementarity: float
    dual_feasibility: float  # most negative multiplier (>= -tol when clean)
    multipliers: dict


def verify_kkt(dataset: Dataset, report: TrainReport, cache: DesignCache | None = None) -> KktReport:
    """Re-derive every optimality condition of the original formulation.

    The classification-row duals of the solved QP are the multipliers of
    the margin constraints; for soft variants the slack multipliers are
    recovered as eta = mu - alpha.  L1 stationarity on w is checked
    coordinatewise: the smooth gradient must sit within [-lambda, lambda]
    where w_j = 0 and at -lambda * sign(w_j) elsewhere.  Pure function of
    its inputs.
    """
    model = report.model
    variant = model.variant
    X, y = dataset.X, dataset.y.astype(float)
    m = dataset.m
    alpha = report.split_solution.alpha
    f = model.decision_values(X)
    xi = report.xi
    margins = 1.0 - xi - y * f  # <= 0 when feasible

    primal = float(np.maximum(margins, 0.0).max(initial=0.0))
    if variant.is_soft:
        primal = max(primal, float(np.maximum(-xi, 0.0).max()))
    comp = float(np.abs(alpha * margins).max(initial=0.0))
    dual_feas = float(alpha.min(initial=0.0))
    multipliers = {"alpha": alpha.copy()}

    if variant.is_soft:
        eta = model.mu - alpha
        comp = max(comp, float(np.abs(xi * eta).max(initial=0.0)))
        dual_feas = min(dual_feas, float(eta.min()))
        multipliers["eta"] = eta

    stat_c = abs(float(alpha @ y))
    if variant.is_quadratic:
        if cache is None:
            cache = assemble_design(dataset)
        P = cache.s.shape[1]
        w = hvec(model.W)
        Gww, Gwb, Gbb = cache.G[:P, :P], cache.G[:P, P:], cache.G[P:, P:]
        ay = alpha * y
        bracket = Gww @ w + Gwb @ model.b - cache.s.T @ ay
        lam = model.lambda_
        ztol = 1e-6 * (1.0 + float(np.abs(w).max(initial=0.0)))
        res_w = np.where(
            np.abs(w) <= ztol,
            np.maximum(np.abs(bracket) - lam, 0.0),
            np.abs(bracket + lam * np.sign(w)),
        )
        zero_set = report.config.zero_set if report.config is not None else None
        if zero_set:
            pins = np.asarray(zero_set, dtype=np.int64)
            beta = -np.sign(bracket[pins]) * np.maximum(np.abs(bracket[pins]) - lam, 0.0)
            multipliers["beta"] = beta
            res_w[pins] = 0.0  # absorbed by the pin multipliers
        stat_w = float(res_w.max(initial=0.0))
        stat_b = float(np.abs(Gwb.T @ w + Gbb @ model.b - X.T @ ay).max())
        stationarity = max(stat_w, stat_b, stat_c)
    else:
        stat_u = float(np.abs(model.b - X.T @ (alpha * y)).max())
        stationarity = max(stat_u, stat_c)

    return KktReport(
        stationarity=stationarity,
        primal_feasibility=primal,
        complementarity=comp,
        dual_feasibility=dual_feas,
        multipliers=multipliers,
    )


def verify_model_kkt(dataset: Dataset, model: QuadSurfaceModel,
                     active_tol: float = 1e-6, cache: DesignCache | None = None) -> KktReport:
    """KKT check for a model without solver multipliers (e.g. loaded from file).

    Multipliers are reconstructed by bounded least squares over the
    near-active margin constraints (|y f(x) - 1 + xi| within active_tol
    of zero, scaled), with slacks xi taken as the constraint violations.
    A well-fitted model yields small residuals; a perturbed one does not.
    """
    import scipy.optimize

    X, y = dataset.X, dataset.y.astype(float)
    m = dataset.m
    f = model.decision_values(X)
    xi = np.maximum(0.0, 1.0 - y * f) if model.variant.is_soft else np.zeros(m)
    margins = y * f - 1.0 + xi
    scale = 1.0 + float(np.abs(f).max())
    active = np.abs(margins) <= active_tol * scale
    alpha = np.zeros(m)
    if active.any():
        if model.variant.is_quadratic:
            if cache is None:
                cache = assemble_design(dataset)
            P = cache.s.shape[1]
            w = hvec(model.W)
            Gww, Gwb, Gbb = cache.G[:P, :P], cache.G[:P, P:], cache.G[P:, P:]
            grad_w = Gww @ w + Gwb @ model.b
            lam = model.lambda_
            nz = np.abs(w) > 1e-6 * (1.0 + np.abs(w).max(initial=0.0))
            # every w coordinate constrains the multipliers: nonzero ones
            # with a fixed subgradient sign, zero ones through an extra
            # variable v_j in [-lam, lam] standing for the subgradient term
            target = np.concatenate([
                (grad_w + lam * np.sign(w))[nz],
                grad_w[~nz],
                Gwb.T @ w + Gbb @ model.b,
                [0.0],
            ])
            columns = np.concatenate([cache.s[:, nz].T, cache.s[:, ~nz].T,
                                      X.T, np.ones((1, m))])
            n_zero = int((~nz).sum())
        else:
            target = np.concatenate([model.b, [0.0]])
            columns = np.concatenate([X.T, np.ones((1, m))])
            n_zero = 0
        A = columns[:, active] * y[active]
        n_active = int(active.sum())
        if n_zero:
            V = np.zeros((A.shape[0], n_zero))
            offset = int(nz.sum())
            V[offset : offset + n_zero] = -np.eye(n_zero)
            A = np.hstack([A, V])
        upper = model.mu if model.variant.is_soft else np.inf
        lam_box = model.lambda_ + 1e-30
        lower = np.concatenate([np.zeros(n_active), -lam_box * np.ones(n_zero)])
        higher = np.concatenate([np.full(n_active, upper), lam_box * np.ones(n_zero)])
        fit = scipy.optimize.lsq_linear(A, target, bounds=(lower, higher))
        alpha[active] = fit.x[:n_active]
    layout_stub = models.variable_layout(
        TrainConfig(
            variant=model.variant,
            lambda_=model.lambda_ if model.variant.has_l1_penalty else 0.0,
            mu=model.mu,
            zero_set=None if model.variant is not Variant.RQSSVM else (),
        ),
        dataset.n,
        m,
    )
    split = models.SplitSolution(
        x=np.zeros(layout_stub.size), dual=alpha, bound_dual=np.zeros(layout_stub.size),
        layout=layout_stub,
    )
    report = TrainReport(
        model=model, xi=xi, objective=0.0,
        kkt=None, solver_stats=None, split_solution=split, config=None,
    )
    return verify_kkt(dataset, report, cache=cache)


def restricted_pin_multipliers(dataset: Dataset, report: TrainReport, cache=None) -> np.ndarray:
    """Multipliers of the pinned coordinates of a restricted-model fit.

    Ordered like the config's zero_set; each is the part of the pinned
    coordinate's gradient that the L1 subdifferential cannot absorb.
    When they all vanish, the pins are inactive: dropping them leaves the
    optimum unchanged, which is the mechanism by which a large enough L1
    weight recovers the true sparsity pattern.
    """
    if report.model.variant is not Variant.RQSSVM or not report.config.zero_set:
        raise ValueError("report must come from a restricted fit with pinned coordinates")
    kkt = verify_kkt(dataset, report, cache=cache)
    return kkt.multipliers["beta"]


def compare_with_svm(dataset: Dataset, lambda_: float, solver: SolveOptions | None = None) -> dict:
    """Gap between the L1 quadratic model at the given weight and the SVM."""
    solver = solver or SolveOptions()
    try:
        svm = models.train(dataset, TrainConfig(variant=Variant.SVM, solver=solver))
    except models.HardMarginInfeasible as exc:
        raise NotLinearlySeparable(str(exc)) from None
    l1 = models.train(dataset, TrainConfig(variant=Variant.L1QSSVM, lambda_=lambda_, solver=solver))
    return {
        "w_infnorm": float(np.abs(hvec(l1.model.W)).max()),
        "b_gap": float(np.abs(l1.model.b - svm.model.b).max()),
        "c_gap": abs(l1.model.c - svm.model.c),
    }


def svm_equivalence_lhs(dataset: Dataset, cache: DesignCache | None = None) -> float:
    """Max norm of the w-gradient of the quadratic model at the SVM solution.

    An L1 weight of at least twice this value keeps the SVM solution
    stationary for the quadratic model, which is the flattening mechanism
    behind the equivalence bound.
    """
    try:
        svm = models.train(dataset, TrainConfig(variant=Variant.SVM))
    except models.HardMarginInfeasible as exc:
        raise NotLinearlySeparable(str(exc)) from None
    if cache is None:
        cache = assemble_design(dataset)
    P = cache.s.shape[1]
    beta = svm.split_solution.alpha
    a = 0.5 * cache.G[:P, P:] @ svm.model.b - dataset.m * (
        cache.s.T @ (beta * dataset.y.astype(float))
    )
    return float(np.abs(a).max())


def curvature(model: QuadSurfaceModel) -> float:
    """Share of the surface coefficients carried by the quadratic part.

    0 exactly when W = 0 (a hyperplane), close to 1 when the quadratic
    part dominates.
    """
    w_norm = float(np.linalg.norm(model.W, "fro"))
    return w_norm / (w_norm + float(np.linalg.norm(model.b)) + abs(model.c) + 1e-30)


def hard_margin_c_interval(dataset: Dataset, model: QuadSurfaceModel) -> tuple[float, float]:
    """Feasible interval for the constant term with (W, b) held fixed.

    The hard-margin constant is not necessarily unique; any c between the
    endpoints keeps every margin constraint satisfied.
    """
    t = model.decision_values(dataset.X) - model.c
    pos = dataset.y == 1
    lo = float((1.0 - t[pos]).max())
    hi = float((-1.0 - t[~pos]).min())
    return lo, hi
