"""Classifier formulations built on quadratic-surface separation.

Seven variants share one trainer: hard- and soft-margin linear SVMs,
their quadratic-surface counterparts, the L1-penalized quadratic models,
and a restricted model that pins selected half-vector coordinates of W
to zero.  Each is posed as a smooth convex QP (the L1 term through the
variable splitting w = p - q with p, q >= 0) and solved by qp.solve.
"""

import time
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .halfvec import (
    Dataset,
    DesignCache,
    assemble_design,
    hvec,
    hvec_size,
    quad_eval,
    unhvec,
)
from .qp import (
    QuadraticProgram,
    ResidualTriple,
    SolveOptions,
    SolveStatus,
    solve,
)

__all__ = [
    "Variant",
    "TrainConfig",
    "QuadSurfaceModel",
    "TrainReport",
    "VariableLayout",
    "HardMarginInfeasible",
    "SolverFailure",
    "NotLinearlySeparable",
    "NotQuadraticallySeparable",
    "variable_layout",
    "build_qp",
    "train",
    "predict",
    "lambda_equivalence_bound",
    "mu_vanishing_bound",
    "sparsity_pattern",
    "model_to_text",
    "model_from_text",
    "save_model",
    "load_model",
]


class HardMarginInfeasible(Exception):
    """Raised when a hard-margin model is trained on non-separable data."""


class SolverFailure(Exception):
    """Raised when the QP solver cannot certify an optimal solution."""


class NotLinearlySeparable(Exception):
    pass


class NotQuadraticallySeparable(Exception):
    pass


class Variant(Enum):
    SVM = "SVM"
    SSVM = "SSVM"
    QSSVM = "QSSVM"
    SQSSVM = "SQSSVM"
    L1QSSVM = "L1-QSSVM"
    L1SQSSVM = "L1-SQSSVM"
    RQSSVM = "R-QSSVM"

    @property
    def is_soft(self) -> bool:
        return self in (Variant.SSVM, Variant.SQSSVM, Variant.L1SQSSVM)

    @property
    def is_quadratic(self) -> bool:
        return self not in (Variant.SVM, Variant.SSVM)

    @property
    def has_l1_penalty(self) -> bool:
        return self in (Variant.L1QSSVM, Variant.L1SQSSVM, Variant.RQSSVM)


@dataclass(frozen=True)
class TrainConfig:
    """Variant selection plus the penalty weights it needs.

    lambda_ weights the L1 penalty on hvec(W) (L1 variants and the
    restricted model; must be 0 elsewhere).  mu weights the slack sum of
    soft variants.  zero_set lists half-vector indices pinned to zero,
    only for the restricted variant.
    """

    variant: Variant
    lambda_: float = 0.0
    mu: float | None = None
    zero_set: tuple[int, ...] | None = None
    solver: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if not np.isfinite(self.lambda_) or self.lambda_ < 0.0:
            raise ValueError("lambda_ must be finite and >= 0")
        if self.lambda_ > 0.0 and not self.variant.has_l1_penalty:
            raise ValueError(f"{self.variant.value} takes no L1 penalty; lambda_ must be 0")
        if self.variant.is_soft:
            if self.mu is None or not self.mu > 0.0:
                raise ValueError("soft variants require mu > 0")
        elif self.mu is not None:
            raise ValueError(f"{self.variant.value} is hard-margin; mu must be None")
        if (self.zero_set is not None) != (self.variant is Variant.RQSSVM):
            raise ValueError("zero_set is required for R-QSSVM and only for it")
        if self.zero_set is not None:
            zs = tuple(sorted(set(int(j) for j in self.zero_set)))
            if zs and zs[0] < 0:
                raise ValueError("zero_set indices must be nonnegative")
            object.__setattr__(self, "zero_set", zs)


@dataclass(frozen=True)
class QuadSurfaceModel:
    """Fitted separating surface f(x) = x'Wx/2 + b'x + c.

    W is exactly zero for the linear variants.  lambda_ and mu record the
    penalties the model was trained with (mu is None for hard margins).
    """

    W: np.ndarray
    b: np.ndarray
    c: float
    variant: Variant
    lambda_: float = 0.0
    mu: float | None = None

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if W.shape != (b.shape[0], b.shape[0]) or not np.array_equal(W, W.T):
            raise ValueError("W must be symmetric and match b's dimension")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    def decision_values(self, x: np.ndarray):
        return quad_eval(self.W, self.b, self.c, x)


def predict(model: QuadSurfaceModel, x: np.ndarray):
    """Predicted label(s) sign(f(x)); a value of exactly 0 maps to +1."""
    vals = model.decision_values(x)
    if np.isscalar(vals):
        return 1 if vals >= 0.0 else -1
    return np.where(vals >= 0.0, 1, -1).astype(np.int64)


@dataclass(frozen=True)
class VariableLayout:
    """Column layout of the smooth QP for one (variant, n, m) combination.

    kind is "linear" (variables b, c[, xi]), "quad" (w, b, c[, xi]) or
    "split" (p, q, b, c[, xi] with w = p - q).
    """

    kind: str
    n: int
    m: int
    P: int
    has_xi: bool
    p: slice | None
    q: slice | None
    w: slice | None
    b: slice
    c: int
    xi: slice | None
    size: int
    nonneg: np.ndarray

    def extract_w(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "linear":
            return np.zeros(hvec_size(self.n))
        if self.kind == "quad":
            return x[self.w].copy()
        return x[self.p] - x[self.q]

    def extract_xi(self, x: np.ndarray) -> np.ndarray:
        if not self.has_xi:
            return np.zeros(self.m)
        return x[self.xi].copy()


def variable_layout(config: TrainConfig, n: int, m: int) -> VariableLayout:
    if not config.variant.is_quadratic:
        kind = "linear"
    elif config.variant.has_l1_penalty and config.lambda_ > 0.0:
        kind = "split"
    else:
        kind = "quad"
    P = hvec_size(n)
    has_xi = config.variant.is_soft
    pos = 0
    p = q = w = None
    if kind == "split":
        p = slice(pos, pos + P)
        q = slice(pos + P, pos + 2 * P)
        pos += 2 * P
    elif kind == "quad":
        w = slice(pos, pos + P)
        pos += P
    b = slice(pos, pos + n)
    pos += n
    c = pos
    pos += 1
    xi = None
    if has_xi:
        xi = slice(pos, pos + m)
        pos += m
    nonneg = []
    if kind == "split":
        nonneg.extend(range(p.start, q.stop))
    if has_xi:
        nonneg.extend(range(xi.start, xi.stop))
    return VariableLayout(
        kind=kind, n=n, m=m, P=P, has_xi=has_xi, p=p, q=q, w=w, b=b, c=c, xi=xi,
        size=pos, nonneg=np.asarray(nonneg, dtype=np.int64),
    )


def build_qp(dataset: Dataset, config: TrainConfig, cache: DesignCache,
             l1_cap: float | None = None) -> QuadraticProgram:
    """Pose the configured variant as a smooth convex QP.

    Classification rows come first, in sample order, so row i's dual is
    the multiplier of sample i's margin constraint.  For the restricted
    variant, each pinned coordinate contributes the two rows w_j >= 0
    and -w_j >= 0 after the classification block.

    l1_cap, when given, appends one row sum(p) + sum(q) <= l1_cap to a
    split formulation.  With a cap strictly above the L1 norm of the
    optimum the row is slack there, so the solution is unchanged; it
    only tames the unbounded p, q drift that makes weakly penalized
    splits ill-conditioned.
    """
    layout = variable_layout(config, dataset.n, dataset.m)
    if l1_cap is not None and layout.kind != "split":
        raise ValueError("l1_cap applies only to split formulations")
    n, m, P = layout.n, layout.m, layout.P
    y = dataset.y.astype(float)

    Q = np.zeros((layout.size, layout.size))
    lin = np.zeros(layout.size)
    if layout.kind == "linear":
        Q[layout.b, layout.b] = np.eye(n)
    else:
        G = cache.G
        Gww, Gwb, Gbb = G[:P, :P], G[:P, P:], G[P:, P:]
        if layout.kind == "quad":
            Q[layout.w, layout.w] = Gww
            Q[layout.w, layout.b] = Gwb
            Q[layout.b, layout.w] = Gwb.T
        else:
            Q[layout.p, layout.p] = Gww
            Q[layout.q, layout.q] = Gww
            Q[layout.p, layout.q] = -Gww
            Q[layout.q, layout.p] = -Gww
            Q[layout.p, layout.b] = Gwb
            Q[layout.q, layout.b] = -Gwb
            Q[layout.b, layout.p] = Gwb.T
            Q[layout.b, layout.q] = -Gwb.T
            lin[layout.p] = config.lambda_
            lin[layout.q] = config.lambda_
        Q[layout.b, layout.b] = Gbb
    if layout.has_xi:
        lin[layout.xi] = config.mu

    rows = m
    pins = config.zero_set or ()
    if pins and max(pins) >= P:
        raise ValueError(f"zero_set index {max(pins)} out of range for n={n}")
    extra = 1 if l1_cap is not None else 0
    A = np.zeros((rows + 2 * len(pins) + extra, layout.size))
    ys = y[:, None]
    if layout.kind == "linear":
        A[:m, layout.b] = ys * dataset.X
    elif layout.kind == "quad":
        A[:m, layout.w] = ys * cache.s
        A[:m, layout.b] = ys * dataset.X
    else:
        A[:m, layout.p] = ys * cache.s
        A[:m, layout.q] = -ys * cache.s
        A[:m, layout.b] = ys * dataset.X
    A[:m, layout.c] = y
    if layout.has_xi:
        A[np.arange(m), layout.xi.start + np.arange(m)] = 1.0
    for t, j in enumerate(pins):
        r = rows + 2 * t
        if layout.kind == "split":
            A[r, layout.p.start + j] = 1.0
            A[r, layout.q.start + j] = -1.0
        else:
            A[r, layout.w.start + j] = 1.0
        A[r + 1] = -A[r]
    rhs = np.concatenate([np.ones(m), np.zeros(2 * len(pins) + extra)])
    if l1_cap is not None:
        A[-1, layout.p] = -1.0
        A[-1, layout.q] = -1.0
        rhs[-1] = -float(l1_cap)
    return QuadraticProgram(Q, lin, A, rhs, nonneg=layout.nonneg)


@dataclass(frozen=True)
class SolverStats:
    iterations: int
    wall_time: float
    status: SolveStatus


@dataclass(frozen=True)
class SplitSolution:
    """Raw QP solution plus its variable layout, kept for diagnostics."""

    x: np.ndarray
    dual: np.ndarray
    bound_dual: np.ndarray
    layout: VariableLayout

    @property
    def alpha(self) -> np.ndarray:
        """Multipliers of the m classification rows."""
        return self.dual[: self.layout.m]

    @property
    def p_vec(self) -> np.ndarray | None:
        return None if self.layout.p is None else self.x[self.layout.p]

    @property
    def q_vec(self) -> np.ndarray | None:
        return None if self.layout.q is None else self.x[self.layout.q]


@dataclass(frozen=True)
class TrainReport:
    model: QuadSurfaceModel
    xi: np.ndarray
    objective: float
    kkt: ResidualTriple  # on the original (unsplit) formulation
    solver_stats: SolverStats
    split_solution: SplitSolution
    config: TrainConfig | None = None


def _original_objective(dataset: Dataset, model: QuadSurfaceModel, xi: np.ndarray) -> float:
    if model.variant.is_quadratic:
        resid = dataset.X @ model.W + model.b
        value = float(np.sum(resid * resid))
        value += model.lambda_ * float(np.abs(hvec(model.W)).sum())
    else:
        value = 0.5 * float(model.b @ model.b)
    if model.variant.is_soft:
        value += model.mu * float(xi.sum())
    return value


def _scaled_options(opts: SolveOptions, qp: QuadraticProgram) -> SolveOptions:
    # Tolerances are absolute; stretch them with the data magnitudes so a
    # well-solved large-scale instance still certifies as optimal.  Huge
    # linear terms (large L1 weights) only widen the tolerances by their
    # floating-point evaluation floor, not their full magnitude.
    a_max = float(np.abs(qp.A).max(initial=0.0))
    c_max = float(np.abs(qp.c).max(initial=0.0))
    q_max = float(np.abs(qp.q).max(initial=0.0))
    big_q = float(np.abs(qp.Q).max(initial=0.0))
    geometry = max(1.0, a_max, c_max)
    return replace(
        opts,
        tol_primal=opts.tol_primal * geometry,
        tol_dual=opts.tol_dual * max(1.0, big_q, a_max) + 1e-12 * max(q_max, big_q),
        tol_gap=opts.tol_gap * geometry + 1e-13 * max(q_max, big_q),
    )


def train(dataset: Dataset, config: TrainConfig, cache: DesignCache | None = None) -> TrainReport:
    """Fit one variant on a dataset and certify the result.

    Soft variants always succeed on valid data.  Hard variants raise
    HardMarginInfeasible when the solver certifies that no separating
    surface of the required kind exists; any other failure to reach a
    certified optimum raises SolverFailure.  Pass a precomputed design
    cache when sweeping penalties over one dataset.
    """
    if config.variant.is_quadratic and cache is None:
        cache = assemble_design(dataset)
    qp = build_qp(dataset, config, cache)
    layout = variable_layout(config, dataset.n, dataset.m)

    start = time.perf_counter()
    sol = solve(qp, _scaled_options(config.solver, qp))
    if sol.status not in (SolveStatus.OPTIMAL, SolveStatus.INFEASIBLE) and layout.kind == "split":
        # A weakly penalized split drifts along p, q -> p + t, q + t and can
        # defeat the interior-point method.  The L1 norm of the optimum is
        # nonincreasing in the penalty weight, so a cap derived from the
        # unpenalized fit is slack at the optimum yet bounds the drift.
        base = replace(config, lambda_=0.0)
        base_sol = None
        try:
            base_qp = build_qp(dataset, base, cache)
            base_sol = solve(base_qp, _scaled_options(config.solver, base_qp))
        except ValueError:
            pass
        if base_sol is not None and base_sol.status is SolveStatus.OPTIMAL:
            base_layout = variable_layout(base, dataset.n, dataset.m)
            cap = 1.01 * float(np.abs(base_layout.extract_w(base_sol.x)).sum()) + 1.0
            qp = build_qp(dataset, config, cache, l1_cap=cap)
            sol = solve(qp, _scaled_options(config.solver, qp))
    elapsed = time.perf_counter() - start

    if sol.status is SolveStatus.INFEASIBLE:
        if not config.variant.is_soft:
            kind = "quadratically" if config.variant.is_quadratic else "linearly"
            raise HardMarginInfeasible(
                f"{config.variant.value}: dataset is not {kind} separable"
            )
        raise SolverFailure("soft-margin problem reported infeasible")
    if sol.status is not SolveStatus.OPTIMAL:
        raise SolverFailure(
            f"solver status {sol.status.value}, residuals {tuple(sol.residuals)}"
        )

    w = layout.extract_w(sol.x)
    if config.zero_set:
        w[list(config.zero_set)] = 0.0
    model = QuadSurfaceModel(
        W=unhvec(w),
        b=sol.x[layout.b].copy(),
        c=float(sol.x[layout.c]),
        variant=config.variant,
        lambda_=config.lambda_,
        mu=config.mu,
    )
    xi = np.maximum(layout.extract_xi(sol.x), 0.0)
    split = SplitSolution(x=sol.x, dual=sol.dual, bound_dual=sol.bound_dual, layout=layout)

    from .diagnostics import verify_kkt as _verify_kkt  # deferred: diagnostics imports models

    report = TrainReport(
        model=model,
        xi=xi,
        objective=_original_objective(dataset, model, xi),
        kkt=ResidualTriple(0.0, 0.0, 0.0),
        solver_stats=SolverStats(sol.iterations, elapsed, sol.status),
        split_solution=split,
        config=config,
    )
    kkt = _verify_kkt(dataset, report, cache=cache)
    return replace(
        report,
        kkt=ResidualTriple(kkt.primal_feasibility, kkt.stationarity, kkt.complementarity),
    )


def lambda_equivalence_bound(dataset: Dataset) -> float:
    """L1 weight above which the quadratic model provably flattens to the SVM.

    Uses a strictly feasible linear witness obtained by doubling the
    hard-margin SVM solution, so the witness margin is at least 2 and the
    denominator term is at least 1.  Raises NotLinearlySeparable when no
    separating hyperplane exists.
    """
    try:
        report = train(dataset, TrainConfig(variant=Variant.SVM))
    except HardMarginInfeasible as exc:
        raise NotLinearlySeparable(str(exc)) from None
    u_bar = 2.0 * report.model.b
    d_bar = 2.0 * report.model.c
    margins = dataset.y * (dataset.X @ u_bar + d_bar) - 1.0
    c2 = float(margins.min())
    if c2 <= 0.0:
        raise NotLinearlySeparable("witness is not strictly feasible")
    X = dataset.X
    spectral = float(np.linalg.norm(X, 2))
    max_l2 = float(np.linalg.norm(X, axis=1).max())
    max_inf_sq = float((np.abs(X).max(axis=1) ** 2).max())
    return dataset.m * (u_bar @ u_bar) / (2.0 * c2) * (spectral * max_l2 + max_inf_sq)


def mu_vanishing_bound(dataset: Dataset, lambda_: float) -> float:
    """Slack weight above which the soft L1 model has all slacks zero.

    Computed as (objective of a strictly feasible witness - hard-margin
    optimum) / witness margin, with the witness obtained by doubling the
    hard-margin L1 solution.  Raises NotQuadraticallySeparable when no
    separating quadratic surface exists.
    """
    try:
        hard = train(dataset, TrainConfig(variant=Variant.L1QSSVM, lambda_=lambda_))
    except HardMarginInfeasible as exc:
        raise NotQuadraticallySeparable(str(exc)) from None
    q_star = hard.objective
    W_bar, b_bar, c_bar = 2.0 * hard.model.W, 2.0 * hard.model.b, 2.0 * hard.model.c
    margins = dataset.y * quad_eval(W_bar, b_bar, c_bar, dataset.X) - 1.0
    c1 = float(margins.min())
    if c1 <= 0.0:
        raise NotQuadraticallySeparable("witness is not strictly feasible")
    resid = dataset.X @ W_bar + b_bar
    q_bar = float(np.sum(resid * resid)) + lambda_ * float(np.abs(hvec(W_bar)).sum())
    return (q_bar - q_star) / c1


def sparsity_pattern(model: QuadSurfaceModel, tol: float) -> np.ndarray:
    """Half-vector indices of W treated as zero at the given tolerance."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    w = hvec(model.W)
    cutoff = tol * (1.0 + float(np.abs(w).max(initial=0.0)))
    return np.flatnonzero(np.abs(w) <= cutoff)


# ---------------------------------------------------------------------------
# model serialization: one labeled text document per model
# ---------------------------------------------------------------------------

_FORMAT_TAG = "qssvm-model-v1"


def model_to_text(model: QuadSurfaceModel) -> str:
    """Serialize with shortest round-tripping decimal floats (lossless)."""
    lines = [
        f"format: {_FORMAT_TAG}",
        f"variant: {model.variant.value}",
        f"n: {model.n}",
        f"lambda: {model.lambda_!r}",
        f"mu: {'none' if model.mu is None else repr(model.mu)}",
        f"c: {model.c!r}",
        "b: " + " ".join(repr(float(v)) for v in model.b),
        "w: " + " ".join(repr(float(v)) for v in hvec(model.W)),
    ]
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> QuadSurfaceModel:
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        key, _, value = line.partition(":")
        fields[key.strip()] = value.strip()
    if fields.get("format") != _FORMAT_TAG:
        raise ValueError(f"unrecognized model format {fields.get('format')!r}")
    n = int(fields["n"])
    b = np.array([float(v) for v in fields["b"].split()]) if n else np.zeros(0)
    w = np.array([float(v) for v in fields["w"].split()])
    if b.shape[0] != n or w.shape[0] != hvec_size(n):
        raise ValueError("vector lengths inconsistent with declared dimension")
    mu_text = fields["mu"]
    return QuadSurfaceModel(
        W=unhvec(w),
        b=b,
        c=float(fields["c"]),
        variant=Variant(fields["variant"]),
        lambda_=float(fields["lambda"]),
        mu=None if mu_text == "none" else float(mu_text),
    )


def save_model(model: QuadSurfaceModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> QuadSurfaceModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_text(fh.read())
