"""Benchmark protocol: CSV ingestion, repeated random splits, grid tuning.

A run samples k% of the data as the training set (Fisher-Yates with a
seed mixed per repetition), tunes the penalty weights on that subset by
grid search, trains each variant, and scores on the full dataset; this
full-set scoring is the convention the accuracy tables follow (an
optimistic one; pass held_out=True to score on the complement instead).
Training wall time excludes tuning.
"""

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .halfvec import Dataset, assemble_design
from .models import (
    HardMarginInfeasible,
    QuadSurfaceModel,
    SolverFailure,
    TrainConfig,
    Variant,
    predict,
    train,
)
from .qp import SolveOptions

__all__ = [
    "ParseError",
    "NotTwoClasses",
    "EmptyDataset",
    "ExperimentPlan",
    "ResultRow",
    "ResultsTable",
    "load_csv",
    "accuracy_score",
    "mu_grid_scores",
    "lambda_grid_scores",
    "tune_mu",
    "tune_lambda",
    "run_benchmark",
    "mix_seed",
    "sample_indices",
]


class ParseError(Exception):
    def __init__(self, row: int, column, message: str):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column}: {message}")


class NotTwoClasses(Exception):
    pass


class EmptyDataset(Exception):
    pass


def load_csv(path, label_column: str = "label", positive_label: str | None = None) -> Dataset:
    """Load a delimited dataset with one label column and numeric features.

    positive_label maps that class to +1 and the other to -1; without it
    the labels themselves must already be -1/+1.  Rows are numbered from
    1 at the header, so the first data row is row 2.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyDataset("file is empty")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ParseError(1, label_column, "label column not found in header")
        label_idx = header.index(label_column)
        feature_idx = [j for j in range(len(header)) if j != label_idx]
        rows, labels = [], []
        for line_no, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ParseError(line_no, len(record), "wrong number of fields")
            values = []
            for j in feature_idx:
                text = record[j].strip()
                if not text:
                    raise ParseError(line_no, header[j], "missing value")
                try:
                    values.append(float(text))
                except ValueError:
                    raise ParseError(line_no, header[j], f"not a number: {text!r}") from None
            rows.append(values)
            labels.append(record[label_idx].strip())
    if not rows:
        raise EmptyDataset("no data rows after the header")
    distinct = sorted(set(labels))
    if len(distinct) != 2:
        raise NotTwoClasses(f"expected exactly two label values, found {distinct}")
    if positive_label is not None:
        if positive_label not in distinct:
            raise NotTwoClasses(f"positive label {positive_label!r} not among {distinct}")
        y = np.where(np.asarray(labels) == positive_label, 1, -1)
    else:
        try:
            numeric = [int(float(v)) for v in labels]
        except ValueError:
            raise NotTwoClasses(
                f"labels {distinct} are not -1/+1; pass positive_label to map them"
            ) from None
        if sorted(set(numeric)) != [-1, 1]:
            raise NotTwoClasses(f"numeric labels must be -1/+1, found {distinct}")
        y = np.asarray(numeric)
    return Dataset(np.asarray(rows), y)


def accuracy_score(model: QuadSurfaceModel, dataset: Dataset) -> float:
    """Percentage of correct labels over the given dataset."""
    return 100.0 * float(np.mean(predict(model, dataset.X) == dataset.y))


@dataclass(frozen=True)
class ExperimentPlan:
    """Grid, split, and repetition settings for a benchmark run."""

    variants: tuple[Variant, ...] = (Variant.L1SQSSVM, Variant.SQSSVM, Variant.SSVM, Variant.SVM)
    training_rates: tuple[float, ...] = (10.0, 20.0, 40.0)
    repetitions: int = 50
    mu_grid: tuple[float, ...] = tuple(2.0 ** e for e in range(-3, 21))
    lambda_grid: tuple[float, ...] = tuple(2.0 ** e for e in range(-10, 26))
    seed: int = 0
    held_out: bool = False
    solver: SolveOptions = field(default_factory=SolveOptions)

    def __post_init__(self):
        if any(not (0.0 < r < 100.0) for r in self.training_rates):
            raise ValueError("training rates must lie strictly between 0 and 100")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.variants:
            raise ValueError("at least one variant is required")
        if Variant.RQSSVM in self.variants:
            raise ValueError("the restricted variant needs a zero set and is not benchmarkable")
        if not self.mu_grid or not self.lambda_grid:
            raise ValueError("grids must be nonempty")


def mix_seed(*parts) -> int:
    """Stable 64-bit mix of integers (splitmix64 step per part)."""
    state = 0
    mask = (1 << 64) - 1
    for part in parts:
        state = (state + int(part) + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        state = z ^ (z >> 31)
    return state


def sample_indices(m: int, size: int, seed: int) -> np.ndarray:
    """Sorted sample of `size` distinct indices by partial Fisher-Yates."""
    if not 0 < size <= m:
        raise ValueError(f"cannot sample {size} of {m} indices")
    rng = np.random.Generator(np.random.PCG64(seed))
    arr = np.arange(m)
    for i in range(size):
        j = i + int(rng.integers(m - i))
        arr[i], arr[j] = arr[j], arr[i]
    return np.sort(arr[:size])


def _scored_accuracy(report, eval_ds: Dataset) -> float:
    return accuracy_score(report.model, eval_ds)


def _grid_best(values, scores) -> float:
    """Best grid value by score; exact ties resolve to the mean of the tied values."""
    best = max(scores)
    tied = [v for v, s in zip(values, scores) if s == best]
    return float(np.mean(tied))


def mu_grid_scores(dataset: Dataset, plan: ExperimentPlan, eval_dataset: Dataset | None = None,
                   cache=None) -> list[tuple[float, float]]:
    """(mu, accuracy) across the grid for the soft quadratic model."""
    eval_ds = eval_dataset if eval_dataset is not None else dataset
    if cache is None:
        cache = assemble_design(dataset)
    scored = []
    for mu in plan.mu_grid:
        report = train(dataset, TrainConfig(variant=Variant.SQSSVM, mu=mu, solver=plan.solver),
                       cache=cache)
        scored.append((mu, _scored_accuracy(report, eval_ds)))
    return scored


def tune_mu(dataset: Dataset, plan: ExperimentPlan, eval_dataset: Dataset | None = None,
            cache=None) -> float:
    """Slack weight with the best soft-quadratic accuracy over the grid."""
    scored = mu_grid_scores(dataset, plan, eval_dataset=eval_dataset, cache=cache)
    return _grid_best([mu for mu, _ in scored], [s for _, s in scored])


def lambda_grid_scores(dataset: Dataset, plan: ExperimentPlan, variant: Variant,
                       mu: float | None = None, eval_dataset: Dataset | None = None,
                       cache=None) -> list[tuple[float, float]]:
    """(lambda, accuracy) across the grid at a fixed slack weight."""
    if not variant.has_l1_penalty or variant is Variant.RQSSVM:
        raise ValueError(f"{variant.value} has no tunable L1 weight")
    eval_ds = eval_dataset if eval_dataset is not None else dataset
    if cache is None:
        cache = assemble_design(dataset)
    scored = []
    for lam in plan.lambda_grid:
        config = TrainConfig(variant=variant, lambda_=lam, mu=mu, solver=plan.solver)
        report = train(dataset, config, cache=cache)
        scored.append((lam, _scored_accuracy(report, eval_ds)))
    return scored


def tune_lambda(dataset: Dataset, plan: ExperimentPlan, variant: Variant,
                mu: float | None = None, eval_dataset: Dataset | None = None,
                cache=None) -> float:
    """L1 weight with the best accuracy over the grid, at a fixed slack weight."""
    scored = lambda_grid_scores(dataset, plan, variant, mu=mu,
                                eval_dataset=eval_dataset, cache=cache)
    return _grid_best([lam for lam, _ in scored], [s for _, s in scored])


@dataclass(frozen=True)
class ResultRow:
    variant: Variant
    rate: float
    mean: float
    std: float
    min: float
    max: float
    cpu_s: float
    repetitions: int
    failures: int
    flagged: bool


@dataclass(frozen=True)
class ResultsTable:
    rows: tuple[ResultRow, ...]
    raw_scores: dict  # (variant, rate) -> tuple of per-repetition scores (NaN = failed)

    @property
    def any_flagged(self) -> bool:
        return any(r.flagged for r in self.rows)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["variant", "rate", "mean", "std", "min", "max", "cpu_s"])
        for r in self.rows:
            writer.writerow([r.variant.value, f"{r.rate:g}", f"{r.mean:.2f}", f"{r.std:.2f}",
                             f"{r.min:.2f}", f"{r.max:.2f}", f"{r.cpu_s:.3f}"])
        return out.getvalue()

    def to_text(self) -> str:
        header = f"{'rate':>5}  {'model':<10} {'mean':>7} {'std':>6} {'min':>7} {'max':>7} {'cpu (s)':>8}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            flag = "  [flagged]" if r.flagged else ""
            lines.append(
                f"{r.rate:>5g}  {r.variant.value:<10} {r.mean:>7.2f} {r.std:>6.2f} "
                f"{r.min:>7.2f} {r.max:>7.2f} {r.cpu_s:>8.3f}{flag}"
            )
        return "\n".join(lines) + "\n"

    def per_repetition_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out)
        writer.writerow(["variant", "rate", "repetition", "score"])
        for (variant, rate), scores in self.raw_scores.items():
            for rep, score in enumerate(scores):
                text = "" if np.isnan(score) else f"{score:.10g}"
                writer.writerow([variant.value, f"{rate:g}", rep, text])
        return out.getvalue()


def _tuned_config(variant: Variant, train_ds: Dataset, plan: ExperimentPlan,
                  eval_ds: Dataset, cache, memo: dict) -> TrainConfig:
    if variant is Variant.SVM:
        return TrainConfig(variant=variant, solver=plan.solver)
    if variant is Variant.QSSVM:
        return TrainConfig(variant=variant, solver=plan.solver)
    if variant is Variant.SSVM:
        scores = []
        for mu in plan.mu_grid:
            report = train(train_ds, TrainConfig(variant=Variant.SSVM, mu=mu, solver=plan.solver))
            scores.append(_scored_accuracy(report, eval_ds))
        return TrainConfig(variant=variant, mu=_grid_best(plan.mu_grid, scores), solver=plan.solver)
    if "mu_hat" not in memo:
        memo["mu_hat"] = tune_mu(train_ds, plan, eval_dataset=eval_ds, cache=cache)
    mu_hat = memo["mu_hat"]
    if variant is Variant.SQSSVM:
        return TrainConfig(variant=variant, mu=mu_hat, solver=plan.solver)
    if variant is Variant.L1SQSSVM:
        lam = tune_lambda(train_ds, plan, variant, mu=mu_hat, eval_dataset=eval_ds, cache=cache)
        return TrainConfig(variant=variant, lambda_=lam, mu=mu_hat, solver=plan.solver)
    if variant is Variant.L1QSSVM:
        lam = tune_lambda(train_ds, plan, variant, eval_dataset=eval_ds, cache=cache)
        return TrainConfig(variant=variant, lambda_=lam, solver=plan.solver)
    raise ValueError(f"cannot tune {variant.value}")


def run_benchmark(dataset: Dataset, plan: ExperimentPlan) -> ResultsTable:
    """Full repeated-split benchmark; deterministic given the plan seed.

    Per-cell failures (hard margin on a non-separable subset, solver
    breakdown) are recorded rather than fatal; a (variant, rate) cell
    with more than 10% failed repetitions is flagged.
    """
    m = dataset.m
    rows = []
    raw = {}
    for rate in plan.training_rates:
        size = int(rate / 100.0 * m + 0.5)
        size = max(1, min(size, m))
        per_variant_scores = {v: [] for v in plan.variants}
        per_variant_times = {v: [] for v in plan.variants}
        for rep in range(plan.repetitions):
            seed = mix_seed(plan.seed, int(rate * 1000), rep)
            idx = sample_indices(m, size, seed)
            train_ds = dataset.subset(idx)
            if plan.held_out:
                mask = np.ones(m, dtype=bool)
                mask[idx] = False
                eval_ds = dataset.subset(np.flatnonzero(mask)) if mask.any() else dataset
            else:
                eval_ds = dataset
            needs_cache = any(v.is_quadratic for v in plan.variants)
            cache = assemble_design(train_ds) if needs_cache else None
            memo = {}
            for variant in plan.variants:
                try:
                    config = _tuned_config(variant, train_ds, plan, eval_ds, cache, memo)
                    start = time.perf_counter()
                    report = train(train_ds, config,
                                   cache=cache if variant.is_quadratic else None)
                    elapsed = time.perf_counter() - start
                    per_variant_scores[variant].append(accuracy_score(report.model, eval_ds))
                    per_variant_times[variant].append(elapsed)
                except (HardMarginInfeasible, SolverFailure):
                    per_variant_scores[variant].append(float("nan"))
                    per_variant_times[variant].append(float("nan"))
        for variant in plan.variants:
            scores = np.asarray(per_variant_scores[variant])
            ok = scores[~np.isnan(scores)]
            failures = int(np.isnan(scores).sum())
            if ok.size:
                mean = float(ok.mean())
                std = float(ok.std())  # population standard deviation
                lo, hi = float(ok.min()), float(ok.max())
                times = np.asarray(per_variant_times[variant])
                cpu = float(np.nanmean(times))
            else:
                mean = std = lo = hi = cpu = float("nan")
            rows.append(ResultRow(
                variant=variant, rate=rate, mean=mean, std=std, min=lo, max=hi,
                cpu_s=cpu, repetitions=plan.repetitions, failures=failures,
                flagged=failures > 0.1 * plan.repetitions,
            ))
            raw[(variant, rate)] = tuple(scores.tolist())
    return ResultsTable(rows=tuple(rows), raw_scores=raw)
