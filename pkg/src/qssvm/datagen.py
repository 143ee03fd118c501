"""Deterministic synthetic datasets drawn around quadratic surfaces.

All generators draw from a seeded PCG64 stream (identifier
"numpy-pcg64" in dataset metadata) and are pure functions of their
arguments: the same seed always reproduces the same dataset bit for bit.
Points are sampled uniformly in a hypercube and accepted by their signed
distance-like surface value: clean points need |f(x)| >= margin, noisy
points sit in the band |f(x)| <= noise_band and get coin-flip labels.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .halfvec import Dataset, quad_eval

__all__ = [
    "GENERATOR_ID",
    "SurfaceSpec",
    "GenConfig",
    "RejectionBudgetExceeded",
    "builtin_sparse_surface",
    "gen_from_surface",
    "gen_linear_separable",
    "gen_artificial_benchmark",
    "random_hyperplane_surface",
    "random_quadratic_surface",
    "save_dataset_csv",
    "load_dataset_csv",
    "surface_to_dict",
    "surface_from_dict",
    "ARTIFICIAL_BENCHMARK_SIZES",
]

GENERATOR_ID = "numpy-pcg64"

_REJECTION_BUDGET = 10**7
_CHUNK = 4096


class RejectionBudgetExceeded(Exception):
    """Sampling burned through the draw budget: surface and box mismatch."""


@dataclass(frozen=True)
class SurfaceSpec:
    """Quadratic surface f(x) = x'Wx/2 + b'x + c used as ground truth."""

    n: int
    W: np.ndarray
    b: np.ndarray
    c: float

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if W.shape != (self.n, self.n) or b.shape != (self.n,):
            raise ValueError("surface dimensions are inconsistent")
        if not np.array_equal(W, W.T):
            raise ValueError("W must be symmetric")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    def values(self, X: np.ndarray):
        return quad_eval(self.W, self.b, self.c, X)


@dataclass(frozen=True)
class GenConfig:
    seed: int
    m_pos: int
    m_neg: int
    margin: float = 0.5
    box: float = 5.0
    noise_count: int = 0
    noise_band: float = 0.25

    def __post_init__(self):
        if self.m_pos < 1 or self.m_neg < 1:
            raise ValueError("clean class counts must be >= 1")
        if self.margin <= 0.0 or self.box <= 0.0:
            raise ValueError("margin and box must be positive")
        if self.noise_count < 0 or self.noise_band <= 0.0:
            raise ValueError("noise_count must be >= 0 and noise_band positive")


def builtin_sparse_surface() -> SurfaceSpec:
    """The 10-feature sparse ground-truth surface used in the sparsity study."""
    W = np.zeros((10, 10))
    for i, j, v in [(0, 2, 1.0), (1, 3, 2.0), (2, 4, 3.0), (3, 5, 4.0),
                    (4, 6, 5.0), (5, 7, 6.0), (6, 8, 7.0)]:
        W[i, j] = v
        W[j, i] = v
    b = np.ones(10)
    b[-1] = -1.0
    return SurfaceSpec(n=10, W=W, b=b, c=2.0)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_from_surface(spec: SurfaceSpec, cfg: GenConfig) -> Dataset:
    """Rejection-sample a dataset around a surface.

    Rows come out as clean positives, then clean negatives, then noise
    points.  Raises RejectionBudgetExceeded after 1e7 draws, which
    signals that the surface barely intersects the sampling box (or, for
    noise, that the band is too thin to hit).
    """
    rng = _rng(cfg.seed)
    pos, neg = [], []
    drawn = 0
    while len(pos) < cfg.m_pos or len(neg) < cfg.m_neg:
        pts = (2.0 * rng.random((_CHUNK, spec.n)) - 1.0) * cfg.box
        vals = spec.values(pts)
        drawn += _CHUNK
        for x, v in zip(pts, vals):
            if v >= cfg.margin and len(pos) < cfg.m_pos:
                pos.append(x)
            elif v <= -cfg.margin and len(neg) < cfg.m_neg:
                neg.append(x)
        if drawn > _REJECTION_BUDGET:
            raise RejectionBudgetExceeded(
                f"clean sampling used more than {_REJECTION_BUDGET} draws"
            )
    noise = []
    while len(noise) < cfg.noise_count:
        pts = (2.0 * rng.random((_CHUNK, spec.n)) - 1.0) * cfg.box
        vals = spec.values(pts)
        drawn += _CHUNK
        for x, v in zip(pts, vals):
            if abs(v) <= cfg.noise_band and len(noise) < cfg.noise_count:
                noise.append(x)
        if drawn > _REJECTION_BUDGET:
            raise RejectionBudgetExceeded(
                f"noise sampling used more than {_REJECTION_BUDGET} draws"
            )
    X = np.vstack([np.asarray(pos), np.asarray(neg)] + ([np.asarray(noise)] if noise else []))
    y = np.concatenate([
        np.ones(cfg.m_pos, dtype=np.int64),
        -np.ones(cfg.m_neg, dtype=np.int64),
        np.where(rng.random(cfg.noise_count) < 0.5, 1, -1).astype(np.int64),
    ])
    return Dataset(X, y)


def random_hyperplane_surface(n: int, seed: int, box: float = 5.0) -> SurfaceSpec:
    """Random unit-normal hyperplane (W = 0) crossing the sampling box."""
    rng = _rng(seed)
    u = rng.standard_normal(n)
    u /= np.linalg.norm(u)
    d = float((2.0 * rng.random() - 1.0) * box / 2.0)
    return SurfaceSpec(n=n, W=np.zeros((n, n)), b=u, c=d)


def gen_linear_separable(n: int, m_pos: int, m_neg: int, seed: int,
                         margin: float = 0.5, box: float = 5.0) -> Dataset:
    """Linearly separable dataset around a random hyperplane (W = 0)."""
    spec = random_hyperplane_surface(n, seed, box)
    return gen_from_surface(spec, GenConfig(seed=seed + 1, m_pos=m_pos, m_neg=m_neg,
                                            margin=margin, box=box))


def random_quadratic_surface(n: int, seed: int, box: float = 5.0) -> SurfaceSpec:
    """Random symmetric surface recentered so it crosses the sampling box."""
    rng = _rng(seed)
    R = rng.standard_normal((n, n))
    W = 0.5 * (R + R.T)
    b = rng.standard_normal(n)
    probes = (2.0 * rng.random((256, n)) - 1.0) * box
    c = -float(np.median(quad_eval(W, b, 0.0, probes)))
    return SurfaceSpec(n=n, W=W, b=b, c=c)


ARTIFICIAL_BENCHMARK_SIZES = {
    "I": (3, 67, 58),
    "II": (3, 79, 71),
    "III": (5, 106, 81),
    "IV": (10, 204, 171),
    "ThreeD": (3, 99, 101),
}


def gen_artificial_benchmark(which: str, seed: int) -> Dataset:
    """The five fixed-size artificial benchmark datasets.

    I-IV come from random quadratic surfaces with 10% of the points
    mislabeled (an equal number of labels swapped in each direction, so
    the per-class counts stay exact); ThreeD is clean and therefore
    quadratically separable by construction.
    """
    if which not in ARTIFICIAL_BENCHMARK_SIZES:
        raise ValueError(f"unknown artificial dataset {which!r}; choose from {sorted(ARTIFICIAL_BENCHMARK_SIZES)}")
    n, m_pos, m_neg = ARTIFICIAL_BENCHMARK_SIZES[which]
    spec = random_quadratic_surface(n, seed)
    data = gen_from_surface(spec, GenConfig(seed=seed + 1, m_pos=m_pos, m_neg=m_neg))
    if which == "ThreeD":
        return data
    m = data.m
    k = int(round(0.05 * m))
    rng = _rng(seed + 2)
    pos_idx = np.flatnonzero(data.y == 1)
    neg_idx = np.flatnonzero(data.y == -1)
    flip_pos = rng.permutation(pos_idx)[:k]
    flip_neg = rng.permutation(neg_idx)[:k]
    y = data.y.copy()
    y[flip_pos] = -1
    y[flip_neg] = 1
    return Dataset(data.X, y)


# ---------------------------------------------------------------------------
# canonical CSV format: header f1,...,fn,label; labels -1/1; floats lossless
# ---------------------------------------------------------------------------


def save_dataset_csv(dataset: Dataset, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j + 1}" for j in range(dataset.n)] + ["label"])
        for row, label in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in row] + [str(int(label))])


def load_dataset_csv(path) -> Dataset:
    """Read back the canonical format written by save_dataset_csv."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[-1] != "label":
            raise ValueError("expected a header ending in 'label'")
        rows, labels = [], []
        for record in reader:
            rows.append([float(v) for v in record[:-1]])
            labels.append(int(record[-1]))
    if not rows:
        raise ValueError("file holds no samples")
    return Dataset(np.asarray(rows), np.asarray(labels))


def surface_to_dict(spec: SurfaceSpec) -> dict:
    return {"n": spec.n, "W": spec.W.tolist(), "b": spec.b.tolist(), "c": spec.c}


def surface_from_dict(data: dict) -> SurfaceSpec:
    return SurfaceSpec(
        n=int(data["n"]),
        W=np.asarray(data["W"], dtype=float),
        b=np.asarray(data["b"], dtype=float),
        c=float(data["c"]),
    )
