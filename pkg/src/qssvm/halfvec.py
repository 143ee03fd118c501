"""Symmetric-matrix vectorization and per-sample design assembly.

Half-vectorization stacks the on-and-below-diagonal entries column by
column: a11, a21, ..., an1, a22, a32, ..., an2, ..., ann.  Every index
set in this package (including sparsity patterns of the surface matrix)
refers to this single ordering.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Dataset",
    "DesignCache",
    "hvec_size",
    "hvec_index_pairs",
    "hvec",
    "unhvec",
    "elimination_matrix",
    "duplication_matrix",
    "feature_s",
    "feature_r",
    "sample_design_M",
    "assemble_design",
    "quad_eval",
]


def hvec_size(n: int) -> int:
    """Length n(n+1)/2 of the half-vector of an n x n symmetric matrix."""
    return n * (n + 1) // 2


def hvec_index_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """(row, col) pairs of the lower triangle in half-vector order.

    Entry k of a half-vector holds matrix element (rows[k], cols[k]) with
    rows[k] >= cols[k]; k runs down the columns of the lower triangle.
    """
    # The upper triangle in row-major order, transposed, walks the lower
    # triangle column by column.
    tri_rows, tri_cols = np.triu_indices(n)
    return tri_cols, tri_rows


def hvec(A: np.ndarray) -> np.ndarray:
    """Half-vectorize a symmetric matrix.

    Raises ValueError if A is not square or not exactly symmetric
    (symmetry is expected to hold by construction, not approximately).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.array_equal(A, A.T):
        raise ValueError("matrix is not symmetric")
    rows, cols = hvec_index_pairs(A.shape[0])
    return A[rows, cols]


def unhvec(v: np.ndarray) -> np.ndarray:
    """Rebuild the symmetric matrix whose half-vector is v."""
    v = np.asarray(v, dtype=float)
    h = v.shape[0]
    n = int(round((np.sqrt(8 * h + 1) - 1) / 2))
    if hvec_size(n) != h:
        raise ValueError(f"length {h} is not n(n+1)/2 for any integer n")
    rows, cols = hvec_index_pairs(n)
    A = np.zeros((n, n))
    A[rows, cols] = v
    A[cols, rows] = v
    return A


def elimination_matrix(n: int) -> np.ndarray:
    """0/1 matrix L of shape (n(n+1)/2, n^2) with L vec(A) == hvec(A).

    vec() stacks columns; entries are exact integers so that L D is the
    identity in integer arithmetic.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    h = hvec_size(n)
    rows, cols = hvec_index_pairs(n)
    L = np.zeros((h, n * n), dtype=np.int64)
    L[np.arange(h), cols * n + rows] = 1
    return L


def duplication_matrix(n: int) -> np.ndarray:
    """0/1 matrix D of shape (n^2, n(n+1)/2) with D hvec(A) == vec(A)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    h = hvec_size(n)
    rows, cols = hvec_index_pairs(n)
    # position of (i, j) within the half-vector, for all i, j
    pos = np.zeros((n, n), dtype=np.int64)
    pos[rows, cols] = np.arange(h)
    pos[cols, rows] = np.arange(h)
    i = np.tile(np.arange(n), n)       # vec element t holds A[t % n, t // n]
    j = np.repeat(np.arange(n), n)
    D = np.zeros((n * n, h), dtype=np.int64)
    D[np.arange(n * n), pos[i, j]] = 1
    return D


def feature_s(x: np.ndarray) -> np.ndarray:
    """Quadratic feature vector s of a sample.

    In half-vector order, s carries x_j^2 / 2 at diagonal positions and
    x_i x_j at off-diagonal positions, so hvec(W) . s == x' W x / 2 for
    every symmetric W.
    """
    x = np.asarray(x, dtype=float)
    rows, cols = hvec_index_pairs(x.shape[0])
    s = x[rows] * x[cols]
    s[rows == cols] *= 0.5
    return s


def feature_r(x: np.ndarray) -> np.ndarray:
    """Stacked feature vector [s(x); x] of length n(n+1)/2 + n."""
    x = np.asarray(x, dtype=float)
    return np.concatenate([feature_s(x), x])


def sample_design_M(x: np.ndarray) -> np.ndarray:
    """n x n(n+1)/2 matrix M with M hvec(W) == W x for symmetric W.

    Built in closed form: row k holds the gradient of (W x)_k with
    respect to hvec(W).  Equals (I_n kron x') D_n entrywise.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    h = hvec_size(n)
    rows, cols = hvec_index_pairs(n)
    M = np.zeros((n, h))
    k = np.arange(h)
    M[rows, k] = x[cols]
    off = rows != cols
    M[cols[off], k[off]] = x[rows[off]]
    return M


def quad_eval(W: np.ndarray, b: np.ndarray, c: float, x: np.ndarray):
    """Evaluate x' W x / 2 + b' x + c.

    x may be a single sample (n,) or a batch (m, n); a batch returns the
    m decision values.
    """
    W = np.asarray(W, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    n = b.shape[0]
    if W.shape != (n, n):
        raise ValueError(f"W has shape {W.shape}, expected {(n, n)}")
    if x.shape[-1] != n:
        raise ValueError(f"sample dimension {x.shape[-1]} != {n}")
    if x.ndim == 1:
        return float(0.5 * x @ W @ x + b @ x + c)
    return 0.5 * np.einsum("ij,ij->i", x @ W, x) + x @ b + c


@dataclass(frozen=True)
class Dataset:
    """Labeled samples: row i of X is a sample, y[i] in {-1, +1}.

    Both classes must be nonempty.  Instances are immutable and safe to
    share across threads.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D sample matrix")
        if y.shape != (X.shape[0],):
            raise ValueError("y length must match the number of samples")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite values")
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("labels must be -1 or +1")
        if not ((y == 1).any() and (y == -1).any()):
            raise ValueError("both classes must be nonempty")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "Dataset":
        """Dataset restricted to the given sample indices."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[idx].copy(), self.y[idx].copy())


@dataclass(frozen=True)
class DesignCache:
    """Per-sample design vectors/matrices and the quadratic-form matrix G.

    s[i] and r[i] = [s[i]; x[i]] are the quadratic feature vectors, M[i]
    maps hvec(W) to W x[i], and G = 2 sum_i H_i' H_i with H_i = [M_i I_n]
    so that z' G z / 2 == sum_i ||W x_i + b||^2 for z = [hvec(W); b].
    """

    s: np.ndarray  # (m, n(n+1)/2)
    r: np.ndarray  # (m, n(n+1)/2 + n)
    M: np.ndarray  # (m, n, n(n+1)/2)
    G: np.ndarray  # (d, d), d = n(n+3)/2

    @property
    def m(self) -> int:
        return self.s.shape[0]

    @property
    def n(self) -> int:
        return self.M.shape[1]


def assemble_design(dataset: Dataset) -> DesignCache:
    """Assemble s, r, M and G for a dataset.

    G is accumulated once per dataset so it can be reused across solver
    calls on a hyperparameter grid; it is exactly symmetric and positive
    semidefinite by construction.
    """
    X, m, n = dataset.X, dataset.m, dataset.n
    h = hvec_size(n)
    rows, cols = hvec_index_pairs(n)

    S = X[:, rows] * X[:, cols]
    S[:, rows == cols] *= 0.5
    R = np.hstack([S, X])

    M = np.zeros((m, n, h))
    k = np.arange(h)
    M[:, rows, k] = X[:, cols]
    off = rows != cols
    M[:, cols[off], k[off]] = X[:, rows[off]]

    Mstack = M.reshape(m * n, h)
    G_ww = 2.0 * (Mstack.T @ Mstack)
    G_wb = 2.0 * M.sum(axis=0).T           # (h, n)
    G_bb = 2.0 * m * np.eye(n)
    G = np.block([[G_ww, G_wb], [G_wb.T, G_bb]])
    G = 0.5 * (G + G.T)
    return DesignCache(s=S, r=R, M=M, G=G)
