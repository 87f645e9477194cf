"""Dense-matrix kernel: centering, SVD, ridge solves and PCA.

All functions take and return float64 numpy arrays and are pure.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ts_lens.errors import NonConvergenceError, ShapeMismatchError, SingularSystemError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD: m = u @ diag(s) @ vt, s non-increasing and non-negative."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray


@dataclass(frozen=True)
class PcaResult:
    """Principal components of a data matrix.

    Attributes:
        components: (k, cols) orthonormal rows, sign-fixed so the largest-magnitude
            entry of each row is positive.
        projected: (rows, k) centered data projected onto the components.
        explained_variance: (k,) non-increasing variances along the components.
        mean: (cols,) column means removed before projecting; transform() reuses them.
        rank_deficient: True when fewer than k components carry variance; only the
            available ones are returned then.
    """

    components: np.ndarray
    projected: np.ndarray
    explained_variance: np.ndarray
    mean: np.ndarray
    rank_deficient: bool = False

    def transform(self, m: np.ndarray) -> np.ndarray:
        """Project new rows with the fitted mean and components."""
        return (as_matrix(m) - self.mean) @ self.components.T


def as_matrix(m, *, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2D float64 array."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def center_columns(m) -> np.ndarray:
    """Subtract each column's mean."""
    arr = as_matrix(m)
    if arr.shape[0] < 1:
        raise ShapeMismatchError("center_columns needs at least one row")
    return arr - arr.mean(axis=0, keepdims=True)


def svd(m) -> SvdResult:
    """Thin singular value decomposition.

    Raises:
        NonConvergenceError: if LAPACK fails to converge.
    """
    arr = as_matrix(m)
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatchError(f"svd needs a non-empty matrix, got shape {arr.shape}")
    try:
        u, s, vt = np.linalg.svd(arr, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NonConvergenceError(f"SVD did not converge: {e}") from None
    return SvdResult(u=u, s=s, vt=vt)


def solve_ridge(a, b, alpha: float) -> np.ndarray:
    """Solve min ||a X - b||_F^2 + alpha ||X||_F^2 via the normal equations.

    Raises:
        SingularSystemError: alpha is 0 and a^T a is numerically singular.
    """
    a = as_matrix(a, name="a")
    b = np.asarray(b, dtype=np.float64)
    vector_rhs = b.ndim == 1
    if vector_rhs:
        b = b[:, None]
    b = as_matrix(b, name="b")
    if a.shape[0] != b.shape[0]:
        raise ShapeMismatchError(f"a has {a.shape[0]} rows but b has {b.shape[0]}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")

    gram = a.T @ a
    rhs = a.T @ b
    if alpha == 0:
        if np.linalg.matrix_rank(gram) < gram.shape[0]:
            raise SingularSystemError(
                f"a^T a ({gram.shape[0]}x{gram.shape[0]}) is singular and alpha is 0"
            )
    else:
        gram = gram + alpha * np.eye(gram.shape[0])

    try:
        x = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        raise SingularSystemError("normal equations are singular") from None
    return x[:, 0] if vector_rhs else x


def fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip rows so each row's largest-magnitude entry is positive."""
    if components.size == 0:
        return components
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), pivots])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def pca(m, k: int, *, tol: float = 1e-10) -> PcaResult:
    """Principal component analysis via SVD of the centered data.

    Args:
        m: (rows, cols) data matrix, rows >= 2.
        k: Number of components, k <= min(rows - 1, cols).
        tol: Singular values below tol * s_max count as zero.

    Returns:
        PcaResult. If fewer than k singular values are nonzero, only those
        components are returned and rank_deficient is set.
    """
    arr = as_matrix(m)
    rows, cols = arr.shape
    if rows < 2:
        raise ShapeMismatchError(f"pca needs at least 2 rows, got {rows}")
    if k < 1 or k > min(rows - 1, cols):
        raise ValueError(f"k must be in [1, {min(rows - 1, cols)}], got {k}")

    mean = arr.mean(axis=0)
    centered = arr - mean
    result = svd(centered)

    s_max = result.s[0] if result.s.size else 0.0
    available = int(np.sum(result.s > tol * max(s_max, 1e-300))) if s_max > 0 else 0
    rank_deficient = available < k
    if rank_deficient:
        logger.warning("pca: only %d of %d requested components carry variance", available, k)
    keep = min(k, available)

    components = fix_signs(result.vt[:keep])
    projected = centered @ components.T
    explained = result.s[:keep] ** 2 / (rows - 1)
    return PcaResult(
        components=components,
        projected=projected,
        explained_variance=explained,
        mean=mean,
        rank_deficient=rank_deficient,
    )
