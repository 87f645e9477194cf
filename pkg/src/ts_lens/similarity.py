"""Layer-representation similarity: linear CKA, HSIC-form CKA, average cosine and SVCCA."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np

from ts_lens.config import DEFAULT_VARIANCE_KEEP, worker_count
from ts_lens.errors import (
    DegenerateRepresentationError,
    SampleMismatchError,
    ShapeMismatchError,
    ZeroVectorError,
)
from ts_lens.model import CaptureSet
from ts_lens.numerics import as_matrix, center_columns, svd

logger = logging.getLogger(__name__)

Metric = Literal["cka", "hsic_cka", "cosine", "svcca"]
Reduction = Literal["token_mean", "token_flatten"]

METRICS: tuple[str, ...] = ("cka", "hsic_cka", "cosine", "svcca")
REDUCTIONS: tuple[str, ...] = ("token_mean", "token_flatten")

DEGENERATE_TOL = 1e-12
RANGE_TOL = 1e-9


@dataclass(frozen=True)
class RepMatrix:
    """One layer's representation: (n, D) values, one row per sample."""

    values: np.ndarray
    layer: int = 0
    model_hash: str = ""
    reduction: str = "token_mean"

    def __post_init__(self):
        values = as_matrix(self.values, name="representation")
        if values.shape[0] < 2:
            raise ShapeMismatchError(f"representation needs n >= 2 samples, got {values.shape[0]}")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_captures(cls, captures: CaptureSet, layer: int, reduction: str = "token_mean"):
        if reduction == "token_mean":
            values = captures.token_mean(layer)
        elif reduction == "token_flatten":
            values = captures.flatten_tokens(layer)
        else:
            raise ValueError(
                f"Unknown reduction: {reduction!r}. Supported: {', '.join(REDUCTIONS)}."
            )
        return cls(values, layer=layer, model_hash=captures.model_hash, reduction=reduction)


@dataclass
class SimilarityMatrix:
    """Layer-by-layer similarity scores.

    Attributes:
        values: (L_a, L_b) scores. Row r corresponds to layer first_layer + r.
        metric: Metric name.
        reduction: Token reduction used before comparing.
        model_hash_a: Hash of the model behind the rows.
        model_hash_b: Hash of the model behind the columns.
        dataset_checksum: Checksum of the shared input corpus.
        first_layer: Layer index of row/column 0 (1 unless the embedding is included).
    """

    values: np.ndarray
    metric: str
    reduction: str
    model_hash_a: str = ""
    model_hash_b: str = ""
    dataset_checksum: str | None = None
    first_layer: int = 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def is_square(self) -> bool:
        return self.values.ndim == 2 and self.values.shape[0] == self.values.shape[1]

    def at(self, i: int, j: int) -> float:
        """Score between layers i and j (layer indices, not row indices)."""
        return float(self.values[i - self.first_layer, j - self.first_layer])

    def metadata(self) -> dict:
        return {
            "metric": self.metric,
            "reduction": self.reduction,
            "model_hash_a": self.model_hash_a,
            "model_hash_b": self.model_hash_b,
            "dataset_checksum": self.dataset_checksum,
            "first_layer": self.first_layer,
        }


def _values(x) -> np.ndarray:
    return x.values if isinstance(x, RepMatrix) else as_matrix(x, name="representation")


def _paired(x, y, *, min_n: int = 2) -> tuple[np.ndarray, np.ndarray]:
    a, b = _values(x), _values(y)
    if a.shape[0] != b.shape[0]:
        raise SampleMismatchError(f"x has {a.shape[0]} samples but y has {b.shape[0]}")
    if a.shape[0] < min_n:
        raise ShapeMismatchError(f"need at least {min_n} samples, got {a.shape[0]}")
    return a, b


def _clamp_unit(score: float, name: str) -> float:
    if score < -RANGE_TOL or score > 1 + RANGE_TOL:
        logger.warning("%s score %.12g outside [0, 1] beyond tolerance", name, score)
    return float(min(max(score, 0.0), 1.0))


def linear_cka(x, y) -> float:
    """Linear CKA ||X^T Y||_F^2 / (||X^T X||_F ||Y^T Y||_F) on column-centered inputs.

    Args:
        x: RepMatrix or (n, D_x) array.
        y: RepMatrix or (n, D_y) array. D_x and D_y may differ.

    Returns:
        Score in [0, 1].
    """
    a, b = _paired(x, y)
    a, b = center_columns(a), center_columns(b)
    norm_a = np.linalg.norm(a.T @ a)
    norm_b = np.linalg.norm(b.T @ b)
    if norm_a < DEGENERATE_TOL or norm_b < DEGENERATE_TOL:
        raise DegenerateRepresentationError(
            f"representation has no variance after centering "
            f"(||XtX||={norm_a:.3g}, ||YtY||={norm_b:.3g})"
        )
    cross = np.linalg.norm(a.T @ b) ** 2
    return _clamp_unit(cross / (norm_a * norm_b), "cka")


def _hsic(k: np.ndarray, l: np.ndarray) -> float:  # noqa: E741
    n = k.shape[0]
    h = np.eye(n) - np.full((n, n), 1.0 / n)
    return float(np.trace(k @ h @ l @ h)) / (n - 1) ** 2


def hsic_cka(x, y) -> float:
    """CKA through HSIC with linear kernels K = X X^T and L = Y Y^T.

    Agrees with linear_cka within floating-point error; kept as a
    cross-check since it centers in sample space rather than feature space.
    """
    a, b = _paired(x, y)
    k, l = a @ a.T, b @ b.T  # noqa: E741
    hsic_kk = _hsic(k, k)
    hsic_ll = _hsic(l, l)
    # HSIC(K, K) = ||X_c^T X_c||_F^2 / (n - 1)^2
    scale = (a.shape[0] - 1) ** 2
    if hsic_kk * scale < DEGENERATE_TOL**2 or hsic_ll * scale < DEGENERATE_TOL**2:
        raise DegenerateRepresentationError("representation has no variance after centering")
    return _clamp_unit(_hsic(k, l) / np.sqrt(hsic_kk * hsic_ll), "hsic_cka")


def avg_cosine(x, y) -> float:
    """Mean over samples of the cosine between paired rows. Range [-1, 1]."""
    a, b = _paired(x, y, min_n=1)
    if a.shape[1] != b.shape[1]:
        raise ShapeMismatchError(
            f"cosine needs equal widths, got D_x={a.shape[1]} and D_y={b.shape[1]}"
        )
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    zero = np.flatnonzero((na < DEGENERATE_TOL) | (nb < DEGENERATE_TOL))
    if zero.size:
        raise ZeroVectorError(f"zero-norm sample rows at indices {zero[:10].tolist()}")
    cos = np.sum(a * b, axis=1) / (na * nb)
    return float(np.clip(np.mean(cos), -1.0, 1.0))


def _retained_basis(m: np.ndarray, variance_keep: float) -> np.ndarray:
    centered = center_columns(m)
    result = svd(centered)
    energy = result.s**2
    total = energy.sum()
    if total < DEGENERATE_TOL:
        raise DegenerateRepresentationError("representation has zero variance")
    cumulative = np.cumsum(energy) / total
    k = int(np.searchsorted(cumulative, variance_keep - 1e-12) + 1)
    k = min(k, int(np.sum(result.s > DEGENERATE_TOL * result.s[0])))
    return result.u[:, : max(k, 1)]


def svcca(x, y, variance_keep: float = DEFAULT_VARIANCE_KEEP) -> float:
    """Singular vector CCA.

    Each side keeps the fewest left singular vectors whose squared singular values
    reach variance_keep of the total; the score is the mean canonical correlation
    between the two retained subspaces.
    """
    if not 0 < variance_keep <= 1:
        raise ValueError(f"variance_keep must be in (0, 1], got {variance_keep}")
    a, b = _paired(x, y, min_n=3)
    ua = _retained_basis(a, variance_keep)
    ub = _retained_basis(b, variance_keep)
    correlations = np.linalg.svd(ua.T @ ub, compute_uv=False)
    return _clamp_unit(float(np.mean(correlations)), "svcca")


_METRIC_FUNCS = {
    "cka": linear_cka,
    "hsic_cka": hsic_cka,
    "cosine": avg_cosine,
    "svcca": svcca,
}


def layer_matrix(
    a: CaptureSet,
    b: CaptureSet | None = None,
    metric: str = "cka",
    reduction: str = "token_mean",
    *,
    include_embedding: bool = False,
    variance_keep: float = DEFAULT_VARIANCE_KEEP,
    workers: int | None = None,
) -> SimilarityMatrix:
    """Compare every layer of a against every layer of b.

    Args:
        a: Captures for the rows.
        b: Captures for the columns. None compares a against itself.
        metric: One of 'cka', 'hsic_cka', 'cosine', 'svcca'.
        reduction: 'token_mean' (default) or 'token_flatten'.
        include_embedding: Also compare the post-embedding stream (layer 0).
        variance_keep: SVCCA variance fraction.
        workers: Thread count; defaults to config.worker_count().

    Returns:
        SimilarityMatrix with entry (i, j) = metric(reduce(a[i]), reduce(b[j])).
    """
    if metric not in _METRIC_FUNCS:
        raise ValueError(f"Unknown metric: {metric!r}. Supported: {', '.join(METRICS)}.")
    if reduction not in REDUCTIONS:
        raise ValueError(f"Unknown reduction: {reduction!r}. Supported: {', '.join(REDUCTIONS)}.")
    self_compare = b is None
    b = a if b is None else b
    if a.n != b.n:
        raise SampleMismatchError(f"capture sets hold {a.n} and {b.n} samples")
    if a.dataset_checksum and b.dataset_checksum and a.dataset_checksum != b.dataset_checksum:
        raise SampleMismatchError(
            f"captures come from different datasets "
            f"({a.dataset_checksum} vs {b.dataset_checksum})"
        )

    first = 0 if include_embedding else 1
    layers_a = list(range(first, a.n_layers + 1))
    layers_b = list(range(first, b.n_layers + 1))
    reps_a = {i: RepMatrix.from_captures(a, i, reduction) for i in layers_a}
    reps_b = reps_a if self_compare else {
        j: RepMatrix.from_captures(b, j, reduction) for j in layers_b
    }

    func = _METRIC_FUNCS[metric]

    def score(cell):
        i, j = cell
        if metric == "svcca":
            return func(reps_a[i], reps_b[j], variance_keep)
        return func(reps_a[i], reps_b[j])

    cells = [(i, j) for i in layers_a for j in layers_b]
    if self_compare:
        cells = [(i, j) for i, j in cells if i <= j]

    with ThreadPoolExecutor(max_workers=workers or worker_count()) as pool:
        scores = list(pool.map(score, cells))

    values = np.empty((len(layers_a), len(layers_b)))
    for (i, j), s in zip(cells, scores, strict=True):
        values[i - first, j - first] = s
        if self_compare:
            values[j - first, i - first] = s

    logger.debug("layer_matrix: %s/%s %s", metric, reduction, values.shape)
    return SimilarityMatrix(
        values=values,
        metric=metric,
        reduction=reduction,
        model_hash_a=a.model_hash,
        model_hash_b=b.model_hash,
        dataset_checksum=a.dataset_checksum or b.dataset_checksum,
        first_layer=first,
    )
