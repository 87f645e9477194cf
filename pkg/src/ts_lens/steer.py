"""Steering matrices: derivation from class activations, composition, injection
and displacement measurement."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from ts_lens.config import DEFAULT_LAMBDA, LAMBDA_RANGE
from ts_lens.errors import (
    EmptyClassError,
    InvalidConfigError,
    ModelMismatchError,
    ShapeMismatchError,
    TokenOutOfRangeError,
)
from ts_lens.model import CaptureSet
from ts_lens.numerics import PcaResult, pca

logger = logging.getLogger(__name__)

Stat = Literal["median", "mean"]
Mode = Literal["all_tokens", "single_token"]


@dataclass(frozen=True, eq=False)
class SteeringMatrix:
    """Per-layer offsets for layers 1..L.

    Attributes:
        values: (L, N, D) float64; values[i - 1] is added after layer i.
        stat: 'median' or 'mean' (or 'mixed' after composing different stats).
        source: Class the offsets move away from.
        target: Class the offsets move toward.
        model_hash: Hash of the model the activations came from.
        dataset_checksum: Checksum of the corpus they were derived on.
    """

    values: np.ndarray
    stat: str = "median"
    source: str = ""
    target: str = ""
    model_hash: str = ""
    dataset_checksum: str | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ShapeMismatchError(f"steering values must be (L, N, D), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("steering values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def metadata(self) -> dict:
        return {
            "stat": self.stat,
            "source": self.source,
            "target": self.target,
            "model_hash": self.model_hash,
            "dataset_checksum": self.dataset_checksum,
        }


@dataclass(frozen=True)
class SteerConfig:
    """How a steering matrix is applied.

    Attributes:
        lam: Strength. 0 disables injection; |lam| outside [0.1, 2.0] warns.
        mode: 'all_tokens' or 'single_token'.
        token: Token for single_token mode; None means the last token.
        layers: 1-based layers to steer; None steers all.
        compound: If False (default), each steered layer i leaves the stream at the
            unsteered stream plus lam * S_i, so offsets injected at earlier layers do
            not pile up on top of S_i. If True, lam * S_i is added to the already
            steered stream and offsets accumulate through the residual stream.
    """

    lam: float = DEFAULT_LAMBDA
    mode: str = "all_tokens"
    token: int | None = None
    layers: tuple[int, ...] | None = None
    compound: bool = False

    def __post_init__(self):
        if not np.isfinite(self.lam):
            raise InvalidConfigError(f"lambda must be finite, got {self.lam}")
        if self.mode not in ("all_tokens", "single_token"):
            raise InvalidConfigError(
                f"Unknown steering mode: {self.mode!r}. Supported: all_tokens, single_token."
            )
        if self.layers is not None:
            layers = tuple(int(i) for i in self.layers)
            if not layers:
                raise InvalidConfigError("steering layer subset is empty")
            bad = [i for i in layers if i < 1]
            if bad:
                raise InvalidConfigError(f"steering layers must be >= 1, got {bad}")
            object.__setattr__(self, "layers", layers)
        if self.token is not None and self.token < 0:
            raise TokenOutOfRangeError(f"token must be >= 0, got {self.token}")
        lo, hi = LAMBDA_RANGE
        if self.lam != 0 and not lo <= abs(self.lam) <= hi:
            logger.warning(
                "steering strength %g outside the recommended range [%g, %g]", self.lam, lo, hi
            )

    def check(self, n_layers: int, n_tokens: int) -> None:
        """Raise if the layer subset or token does not exist in a model of this size."""
        if self.layers is not None:
            bad = [i for i in self.layers if i > n_layers]
            if bad:
                raise InvalidConfigError(f"steering layers {bad} outside 1..{n_layers}")
        if self.mode == "single_token" and self.token is not None and self.token >= n_tokens:
            raise TokenOutOfRangeError(f"token {self.token} outside 0..{n_tokens - 1}")

    def applies_to(self, layer: int) -> bool:
        if self.lam == 0:
            return False
        return self.layers is None or layer in self.layers


def _class_name(captures: CaptureSet) -> str:
    labels = np.unique(captures.labels)
    if labels.size == 1 and captures.class_names and labels[0] < len(captures.class_names):
        return captures.class_names[int(labels[0])]
    return ""


def _check_same_model(a_hash: str, b_hash: str) -> None:
    if a_hash != b_hash:
        raise ModelMismatchError(
            "activations come from different models", expected=a_hash, actual=b_hash
        )


def derive_steering(
    captures_target: CaptureSet,
    captures_source: CaptureSet,
    stat: str = "median",
) -> SteeringMatrix:
    """Element-wise statistic of the target class minus that of the source class.

    Args:
        captures_target: Captures of the class to steer toward (e.g. sinusoids).
        captures_source: Captures of the class to steer away from (e.g. constants).
        stat: 'median' (robust to outliers) or 'mean'.

    Returns:
        SteeringMatrix over layers 1..L.
    """
    _check_same_model(captures_target.model_hash, captures_source.model_hash)
    if captures_target.activations.shape[2:] != captures_source.activations.shape[2:] or (
        captures_target.n_layers != captures_source.n_layers
    ):
        raise ShapeMismatchError(
            f"capture shapes differ: {captures_target.activations.shape} vs "
            f"{captures_source.activations.shape}"
        )
    if captures_target.n < 1 or captures_source.n < 1:
        raise EmptyClassError(
            f"both classes need samples (target n={captures_target.n}, "
            f"source n={captures_source.n})"
        )
    if stat == "median":
        reduce = np.median
    elif stat == "mean":
        reduce = np.mean
    else:
        raise ValueError(f"Unknown statistic: {stat!r}. Supported: median, mean.")

    target = reduce(captures_target.activations[1:].astype(np.float64), axis=1)
    source = reduce(captures_source.activations[1:].astype(np.float64), axis=1)
    return SteeringMatrix(
        values=target - source,
        stat=stat,
        source=_class_name(captures_source),
        target=_class_name(captures_target),
        model_hash=captures_target.model_hash,
        dataset_checksum=captures_target.dataset_checksum,
    )


def steer_activations(h, s, cfg: SteerConfig) -> np.ndarray:
    """Add lam * s to the residual stream h.

    Args:
        h: (..., N, D) activations.
        s: (N, D) offsets for this layer.
        cfg: Strength and token mode.

    Returns:
        Steered activations in h's dtype. lam == 0 returns h itself.
    """
    h = np.asarray(h)
    s = np.asarray(s)
    if h.shape[-2:] != s.shape:
        raise ShapeMismatchError(f"activations {h.shape} do not match offsets {s.shape}")
    if cfg.lam == 0:
        return h
    delta = (cfg.lam * s).astype(h.dtype, copy=False)
    if cfg.mode == "all_tokens":
        return h + delta
    n_tokens = s.shape[0]
    token = n_tokens - 1 if cfg.token is None else cfg.token
    if not 0 <= token < n_tokens:
        raise TokenOutOfRangeError(f"token {token} outside 0..{n_tokens - 1}")
    out = h.copy()
    out[..., token, :] += delta[token]
    return out


def compose(s_a: SteeringMatrix, s_b: SteeringMatrix, beta: float) -> SteeringMatrix:
    """Convex blend (1 - beta) * s_a + beta * s_b.

    With s_a a periodicity matrix and s_b a trend matrix, beta sweeps from
    pure periodicity (0) to pure trend (1).
    """
    _check_same_model(s_a.model_hash, s_b.model_hash)
    if s_a.shape != s_b.shape:
        raise ShapeMismatchError(f"steering shapes differ: {s_a.shape} vs {s_b.shape}")
    if not 0 <= beta <= 1:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if beta == 0:
        values = s_a.values.copy()
    elif beta == 1:
        values = s_b.values.copy()
    else:
        values = (1 - beta) * s_a.values + beta * s_b.values
    return SteeringMatrix(
        values=values,
        stat=s_a.stat if s_a.stat == s_b.stat else "mixed",
        source=s_a.source if s_a.source == s_b.source else f"{s_a.source}|{s_b.source}",
        target=f"{s_a.target}*{1 - beta:g}+{s_b.target}*{beta:g}",
        model_hash=s_a.model_hash,
        dataset_checksum=s_a.dataset_checksum,
    )


def negate(s: SteeringMatrix) -> SteeringMatrix:
    """Reverse the direction; source and target swap."""
    return replace(s, values=-s.values, source=s.target, target=s.source)


def _check_pair(before: CaptureSet, after: CaptureSet, layer: int) -> None:
    if before.activations.shape != after.activations.shape:
        raise ShapeMismatchError(
            f"before {before.activations.shape} and after {after.activations.shape} differ"
        )
    if not 0 <= layer <= before.n_layers:
        raise ShapeMismatchError(f"layer {layer} outside 0..{before.n_layers}")


def mean_displacement(
    before: CaptureSet, after: CaptureSet, layer: int, label: int | None = None
) -> np.ndarray:
    """Sample-mean activation after steering minus before at one layer, flattened to N * D."""
    _check_pair(before, after, layer)
    rows = slice(None) if label is None else before.labels == label
    post = after.activations[layer][rows].astype(np.float64).mean(axis=0)
    pre = before.activations[layer][rows].astype(np.float64).mean(axis=0)
    return (post - pre).ravel()


def centroid_shift(
    before: CaptureSet,
    after: CaptureSet,
    layer: int,
    toward_label: int,
    moved_label: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Euclidean distance of moved samples to the (unsteered) toward-class centroid.

    Returns:
        (distance before, distance after), one entry per moved sample.
    """
    _check_pair(before, after, layer)
    reps_before, reps_after = before.token_mean(layer), after.token_mean(layer)
    toward = before.labels == toward_label
    moved = before.labels == moved_label
    if not toward.any() or not moved.any():
        raise EmptyClassError(f"labels {toward_label} and {moved_label} both need samples")
    centroid = reps_before[toward].mean(axis=0)
    return (
        np.linalg.norm(reps_before[moved] - centroid, axis=1),
        np.linalg.norm(reps_after[moved] - centroid, axis=1),
    )


@dataclass
class DisplacementReport:
    """PCA view of how steering moved samples.

    The PCA is fitted on the unsteered token-mean activations of all samples.
    Coordinates for missing components (rank-deficient data) are zero.
    """

    sample_ids: np.ndarray
    pre: np.ndarray
    post: np.ndarray
    dist_before: np.ndarray
    dist_after: np.ndarray
    raw_dist_before: np.ndarray
    raw_dist_after: np.ndarray
    layer: int
    pca: PcaResult

    @property
    def displacement(self) -> np.ndarray:
        return self.post - self.pre

    @property
    def fraction_closer(self) -> float:
        return float(np.mean(self.dist_after < self.dist_before))

    def table(self) -> np.ndarray:
        """Rows (sample id, pre-x, pre-y, post-x, post-y, dist before, dist after)."""
        return np.column_stack(
            [self.sample_ids, self.pre[:, :2], self.post[:, :2], self.dist_before, self.dist_after]
        )

    COLUMNS = ("sample", "pre_x", "pre_y", "post_x", "post_y", "dist_before", "dist_after")


def _project(fit: PcaResult, m: np.ndarray, k: int) -> np.ndarray:
    coords = fit.transform(m)
    if coords.shape[1] < k:
        coords = np.pad(coords, ((0, 0), (0, k - coords.shape[1])))
    return coords


def steering_displacement_report(
    before: CaptureSet,
    after: CaptureSet,
    layer: int,
    k: int = 2,
    *,
    toward_label: int | None = None,
    moved_label: int | None = None,
) -> DisplacementReport:
    """Project unsteered and steered activations into the unsteered PCA space.

    Args:
        before: Unsteered captures of the corpus (both classes).
        after: Steered captures of the same samples.
        layer: Layer to project.
        k: PCA components (2 for plotting).
        toward_label: Class whose unsteered centroid distances are measured to.
            None uses the centroid of all samples.
        moved_label: Class whose samples are reported. None reports all samples.
    """
    _check_pair(before, after, layer)
    reps_before, reps_after = before.token_mean(layer), after.token_mean(layer)
    fit = pca(reps_before, k)

    moved = np.ones(before.n, dtype=bool) if moved_label is None else before.labels == moved_label
    toward = np.ones(before.n, dtype=bool) if toward_label is None else (
        before.labels == toward_label
    )
    if not moved.any() or not toward.any():
        raise EmptyClassError("moved and toward classes both need samples")

    pre = _project(fit, reps_before[moved], k)
    post = _project(fit, reps_after[moved], k)
    centroid = _project(fit, reps_before[toward], k).mean(axis=0)
    raw_centroid = reps_before[toward].mean(axis=0)

    return DisplacementReport(
        sample_ids=np.flatnonzero(moved),
        pre=pre,
        post=post,
        dist_before=np.linalg.norm(pre - centroid, axis=1),
        dist_after=np.linalg.norm(post - centroid, axis=1),
        raw_dist_before=np.linalg.norm(reps_before[moved] - raw_centroid, axis=1),
        raw_dist_after=np.linalg.norm(reps_after[moved] - raw_centroid, axis=1),
        layer=layer,
        pca=fit,
    )
