"""Fisher-criterion linear probes and LDR localization maps.

Class s is the "positive" class (e.g. sinusoids) and class c the reference
(e.g. constants). A probe projects an activation h onto a unit direction w and
predicts s when w . h > threshold.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ts_lens.config import TRAIN_FRACTION, worker_count
from ts_lens.errors import DegenerateClassesError, ShapeMismatchError
from ts_lens.model import CaptureSet
from ts_lens.numerics import as_matrix

logger = logging.getLogger(__name__)

GAP_TOL = 1e-12
VAR_TOL = 1e-12


@dataclass(frozen=True)
class Probe:
    """Linear classifier on one (layer, token) cell.

    Attributes:
        w: (D,) unit direction.
        threshold: Decision threshold on w . h.
        layer: Layer index.
        token: Token index, or None for token-averaged probes.
        train_accuracy: Accuracy on the fitting samples.
        s_label: Label predicted when w . h > threshold.
        c_label: Label predicted otherwise.
    """

    w: np.ndarray
    threshold: float
    layer: int = 0
    token: int | None = None
    train_accuracy: float = float("nan")
    s_label: int = 1
    c_label: int = 0


@dataclass(frozen=True)
class ClassStats:
    """Projected means, variances and counts of the two predicted groups."""

    mu_s: float
    mu_c: float
    var_s: float
    var_c: float
    n_s: int
    n_c: int


@dataclass(frozen=True)
class LdrValue:
    value: float
    flagged: bool = False


@dataclass
class ProbeGrid:
    """One probe per (layer, token). probes[r][j] covers layer first_layer + r.

    Cells whose classes cannot be separated hold None.
    """

    probes: list[list[Probe | None]]
    s_label: int
    c_label: int
    first_layer: int = 1

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.probes), len(self.probes[0]) if self.probes else 0

    def cell(self, layer: int, token: int) -> Probe | None:
        return self.probes[layer - self.first_layer][token]


@dataclass
class LDRMap:
    """Layer x token LDR matrix.

    Attributes:
        values: Min-max scaled raw, all zeros when raw is constant.
        raw: Unscaled LDR per cell.
        flagged: True where the LDR fell back to 0 (empty group or no variance).
        first_layer: Layer index of row 0.
    """

    values: np.ndarray
    raw: np.ndarray
    flagged: np.ndarray
    first_layer: int = 1

    def argmax(self) -> tuple[int, int]:
        """(layer, token) of the highest scaled cell."""
        r, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return int(r) + self.first_layer, int(j)


@dataclass
class TokenAveragedResult:
    """Per-layer probes on token-mean representations with held-out accuracy."""

    probes: list[Probe | None]
    accuracy: np.ndarray
    first_layer: int = 1

    @property
    def best_layer(self) -> int:
        return int(np.argmax(self.accuracy)) + self.first_layer


def _default_ridge(pooled: np.ndarray) -> float:
    d = pooled.shape[0]
    return max(1e-6 * float(np.trace(pooled)) / d, 1e-12)


def fit_fisher_probe(
    h_s,
    h_c,
    ridge: float | None = None,
    *,
    layer: int = 0,
    token: int | None = None,
    s_label: int = 1,
    c_label: int = 0,
) -> Probe:
    """Closed-form Fisher discriminant.

    w is proportional to (pooled covariance + ridge * I)^-1 (mean_s - mean_c),
    scaled to unit norm; the threshold is the midpoint of the projected class means.

    Args:
        h_s: (n_s, D) activations of class s, n_s >= 2.
        h_c: (n_c, D) activations of class c, n_c >= 2.
        ridge: Diagonal loading. None uses 1e-6 * trace(pooled) / D.

    Raises:
        DegenerateClassesError: if the class means coincide.
    """
    xs = as_matrix(h_s, name="h_s")
    xc = as_matrix(h_c, name="h_c")
    if xs.shape[0] < 2 or xc.shape[0] < 2:
        raise ShapeMismatchError(
            f"each class needs >= 2 samples, got n_s={xs.shape[0]}, n_c={xc.shape[0]}"
        )
    if xs.shape[1] != xc.shape[1]:
        raise ShapeMismatchError(f"class widths differ: {xs.shape[1]} vs {xc.shape[1]}")

    mu_s, mu_c = xs.mean(axis=0), xc.mean(axis=0)
    gap = mu_s - mu_c
    if np.linalg.norm(gap) < GAP_TOL:
        raise DegenerateClassesError("class means coincide; no discriminating direction")

    ds, dc = xs - mu_s, xc - mu_c
    pooled = (ds.T @ ds + dc.T @ dc) / (xs.shape[0] + xc.shape[0] - 2)
    if ridge is None:
        ridge = _default_ridge(pooled)
    w = np.linalg.solve(pooled + ridge * np.eye(pooled.shape[0]), gap)
    norm = np.linalg.norm(w)
    if norm < GAP_TOL:
        raise DegenerateClassesError("discriminant direction vanished")
    w = w / norm
    threshold = 0.5 * float(mu_s @ w + mu_c @ w)

    correct = np.sum(xs @ w > threshold) + np.sum(xc @ w <= threshold)
    accuracy = float(correct) / (xs.shape[0] + xc.shape[0])
    return Probe(
        w=w,
        threshold=threshold,
        layer=layer,
        token=token,
        train_accuracy=accuracy,
        s_label=s_label,
        c_label=c_label,
    )


def fisher_criterion(w, h_s, h_c) -> float:
    """(w . (mu_s - mu_c))^2 / (w' S_s w + w' S_c w) with sample covariances."""
    w = np.asarray(w, dtype=np.float64)
    zs, zc = as_matrix(h_s) @ w, as_matrix(h_c) @ w
    return float((zs.mean() - zc.mean()) ** 2 / (zs.var(ddof=1) + zc.var(ddof=1)))


def predict(probe: Probe, h) -> int | np.ndarray:
    """s_label where w . h > threshold, c_label otherwise (ties go to c).

    Accepts one (D,) vector or an (n, D) batch.
    """
    x = np.asarray(h, dtype=np.float64)
    hits = x @ probe.w > probe.threshold
    out = np.where(hits, probe.s_label, probe.c_label)
    return int(out) if x.ndim == 1 else out


def class_stats(z, predicted_s) -> ClassStats:
    """Group projected scalars z by predicted class."""
    z = np.asarray(z, dtype=np.float64)
    mask = np.asarray(predicted_s, dtype=bool)
    zs, zc = z[mask], z[~mask]
    return ClassStats(
        mu_s=float(zs.mean()) if zs.size else 0.0,
        mu_c=float(zc.mean()) if zc.size else 0.0,
        var_s=float(zs.var()) if zs.size else 0.0,
        var_c=float(zc.var()) if zc.size else 0.0,
        n_s=int(zs.size),
        n_c=int(zc.size),
    )


def ldr(stats: ClassStats) -> LdrValue:
    """Linear discriminant ratio (mu_s - mu_c)^2 / (var_s + var_c).

    Returns 0 with flagged=True when a group is empty or the pooled variance is
    below 1e-12.
    """
    pooled = stats.var_s + stats.var_c
    if stats.n_s < 1 or stats.n_c < 1 or pooled < VAR_TOL:
        return LdrValue(0.0, flagged=True)
    return LdrValue((stats.mu_s - stats.mu_c) ** 2 / pooled)


def _two_class(captures: CaptureSet, s_label: int, c_label: int) -> tuple[np.ndarray, np.ndarray]:
    is_s = captures.labels == s_label
    is_c = captures.labels == c_label
    if not is_s.any() or not is_c.any():
        raise DegenerateClassesError(
            f"captures need samples of both labels {s_label} and {c_label}"
        )
    return is_s, is_c


def fit_probe_grid(
    captures: CaptureSet,
    s_label: int = 1,
    c_label: int = 0,
    *,
    ridge: float | None = None,
    include_embedding: bool = False,
    workers: int | None = None,
) -> ProbeGrid:
    """Fit one Fisher probe per (layer, token) cell."""
    is_s, is_c = _two_class(captures, s_label, c_label)
    first = 0 if include_embedding else 1
    layers = range(first, captures.n_layers + 1)

    def fit_cell(cell):
        i, j = cell
        acts = captures.activations[i, :, j].astype(np.float64)
        try:
            return fit_fisher_probe(
                acts[is_s], acts[is_c], ridge,
                layer=i, token=j, s_label=s_label, c_label=c_label,
            )
        except DegenerateClassesError:
            return None

    cells = [(i, j) for i in layers for j in range(captures.n_tokens)]
    with ThreadPoolExecutor(max_workers=workers or worker_count()) as pool:
        fitted = list(pool.map(fit_cell, cells))

    n = captures.n_tokens
    probes = [fitted[r * n : (r + 1) * n] for r in range(len(layers))]
    missing = sum(p is None for p in fitted)
    if missing:
        logger.warning(
            "probe grid: %d of %d cells have coinciding class means", missing, len(cells)
        )
    return ProbeGrid(probes=probes, s_label=s_label, c_label=c_label, first_layer=first)


def minmax_scale(raw) -> np.ndarray:
    """Global min-max scaling to [0, 1]; a constant matrix maps to zeros."""
    raw = np.asarray(raw, dtype=np.float64)
    lo, hi = raw.min(), raw.max()
    if hi - lo <= 0:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def ldr_map(captures: CaptureSet, grid: ProbeGrid) -> LDRMap:
    """LDR of each probe's projection, grouped by the probe's own predictions.

    Only samples carrying the grid's two labels take part.
    """
    is_s, is_c = _two_class(captures, grid.s_label, grid.c_label)
    keep = is_s | is_c
    rows, cols = grid.shape
    if cols != captures.n_tokens or grid.first_layer + rows - 1 != captures.n_layers:
        raise ShapeMismatchError(
            f"probe grid {grid.shape} does not cover captures "
            f"({captures.n_layers} layers x {captures.n_tokens} tokens)"
        )
    raw = np.zeros((rows, cols))
    flagged = np.zeros((rows, cols), dtype=bool)
    for r in range(rows):
        acts = captures.activations[grid.first_layer + r][keep].astype(np.float64)
        for j in range(cols):
            probe = grid.probes[r][j]
            if probe is None:
                flagged[r, j] = True
                continue
            z = acts[:, j] @ probe.w
            value = ldr(class_stats(z, z > probe.threshold))
            raw[r, j] = value.value
            flagged[r, j] = value.flagged
    if flagged.any():
        logger.warning("ldr map: %d of %d cells flagged", int(flagged.sum()), flagged.size)
    return LDRMap(
        values=minmax_scale(raw), raw=raw, flagged=flagged, first_layer=grid.first_layer
    )


def split_indices(labels: np.ndarray, train_fraction: float = TRAIN_FRACTION):
    """Deterministic per-class split: the first train_fraction of each class's
    samples (by index) train, the rest test."""
    train, test = [], []
    for label in np.unique(labels):
        idx = np.flatnonzero(labels == label)
        cut = int(round(train_fraction * idx.size))
        train.append(idx[:cut])
        test.append(idx[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def probe_token_averaged(
    captures: CaptureSet,
    s_label: int = 1,
    c_label: int = 0,
    *,
    labels=None,
    ridge: float | None = None,
    train_fraction: float = TRAIN_FRACTION,
) -> TokenAveragedResult:
    """Per-layer probes on token-mean representations.

    Args:
        captures: Captures holding both classes.
        s_label: Positive class label.
        c_label: Reference class label.
        labels: Optional override for captures.labels (e.g. shuffled labels).
        ridge: Probe ridge; None uses the trace-scaled default.
        train_fraction: Share of each class used for fitting.

    Returns:
        TokenAveragedResult with held-out accuracy per layer 1..L. Layers whose
        class means coincide hold None and accuracy 0.5.

    Raises:
        DegenerateClassesError: if every layer is degenerate.
    """
    labels = captures.labels if labels is None else np.asarray(labels)
    keep = np.flatnonzero((labels == s_label) | (labels == c_label))
    sub_labels = labels[keep]
    if not (sub_labels == s_label).any() or not (sub_labels == c_label).any():
        raise DegenerateClassesError(f"need samples of both labels {s_label} and {c_label}")
    train, test = split_indices(sub_labels, train_fraction)
    y_train, y_test = sub_labels[train], sub_labels[test]

    probes: list[Probe | None] = []
    accuracy = np.empty(captures.n_layers)
    for i in range(1, captures.n_layers + 1):
        reps = captures.token_mean(i)[keep]
        x_train = reps[train]
        try:
            probe = fit_fisher_probe(
                x_train[y_train == s_label], x_train[y_train == c_label], ridge,
                layer=i, s_label=s_label, c_label=c_label,
            )
        except DegenerateClassesError:
            logger.warning("layer %d: class means coincide, probe skipped", i)
            probes.append(None)
            accuracy[i - 1] = 0.5
            continue
        probes.append(probe)
        accuracy[i - 1] = float(np.mean(predict(probe, reps[test]) == y_test))

    if all(p is None for p in probes):
        raise DegenerateClassesError("class means coincide at every layer")
    return TokenAveragedResult(probes=probes, accuracy=accuracy)


def permutation_null(
    captures: CaptureSet,
    s_label: int = 1,
    c_label: int = 0,
    *,
    shuffles: int = 20,
    seed: int = 0,
) -> np.ndarray:
    """Held-out accuracy with randomly permuted labels.

    Returns:
        (shuffles, L) accuracies; a model without label leakage centers on 0.5.
    """
    rng = np.random.default_rng(seed)
    keep = np.flatnonzero((captures.labels == s_label) | (captures.labels == c_label))
    out = np.empty((shuffles, captures.n_layers))
    for r in range(shuffles):
        labels = captures.labels.copy()
        labels[keep] = rng.permutation(labels[keep])
        out[r] = probe_token_averaged(captures, s_label, c_label, labels=labels).accuracy
    return out
