"""Deterministic encoder-only transformer over patched univariate series.

Pre-norm residual blocks with exact softmax attention and a GELU feed-forward, no
final layer norm. The forward pass records the residual stream after every layer,
can skip layers (block pruning) and can add steering offsets to the stream.
Weights are frozen random draws; a ridge readout decodes final activations back
to series values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from ts_lens.errors import (
    InvalidConfigError,
    ModelMismatchError,
    NotFittedError,
    ShapeMismatchError,
)
from ts_lens.numerics import solve_ridge

if TYPE_CHECKING:
    from ts_lens.blocks import PruningPlan
    from ts_lens.steer import SteerConfig, SteeringMatrix

logger = logging.getLogger(__name__)

INIT_STD = 0.02
LN_EPS = 1e-5
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyper-parameters. N = seq_len / patch tokens of width dim."""

    layers: int = 8
    dim: int = 64
    heads: int = 4
    patch: int = 8
    seq_len: int = 128
    ff_mult: int = 4
    init_seed: int = 1

    def __post_init__(self):
        for name in ("layers", "dim", "heads", "patch", "seq_len", "ff_mult"):
            if getattr(self, name) < 1:
                raise InvalidConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.dim % self.heads:
            raise InvalidConfigError(f"D ({self.dim}) must be divisible by H ({self.heads})")
        if self.seq_len % self.patch:
            raise InvalidConfigError(
                f"T ({self.seq_len}) must be divisible by P ({self.patch})"
            )

    @property
    def n_tokens(self) -> int:
        return self.seq_len // self.patch

    @property
    def ff_dim(self) -> int:
        return self.dim * self.ff_mult

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class LayerWeights:
    """One encoder layer. Field order is the draw and serialization order."""

    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray
    ff_in_w: np.ndarray
    ff_in_b: np.ndarray
    ff_out_w: np.ndarray
    ff_out_b: np.ndarray
    ln1_g: np.ndarray
    ln1_b: np.ndarray
    ln2_g: np.ndarray
    ln2_b: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, f.name) for f in fields(self)]


def _layer_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    d, f = config.dim, config.ff_dim
    return {
        "wq": (d, d), "bq": (d,), "wk": (d, d), "bk": (d,),
        "wv": (d, d), "bv": (d,), "wo": (d, d), "bo": (d,),
        "ff_in_w": (d, f), "ff_in_b": (f,), "ff_out_w": (f, d), "ff_out_b": (d,),
        "ln1_g": (d,), "ln1_b": (d,), "ln2_g": (d,), "ln2_b": (d,),
    }  # fmt: skip


@dataclass(frozen=True, eq=False)
class Weights:
    """Immutable model parameters (float32)."""

    config: ModelConfig
    patch_w: np.ndarray
    patch_b: np.ndarray
    pos: np.ndarray
    layers: tuple[LayerWeights, ...]

    def arrays(self) -> list[np.ndarray]:
        out = [self.patch_w, self.patch_b, self.pos]
        for layer in self.layers:
            out.extend(layer.arrays())
        return out

    def to_flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()]).astype(np.float32)

    @classmethod
    def from_flat(cls, config: ModelConfig, flat: np.ndarray) -> Weights:
        """Rebuild weights from the concatenation produced by to_flat()."""
        flat = np.asarray(flat, dtype=np.float32)
        d, p, n = config.dim, config.patch, config.n_tokens
        shapes = [(p, d), (d,), (n, d)]
        layer_shapes = _layer_shapes(config)
        shapes += list(layer_shapes.values()) * config.layers
        expected = sum(int(np.prod(s)) for s in shapes)
        if flat.size != expected:
            raise ShapeMismatchError(
                f"flat weights have {flat.size} values, config needs {expected}"
            )
        parts, offset = [], 0
        for shape in shapes:
            size = int(np.prod(shape))
            parts.append(flat[offset : offset + size].reshape(shape).copy())
            offset += size
        per_layer = len(layer_shapes)
        layers = tuple(
            LayerWeights(*parts[3 + i * per_layer : 3 + (i + 1) * per_layer])
            for i in range(config.layers)
        )
        return cls(config, parts[0], parts[1], parts[2], layers)

    @cached_property
    def model_hash(self) -> str:
        """64-bit FNV-1a over the little-endian float32 weight bytes, hex encoded."""
        return f"{fnv1a64(self.to_flat().astype('<f4').tobytes()):016x}"


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def init_model(config: ModelConfig) -> Weights:
    """Draw weights from N(0, 0.02) with a seeded generator.

    Draw order: patch embedding (weight, bias), positions, then each layer's
    Q, K, V, O, FF-in, FF-out (weight then bias), norms last. Layer-norm gains
    are 1 + N(0, 0.02).
    """
    rng = np.random.default_rng(config.init_seed)
    d, p, n = config.dim, config.patch, config.n_tokens

    def draw(shape):
        return (rng.standard_normal(shape) * INIT_STD).astype(np.float32)

    patch_w = draw((p, d))
    patch_b = draw((d,))
    pos = draw((n, d))
    layers = []
    for _ in range(config.layers):
        values = {}
        for name, shape in _layer_shapes(config).items():
            values[name] = draw(shape)
            if name.endswith("_g"):
                values[name] = values[name] + np.float32(1.0)
        layers.append(LayerWeights(**values))
    return Weights(config, patch_w, patch_b, pos, tuple(layers))


@dataclass(frozen=True)
class SkipMask:
    """skip[i - 1] is True when layer i (1-based) passes the stream through."""

    skip: tuple[bool, ...]

    @classmethod
    def none(cls, n_layers: int) -> SkipMask:
        return cls((False,) * n_layers)

    @classmethod
    def from_layers(cls, n_layers: int, skipped) -> SkipMask:
        skipped = set(skipped)
        bad = [i for i in skipped if not 1 <= i <= n_layers]
        if bad:
            raise ValueError(f"skipped layers {sorted(bad)} outside 1..{n_layers}")
        return cls(tuple(i in skipped for i in range(1, n_layers + 1)))

    def __len__(self) -> int:
        return len(self.skip)

    def skips(self, layer: int) -> bool:
        return self.skip[layer - 1]


@dataclass
class CaptureSet:
    """Residual-stream captures.

    Attributes:
        activations: (L + 1, n, N, D) float32. Index 0 is the post-embedding stream,
            index i the stream after layer i's feed-forward residual add.
        labels: (n,) class index per sample.
        model_hash: Hash of the weights that produced the captures.
        dataset_checksum: Checksum of the input corpus, if known.
        class_names: Class name per label index.
    """

    activations: np.ndarray
    labels: np.ndarray
    model_hash: str
    dataset_checksum: str | None = None
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.activations.ndim != 4:
            raise ShapeMismatchError(
                f"activations must be (L+1, n, N, D), got shape {self.activations.shape}"
            )
        if self.activations.shape[1] != len(self.labels):
            raise ShapeMismatchError(
                f"{self.activations.shape[1]} samples but {len(self.labels)} labels"
            )

    @property
    def n_layers(self) -> int:
        return self.activations.shape[0] - 1

    @property
    def n(self) -> int:
        return self.activations.shape[1]

    @property
    def n_tokens(self) -> int:
        return self.activations.shape[2]

    @property
    def dim(self) -> int:
        return self.activations.shape[3]

    def token_mean(self, layer: int) -> np.ndarray:
        """(n, D) float64 representation averaged over tokens."""
        return self.activations[layer].astype(np.float64).mean(axis=1)

    def flatten_tokens(self, layer: int) -> np.ndarray:
        """(n * N, D) float64 representation with tokens as extra samples."""
        acts = self.activations[layer].astype(np.float64)
        return acts.reshape(-1, self.dim)

    def final(self) -> np.ndarray:
        return self.activations[-1]

    def select(self, mask) -> CaptureSet:
        """Subset of samples by boolean mask or index array."""
        idx = np.flatnonzero(mask) if np.asarray(mask).dtype == bool else np.asarray(mask)
        return CaptureSet(
            activations=self.activations[:, idx],
            labels=self.labels[idx],
            model_hash=self.model_hash,
            dataset_checksum=self.dataset_checksum,
            class_names=list(self.class_names),
        )

    def of_class(self, label: int) -> CaptureSet:
        return self.select(self.labels == label)


def _layer_norm(h: np.ndarray, gain: np.ndarray, bias: np.ndarray) -> np.ndarray:
    mu = h.mean(axis=-1, keepdims=True)
    var = h.var(axis=-1, keepdims=True)
    return (h - mu) / np.sqrt(var + np.float32(LN_EPS)) * gain + bias


def _gelu(x: np.ndarray) -> np.ndarray:
    c = np.float32(np.sqrt(2.0 / np.pi))
    return np.float32(0.5) * x * (np.float32(1.0) + np.tanh(c * (x + np.float32(0.044715) * x**3)))


def _attention(h: np.ndarray, lw: LayerWeights, heads: int) -> np.ndarray:
    n, tokens, d = h.shape
    dh = d // heads

    def split(x):
        return x.reshape(n, tokens, heads, dh).transpose(0, 2, 1, 3)

    q = split(h @ lw.wq + lw.bq)
    k = split(h @ lw.wk + lw.bk)
    v = split(h @ lw.wv + lw.bv)
    scores = (q @ k.transpose(0, 1, 3, 2)) / np.float32(np.sqrt(dh))
    scores = scores - scores.max(axis=-1, keepdims=True)
    weights = np.exp(scores)
    weights = weights / weights.sum(axis=-1, keepdims=True)
    ctx = (weights @ v).transpose(0, 2, 1, 3).reshape(n, tokens, d)
    return ctx @ lw.wo + lw.bo


def _feed_forward(h: np.ndarray, lw: LayerWeights) -> np.ndarray:
    return _gelu(h @ lw.ff_in_w + lw.ff_in_b) @ lw.ff_out_w + lw.ff_out_b


def _block(h: np.ndarray, lw: LayerWeights, heads: int) -> np.ndarray:
    h = h + _attention(_layer_norm(h, lw.ln1_g, lw.ln1_b), lw, heads)
    return h + _feed_forward(_layer_norm(h, lw.ln2_g, lw.ln2_b), lw)


def _embed(weights: Weights, x: np.ndarray) -> np.ndarray:
    cfg = weights.config
    patches = x.reshape(x.shape[0], cfg.n_tokens, cfg.patch)
    return patches @ weights.patch_w + weights.patch_b + weights.pos


def _run_batch(
    weights: Weights,
    x: np.ndarray,
    mask: SkipMask,
    steer: tuple[SteeringMatrix, SteerConfig] | None,
    out: np.ndarray,
) -> None:
    """Forward one batch, writing captures into out (L + 1, b, N, D).

    Once a layer has been steered (without compounding), the unsteered stream is
    carried alongside so the next steered layer can start from it.
    """
    cfg = weights.config
    h = _embed(weights, x).astype(np.float32)
    out[0] = h
    clean = None
    for i, lw in enumerate(weights.layers, start=1):
        if not mask.skips(i):
            h = _block(h, lw, cfg.heads)
            if clean is not None:
                clean = _block(clean, lw, cfg.heads)
        if steer is not None:
            from ts_lens.steer import steer_activations

            matrix, steer_cfg = steer
            if steer_cfg.applies_to(i):
                if not steer_cfg.compound:
                    if clean is None:
                        clean = h
                    h = clean
                h = steer_activations(h, matrix.values[i - 1], steer_cfg)
        out[i] = h


def forward(
    weights: Weights,
    batch,
    mask: SkipMask | None = None,
    steer: tuple[SteeringMatrix, SteerConfig] | None = None,
    *,
    head: ReadoutHead | None = None,
    labels=None,
    dataset_checksum: str | None = None,
    class_names: list[str] | None = None,
    batch_size: int = 256,
) -> tuple[np.ndarray | None, CaptureSet]:
    """Run the encoder over a batch of series.

    Args:
        weights: Model parameters.
        batch: (n, T) series.
        mask: Layers to skip. None runs every layer.
        steer: Optional (SteeringMatrix, SteerConfig). Steering is added to the stream
            right after layer i, so captures record the steered stream and later
            layers consume it. Without SteerConfig.compound, the stream at every
            steered layer i is the unsteered stream plus lam * S_i.
        head: Fitted readout; when given, outputs are the decoded (n, T) series.
        labels: Optional per-sample labels stored on the CaptureSet.
        dataset_checksum: Recorded on the CaptureSet.
        class_names: Recorded on the CaptureSet.
        batch_size: Samples per internal batch; results do not depend on it.

    Returns:
        (outputs or None, CaptureSet).
    """
    cfg = weights.config
    x = np.asarray(batch, dtype=np.float32)
    if x.ndim != 2 or x.shape[1] != cfg.seq_len:
        raise ShapeMismatchError(f"batch must have shape (n, {cfg.seq_len}), got {x.shape}")
    if mask is None:
        mask = SkipMask.none(cfg.layers)
    if len(mask) != cfg.layers:
        raise ShapeMismatchError(f"skip mask has {len(mask)} entries, model has {cfg.layers}")
    if steer is not None:
        matrix, steer_cfg = steer
        steer_cfg.check(cfg.layers, cfg.n_tokens)
        expected = (cfg.layers, cfg.n_tokens, cfg.dim)
        if matrix.values.shape != expected:
            raise ShapeMismatchError(
                f"steering matrix shape {matrix.values.shape} does not match {expected}"
            )
        if matrix.model_hash and matrix.model_hash != weights.model_hash:
            raise ModelMismatchError(
                "steering matrix was derived from a different model",
                expected=weights.model_hash,
                actual=matrix.model_hash,
            )

    n = x.shape[0]
    acts = np.empty((cfg.layers + 1, n, cfg.n_tokens, cfg.dim), dtype=np.float32)
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        _run_batch(weights, x[start:stop], mask, steer, acts[:, start:stop])

    if labels is None:
        labels = np.zeros(n, dtype=np.int64)
    captures = CaptureSet(
        activations=acts,
        labels=np.asarray(labels),
        model_hash=weights.model_hash,
        dataset_checksum=dataset_checksum,
        class_names=list(class_names or []),
    )
    outputs = decode(head, acts[-1]) if head is not None else None
    return outputs, captures


def zero_block_weights(weights: Weights, plan: PruningPlan) -> Weights:
    """Zero the O-projection and FF-out (with biases) of every skipped layer.

    Both residual updates of those layers then vanish, matching skip execution.
    """
    cfg = weights.config
    bad = [i for i in plan.skipped if not 1 <= i <= cfg.layers]
    if bad:
        raise ValueError(f"plan skips layers {bad} outside 1..{cfg.layers}")
    skipped = set(plan.skipped)
    layers = []
    for i, lw in enumerate(weights.layers, start=1):
        if i in skipped:
            lw = replace(
                lw,
                wo=np.zeros_like(lw.wo),
                bo=np.zeros_like(lw.bo),
                ff_out_w=np.zeros_like(lw.ff_out_w),
                ff_out_b=np.zeros_like(lw.ff_out_b),
            )
        layers.append(lw)
    return Weights(cfg, weights.patch_w, weights.patch_b, weights.pos, tuple(layers))


@dataclass
class ReadoutHead:
    """Linear map from a D-dim token activation to its P patch values."""

    weight: np.ndarray
    bias: np.ndarray
    ridge_alpha: float
    train_mse: float = float("nan")
    fitted: bool = True

    @property
    def patch(self) -> int:
        return self.weight.shape[1]


def _patches(series: np.ndarray, n_tokens: int) -> np.ndarray:
    n, length = series.shape
    if length % n_tokens:
        raise ShapeMismatchError(f"series length {length} not divisible into {n_tokens} patches")
    return series.reshape(n * n_tokens, length // n_tokens)


def fit_readout(final_captures, targets, alpha: float = 1.0) -> ReadoutHead:
    """Pooled per-token ridge regression from activations to patch values.

    The bias is fitted unpenalized by centering both sides first.

    Args:
        final_captures: (n, N, D) final-layer activations.
        targets: (n, T) series; token j predicts patch j.
        alpha: Ridge strength.
    """
    acts = np.asarray(final_captures, dtype=np.float64)
    if acts.ndim != 3:
        raise ShapeMismatchError(f"final captures must be (n, N, D), got {acts.shape}")
    n, tokens, d = acts.shape
    y = np.asarray(targets, dtype=np.float64)
    if y.shape[0] != n:
        raise ShapeMismatchError(f"{n} activation samples but {y.shape[0]} targets")
    if n * tokens < d:
        logger.warning("readout: %d token rows for %d features, relying on ridge", n * tokens, d)

    x = acts.reshape(n * tokens, d)
    y = _patches(y, tokens)
    x_mean, y_mean = x.mean(axis=0), y.mean(axis=0)
    w = solve_ridge(x - x_mean, y - y_mean, alpha)
    bias = y_mean - x_mean @ w
    mse = float(np.mean((x @ w + bias - y) ** 2))
    logger.debug("readout fit: alpha=%g mse=%.6g", alpha, mse)
    return ReadoutHead(weight=w, bias=bias, ridge_alpha=alpha, train_mse=mse)


def decode(head: ReadoutHead | None, final_activations) -> np.ndarray:
    """Map (n, N, D) final activations to (n, T) series."""
    if head is None or not head.fitted:
        raise NotFittedError("readout head is not fitted")
    acts = np.asarray(final_activations, dtype=np.float64)
    if acts.ndim != 3 or acts.shape[2] != head.weight.shape[0]:
        raise ShapeMismatchError(
            f"activations must be (n, N, {head.weight.shape[0]}), got {acts.shape}"
        )
    n, tokens, _ = acts.shape
    return (acts @ head.weight + head.bias).reshape(n, tokens * head.patch)


def reconstruction_mse(head: ReadoutHead, captures: CaptureSet, series) -> float:
    """Mean squared error of decoding the final captures against the series."""
    decoded = decode(head, captures.final())
    return float(np.mean((decoded - np.asarray(series, dtype=np.float64)) ** 2))
