"""Redundant layer blocks: identification, pruning plans, sparsity and latency."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from ts_lens.config import BENCH_WARMUP, DEFAULT_BENCH_REPS, DEFAULT_MIN_BLOCK, DEFAULT_TAU
from ts_lens.errors import BlockOutOfRangeError, InvalidConfigError, NotSquareError
from ts_lens.model import SkipMask, Weights, forward
from ts_lens.similarity import SimilarityMatrix

logger = logging.getLogger(__name__)

FIXTURES = Path(__file__).parent / "fixtures"
BLOCK_TABLES = {"moment": "moment_blocks.json", "chronos": "chronos_blocks.json"}


@dataclass(frozen=True, order=True)
class Block:
    """Consecutive layers start..end, inclusive and 1-based."""

    start: int
    end: int

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"block start ({self.start}) must be < end ({self.end})")

    @property
    def size(self) -> int:
        return self.end - self.start + 1

    @property
    def interior(self) -> list[int]:
        return list(range(self.start + 1, self.end))

    def as_dict(self) -> dict:
        return {"start": self.start, "end": self.end}


@dataclass(frozen=True)
class BlockSet:
    blocks: tuple[Block, ...]
    tau: float = DEFAULT_TAU
    k: int = DEFAULT_MIN_BLOCK
    source_checksum: str | None = None

    def __post_init__(self):
        ordered = sorted(self.blocks)
        for prev, cur in zip(ordered, ordered[1:], strict=False):
            if cur.start <= prev.end:
                raise ValueError(f"blocks {prev} and {cur} overlap")
        object.__setattr__(self, "blocks", tuple(ordered))

    def __len__(self) -> int:
        return len(self.blocks)

    def to_json(self) -> str:
        payload = {"tau": self.tau, "k": self.k, "blocks": [b.as_dict() for b in self.blocks]}
        if self.source_checksum:
            payload["source_checksum"] = self.source_checksum
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> BlockSet:
        data = json.loads(text)
        return cls(
            blocks=tuple(Block(b["start"], b["end"]) for b in data["blocks"]),
            tau=float(data.get("tau", DEFAULT_TAU)),
            k=int(data.get("k", DEFAULT_MIN_BLOCK)),
            source_checksum=data.get("source_checksum"),
        )


@dataclass(frozen=True)
class PruningPlan:
    """Layers to skip. Block edges stay in retained_edges and are never skipped."""

    skipped: tuple[int, ...]
    total_layers: int
    retained_edges: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "skipped", tuple(sorted(set(self.skipped))))
        bad = [i for i in self.skipped if not 1 <= i <= self.total_layers]
        if bad:
            raise BlockOutOfRangeError(f"skipped layers {bad} outside 1..{self.total_layers}")
        for start, end in self.retained_edges:
            if start in self.skipped or end in self.skipped:
                raise ValueError(f"block edges ({start}, {end}) must not be skipped")

    @classmethod
    def empty(cls, total_layers: int) -> PruningPlan:
        return cls(skipped=(), total_layers=total_layers)

    def to_json(self) -> str:
        return json.dumps(
            {
                "total_layers": self.total_layers,
                "skipped": list(self.skipped),
                "retained_edges": [list(e) for e in self.retained_edges],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> PruningPlan:
        data = json.loads(text)
        return cls(
            skipped=tuple(data["skipped"]),
            total_layers=int(data["total_layers"]),
            retained_edges=tuple(tuple(e) for e in data.get("retained_edges", [])),
        )


@dataclass(frozen=True)
class LatencyStats:
    median_ms: float
    mean_ms: float
    stdev_ms: float
    reps: int


def _checksum(values: np.ndarray) -> str:
    payload = np.ascontiguousarray(values, dtype="<f8").tobytes()
    return hashlib.blake2b(payload, digest_size=8).hexdigest()


def identify_blocks(
    s: SimilarityMatrix | np.ndarray,
    tau: float = DEFAULT_TAU,
    k: int = DEFAULT_MIN_BLOCK,
) -> BlockSet:
    """Find runs of consecutive, mutually similar layers.

    Three phases: greedy grouping (a layer joins the current block only if its
    similarity to every member is >= tau, otherwise it starts a new block), drop
    blocks shorter than k, then keep blocks whose whole submatrix is >= tau.

    Args:
        s: Square self-comparison matrix (SimilarityMatrix or array).
        tau: Similarity threshold in (0, 1].
        k: Minimum block size, >= 2.

    Returns:
        BlockSet with 1-based layer indices (offset by first_layer for a
        SimilarityMatrix).
    """
    if isinstance(s, SimilarityMatrix):
        values, first = np.asarray(s.values, dtype=np.float64), s.first_layer
    else:
        values, first = np.asarray(s, dtype=np.float64), 1
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise NotSquareError(f"similarity matrix must be square, got shape {values.shape}")
    if not 0 < tau <= 1:
        raise InvalidConfigError(f"tau must be in (0, 1], got {tau}")
    if k < 2:
        raise InvalidConfigError(f"k must be >= 2, got {k}")

    n = values.shape[0]
    candidates: list[list[int]] = []
    current: list[int] = [0] if n else []
    for i in range(1, n):
        if all(values[i, m] >= tau and values[m, i] >= tau for m in current):
            current.append(i)
        else:
            candidates.append(current)
            current = [i]
    if current:
        candidates.append(current)
    logger.debug("phase 1 candidates: %s", candidates)

    sized = [c for c in candidates if len(c) >= k]
    logger.debug("phase 2 kept %d of %d candidates", len(sized), len(candidates))

    verified = [c for c in sized if values[np.ix_(c, c)].min() >= tau]
    blocks = tuple(Block(c[0] + first, c[-1] + first) for c in verified)
    return BlockSet(blocks=blocks, tau=tau, k=k, source_checksum=_checksum(values))


def plan_prune(blocks: BlockSet, total_layers: int, selection: str | int = "all") -> PruningPlan:
    """Skip the interior layers of the selected blocks.

    Args:
        blocks: Identified blocks.
        total_layers: Encoder depth L.
        selection: 'all' or a 1-based block index.
    """
    for b in blocks.blocks:
        if b.start < 1 or b.end > total_layers:
            raise BlockOutOfRangeError(f"block [{b.start}, {b.end}] outside 1..{total_layers}")
    if selection == "all":
        chosen = list(blocks.blocks)
    else:
        index = int(selection)
        if not 1 <= index <= len(blocks):
            raise BlockOutOfRangeError(
                f"block index {index} outside 1..{len(blocks)}"
            )
        chosen = [blocks.blocks[index - 1]]
    skipped = tuple(i for b in chosen for i in b.interior)
    edges = tuple((b.start, b.end) for b in chosen)
    return PruningPlan(skipped=skipped, total_layers=total_layers, retained_edges=edges)


def encoder_sparsity(plan: PruningPlan) -> float:
    """Fraction of encoder layers skipped."""
    return len(plan.skipped) / plan.total_layers


def skip_mask(plan: PruningPlan) -> SkipMask:
    return SkipMask.from_layers(plan.total_layers, plan.skipped)


def bench(
    weights: Weights,
    plan: PruningPlan,
    reps: int = DEFAULT_BENCH_REPS,
    batch=None,
    *,
    show_progress: bool = False,
) -> LatencyStats:
    """Time forward passes under the plan's skip mask.

    Args:
        weights: Model parameters.
        plan: Pruning plan; its total_layers must match the model.
        reps: Timed passes, >= 10. Five untimed warm-up passes run first. BLAS and
            OpenMP pools are limited to one thread while timing.
        batch: (n, T) input; defaults to one zero series.
        show_progress: Show a tqdm progress bar.

    Returns:
        LatencyStats in milliseconds.
    """
    if reps < 10:
        raise InvalidConfigError(f"reps must be >= 10, got {reps}")
    cfg = weights.config
    if plan.total_layers != cfg.layers:
        raise BlockOutOfRangeError(
            f"plan covers {plan.total_layers} layers, model has {cfg.layers}"
        )
    if batch is None:
        batch = np.zeros((1, cfg.seq_len), dtype=np.float32)
    mask = skip_mask(plan)

    iterator = range(reps)
    if show_progress:
        from tqdm.auto import tqdm

        iterator = tqdm(iterator, desc="bench", unit="pass")

    times = np.empty(reps)
    with threadpool_limits(limits=1):
        for _ in range(BENCH_WARMUP):
            forward(weights, batch, mask)
        logger.debug("bench: %d warm-up passes done", BENCH_WARMUP)
        for r in iterator:
            start = time.perf_counter()
            forward(weights, batch, mask)
            times[r] = (time.perf_counter() - start) * 1000.0

    return LatencyStats(
        median_ms=float(np.median(times)),
        mean_ms=float(np.mean(times)),
        stdev_ms=float(np.std(times, ddof=1)),
        reps=reps,
    )


def load_block_table(name: str) -> tuple[BlockSet, int]:
    """Load a shipped block table ('moment' or 'chronos').

    Returns:
        (BlockSet, total_layers)
    """
    key = name.lower()
    if key not in BLOCK_TABLES:
        raise ValueError(f"Unknown block table: {name!r}. Supported: {', '.join(BLOCK_TABLES)}.")
    text = (FIXTURES / BLOCK_TABLES[key]).read_text()
    return BlockSet.from_json(text), int(json.loads(text)["total_layers"])
