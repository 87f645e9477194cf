"""Synthetic constant / trend / sinusoid corpus with a bit-reproducible RNG.

Each series follows y(t) = a * sin(2 pi t / f) + m * t + b for t = 0 .. length - 1.
Parameters are drawn uniformly from per-class ranges in the fixed order (a, f, m, b).
"""

import hashlib
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ts_lens.config import DESK_PERIOD
from ts_lens.errors import InvalidPeriodError

MASK64 = 0xFFFFFFFFFFFFFFFF

PatternClass = Literal[
    "constant",
    "increasing_slope",
    "decreasing_slope",
    "sine_constant",
    "sine_increasing",
    "sine_decreasing",
]

CLASS_NAMES: tuple[str, ...] = (
    "constant",
    "increasing_slope",
    "decreasing_slope",
    "sine_constant",
    "sine_increasing",
    "sine_decreasing",
)


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state. Returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return state, z


class Rng:
    """SplitMix64 generator. Single owner; not thread-safe."""

    def __init__(self, state: int):
        self.state = state & MASK64

    @classmethod
    def for_row(cls, seed: int, row: int) -> "Rng":
        """Child generator for one dataset row: state = SplitMix64(seed xor row)."""
        _, mixed = splitmix64((seed ^ row) & MASK64)
        return cls(mixed)

    def next_u64(self) -> int:
        self.state, z = splitmix64(self.state)
        return z

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class PatternParams:
    a: float
    f: float
    m: float
    b: float

    def __post_init__(self):
        if not all(np.isfinite([self.a, self.f, self.m, self.b])):
            raise ValueError(f"pattern parameters must be finite, got {self}")

    def as_dict(self) -> dict:
        return {"a": self.a, "f": self.f, "m": self.m, "b": self.b}


Range = tuple[float, float]


@dataclass(frozen=True)
class GenSpec:
    """Parameter ranges for one pattern class."""

    pattern_class: str
    amplitude: Range = (0.0, 0.0)
    period: Range = (0.0, 0.0)
    slope: Range = (0.0, 0.0)
    intercept: Range = (-30.0, 30.0)

    def __post_init__(self):
        if self.pattern_class not in CLASS_NAMES:
            raise ValueError(
                f"Unknown pattern class: {self.pattern_class!r}. "
                f"Supported: {', '.join(CLASS_NAMES)}."
            )
        for name in ("amplitude", "period", "slope", "intercept"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range must satisfy min <= max, got ({lo}, {hi})")


_SLOPES: dict[str, Range] = {
    "constant": (0.0, 0.0),
    "increasing_slope": (0.5, 1.0),
    "decreasing_slope": (-1.0, -0.5),
    "sine_constant": (0.0, 0.0),
    "sine_increasing": (0.5, 1.0),
    "sine_decreasing": (-1.0, -0.5),
}


def _spec(pattern_class: str, period: float) -> GenSpec:
    if pattern_class not in CLASS_NAMES:
        raise ValueError(
            f"Unknown pattern class: {pattern_class!r}. Supported: {', '.join(CLASS_NAMES)}."
        )
    seasonal = pattern_class.startswith("sine")
    return GenSpec(
        pattern_class=pattern_class,
        amplitude=(50.0, 50.0) if seasonal else (0.0, 0.0),
        period=(period, period) if seasonal else (0.0, 0.0),
        slope=_SLOPES[pattern_class],
    )


def wide_spec(pattern_class: str) -> GenSpec:
    """The original parameter table (seasonal period 128)."""
    return _spec(pattern_class, 128.0)


def desk_spec(pattern_class: str, period: float = DESK_PERIOD) -> GenSpec:
    """Desk-scale table: period 32 keeps four cycles per 128-step window."""
    return _spec(pattern_class, period)


def sample_params(spec: GenSpec, rng: Rng) -> PatternParams:
    """Draw one parameter set. Draw order is fixed as (a, f, m, b)."""
    values = []
    for lo, hi in (spec.amplitude, spec.period, spec.slope, spec.intercept):
        u = rng.uniform()
        values.append(lo + (hi - lo) * u)
    return PatternParams(*values)


def render(p: PatternParams, length: int) -> np.ndarray:
    """Evaluate the pattern formula at t = 0 .. length - 1.

    The period is ignored when the amplitude is zero.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    t = np.arange(length, dtype=np.float64)
    y = p.m * t + p.b
    if p.a != 0.0:
        if p.f <= 0:
            raise InvalidPeriodError(f"period must be > 0 when amplitude is nonzero, got {p.f}")
        y = p.a * np.sin(2.0 * np.pi * t / p.f) + y
    return y


def znormalize(series, *, eps: float = 1e-12) -> tuple[np.ndarray, bool]:
    """Z-score with population standard deviation.

    Zero-variance input maps to all zeros with degenerate=True.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError(f"znormalize needs a 1D series of length >= 2, got shape {x.shape}")
    std = x.std()
    if std < eps:
        return np.zeros_like(x), True
    return (x - x.mean()) / std, False


@dataclass
class SeriesSet:
    """A labelled corpus of univariate series.

    Attributes:
        series: (n, T) float64 values.
        labels: (n,) class index per row, indexing class_names.
        params: PatternParams per row (raw, pre-normalization).
        seed: Corpus seed.
        normalized: Whether rows were z-normalized.
        class_names: Pattern class name per label index.
    """

    series: np.ndarray
    labels: np.ndarray
    params: list[PatternParams]
    seed: int
    normalized: bool
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not (len(self.series) == len(self.labels) == len(self.params)):
            raise ValueError(
                f"series ({len(self.series)}), labels ({len(self.labels)}) and params "
                f"({len(self.params)}) must have equal length"
            )

    @property
    def n(self) -> int:
        return self.series.shape[0]

    @property
    def length(self) -> int:
        return self.series.shape[1]

    @property
    def checksum(self) -> str:
        """64-bit BLAKE2b digest of the series bytes, hex encoded."""
        payload = np.ascontiguousarray(self.series, dtype="<f8").tobytes()
        return hashlib.blake2b(payload, digest_size=8).hexdigest()

    def label_of(self, pattern_class: str) -> int:
        try:
            return self.class_names.index(pattern_class)
        except ValueError:
            raise ValueError(
                f"class {pattern_class!r} not in dataset; available: {self.class_names}"
            ) from None

    def subset(self, mask: np.ndarray) -> "SeriesSet":
        idx = np.flatnonzero(mask)
        return SeriesSet(
            series=self.series[idx],
            labels=self.labels[idx],
            params=[self.params[i] for i in idx],
            seed=self.seed,
            normalized=self.normalized,
            class_names=list(self.class_names),
        )


def make_dataset(
    specs: list[GenSpec],
    n_per_class: int,
    length: int,
    seed: int,
    normalize: bool = True,
) -> SeriesSet:
    """Generate n_per_class rows per spec, blocked by class in spec order.

    Row r draws from its own child generator Rng.for_row(seed, r), so equal
    arguments give bit-identical output regardless of evaluation order.
    """
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    if not specs:
        raise ValueError("at least one GenSpec is required")

    n = n_per_class * len(specs)
    series = np.empty((n, length), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    params: list[PatternParams] = []

    row = 0
    for label, spec in enumerate(specs):
        for _ in range(n_per_class):
            p = sample_params(spec, Rng.for_row(seed, row))
            y = render(p, length)
            if normalize:
                y, _ = znormalize(y)
            series[row] = y
            labels[row] = label
            params.append(p)
            row += 1

    return SeriesSet(
        series=series,
        labels=labels,
        params=params,
        seed=seed,
        normalized=normalize,
        class_names=[s.pattern_class for s in specs],
    )


def dominant_bin(series) -> int | np.ndarray:
    """Index of the largest-magnitude nonzero-frequency rFFT bin.

    Accepts a single series or an (n, T) batch.
    """
    x = np.asarray(series, dtype=np.float64)
    spectrum = np.abs(np.fft.rfft(x, axis=-1))
    bins = np.argmax(spectrum[..., 1:], axis=-1) + 1
    return int(bins) if x.ndim == 1 else bins
