"""Artifact persistence: binary tensors with JSON sidecars, CSV matrices and SVG heatmaps.

Tensor file layout (all little-endian):

    magic   4 bytes   b"TLT1"
    ndim    uint32
    dims    ndim x uint64
    payload prod(dims) x float32, row-major

Metadata lives next to the payload in ``<stem>.meta.json``.
"""

from __future__ import annotations

import html
import json
import logging
from io import StringIO
from pathlib import Path

import numpy as np

from ts_lens.errors import (
    BadMagicError,
    IoFailureError,
    ModelMismatchError,
    ShapeMismatchError,
    TruncatedPayloadError,
)
from ts_lens.model import CaptureSet, ModelConfig, Weights
from ts_lens.probe import Probe, ProbeGrid
from ts_lens.steer import SteeringMatrix
from ts_lens.synthgen import PatternParams, SeriesSet

logger = logging.getLogger(__name__)

MAGIC = b"TLT1"
KINDS = ("dataset", "captures", "weights", "steering", "probes")

VIRIDIS_ANCHORS = (
    (0.0, "#440154"),
    (0.25, "#3B528B"),
    (0.5, "#21918C"),
    (0.75, "#5EC962"),
    (1.0, "#FDE725"),
)


def _write_bytes(path: Path, data: bytes | str) -> None:
    try:
        if isinstance(data, str):
            path.write_text(data, encoding="utf-8")
        else:
            path.write_bytes(data)
    except OSError as e:
        raise IoFailureError(f"cannot write {path}: {e}") from e


def _read_bytes(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        raise IoFailureError(f"cannot read {path}: {e}") from e


def write_tensor(path, dims, values) -> None:
    """Write a float32 tensor in the TLT1 layout."""
    path = Path(path)
    dims = [int(d) for d in dims]
    flat = np.asarray(values, dtype=np.float32).ravel()
    if any(d < 0 for d in dims) or int(np.prod(dims, dtype=np.int64)) != flat.size:
        raise ShapeMismatchError(f"dims {dims} do not match {flat.size} values")
    header = (
        MAGIC
        + np.array([len(dims)], dtype="<u4").tobytes()
        + np.array(dims, dtype="<u8").tobytes()
    )
    _write_bytes(path, header + flat.astype("<f4").tobytes())


def read_tensor(path) -> tuple[tuple[int, ...], np.ndarray]:
    """Read a TLT1 file.

    Returns:
        (dims, values) with values a flat float32 array.
    """
    path = Path(path)
    data = _read_bytes(path)
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"{path} is not a tensor file (magic {data[:4]!r})")
    if len(data) < 8:
        raise TruncatedPayloadError(f"{path}: header ends before ndim")
    ndim = int(np.frombuffer(data, dtype="<u4", count=1, offset=4)[0])
    header_len = 8 + 8 * ndim
    if len(data) < header_len:
        raise TruncatedPayloadError(f"{path}: header claims {ndim} dims but ends early")
    dims = tuple(int(d) for d in np.frombuffer(data, dtype="<u8", count=ndim, offset=8))
    count = int(np.prod(dims, dtype=np.int64)) if dims else 1
    expected = header_len + 4 * count
    if len(data) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload has {len(data) - header_len} bytes, dims {dims} need {4 * count}"
        )
    if len(data) > expected:
        raise IoFailureError(f"{path}: {len(data) - expected} trailing bytes after payload")
    values = np.frombuffer(data, dtype="<f4", count=count, offset=header_len).astype(np.float32)
    return dims, values


def save_array(path, array) -> None:
    arr = np.asarray(array, dtype=np.float32)
    write_tensor(path, arr.shape, arr)


def load_array(path) -> np.ndarray:
    dims, values = read_tensor(path)
    return values.reshape(dims)


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_suffix(".meta.json")


def write_meta(
    path,
    kind: str,
    dims,
    *,
    model_hash: str | None = None,
    dataset_checksum: str | None = None,
    labels=None,
    extra: dict | None = None,
) -> Path:
    """Write the JSON sidecar of an artifact. Returns the sidecar path."""
    if kind not in KINDS:
        raise ValueError(f"Unknown artifact kind: {kind!r}. Supported: {', '.join(KINDS)}.")
    payload = {
        "kind": kind,
        "dims": [int(d) for d in dims],
        "model_hash": model_hash,
        "dataset_checksum": dataset_checksum,
    }
    if labels is not None:
        payload["labels"] = [int(x) for x in labels]
    payload["extra"] = extra or {}
    target = meta_path(path)
    _write_bytes(target, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return target


def read_meta(path, kind: str | None = None) -> dict:
    """Read and validate an artifact sidecar, optionally checking its kind."""
    target = meta_path(path)
    try:
        meta = json.loads(_read_bytes(target).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise IoFailureError(f"{target}: invalid JSON sidecar: {e}") from e
    if not isinstance(meta, dict) or meta.get("kind") not in KINDS:
        raise IoFailureError(f"{target}: sidecar kind must be one of {', '.join(KINDS)}")
    if kind is not None and meta["kind"] != kind:
        raise IoFailureError(f"{target}: expected a {kind} artifact, found {meta['kind']}")
    return meta


def write_matrix_csv(path, matrix, meta: dict | None = None) -> None:
    """Comma-separated rows with 8 decimals, no header. meta goes to the sidecar."""
    path = Path(path)
    m = np.asarray(matrix, dtype=np.float64)
    if m.size == 0:
        _write_bytes(path, "")
    else:
        if m.ndim == 1:
            m = m[None, :]
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix contains NaN or Inf entries")
        buf = StringIO()
        np.savetxt(buf, m, fmt="%.8f", delimiter=",", newline="\n")
        _write_bytes(path, buf.getvalue())
    if meta is not None:
        _write_bytes(meta_path(path), json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    text = _read_bytes(Path(path)).decode("utf-8")
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        return np.zeros((0, 0))
    try:
        return np.array([[float(v) for v in row.split(",")] for row in rows])
    except ValueError as e:
        raise IoFailureError(f"{path}: malformed CSV: {e}") from e


def colormap(value: float) -> str:
    """Piecewise-linear viridis approximation, value clipped to [0, 1]."""
    v = float(np.clip(value, 0.0, 1.0))
    for (x0, c0), (x1, c1) in zip(VIRIDIS_ANCHORS, VIRIDIS_ANCHORS[1:], strict=False):
        if v <= x1:
            t = (v - x0) / (x1 - x0)
            rgb0 = [int(c0[i : i + 2], 16) for i in (1, 3, 5)]
            rgb1 = [int(c1[i : i + 2], 16) for i in (1, 3, 5)]
            mixed = [round(a + (b - a) * t) for a, b in zip(rgb0, rgb1, strict=True)]
            return "#{:02X}{:02X}{:02X}".format(*mixed)
    return VIRIDIS_ANCHORS[-1][1]


def write_svg_heatmap(path, matrix, title: str = "", *, cell: int = 24) -> None:
    """Write one rect per cell, colored by colormap(value)."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeMismatchError(f"heatmap needs a 2D matrix, got shape {m.shape}")
    rows, cols = m.shape
    top = 30 if title else 0
    width, height = cols * cell, rows * cell + top
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    if title:
        parts.append(
            f'<text x="4" y="20" font-family="sans-serif" font-size="14">'
            f"{html.escape(title)}</text>"
        )
    for r in range(rows):
        for c in range(cols):
            parts.append(
                f'<rect x="{c * cell}" y="{top + r * cell}" width="{cell}" height="{cell}" '
                f'fill="{colormap(m[r, c])}"><title>({r}, {c}) {m[r, c]:.4f}</title></rect>'
            )
    parts.append("</svg>")
    _write_bytes(Path(path), "\n".join(parts) + "\n")


def save_dataset(path, data: SeriesSet) -> str:
    """Persist a SeriesSet. Returns the checksum of the stored (float32) series."""
    stored = np.asarray(data.series, dtype=np.float32)
    write_tensor(path, stored.shape, stored)
    checksum = _as_stored(data).checksum
    write_meta(
        path,
        "dataset",
        stored.shape,
        dataset_checksum=checksum,
        labels=data.labels,
        extra={
            "seed": data.seed,
            "normalized": data.normalized,
            "class_names": list(data.class_names),
            "params": [p.as_dict() for p in data.params],
        },
    )
    return checksum


def _as_stored(data: SeriesSet) -> SeriesSet:
    return SeriesSet(
        series=np.asarray(data.series, dtype=np.float32).astype(np.float64),
        labels=data.labels,
        params=data.params,
        seed=data.seed,
        normalized=data.normalized,
        class_names=list(data.class_names),
    )


def load_dataset(path) -> SeriesSet:
    meta = read_meta(path, "dataset")
    extra = meta["extra"]
    data = SeriesSet(
        series=load_array(path).astype(np.float64),
        labels=np.asarray(meta.get("labels", []), dtype=np.int64),
        params=[PatternParams(**p) for p in extra.get("params", [])],
        seed=int(extra.get("seed", 0)),
        normalized=bool(extra.get("normalized", True)),
        class_names=list(extra.get("class_names", [])),
    )
    if meta.get("dataset_checksum") and data.checksum != meta["dataset_checksum"]:
        raise IoFailureError(
            f"{path}: dataset checksum {data.checksum} does not match sidecar "
            f"{meta['dataset_checksum']}"
        )
    return data


def save_weights(path, weights: Weights) -> None:
    flat = weights.to_flat()
    write_tensor(path, flat.shape, flat)
    write_meta(
        path,
        "weights",
        flat.shape,
        model_hash=weights.model_hash,
        extra={"config": weights.config.as_dict()},
    )


def load_weights(path) -> Weights:
    """Load weights and check them against the recorded model hash."""
    meta = read_meta(path, "weights")
    config = ModelConfig(**meta["extra"]["config"])
    _, flat = read_tensor(path)
    weights = Weights.from_flat(config, flat)
    if meta.get("model_hash") and weights.model_hash != meta["model_hash"]:
        raise ModelMismatchError(
            f"{path}: weights do not match their recorded hash",
            expected=meta["model_hash"],
            actual=weights.model_hash,
        )
    return weights


def save_captures(path, captures: CaptureSet) -> None:
    write_tensor(path, captures.activations.shape, captures.activations)
    write_meta(
        path,
        "captures",
        captures.activations.shape,
        model_hash=captures.model_hash,
        dataset_checksum=captures.dataset_checksum,
        labels=captures.labels,
        extra={"class_names": list(captures.class_names)},
    )


def load_captures(path) -> CaptureSet:
    meta = read_meta(path, "captures")
    return CaptureSet(
        activations=load_array(path),
        labels=np.asarray(meta.get("labels", []), dtype=np.int64),
        model_hash=meta.get("model_hash") or "",
        dataset_checksum=meta.get("dataset_checksum"),
        class_names=list(meta["extra"].get("class_names", [])),
    )


def save_steering(path, matrix: SteeringMatrix) -> None:
    write_tensor(path, matrix.shape, matrix.values)
    write_meta(
        path,
        "steering",
        matrix.shape,
        model_hash=matrix.model_hash,
        dataset_checksum=matrix.dataset_checksum,
        extra={"stat": matrix.stat, "source": matrix.source, "target": matrix.target},
    )


def load_steering(path) -> SteeringMatrix:
    meta = read_meta(path, "steering")
    extra = meta["extra"]
    return SteeringMatrix(
        values=load_array(path).astype(np.float64),
        stat=extra.get("stat", "median"),
        source=extra.get("source", ""),
        target=extra.get("target", ""),
        model_hash=meta.get("model_hash") or "",
        dataset_checksum=meta.get("dataset_checksum"),
    )


def save_probes(
    path,
    grid: ProbeGrid,
    *,
    model_hash: str | None = None,
    dataset_checksum: str | None = None,
) -> None:
    """Stack each cell's direction with its threshold as the last entry.

    Cells without a probe are stored as zeros with a NaN threshold.
    """
    rows, cols = grid.shape
    fitted = [p for row in grid.probes for p in row if p is not None]
    if not fitted:
        raise ValueError("probe grid has no fitted cells")
    dim = fitted[0].w.size
    stacked = np.zeros((rows, cols, dim + 1), dtype=np.float32)
    stacked[..., dim] = np.nan
    accuracy = np.full((rows, cols), np.nan)
    for r in range(rows):
        for c in range(cols):
            probe = grid.probes[r][c]
            if probe is not None:
                stacked[r, c, :dim] = probe.w
                stacked[r, c, dim] = probe.threshold
                accuracy[r, c] = probe.train_accuracy
    write_tensor(path, stacked.shape, stacked)
    write_meta(
        path,
        "probes",
        stacked.shape,
        model_hash=model_hash,
        dataset_checksum=dataset_checksum,
        extra={
            "s_label": grid.s_label,
            "c_label": grid.c_label,
            "first_layer": grid.first_layer,
            "train_accuracy": [
                [None if np.isnan(a) else float(a) for a in row] for row in accuracy
            ],
        },
    )


def load_probes(path) -> ProbeGrid:
    meta = read_meta(path, "probes")
    extra = meta["extra"]
    stacked = load_array(path).astype(np.float64)
    first = int(extra.get("first_layer", 1))
    s_label, c_label = int(extra["s_label"]), int(extra["c_label"])
    accuracy = extra.get("train_accuracy")
    probes: list[list[Probe | None]] = []
    for r in range(stacked.shape[0]):
        row: list[Probe | None] = []
        for c in range(stacked.shape[1]):
            threshold = stacked[r, c, -1]
            if np.isnan(threshold):
                row.append(None)
                continue
            acc = accuracy[r][c] if accuracy else None
            row.append(
                Probe(
                    w=stacked[r, c, :-1],
                    threshold=float(threshold),
                    layer=first + r,
                    token=c,
                    train_accuracy=float("nan") if acc is None else acc,
                    s_label=s_label,
                    c_label=c_label,
                )
            )
        probes.append(row)
    return ProbeGrid(probes=probes, s_label=s_label, c_label=c_label, first_layer=first)
