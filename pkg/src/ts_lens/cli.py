"""Command-line front end.

Usage:
    ts-lens gen --classes constant,sine_constant
    ts-lens init
    ts-lens capture --model model.tlt --data dataset.tlt
    ts-lens sim --captures captures.tlt
    ts-lens blocks --sim sim.csv
    ts-lens prune --blocks blocks.json
    ts-lens bench --model model.tlt --plan plan.json
    ts-lens probe --captures captures.tlt
    ts-lens steer --model model.tlt --data dataset.tlt
    ts-lens pca --before captures.tlt --after steered.tlt
    ts-lens report --sim sim.csv --ldr ldr.csv

Exit codes: 0 ok, 1 pipeline error, 2 usage error.
"""

from __future__ import annotations

import functools
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import click
import numpy as np

from ts_lens import config
from ts_lens.errors import (
    InvalidConfigError,
    ModelMismatchError,
    SampleMismatchError,
    TsLensError,
)

if TYPE_CHECKING:
    from ts_lens.model import ModelConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    seed: int
    out_dir: Path
    quiet: bool

    def path(self, name: str | Path) -> Path:
        """Resolve an output name against --out-dir, creating the directory."""
        p = Path(name)
        if p.is_absolute():
            return p
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / p


def pipeline(f):
    """Turn domain failures into exit code 1 with a readable message."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ModelMismatchError as e:
            raise click.ClickException(
                f"{e} (expected model {e.expected}, got {e.actual})"
            ) from e
        except (TsLensError, OSError, ValueError) as e:
            raise click.ClickException(str(e)) from e

    return wrapper


def _split_ints(value: str | None, name: str) -> tuple[int, ...] | None:
    if not value:
        return None
    try:
        return tuple(int(v) for v in value.split(","))
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}",
                                 param_hint=name) from None


def _parse_classes(ctx, param, value: str) -> list[str]:
    from ts_lens.synthgen import CLASS_NAMES

    names = [v.strip() for v in value.split(",") if v.strip()]
    unknown = [n for n in names if n not in CLASS_NAMES]
    if unknown or not names:
        raise click.BadParameter(
            f"unknown class(es) {', '.join(unknown) or '(none)'}; "
            f"valid classes: {', '.join(CLASS_NAMES)}"
        )
    return names


def _parse_selection(ctx, param, value: str) -> str | int:
    if value == "all":
        return value
    try:
        index = int(value)
    except ValueError:
        raise click.BadParameter(f"expected 'all' or a block index, got {value!r}") from None
    if index < 1:
        raise click.BadParameter(f"block index must be >= 1, got {index}")
    return index


def _steer_config(lam: float, mode: str, token: int | None, layers: str | None,
                  compound: bool, model: ModelConfig):
    """Build a SteerConfig and check it against the model before any work is done."""
    from ts_lens.steer import SteerConfig

    layer_subset = _split_ints(layers, "--steer-layers")
    if layer_subset is not None:
        bad = [i for i in layer_subset if not 1 <= i <= model.layers]
        if bad:
            raise click.BadParameter(f"layers {bad} outside 1..{model.layers}",
                                     param_hint="--steer-layers")
    if token is not None and not 0 <= token < model.n_tokens:
        raise click.BadParameter(f"token {token} outside 0..{model.n_tokens - 1}",
                                 param_hint="--token")
    try:
        return SteerConfig(lam=lam, mode=mode, token=token, layers=layer_subset,
                           compound=compound)
    except InvalidConfigError as e:
        raise click.BadParameter(str(e)) from e


@click.group()
@click.option("--seed", type=int, default=config.DEFAULT_SEED, show_default=True,
              help="Corpus seed.")
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=".",
              show_default=True, help="Directory for written artifacts.")
@click.option("--quiet", is_flag=True, help="Only log warnings.")
@click.version_option(package_name="ts-lens")
@click.pass_context
def cli(ctx, seed: int, out_dir: Path, quiet: bool):
    """Layer similarity, block pruning, probing and steering on a small time series encoder."""
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = RunConfig(seed=seed, out_dir=out_dir, quiet=quiet)


@cli.command()
@click.option("--classes", default="constant,sine_constant", show_default=True,
              callback=_parse_classes, help="Comma-separated pattern classes.")
@click.option("--n", "n_per_class", type=click.IntRange(min=1),
              default=config.DEFAULT_N_PER_CLASS, show_default=True, help="Series per class.")
@click.option("--len", "length", type=click.IntRange(min=2), default=config.DEFAULT_LENGTH,
              show_default=True, help="Series length T.")
@click.option("--table", type=click.Choice(["desk", "wide"]), default="desk",
              show_default=True, help="Parameter table (seasonal period 32 or 128).")
@click.option("--normalize/--no-normalize", default=True, show_default=True,
              help="Z-normalize each series.")
@click.option("--out", default="dataset.tlt", show_default=True)
@click.pass_obj
@pipeline
def gen(run: RunConfig, classes, n_per_class, length, table, normalize, out):
    """Generate a synthetic corpus."""
    from ts_lens.io import save_dataset
    from ts_lens.synthgen import desk_spec, make_dataset, wide_spec

    spec_fn = desk_spec if table == "desk" else wide_spec
    data = make_dataset([spec_fn(c) for c in classes], n_per_class, length, run.seed,
                        normalize=normalize)
    checksum = save_dataset(run.path(out), data)
    click.echo(f"dataset: n={data.n} T={data.length} checksum={checksum}")


@cli.command()
@click.option("--layers", type=int, default=8, show_default=True)
@click.option("--dim", type=int, default=64, show_default=True)
@click.option("--heads", type=int, default=4, show_default=True)
@click.option("--patch", type=int, default=8, show_default=True)
@click.option("--len", "seq_len", type=int, default=config.DEFAULT_LENGTH, show_default=True)
@click.option("--ff-mult", type=int, default=4, show_default=True)
@click.option("--init-seed", type=int, default=1, show_default=True)
@click.option("--out", default="model.tlt", show_default=True)
@click.pass_obj
@pipeline
def init(run: RunConfig, layers, dim, heads, patch, seq_len, ff_mult, init_seed, out):
    """Create and save a seeded model."""
    from ts_lens.io import save_weights
    from ts_lens.model import ModelConfig, init_model

    try:
        model_config = ModelConfig(layers, dim, heads, patch, seq_len, ff_mult, init_seed)
    except InvalidConfigError as e:
        raise click.UsageError(str(e)) from e
    weights = init_model(model_config)
    save_weights(run.path(out), weights)
    click.echo(f"model: hash={weights.model_hash} params={weights.to_flat().size}")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--skip-plan", type=click.Path(exists=True, dir_okay=False), default=None,
              help="PruningPlan JSON; its interior layers are skipped.")
@click.option("--steer", "steer_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Steering matrix tensor.")
@click.option("--lambda", "lam", type=float, default=config.DEFAULT_LAMBDA, show_default=True)
@click.option("--mode", type=click.Choice(["all_tokens", "single_token"]), default="all_tokens",
              show_default=True)
@click.option("--token", type=int, default=None, help="Token for single_token mode.")
@click.option("--steer-layers", default=None, help="Comma-separated layers to steer.")
@click.option("--compound", is_flag=True,
              help="Add each layer's offset on top of the already steered stream.")
@click.option("--out", default="captures.tlt", show_default=True)
@click.pass_obj
@pipeline
def capture(run: RunConfig, model_path, data_path, skip_plan, steer_path, lam, mode, token,
            steer_layers, compound, out):
    """Run the model over a dataset and save residual-stream captures."""
    from ts_lens.blocks import PruningPlan, skip_mask
    from ts_lens.io import load_dataset, load_steering, load_weights, save_captures
    from ts_lens.model import forward

    weights = load_weights(model_path)
    data = load_dataset(data_path)
    mask = None
    if skip_plan:
        mask = skip_mask(PruningPlan.from_json(Path(skip_plan).read_text()))
    steer = None
    if steer_path:
        steer = (load_steering(steer_path), _steer_config(
            lam, mode, token, steer_layers, compound, weights.config
        ))

    _, captures = forward(
        weights,
        data.series,
        mask,
        steer,
        labels=data.labels,
        dataset_checksum=data.checksum,
        class_names=data.class_names,
    )
    save_captures(run.path(out), captures)
    click.echo(f"captures: shape {tuple(captures.activations.shape)}")


@cli.command()
@click.option("--captures", "captures_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--captures-b", "captures_b_path", default=None,
              type=click.Path(exists=True, dir_okay=False), help="Second model's captures.")
@click.option("--metric", type=click.Choice(["cka", "hsic_cka", "cosine", "svcca"]),
              default="cka", show_default=True)
@click.option("--reduction", type=click.Choice(["token_mean", "token_flatten"]),
              default="token_mean", show_default=True)
@click.option("--include-embedding", is_flag=True, help="Also compare layer 0.")
@click.option("--out", default="sim.csv", show_default=True)
@click.pass_obj
@pipeline
def sim(run: RunConfig, captures_path, captures_b_path, metric, reduction, include_embedding,
        out):
    """Layer-by-layer similarity matrix (CSV + SVG)."""
    from ts_lens.io import load_captures, write_matrix_csv, write_svg_heatmap
    from ts_lens.similarity import layer_matrix

    a = load_captures(captures_path)
    b = load_captures(captures_b_path) if captures_b_path else None
    matrix = layer_matrix(a, b, metric, reduction, include_embedding=include_embedding)
    target = run.path(out)
    write_matrix_csv(target, matrix.values, meta=matrix.metadata())
    shown = np.clip(matrix.values, 0.0, 1.0)
    write_svg_heatmap(target.with_suffix(".svg"), shown, f"{metric} ({reduction})")
    rows, cols = matrix.shape
    click.echo(f"sim: {metric} {reduction} {rows}x{cols} -> {target}")


def _read_first_layer(csv_path: Path) -> int:
    meta_file = csv_path.with_suffix(".meta.json")
    if meta_file.exists():
        return int(json.loads(meta_file.read_text()).get("first_layer", 1))
    return 1


@cli.command()
@click.option("--sim", "sim_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tau", type=click.FloatRange(0, 1, min_open=True), default=config.DEFAULT_TAU,
              show_default=True)
@click.option("--k", type=click.IntRange(min=2), default=config.DEFAULT_MIN_BLOCK,
              show_default=True)
@click.option("--out", default="blocks.json", show_default=True)
@click.pass_obj
@pipeline
def blocks(run: RunConfig, sim_path, tau, k, out):
    """Identify redundant layer blocks from a similarity CSV."""
    from ts_lens.blocks import identify_blocks
    from ts_lens.io import read_matrix_csv
    from ts_lens.similarity import SimilarityMatrix

    values = read_matrix_csv(sim_path)
    first = _read_first_layer(Path(sim_path))
    matrix = SimilarityMatrix(values=values, metric="cka", reduction="token_mean",
                              first_layer=first)
    found = identify_blocks(matrix, tau, k)
    payload = json.loads(found.to_json())
    payload["total_layers"] = values.shape[0] + first - 1
    run.path(out).write_text(json.dumps(payload, indent=2) + "\n")
    spans = json.dumps([[b.start, b.end] for b in found.blocks], separators=(",", ":"))
    click.echo(f"blocks: {spans} tau={tau:g} k={k}")


@cli.command()
@click.option("--blocks", "blocks_src", required=True,
              help="BlockSet JSON path, or a shipped table name (moment, chronos).")
@click.option("--selection", default="all", show_default=True, callback=_parse_selection,
              help="'all' or a 1-based block index.")
@click.option("--total-layers", type=click.IntRange(min=1), default=None,
              help="Encoder depth; defaults to the value stored with the blocks.")
@click.option("--out", default="plan.json", show_default=True)
@click.pass_obj
@pipeline
def prune(run: RunConfig, blocks_src, selection, total_layers, out):
    """Build a pruning plan and report encoder sparsity."""
    from ts_lens.blocks import (
        BLOCK_TABLES,
        BlockSet,
        encoder_sparsity,
        load_block_table,
        plan_prune,
    )

    if blocks_src.lower() in BLOCK_TABLES and not Path(blocks_src).exists():
        block_set, stored_layers = load_block_table(blocks_src)
    else:
        path = Path(blocks_src)
        if not path.exists():
            raise click.BadParameter(f"no such file or table: {blocks_src}",
                                     param_hint="--blocks")
        text = path.read_text()
        block_set = BlockSet.from_json(text)
        stored_layers = json.loads(text).get("total_layers")
    layers = total_layers or stored_layers
    if layers is None:
        raise click.UsageError("--total-layers is required when the blocks file has no depth")

    plan = plan_prune(block_set, int(layers), selection)
    run.path(out).write_text(plan.to_json() + "\n")
    click.echo(f"sparsity: {100 * encoder_sparsity(plan):.2f}%")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--reps", type=click.IntRange(min=10), default=config.DEFAULT_BENCH_REPS,
              show_default=True)
@click.option("--batch", "batch_size", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out", default="bench.json", show_default=True)
@click.pass_obj
@pipeline
def bench(run: RunConfig, model_path, plan_path, reps, batch_size, out):
    """Time pruned against unpruned inference."""
    from ts_lens.blocks import PruningPlan, encoder_sparsity
    from ts_lens.blocks import bench as run_bench
    from ts_lens.io import load_weights

    weights = load_weights(model_path)
    plan = PruningPlan.from_json(Path(plan_path).read_text())
    rng = np.random.default_rng(run.seed)
    batch = rng.standard_normal((batch_size, weights.config.seq_len)).astype(np.float32)

    base = run_bench(weights, PruningPlan.empty(weights.config.layers), reps, batch,
                     show_progress=not run.quiet)
    pruned = run_bench(weights, plan, reps, batch, show_progress=not run.quiet)
    reduction = 1 - pruned.median_ms / base.median_ms
    result = {
        "sparsity": encoder_sparsity(plan),
        "unpruned": asdict(base),
        "pruned": asdict(pruned),
        "median_reduction": reduction,
    }
    run.path(out).write_text(json.dumps(result, indent=2) + "\n")
    click.echo(
        f"bench: median {pruned.median_ms:.3f} ms vs {base.median_ms:.3f} ms "
        f"({100 * reduction:.1f}% faster, sparsity {100 * encoder_sparsity(plan):.2f}%)"
    )


def _label(names: list[str], name: str) -> int:
    if name not in names:
        raise click.BadParameter(f"class {name!r} not in artifact; available: {', '.join(names)}")
    return names.index(name)


@cli.command()
@click.option("--captures", "captures_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--s-class", default="sine_constant", show_default=True,
              help="Class predicted on the positive side.")
@click.option("--c-class", default="constant", show_default=True, help="Reference class.")
@click.option("--out", default="ldr.csv", show_default=True)
@click.pass_obj
@pipeline
def probe(run: RunConfig, captures_path, s_class, c_class, out):
    """Fit Fisher probes, write the LDR map and token-averaged accuracy."""
    from ts_lens.io import load_captures, save_probes, write_matrix_csv, write_svg_heatmap
    from ts_lens.probe import fit_probe_grid, ldr_map, probe_token_averaged

    captures = load_captures(captures_path)
    s_label = _label(captures.class_names, s_class)
    c_label = _label(captures.class_names, c_class)

    averaged = probe_token_averaged(captures, s_label, c_label)
    grid = fit_probe_grid(captures, s_label, c_label)
    lmap = ldr_map(captures, grid)

    target = run.path(out)
    write_matrix_csv(
        target,
        lmap.values,
        meta={
            "first_layer": lmap.first_layer,
            "model_hash": captures.model_hash,
            "dataset_checksum": captures.dataset_checksum,
            "flagged_cells": int(lmap.flagged.sum()),
            "accuracy": averaged.accuracy.tolist(),
        },
    )
    write_svg_heatmap(target.with_suffix(".svg"), lmap.values, f"LDR {s_class} vs {c_class}")
    save_probes(target.with_name(target.stem + "_probes.tlt"), grid,
                model_hash=captures.model_hash, dataset_checksum=captures.dataset_checksum)
    layer, token = lmap.argmax()
    click.echo(
        f"probe: best layer {averaged.best_layer} accuracy "
        f"{averaged.accuracy.max():.3f}; ldr max at layer {layer} token {token}"
    )


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target", "target_class", default="sine_constant", show_default=True)
@click.option("--source", "source_class", default="constant", show_default=True)
@click.option("--stat", type=click.Choice(["median", "mean"]), default="median",
              show_default=True)
@click.option("--compose", "compose_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Second steering matrix blended in with weight --beta.")
@click.option("--beta", type=click.FloatRange(0, 1), default=0.5, show_default=True)
@click.option("--lambda", "lam", type=float, default=config.DEFAULT_LAMBDA, show_default=True)
@click.option("--mode", type=click.Choice(["all_tokens", "single_token"]), default="all_tokens",
              show_default=True)
@click.option("--token", type=int, default=None)
@click.option("--steer-layers", default=None, help="Comma-separated layers to steer.")
@click.option("--compound", is_flag=True,
              help="Add each layer's offset on top of the already steered stream.")
@click.option("--alpha", type=float, default=config.DEFAULT_RIDGE_ALPHA, show_default=True,
              help="Readout ridge strength.")
@click.option("--out", default="steering.tlt", show_default=True)
@click.pass_obj
@pipeline
def steer(run: RunConfig, model_path, data_path, target_class, source_class, stat,
          compose_path, beta, lam, mode, token, steer_layers, compound, alpha, out):
    """Derive a steering matrix, steer the source class and decode the result."""
    from ts_lens.io import load_dataset, load_steering, load_weights, save_captures, save_steering
    from ts_lens.model import fit_readout, forward
    from ts_lens.steer import compose, derive_steering
    from ts_lens.synthgen import dominant_bin

    weights = load_weights(model_path)
    data = load_dataset(data_path)
    target_label = _label(data.class_names, target_class)
    source_label = _label(data.class_names, source_class)
    steer_cfg = _steer_config(lam, mode, token, steer_layers, compound, weights.config)

    _, base = forward(weights, data.series, labels=data.labels,
                      dataset_checksum=data.checksum, class_names=data.class_names)
    matrix = derive_steering(base.of_class(target_label), base.of_class(source_label), stat)
    if compose_path:
        matrix = compose(matrix, load_steering(compose_path), beta)
    target = run.path(out)
    save_steering(target, matrix)

    head = fit_readout(base.final(), data.series, alpha)
    decoded, steered = forward(weights, data.series, None, (matrix, steer_cfg), head=head,
                               labels=data.labels, dataset_checksum=data.checksum,
                               class_names=data.class_names)
    save_captures(target.with_name(target.stem + "_captures.tlt"), steered)

    wanted = int(np.median(dominant_bin(data.series[data.labels == target_label])))
    bins = dominant_bin(decoded[data.labels == source_label])
    hit = float(np.mean(np.abs(bins - wanted) <= 1))
    click.echo(
        f"steer: {source_class}->{target_class} lambda={lam:g} "
        f"dominant bin {wanted} in {100 * hit:.1f}% of decoded outputs"
    )


def _load_capture_pair(before_path, after_path):
    """Load unsteered and steered captures, requiring the same model and samples."""
    from ts_lens.io import load_captures

    before = load_captures(before_path)
    after = load_captures(after_path)
    if before.model_hash != after.model_hash:
        raise ModelMismatchError("captures come from different models",
                                 expected=before.model_hash, actual=after.model_hash)
    if before.dataset_checksum != after.dataset_checksum:
        raise SampleMismatchError(
            f"captures come from different datasets "
            f"({before.dataset_checksum} vs {after.dataset_checksum})"
        )
    return before, after


@cli.command()
@click.option("--before", "before_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--after", "after_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--layer", type=int, default=None, help="Layer to project; default last.")
@click.option("--toward", "toward_class", default="sine_constant", show_default=True)
@click.option("--moved", "moved_class", default="constant", show_default=True)
@click.option("--out", default="displacement.csv", show_default=True)
@click.pass_obj
@pipeline
def pca(run: RunConfig, before_path, after_path, layer, toward_class, moved_class, out):
    """PCA displacement report of steered against unsteered captures.

    Both capture files must cover the same samples.
    """
    from ts_lens.io import write_matrix_csv
    from ts_lens.steer import DisplacementReport, steering_displacement_report

    before, after = _load_capture_pair(before_path, after_path)
    layer = before.n_layers if layer is None else layer
    report = steering_displacement_report(
        before,
        after,
        layer,
        toward_label=_label(before.class_names, toward_class),
        moved_label=_label(before.class_names, moved_class),
    )
    write_matrix_csv(
        run.path(out),
        report.table(),
        meta={"columns": list(DisplacementReport.COLUMNS), "layer": layer,
              "model_hash": before.model_hash},
    )
    click.echo(
        f"pca: layer {layer}, {100 * report.fraction_closer:.1f}% of samples closer "
        f"to the {toward_class} centroid"
    )


@cli.command()
@click.option("--sim", "sim_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--ldr", "ldr_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--before", "before_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--after", "after_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--layer", type=int, default=None)
@click.option("--color-scheme", type=click.Choice(["light", "dark"]), default="light",
              show_default=True)
@click.pass_obj
@pipeline
def report(run: RunConfig, sim_path, ldr_path, before_path, after_path, layer, color_scheme):
    """Render SVG heatmaps and interactive HTML figures."""
    from ts_lens.io import read_matrix_csv, write_svg_heatmap
    from ts_lens.steer import steering_displacement_report
    from ts_lens.viz import create_displacement_figure, create_heatmap_figure

    if (before_path is None) != (after_path is None):
        raise click.UsageError("--before and --after must be given together")
    if not any([sim_path, ldr_path, before_path]):
        raise click.UsageError("nothing to report; pass --sim, --ldr or --before/--after")
    pair = _load_capture_pair(before_path, after_path) if before_path else None

    written = []
    for src, title, x_label in ((sim_path, "Layer similarity", "Layer"),
                                (ldr_path, "LDR localization", "Token")):
        if src is None:
            continue
        values = read_matrix_csv(src)
        first = _read_first_layer(Path(src))
        stem = Path(src).stem
        svg = run.path(f"{stem}_report.svg")
        write_svg_heatmap(svg, np.clip(values, 0.0, 1.0), title)
        fig = create_heatmap_figure(values, title=title, first_row=first, x_label=x_label,
                                    first_col=first if x_label == "Layer" else 0,
                                    color_scheme=color_scheme)
        html_path = run.path(f"{stem}_report.html")
        fig.write_html(str(html_path))
        written += [svg, html_path]

    if pair is not None:
        before, after = pair
        layer = before.n_layers if layer is None else layer
        disp = steering_displacement_report(before, after, layer)
        fig = create_displacement_figure(disp, color_scheme=color_scheme)
        html_path = run.path("displacement_report.html")
        fig.write_html(str(html_path))
        written.append(html_path)

    click.echo(f"report: wrote {len(written)} files")


def main():
    cli()


if __name__ == "__main__":
    main()
