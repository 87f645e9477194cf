"""ts-lens: layer similarity, block pruning, concept probing and steering for a
small time series transformer."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from ts_lens.errors import TsLensError

if TYPE_CHECKING:
    from ts_lens.model import ReadoutHead, Weights
    from ts_lens.similarity import SimilarityMatrix
    from ts_lens.steer import SteerConfig, SteeringMatrix

__all__ = ["layer_similarity", "steer_series", "TsLensError"]


def layer_similarity(
    weights: Weights,
    series: np.ndarray,
    *,
    metric: str = "cka",
    reduction: str = "token_mean",
    include_embedding: bool = False,
    output_path: str | None = None,
) -> SimilarityMatrix:
    """Capture a batch of series and compare every pair of layers.

    Args:
        weights: Model parameters (see ts_lens.model.init_model).
        series: (n, T) inputs, n >= 2.
        metric: 'cka', 'hsic_cka', 'cosine' or 'svcca'.
        reduction: 'token_mean' or 'token_flatten'.
        include_embedding: Also compare the post-embedding stream.
        output_path: If given, save an interactive heatmap as HTML.

    Returns:
        SimilarityMatrix.
    """
    from ts_lens.model import forward
    from ts_lens.similarity import layer_matrix

    _, captures = forward(weights, series)
    matrix = layer_matrix(
        captures, None, metric, reduction, include_embedding=include_embedding
    )
    if output_path:
        from ts_lens.viz import create_heatmap_figure

        fig = create_heatmap_figure(
            matrix.values, title=f"{metric} ({reduction})", first_row=matrix.first_layer
        )
        fig.write_html(output_path)
    return matrix


def steer_series(
    weights: Weights,
    series: np.ndarray,
    matrix: SteeringMatrix,
    head: ReadoutHead,
    config: SteerConfig | None = None,
) -> np.ndarray:
    """Run series through the model with steering and decode the outputs.

    Args:
        weights: Model parameters.
        series: (n, T) inputs.
        matrix: Steering matrix derived on the same model.
        head: Fitted readout.
        config: Strength and token mode; defaults to lam=1 on all tokens.

    Returns:
        (n, T) decoded series.
    """
    from ts_lens.model import forward
    from ts_lens.steer import SteerConfig

    outputs, _ = forward(weights, series, None, (matrix, config or SteerConfig()), head=head)
    return outputs
