"""Plotly figures for similarity/LDR heatmaps and steering displacement."""

import numpy as np
import plotly.graph_objects as go

from ts_lens.steer import DisplacementReport

THEMES = {
    "light": {"template": "plotly_white", "bg": "#ffffff", "font": "#333333", "border": "#cccccc"},
    "dark": {"template": "plotly_dark", "bg": "#2a2a2a", "font": "#e0e0e0", "border": "#555"},
}


def _theme(color_scheme: str) -> dict:
    if color_scheme not in THEMES:
        raise ValueError(
            f"Unknown color scheme: {color_scheme!r}. Supported: {', '.join(THEMES)}."
        )
    return THEMES[color_scheme]


def create_heatmap_figure(
    matrix: np.ndarray,
    *,
    title: str = "",
    first_row: int = 1,
    x_label: str = "Layer",
    y_label: str = "Layer",
    first_col: int | None = None,
    zmin: float | None = 0.0,
    zmax: float | None = 1.0,
    color_scheme: str = "light",
    height: int | None = None,
) -> go.Figure:
    """Heatmap of a layer x layer similarity matrix or a layer x token LDR map.

    Args:
        matrix: 2D values.
        title: Figure title.
        first_row: Index label of row 0 (layers are 1-based unless the embedding is included).
        x_label: Column axis title.
        y_label: Row axis title.
        first_col: Index label of column 0; defaults to first_row.
        zmin: Color range lower bound (None = data min).
        zmax: Color range upper bound (None = data max).
        color_scheme: "light" or "dark" theme.

    Returns:
        Plotly Figure object.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"matrix must be 2D, got shape {m.shape}")
    theme = _theme(color_scheme)
    first_col = first_row if first_col is None else first_col
    rows = list(range(first_row, first_row + m.shape[0]))
    cols = list(range(first_col, first_col + m.shape[1]))

    fig = go.Figure(
        go.Heatmap(
            z=m,
            x=cols,
            y=rows,
            zmin=zmin,
            zmax=zmax,
            colorscale="Viridis",
            hovertemplate=f"{y_label} %{{y}}<br>{x_label} %{{x}}<br>%{{z:.4f}}<extra></extra>",
        )
    )
    fig.update_layout(
        template=theme["template"],
        title=title,
        font=dict(size=12),
        title_font_size=16,
        autosize=True,
        xaxis=dict(title=x_label),
        yaxis=dict(title=y_label, autorange="reversed"),
        **({"height": height} if height is not None else {}),
    )
    return fig


def create_displacement_figure(
    report: DisplacementReport,
    *,
    reference: np.ndarray | None = None,
    title: str = "",
    color_scheme: str = "light",
    height: int | None = None,
) -> go.Figure:
    """Before/after scatter of steered samples in the unsteered PCA plane.

    A dropdown toggles between both states, before only and after only.

    Args:
        report: Output of steering_displacement_report.
        reference: Optional (m, 2) PCA coordinates of the target class, drawn in grey.
        title: Figure title.
        color_scheme: "light" or "dark" theme.

    Returns:
        Plotly Figure object.
    """
    theme = _theme(color_scheme)
    hover = [f"sample {int(i)}" for i in report.sample_ids]

    fig = go.Figure()
    if reference is not None:
        ref = np.asarray(reference)
        fig.add_trace(
            go.Scatter(
                x=ref[:, 0],
                y=ref[:, 1],
                mode="markers",
                name="target class",
                marker=dict(size=4, opacity=0.4, color="#808080"),
                hoverinfo="skip",
            )
        )
    offset = len(fig.data)
    for name, coords, color in (
        ("before", report.pre, "#3B528B"),
        ("after", report.post, "#FDE725"),
    ):
        fig.add_trace(
            go.Scatter(
                x=coords[:, 0],
                y=coords[:, 1],
                mode="markers",
                name=name,
                text=hover,
                hovertemplate="%{text}<extra></extra>",
                marker=dict(size=5, opacity=0.7, color=color),
            )
        )

    base = [True] * offset
    buttons = [
        dict(label=label, method="update", args=[{"visible": base + vis}])
        for label, vis in (
            ("Before & after", [True, True]),
            ("Before", [True, False]),
            ("After", [False, True]),
        )
    ]
    fig.update_layout(
        template=theme["template"],
        title=title or f"Steering displacement at layer {report.layer}",
        font=dict(size=12),
        title_font_size=16,
        autosize=True,
        xaxis=dict(title="PC 1"),
        yaxis=dict(title="PC 2"),
        updatemenus=[
            dict(
                buttons=buttons,
                direction="up",
                showactive=True,
                x=0.02,
                xanchor="left",
                y=0.02,
                yanchor="bottom",
                bgcolor=theme["bg"],
                font=dict(color=theme["font"]),
                bordercolor=theme["border"],
                borderwidth=1,
            )
        ],
        **({"height": height} if height is not None else {}),
    )
    return fig
