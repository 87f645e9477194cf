"""Tests for Plotly figure construction."""

import numpy as np
import plotly.graph_objects as go
import pytest

from ts_lens.model import CaptureSet
from ts_lens.steer import steering_displacement_report
from ts_lens.viz import create_displacement_figure, create_heatmap_figure


@pytest.fixture
def report():
    rng = np.random.default_rng(0)
    acts = rng.standard_normal((3, 20, 4, 5)).astype(np.float32)
    labels = np.array([0] * 10 + [1] * 10)
    before = CaptureSet(acts, labels, "h")
    after = CaptureSet(acts + np.float32(0.5), labels, "h")
    return steering_displacement_report(before, after, 2, toward_label=1, moved_label=0)


class TestCreateHeatmapFigure:
    def test_returns_figure(self):
        fig = create_heatmap_figure(np.eye(4))
        assert isinstance(fig, go.Figure)
        assert isinstance(fig.data[0], go.Heatmap)

    def test_layer_axis_labels(self):
        fig = create_heatmap_figure(np.ones((3, 3)), first_row=0)
        assert list(fig.data[0].y) == [0, 1, 2]
        assert list(fig.data[0].x) == [0, 1, 2]

    def test_ldr_map_axes(self):
        fig = create_heatmap_figure(np.zeros((8, 16)), first_col=0, x_label="Token")
        assert list(fig.data[0].y) == list(range(1, 9))
        assert list(fig.data[0].x) == list(range(16))
        assert fig.layout.xaxis.title.text == "Token"

    def test_fixed_color_range(self):
        fig = create_heatmap_figure(np.eye(2))
        assert (fig.data[0].zmin, fig.data[0].zmax) == (0.0, 1.0)

    def test_rows_top_down(self):
        fig = create_heatmap_figure(np.eye(2))
        assert fig.layout.yaxis.autorange == "reversed"

    def test_dark_theme(self):
        fig = create_heatmap_figure(np.eye(2), color_scheme="dark")
        assert fig.layout.template.layout.paper_bgcolor is not None

    def test_height(self):
        assert create_heatmap_figure(np.eye(2), height=500).layout.height == 500

    def test_unknown_scheme(self):
        with pytest.raises(ValueError, match="Unknown color scheme"):
            create_heatmap_figure(np.eye(2), color_scheme="sepia")

    def test_needs_matrix(self):
        with pytest.raises(ValueError, match="must be 2D"):
            create_heatmap_figure(np.ones(3))


class TestCreateDisplacementFigure:
    def test_before_after_traces(self, report):
        fig = create_displacement_figure(report)
        assert [t.name for t in fig.data] == ["before", "after"]
        assert len(fig.data[0].x) == 10

    def test_reference_trace_first(self, report):
        fig = create_displacement_figure(report, reference=np.zeros((4, 2)))
        assert [t.name for t in fig.data] == ["target class", "before", "after"]

    def test_dropdown(self, report):
        fig = create_displacement_figure(report, reference=np.zeros((4, 2)))
        buttons = fig.layout.updatemenus[0].buttons
        assert [b.label for b in buttons] == ["Before & after", "Before", "After"]
        assert buttons[1].args[0]["visible"] == [True, True, False]

    def test_default_title(self, report):
        fig = create_displacement_figure(report)
        assert fig.layout.title.text == "Steering displacement at layer 2"

    def test_hover_names_samples(self, report):
        fig = create_displacement_figure(report)
        assert fig.data[0].text[0] == "sample 0"
