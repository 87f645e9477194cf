"""Tests for the top-level convenience functions."""

import numpy as np

import ts_lens
from ts_lens.model import decode, fit_readout, forward
from ts_lens.steer import SteerConfig, derive_steering


class TestLayerSimilarity:
    def test_matches_layer_matrix(self, weights, raw_corpus):
        series = raw_corpus.series[::16]
        matrix = ts_lens.layer_similarity(weights, series)
        assert matrix.shape == (8, 8)
        np.testing.assert_allclose(np.diag(matrix.values), 1.0, atol=1e-9)

    def test_writes_html(self, weights, raw_corpus, tmp_path):
        out = tmp_path / "sim.html"
        ts_lens.layer_similarity(weights, raw_corpus.series[::32], output_path=str(out))
        assert out.exists()


class TestSteerSeries:
    def test_matches_manual_pipeline(self, weights, captures, corpus):
        matrix = derive_steering(captures.of_class(1), captures.of_class(0))
        head = fit_readout(captures.final(), corpus.series)
        batch = corpus.series[:4]
        decoded = ts_lens.steer_series(weights, batch, matrix, head)
        _, steered = forward(weights, batch, None, (matrix, SteerConfig()))
        np.testing.assert_array_equal(decoded, decode(head, steered.final()))
