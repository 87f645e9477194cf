"""Tests for steering matrices, injection, composition and displacement."""

import logging

import numpy as np
import pytest

from ts_lens.errors import (
    EmptyClassError,
    InvalidConfigError,
    ModelMismatchError,
    ShapeMismatchError,
    TokenOutOfRangeError,
)
from ts_lens.model import CaptureSet, decode, fit_readout, forward
from ts_lens.steer import (
    DisplacementReport,
    SteerConfig,
    SteeringMatrix,
    centroid_shift,
    compose,
    derive_steering,
    mean_displacement,
    negate,
    steer_activations,
    steering_displacement_report,
)
from ts_lens.synthgen import dominant_bin


def _captures(acts, labels=None, model_hash="h"):
    acts = np.asarray(acts, dtype=np.float32)
    labels = np.zeros(acts.shape[1], dtype=np.int64) if labels is None else np.asarray(labels)
    return CaptureSet(acts, labels, model_hash)


def _steered(weights, data, matrix, cfg):
    _, after = forward(
        weights,
        data.series,
        steer=(matrix, cfg),
        labels=data.labels,
        dataset_checksum=data.checksum,
        class_names=data.class_names,
    )
    return after


@pytest.fixture(scope="module")
def raw_matrix(raw_captures):
    return derive_steering(raw_captures.of_class(1), raw_captures.of_class(0))


@pytest.fixture(scope="module")
def matrix(captures):
    return derive_steering(captures.of_class(1), captures.of_class(0))


class TestDeriveSteering:
    def test_constant_tensors(self):
        target = _captures(np.full((3, 4, 2, 5), 2.0))
        source = _captures(np.full((3, 3, 2, 5), 0.5))
        s = derive_steering(target, source)
        assert s.shape == (2, 2, 5)
        np.testing.assert_array_equal(s.values, 1.5)

    def test_median_ignores_outlier(self):
        target = _captures(np.zeros((2, 3, 1, 1)))
        source = _captures(np.array([0.0, 0.0, 100.0]).reshape(1, 3, 1, 1).repeat(2, axis=0))
        assert derive_steering(target, source, "median").values[0, 0, 0] == 0.0
        mean = derive_steering(target, source, "mean").values[0, 0, 0]
        assert mean == pytest.approx(-100.0 / 3)

    def test_metadata(self, matrix, captures, weights):
        assert (matrix.source, matrix.target) == ("constant", "sine_constant")
        assert matrix.model_hash == weights.model_hash
        assert matrix.dataset_checksum == captures.dataset_checksum
        assert matrix.shape == (8, 16, 64)
        assert matrix.values.dtype == np.float64

    def test_different_models(self):
        with pytest.raises(ModelMismatchError):
            derive_steering(
                _captures(np.zeros((2, 2, 1, 1)), model_hash="a"),
                _captures(np.zeros((2, 2, 1, 1)), model_hash="b"),
            )

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            derive_steering(_captures(np.zeros((2, 2, 1, 1))), _captures(np.zeros((2, 2, 2, 1))))

    def test_empty_class(self):
        with pytest.raises(EmptyClassError):
            derive_steering(_captures(np.zeros((2, 0, 1, 1))), _captures(np.zeros((2, 2, 1, 1))))

    def test_unknown_stat(self):
        c = _captures(np.zeros((2, 2, 1, 1)))
        with pytest.raises(ValueError, match="Unknown statistic"):
            derive_steering(c, c, "mode")


class TestSteerConfig:
    def test_unknown_mode(self):
        with pytest.raises(InvalidConfigError, match="Unknown steering mode"):
            SteerConfig(mode="some_tokens")

    def test_strength_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="ts_lens.steer"):
            SteerConfig(lam=5.0)
        assert "outside the recommended range" in caplog.text

    def test_no_warning_in_range(self, caplog):
        with caplog.at_level(logging.WARNING, logger="ts_lens.steer"):
            SteerConfig(lam=-1.0)
            SteerConfig(lam=0.0)
        assert caplog.text == ""

    def test_applies_to(self):
        assert SteerConfig(layers=(2, 5)).applies_to(5)
        assert not SteerConfig(layers=(2, 5)).applies_to(3)
        assert not SteerConfig(lam=0.0).applies_to(1)

    def test_layers_start_at_one(self):
        with pytest.raises(InvalidConfigError, match=">= 1"):
            SteerConfig(layers=(0,))
        with pytest.raises(InvalidConfigError, match="empty"):
            SteerConfig(layers=())

    def test_negative_token(self):
        with pytest.raises(TokenOutOfRangeError):
            SteerConfig(mode="single_token", token=-1)

    def test_check_against_model_size(self):
        SteerConfig(layers=(8,), mode="single_token", token=15).check(8, 16)
        with pytest.raises(InvalidConfigError, match="outside 1..8"):
            SteerConfig(layers=(9,)).check(8, 16)
        with pytest.raises(TokenOutOfRangeError, match="outside 0..15"):
            SteerConfig(mode="single_token", token=16).check(8, 16)


class TestSteerActivations:
    @pytest.fixture
    def h_s(self):
        rng = np.random.default_rng(0)
        return rng.standard_normal((4, 3)), rng.standard_normal((4, 3))

    def test_zero_strength(self, h_s):
        h, s = h_s
        assert steer_activations(h, s, SteerConfig(lam=0.0)) is h

    def test_all_tokens(self, h_s):
        h, s = h_s
        np.testing.assert_array_equal(steer_activations(h, s, SteerConfig()), h + s)

    def test_single_token_defaults_to_last(self, h_s):
        h, s = h_s
        out = steer_activations(h, s, SteerConfig(mode="single_token"))
        np.testing.assert_array_equal(out[:3], h[:3])
        np.testing.assert_array_equal(out[3], h[3] + s[3])

    def test_single_token_explicit(self, h_s):
        h, s = h_s
        out = steer_activations(h, s, SteerConfig(lam=0.5, mode="single_token", token=1))
        np.testing.assert_array_equal(out[[0, 2, 3]], h[[0, 2, 3]])
        np.testing.assert_allclose(out[1], h[1] + 0.5 * s[1])

    def test_token_out_of_range(self, h_s):
        h, s = h_s
        with pytest.raises(TokenOutOfRangeError):
            steer_activations(h, s, SteerConfig(mode="single_token", token=4))

    def test_shape_mismatch(self, h_s):
        h, _ = h_s
        with pytest.raises(ShapeMismatchError):
            steer_activations(h, np.zeros((3, 3)), SteerConfig())


class TestCompose:
    @pytest.fixture
    def pair(self):
        rng = np.random.default_rng(1)
        meta = {"source": "c", "model_hash": "h"}
        a = SteeringMatrix(rng.standard_normal((2, 3, 4)), target="sine", **meta)
        b = SteeringMatrix(rng.standard_normal((2, 3, 4)), target="trend", **meta)
        return a, b

    def test_endpoints_bitwise(self, pair):
        a, b = pair
        np.testing.assert_array_equal(compose(a, b, 0.0).values, a.values)
        np.testing.assert_array_equal(compose(a, b, 1.0).values, b.values)

    def test_midpoint(self, pair):
        a, b = pair
        np.testing.assert_allclose(compose(a, b, 0.5).values, (a.values + b.values) / 2)

    def test_metadata(self, pair):
        mixed = compose(*pair, 0.25)
        assert mixed.source == "c"
        assert mixed.target == "sine*0.75+trend*0.25"

    def test_invalid_beta(self, pair):
        with pytest.raises(ValueError, match="beta"):
            compose(*pair, 1.5)

    def test_different_models(self, pair):
        a, b = pair
        other = SteeringMatrix(b.values, model_hash="other")
        with pytest.raises(ModelMismatchError):
            compose(a, other, 0.5)

    def test_negate(self, pair):
        a, _ = pair
        n = negate(a)
        np.testing.assert_array_equal(n.values, -a.values)
        assert (n.source, n.target) == ("sine", "c")
        np.testing.assert_array_equal(negate(n).values, a.values)


class TestSteeringThroughModel:
    def test_zero_strength_is_identity(self, weights, corpus, captures, matrix):
        after = _steered(weights, corpus, matrix, SteerConfig(lam=0.0))
        np.testing.assert_array_equal(after.activations, captures.activations)

    def test_opposite_strengths_reverse(self, weights, raw_corpus, raw_captures, raw_matrix):
        constants = raw_corpus.subset(raw_corpus.labels == 0)
        before = raw_captures.of_class(0)
        up = _steered(weights, constants, raw_matrix, SteerConfig(lam=1.0))
        down = _steered(weights, constants, raw_matrix, SteerConfig(lam=-1.0))
        d_up = mean_displacement(before, up, 8)
        d_down = mean_displacement(before, down, 8)
        cos = d_up @ d_down / (np.linalg.norm(d_up) * np.linalg.norm(d_down))
        assert cos <= -0.99

    @pytest.mark.parametrize("layers", [None, (8,)])
    def test_constants_move_toward_sines(self, weights, corpus, captures, matrix, layers):
        after = _steered(weights, corpus, matrix, SteerConfig(layers=layers))
        report = steering_displacement_report(
            captures, after, 8, toward_label=1, moved_label=0
        )
        assert report.fraction_closer >= 0.9
        assert np.mean(report.raw_dist_after < report.raw_dist_before) >= 0.9
        assert report.sample_ids.tolist() == list(range(512))

    def test_every_layer_lands_on_its_offset(self, weights, corpus, captures, matrix):
        after = _steered(weights, corpus, matrix, SteerConfig())
        for i in range(1, 9):
            np.testing.assert_allclose(
                after.activations[i] - captures.activations[i], matrix.values[i - 1][None],
                atol=1e-5,
            )

    def test_compounding_overshoots(self, weights, corpus, captures, matrix):
        after = _steered(weights, corpus, matrix, SteerConfig(compound=True))
        diff = after.activations[8] - captures.activations[8]
        assert not np.allclose(diff, matrix.values[7][None], atol=1e-3)

    def test_negated_matrix_moves_sines_back(self, weights, corpus, captures, matrix):
        after = _steered(weights, corpus, negate(matrix), SteerConfig())
        before_dist, after_dist = centroid_shift(captures, after, 8, toward_label=0, moved_label=1)
        assert np.mean(after_dist < before_dist) >= 0.9

    def test_decoded_constants_become_periodic(
        self, weights, raw_corpus, raw_captures, raw_matrix
    ):
        head = fit_readout(raw_captures.final(), raw_corpus.series)
        constants = raw_corpus.subset(raw_corpus.labels == 0)
        after = _steered(weights, constants, raw_matrix, SteerConfig(lam=1.0))
        bins = dominant_bin(decode(head, after.final()))
        assert np.mean(np.abs(bins - 4) <= 1) >= 0.9

    def test_composed_trend_and_periodicity(self, weights, trend_corpus, trend_captures):
        constant, sine, trend = (trend_captures.of_class(i) for i in range(3))
        periodic = derive_steering(sine, constant)
        rising = derive_steering(trend, constant)
        mixed = compose(periodic, rising, 0.5)
        head = fit_readout(trend_captures.final(), trend_corpus.series)
        constants = trend_corpus.subset(trend_corpus.labels == 0)
        decoded = decode(head, _steered(weights, constants, mixed, SteerConfig()).final())

        t = np.arange(decoded.shape[1])
        slopes = np.polyfit(t, decoded.T, 1)[0]
        spectrum = np.abs(np.fft.rfft(decoded, axis=1))[:, 1:]
        peak = spectrum[:, 3]
        off_peak = np.median(np.delete(spectrum, 3, axis=1), axis=1)
        ok = (slopes > 0) & (peak >= 3 * off_peak)
        assert np.mean(ok) >= 0.8


class TestDisplacementReport:
    def test_no_steering_no_displacement(self, captures):
        report = steering_displacement_report(captures, captures, 8)
        np.testing.assert_array_equal(report.displacement, 0.0)
        assert report.fraction_closer == 0.0

    def test_constant_offset(self):
        rng = np.random.default_rng(2)
        acts = rng.standard_normal((2, 20, 3, 4))
        before = _captures(acts)
        after = _captures(acts + 0.75)
        report = steering_displacement_report(before, after, 1)
        np.testing.assert_allclose(
            report.displacement, np.broadcast_to(report.displacement[0], (20, 2)), atol=1e-5
        )

    def test_table(self, captures):
        report = steering_displacement_report(captures, captures, 4, moved_label=0)
        table = report.table()
        assert table.shape == (512, len(DisplacementReport.COLUMNS))
        np.testing.assert_array_equal(table[:, 0], np.arange(512))

    def test_rank_deficient_projection_is_padded(self):
        acts = np.zeros((2, 6, 1, 3))
        acts[1, :, 0, 0] = np.arange(6)
        report = steering_displacement_report(_captures(acts), _captures(acts), 1, k=2)
        assert report.pre.shape == (6, 2)
        np.testing.assert_array_equal(report.pre[:, 1], 0.0)

    def test_shape_mismatch(self, captures):
        with pytest.raises(ShapeMismatchError):
            mean_displacement(captures, captures.of_class(0), 8)
