"""Tests for the synthetic corpus generator."""

import numpy as np
import pytest

from ts_lens.errors import InvalidPeriodError
from ts_lens.synthgen import (
    CLASS_NAMES,
    GenSpec,
    PatternParams,
    Rng,
    desk_spec,
    dominant_bin,
    make_dataset,
    wide_spec,
    render,
    sample_params,
    splitmix64,
    znormalize,
)


class TestRng:
    def test_splitmix_reference_value(self):
        # First output of SplitMix64 seeded with 0
        _, z = splitmix64(0)
        assert z == 0xE220A8397B1DCDAF

    def test_uniform_range(self):
        rng = Rng(123)
        values = [rng.uniform() for _ in range(1000)]
        assert min(values) >= 0.0
        assert max(values) < 1.0

    def test_child_generators_differ(self):
        assert Rng.for_row(7, 0).next_u64() != Rng.for_row(7, 1).next_u64()

    def test_deterministic(self):
        a, b = Rng(99), Rng(99)
        assert [a.next_u64() for _ in range(5)] == [b.next_u64() for _ in range(5)]


class TestSampleParams:
    def test_constant_case(self):
        p = sample_params(wide_spec("constant"), Rng(1))
        assert (p.a, p.f, p.m) == (0.0, 0.0, 0.0)
        assert -30.0 <= p.b <= 30.0

    def test_sine_constant_case(self):
        p = sample_params(wide_spec("sine_constant"), Rng(1))
        assert (p.a, p.f, p.m) == (50.0, 128.0, 0.0)
        assert -30.0 <= p.b <= 30.0

    def test_desk_period(self):
        assert sample_params(desk_spec("sine_increasing"), Rng(2)).f == 32.0

    def test_degenerate_range(self):
        spec = GenSpec("constant", intercept=(4.5, 4.5))
        assert sample_params(spec, Rng(3)).b == 4.5

    def test_draw_order(self):
        spec = GenSpec("sine_increasing", (1.0, 2.0), (10.0, 20.0), (0.5, 1.0), (-1.0, 1.0))
        probe = Rng(11)
        u = [probe.uniform() for _ in range(4)]
        p = sample_params(spec, Rng(11))
        assert p.a == 1.0 + u[0]
        assert p.f == 10.0 + 10.0 * u[1]
        assert p.m == 0.5 + 0.5 * u[2]
        assert p.b == -1.0 + 2.0 * u[3]

    def test_unknown_class(self):
        with pytest.raises(ValueError, match="Unknown pattern class"):
            desk_spec("sawtooth")

    def test_inverted_range(self):
        with pytest.raises(ValueError, match="min <= max"):
            GenSpec("constant", intercept=(1.0, -1.0))


class TestRender:
    def test_constant(self):
        np.testing.assert_array_equal(render(PatternParams(0, 0, 0, 5), 4), [5, 5, 5, 5])

    def test_quarter_period_sine(self):
        np.testing.assert_allclose(render(PatternParams(1, 4, 0, 0), 4), [0, 1, 0, -1], atol=1e-15)

    def test_formula_spot_value(self):
        y = render(PatternParams(50, 128, 0.75, 10), 128)
        assert y[32] == pytest.approx(50 * np.sin(2 * np.pi * 32 / 128) + 0.75 * 32 + 10)

    def test_invalid_period(self):
        with pytest.raises(InvalidPeriodError):
            render(PatternParams(1.0, 0.0, 0.0, 0.0), 8)

    def test_period_unused_without_amplitude(self):
        np.testing.assert_array_equal(render(PatternParams(0, -3, 1, 0), 3), [0, 1, 2])


class TestZnormalize:
    def test_standard(self):
        values, degenerate = znormalize([1.0, 2.0, 3.0])
        np.testing.assert_allclose(values, [-1.2247448713915890, 0.0, 1.2247448713915890])
        assert not degenerate

    def test_constant(self):
        values, degenerate = znormalize([5.0, 5.0, 5.0, 5.0])
        np.testing.assert_array_equal(values, np.zeros(4))
        assert degenerate

    def test_sine_moments(self):
        values, _ = znormalize(render(PatternParams(50, 128, 0, 0), 128))
        assert abs(values.mean()) < 1e-9
        assert abs(values.std() - 1) < 1e-6

    def test_too_short(self):
        with pytest.raises(ValueError, match="length >= 2"):
            znormalize([1.0])


class TestMakeDataset:
    @pytest.fixture
    def specs(self):
        return [desk_spec("constant"), desk_spec("sine_constant")]

    def test_counts(self, specs):
        data = make_dataset(specs, 512, 128, 7)
        assert data.series.shape == (1024, 128)
        assert np.bincount(data.labels).tolist() == [512, 512]
        assert data.class_names == ["constant", "sine_constant"]

    def test_deterministic(self, specs):
        a = make_dataset(specs, 16, 64, 3)
        b = make_dataset(specs, 16, 64, 3)
        np.testing.assert_array_equal(a.series, b.series)
        assert a.checksum == b.checksum

    def test_seed_changes_checksum(self, specs):
        assert make_dataset(specs, 8, 64, 1).checksum != make_dataset(specs, 8, 64, 2).checksum

    def test_normalized_rows(self, specs):
        data = make_dataset(specs, 32, 128, 5)
        sines = data.series[data.labels == 1]
        assert np.all(np.abs(sines.mean(axis=1)) < 1e-9)
        assert np.all(np.abs(sines.std(axis=1) - 1) < 1e-6)
        np.testing.assert_array_equal(data.series[data.labels == 0], 0.0)

    def test_raw_invariants(self):
        specs = [desk_spec(c) for c in CLASS_NAMES]
        data = make_dataset(specs, 20, 128, 9, normalize=False)
        t = np.arange(128)
        for row, label in zip(data.series, data.labels, strict=True):
            name = data.class_names[label]
            if name == "constant":
                assert np.ptp(row) == 0
            elif name in ("increasing_slope", "decreasing_slope"):
                slope = np.polyfit(t, row, 1)[0]
                lo, hi = (0.5, 1.0) if name == "increasing_slope" else (-1.0, -0.5)
                assert lo - 1e-9 <= slope <= hi + 1e-9

    def test_wide_period_dominant_bin(self):
        data = make_dataset([wide_spec("sine_constant")], 4, 512, 7, normalize=False)
        assert np.all(dominant_bin(data.series) == 4)

    def test_desk_period_dominant_bin(self, specs):
        data = make_dataset(specs, 4, 128, 7)
        assert np.all(dominant_bin(data.series[data.labels == 1]) == 4)

    def test_subset_keeps_params(self, specs):
        data = make_dataset(specs, 4, 32, 7)
        sub = data.subset(data.labels == 1)
        assert sub.n == 4
        assert sub.params == data.params[4:]

    def test_label_of(self, specs):
        data = make_dataset(specs, 2, 32, 7)
        assert data.label_of("sine_constant") == 1
        with pytest.raises(ValueError, match="not in dataset"):
            data.label_of("increasing_slope")

    def test_requires_rows(self, specs):
        with pytest.raises(ValueError, match="n_per_class"):
            make_dataset(specs, 0, 32, 7)
