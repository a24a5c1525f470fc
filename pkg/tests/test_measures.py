"""Data-model invariants: grids, measures, datasets, quantization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wasscurve.measures import (
    DiscreteMeasure,
    GaussianMeasure,
    GaussianMixture,
    SnapshotDataset,
    SupportGrid,
    measure_from_samples,
    normalize_timestamps,
)


def uniform_measure(grid):
    return DiscreteMeasure(grid, np.full(len(grid), 1.0 / len(grid)))


class TestSupportGrid:
    def test_rejects_duplicate_points(self):
        with pytest.raises(ValueError, match="distinct"):
            SupportGrid(np.array([[0.0], [0.0], [1.0]]))

    def test_dim_and_len(self):
        g = SupportGrid(np.array([[0.0, 1.0], [2.0, 3.0]]))
        assert g.dim == 2 and len(g) == 2

    def test_1d_input_promoted(self):
        g = SupportGrid(np.array([0.0, 0.5, 1.0]))
        assert g.points.shape == (3, 1)

    def test_points_read_only(self):
        g = SupportGrid(np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            g.points[0] = 7.0


class TestDiscreteMeasure:
    def test_rejects_negative_weights(self):
        g = SupportGrid(np.array([0.0, 1.0]))
        with pytest.raises(ValueError, match="nonnegative"):
            DiscreteMeasure(g, np.array([1.5, -0.5]))

    def test_rejects_unnormalized(self):
        g = SupportGrid(np.array([0.0, 1.0]))
        with pytest.raises(ValueError, match="sum to 1"):
            DiscreteMeasure(g, np.array([0.6, 0.6]))

    def test_accepts_weights_within_tolerance(self):
        g = SupportGrid(np.array([0.0, 1.0]))
        m = DiscreteMeasure(g, np.array([0.5, 0.5 + 5e-13]))
        assert m.weights.sum() == pytest.approx(1.0, abs=1e-12)


class TestSnapshotDataset:
    def test_sorts_and_defaults_uniform_lambda(self):
        g = SupportGrid(np.array([0.0, 1.0]))
        ds = SnapshotDataset.from_snapshots(
            [(0.5, uniform_measure(g)), (0.0, uniform_measure(g)), (1.0, uniform_measure(g))]
        )
        assert np.all(np.diff(ds.timestamps) > 0)
        np.testing.assert_allclose(ds.lambdas, 1.0 / 3.0)

    def test_rejects_duplicate_timestamps(self):
        g = SupportGrid(np.array([0.0, 1.0]))
        with pytest.raises(ValueError, match="strictly increasing"):
            SnapshotDataset.from_snapshots([(0.5, uniform_measure(g)), (0.5, uniform_measure(g))])

    def test_rejects_mixed_grids(self):
        g1 = SupportGrid(np.array([0.0, 1.0]))
        g2 = SupportGrid(np.array([0.0, 2.0]))
        with pytest.raises(ValueError, match="share one support grid"):
            SnapshotDataset.from_snapshots([(0.0, uniform_measure(g1)), (1.0, uniform_measure(g2))])


class TestNormalizeTimestamps:
    def test_divides_by_horizon(self):
        g = SupportGrid(np.array([0.0, 1.0]))
        ds = SnapshotDataset.from_snapshots([(1.0, uniform_measure(g)), (2.0, uniform_measure(g)), (4.0, uniform_measure(g))])
        out = normalize_timestamps(ds)
        np.testing.assert_allclose(out.timestamps, [0.25, 0.5, 1.0])
        assert out.horizon == 1.0
        assert out.original_horizon == 4.0

    def test_identity_when_already_unit(self):
        g = SupportGrid(np.array([0.0, 1.0]))
        ds = SnapshotDataset.from_snapshots([(0.0, uniform_measure(g)), (1.0, uniform_measure(g))])
        out = normalize_timestamps(ds)
        np.testing.assert_array_equal(out.timestamps, ds.timestamps)

    def test_twenty_equal_steps_unchanged(self):
        # snapshots from t=0.1 to t=1 in equal steps already live on horizon 1
        g = SupportGrid(np.array([0.0, 1.0]))
        ts = np.linspace(0.1, 1.0, 20)
        ds = SnapshotDataset.from_snapshots([(t, uniform_measure(g)) for t in ts])
        out = normalize_timestamps(ds)
        np.testing.assert_array_equal(out.timestamps, ts)

    def test_idempotent(self):
        g = SupportGrid(np.array([0.0, 1.0]))
        ds = SnapshotDataset.from_snapshots([(1.0, uniform_measure(g)), (3.0, uniform_measure(g))])
        once = normalize_timestamps(ds)
        twice = normalize_timestamps(once)
        np.testing.assert_array_equal(once.timestamps, twice.timestamps)
        assert twice.original_horizon == 3.0

    def test_rejects_nonpositive_horizon(self):
        g = SupportGrid(np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            SnapshotDataset(np.array([0.0]), (uniform_measure(g),), np.array([1.0]), 0.0, 0.0)


class TestMeasureFromSamples:
    def test_nearest_point_assignment(self):
        grid = SupportGrid(np.array([0.25, 0.75]))
        m = measure_from_samples(np.array([0.1, 0.9]), grid)
        np.testing.assert_allclose(m.weights, [0.5, 0.5])

    def test_single_sample_is_dirac(self):
        grid = SupportGrid(np.array([0.0, 0.5, 1.0]))
        m = measure_from_samples(np.array([0.5]), grid)
        np.testing.assert_array_equal(m.weights, [0.0, 1.0, 0.0])

    def test_tie_breaks_to_lowest_index(self):
        grid = SupportGrid(np.array([0.0, 1.0]))
        m = measure_from_samples(np.array([0.5]), grid)  # equidistant
        np.testing.assert_array_equal(m.weights, [1.0, 0.0])

    def test_empty_samples_rejected(self):
        grid = SupportGrid(np.array([0.0, 1.0]))
        with pytest.raises(ValueError, match="at least one sample"):
            measure_from_samples(np.array([]), grid)

    def test_uniform_law_of_large_numbers(self):
        # seeded check: 1000 uniform samples over 50 cells stay near 1/50 each
        rng = np.random.default_rng(7)
        samples = rng.uniform(0.0, 1.0, size=1000)
        grid = SupportGrid(np.linspace(0.01, 0.99, 50))
        m = measure_from_samples(samples, grid)
        assert np.all(m.weights <= 0.04)
        assert m.weights.sum() == pytest.approx(1.0)

    @given(st.randoms(use_true_random=False))
    @settings(max_examples=25, deadline=None)
    def test_permutation_invariant(self, pyrandom):
        rng = np.random.default_rng(pyrandom.randrange(2**32))
        samples = rng.uniform(-1, 1, size=40)
        grid = SupportGrid(np.linspace(-1, 1, 9))
        perm = rng.permutation(40)
        a = measure_from_samples(samples, grid)
        b = measure_from_samples(samples[perm], grid)
        np.testing.assert_allclose(a.weights, b.weights)


class TestGaussianTypes:
    def test_rejects_asymmetric_covariance(self):
        with pytest.raises(ValueError, match="symmetric"):
            GaussianMeasure(np.zeros(2), np.array([[1.0, 0.5], [0.1, 1.0]]))

    def test_rejects_indefinite_covariance(self):
        with pytest.raises(ValueError, match="semi-definite"):
            GaussianMeasure(np.zeros(2), np.array([[1.0, 0.0], [0.0, -0.5]]))

    def test_accepts_tiny_negative_eigenvalue(self):
        c = np.array([[1.0, 0.0], [0.0, -1e-12]])
        g = GaussianMeasure(np.zeros(2), c)
        assert g.dim == 2

    def test_mixture_weights_validated(self):
        a = GaussianMeasure.from_std_1d(0.0, 1.0)
        with pytest.raises(ValueError, match="sum to 1"):
            GaussianMixture((a,), np.array([0.5]))

    def test_mixture_pdf_integrates_to_one(self):
        mix = GaussianMixture(
            (GaussianMeasure.from_std_1d(-1.0, 0.5), GaussianMeasure.from_std_1d(1.0, 0.5)),
            np.array([0.3, 0.7]),
        )
        x = np.linspace(-6, 6, 2001)
        total = np.trapezoid(mix.pdf_1d(x), x)
        assert total == pytest.approx(1.0, abs=1e-6)
