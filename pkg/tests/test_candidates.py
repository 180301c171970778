"""
Unit tests for the candidates module.

These tests check the benchmark formulas at points where their values are
known by hand, and the dataset sampler's split and reproducibility.
"""

import math
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from sgnnlab import (
    ShapeError,
    grid_points,
    grid_slice,
    make_candidate,
    make_rng,
    sample_dataset,
)


class TestCandidateFunctions(unittest.TestCase):
    """Test suite for the ten candidate functions."""

    def test_known_values(self):
        """Test each formula at a hand-evaluated point."""
        self.assertAlmostEqual(make_candidate(1, 2)([3.0, 4.0]), 5.0)
        self.assertAlmostEqual(make_candidate(2, 2)([1.0, 2.0]), (2.0 + 4.0) / 50.0)
        self.assertAlmostEqual(make_candidate(3, 2)([0.0, 0.0]), 0.4)
        self.assertAlmostEqual(make_candidate(4, 2)([0.0, 0.0]), 0.0)
        self.assertAlmostEqual(
            make_candidate(5, 2)([1.0, 0.0]), math.cos(1.0) / 50.0
        )
        self.assertAlmostEqual(make_candidate(6, 2)([0.0, 0.0]), 5.0)
        self.assertAlmostEqual(make_candidate(7, 3)([0.0, 0.0, 0.0]), 5.0)
        self.assertAlmostEqual(make_candidate(8, 2)([0.0, 0.0]), 10.0)
        self.assertAlmostEqual(make_candidate(9, 3)([1.0, 2.0, 3.0]), 6.0)
        self.assertAlmostEqual(make_candidate(10, 4)([5.0, -1.0, 2.0, 0.0]), 1.0)

    def test_saddle_wraps_last_coordinate(self):
        """Test that the saddle couples x_d with x_1."""
        f = make_candidate(2, 3)
        # x1^2 x2 + x2^2 x3 + x3^2 x1
        self.assertAlmostEqual(f([1.0, 2.0, 3.0]), (2.0 + 12.0 + 9.0) / 50.0)

    def test_vectorized_matches_pointwise(self):
        """Test that batch evaluation agrees with single points."""
        rng = make_rng(0)
        x = rng.uniform(-8.0, 8.0, size=(6, 3))
        for fn_id in range(1, 11):
            f = make_candidate(fn_id, 3)
            batch = f.evaluate(x)
            assert_allclose(batch, [f(row) for row in x])

    def test_positive_and_bounded_below(self):
        """Test f6 > 0, f8 > 0 and f3 >= d/5 on random points."""
        rng = make_rng(1)
        for dim in (2, 3, 5):
            x = rng.uniform(-8.0, 8.0, size=(200, dim))
            with self.subTest(dim=dim):
                self.assertTrue(np.all(make_candidate(6, dim).evaluate(x) > 0.0))
                self.assertTrue(np.all(make_candidate(8, dim).evaluate(x) > 0.0))
                self.assertTrue(np.all(make_candidate(3, dim).evaluate(x) >= dim / 5.0))

    def test_symmetric_candidates_ignore_coordinate_order(self):
        """Test invariance under a permutation of the coordinates."""
        rng = make_rng(2)
        x = rng.uniform(-8.0, 8.0, size=(50, 4))
        shuffled = x[:, rng.permutation(4)]
        for fn_id in (1, 3, 6, 7, 8, 9, 10):
            with self.subTest(fn=fn_id):
                f = make_candidate(fn_id, 4)
                assert_allclose(f.evaluate(shuffled), f.evaluate(x), rtol=1e-13)

    def test_metadata(self):
        """Test names and features."""
        f = make_candidate(3, 2)
        self.assertEqual(f.name, "Exponential-square sum")
        self.assertEqual(f.feature, "Flatter sink")
        self.assertIn("f3", repr(f))

    def test_invalid_arguments(self):
        """Test id range, dimension and column-count checks."""
        with self.assertRaises(ValueError):
            make_candidate(11, 2)
        with self.assertRaises(ValueError):
            make_candidate(0, 2)
        with self.assertRaises(ValueError):
            make_candidate(3, 1)
        with self.assertRaises(ShapeError):
            make_candidate(3, 2).evaluate(np.zeros((4, 3)))


class TestDatasets(unittest.TestCase):
    """Test suite for dataset sampling and grid slices."""

    def setUp(self):
        """Build a candidate shared by the tests."""
        self.f = make_candidate(3, 2)

    def test_split_sizes_and_disjointness(self):
        """Test the 80/20 split and that every row is used exactly once."""
        data = sample_dataset(self.f, 100, make_rng(5))
        self.assertEqual(len(data.train_idx), 80)
        self.assertEqual(len(data.val_idx), 20)
        combined = np.sort(np.concatenate([data.train_idx, data.val_idx]))
        assert_array_equal(combined, np.arange(100))
        self.assertEqual(data.train_inputs.shape, (80, 2))
        self.assertEqual(data.val_targets.shape, (20,))

    def test_samples_inside_domain_and_targets_match(self):
        """Test bounds and that targets equal the function values."""
        data = sample_dataset(self.f, 50, make_rng(5), lo=-1.0, hi=2.0)
        self.assertTrue(np.all(data.inputs >= -1.0))
        self.assertTrue(np.all(data.inputs <= 2.0))
        assert_allclose(data.targets, self.f.evaluate(data.inputs))

    def test_reproducible(self):
        """Test that the same seed gives the same dataset."""
        a = sample_dataset(self.f, 40, make_rng(9))
        b = sample_dataset(self.f, 40, make_rng(9))
        assert_array_equal(a.inputs, b.inputs)
        assert_array_equal(a.train_idx, b.train_idx)

    def test_invalid_sampling(self):
        """Test size, domain and split validation."""
        with self.assertRaises(ValueError):
            sample_dataset(self.f, 9, make_rng(0))
        with self.assertRaises(ValueError):
            sample_dataset(self.f, 20, make_rng(0), lo=1.0, hi=1.0)
        with self.assertRaises(ValueError):
            sample_dataset(self.f, 20, make_rng(0), split=1.0)

    def test_grid_slice_layout(self):
        """Test that entry (i, j) is f(axis[i], axis[j], 0, ...)."""
        f = make_candidate(2, 3)
        axis = np.linspace(-2.0, 2.0, 5)
        values = grid_slice(f, 5, -2.0, 2.0)
        self.assertEqual(values.shape, (5, 5))
        self.assertAlmostEqual(values[1, 3], f([axis[1], axis[3], 0.0]))
        points = grid_points(3, 5, -2.0, 2.0)
        assert_array_equal(points[1 * 5 + 3], [axis[1], axis[3], 0.0])
