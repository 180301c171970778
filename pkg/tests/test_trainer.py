"""
Unit tests for the trainer module.

These tests cover the losses, the Adam update, the early-stopping rule on
synthetic histories and short end-to-end training runs.
"""

import math
import unittest
from unittest.mock import MagicMock

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from sgnnlab import (
    AdamState,
    BaseHistory,
    ConfigError,
    EarlyStopping,
    LossKind,
    ShapeError,
    SgnnModel,
    StopReason,
    TrainConfig,
    TrainReport,
    adam_step,
    compute_loss,
    make_candidate,
    make_rng,
    measure_epoch_time,
    sample_dataset,
    train,
)
from sgnnlab.trainer import loss_gradient


class TestLosses(unittest.TestCase):
    """Test suite for compute_loss and loss_gradient."""

    def test_known_values(self):
        """Test MSE and RSS on the residual (3, 4)."""
        pred, target = [3.0, 4.0], [0.0, 0.0]
        self.assertEqual(compute_loss(pred, target, LossKind.MSE), 12.5)
        self.assertEqual(compute_loss(pred, target, LossKind.RSS), 5.0)
        self.assertEqual(compute_loss(pred, target, "rss"), 5.0)

    def test_gradients(self):
        """Test 2r/m for MSE, r/||r|| for RSS and zero at a zero residual."""
        assert_allclose(loss_gradient([3.0, 4.0], [0.0, 0.0]), [3.0, 4.0])
        assert_allclose(
            loss_gradient([3.0, 4.0], [0.0, 0.0], LossKind.RSS), [0.6, 0.8]
        )
        assert_array_equal(loss_gradient([1.0], [1.0], LossKind.RSS), [0.0])

    def test_errors(self):
        """Test length mismatch and empty input."""
        with self.assertRaises(ShapeError):
            compute_loss([1.0, 2.0], [1.0])
        with self.assertRaises(ValueError):
            compute_loss([], [])


class TestAdam(unittest.TestCase):
    """Test suite for adam_step."""

    def setUp(self):
        """Create default hyper-parameters."""
        self.cfg = TrainConfig(learning_rate=0.1)

    def test_first_step_moves_by_learning_rate(self):
        """Test that the bias-corrected first step is lr * sign(g)."""
        state = AdamState.zeros(3)
        params = np.array([1.0, 2.0, 3.0])
        updated = adam_step(params, np.array([0.5, -2.0, 0.0]), state, self.cfg)
        assert_allclose(updated, [0.9, 2.1, 3.0], atol=1e-7)
        self.assertEqual(state.t, 1)
        assert_array_equal(params, [1.0, 2.0, 3.0])

    def test_moment_updates(self):
        """Test the moment estimates after two steps with a constant gradient."""
        state = AdamState.zeros(1)
        params = np.zeros(1)
        for _ in range(2):
            params = adam_step(params, np.array([2.0]), state, self.cfg)
        assert_allclose(state.m, [2.0 * (1 - 0.9**2)])
        assert_allclose(state.v, [4.0 * (1 - 0.999**2)])
        assert_allclose(params, [-0.2], atol=1e-6)

    def test_shape_mismatch(self):
        """Test that differing lengths raise ShapeError."""
        with self.assertRaises(ShapeError):
            adam_step(np.zeros(2), np.zeros(3), AdamState.zeros(2), self.cfg)


class TestEarlyStopping(unittest.TestCase):
    """Test suite for the patience rule."""

    def _stop_epoch(self, history, patience=4):
        stopper = EarlyStopping(patience)
        for epoch, loss in enumerate(history, start=1):
            if stopper.update(loss):
                return epoch, stopper
        return None, stopper

    def test_plateau_stops_after_patience(self):
        """Test that [5, 4, 4, 4, 4, 4] stops at epoch 6."""
        epoch, stopper = self._stop_epoch([5, 4, 4, 4, 4, 4])
        self.assertEqual(epoch, 6)
        self.assertEqual(stopper.best, 4)
        self.assertEqual(stopper.best_epoch, 2)

    def test_improvement_resets_counter(self):
        """Test that a strict improvement restarts the count."""
        epoch, _ = self._stop_epoch([5, 5, 5, 4, 4, 4, 4, 4])
        self.assertEqual(epoch, 8)

    def test_never_stops_while_improving(self):
        """Test a strictly decreasing history."""
        epoch, stopper = self._stop_epoch([5, 4, 3, 2, 1])
        self.assertIsNone(epoch)
        self.assertTrue(stopper.improved)

    def test_invalid_patience(self):
        """Test that patience below one is rejected."""
        with self.assertRaises(ConfigError):
            EarlyStopping(0)


class TestTrainConfig(unittest.TestCase):
    """Test suite for TrainConfig validation."""

    def test_defaults(self):
        """Test the documented defaults."""
        cfg = TrainConfig()
        self.assertEqual(cfg.batch_size, 64)
        self.assertEqual(cfg.learning_rate, 1e-3)
        self.assertEqual(cfg.patience, 4)
        self.assertIs(cfg.loss_kind, LossKind.MSE)

    def test_invalid_values(self):
        """Test that each bad setting raises ConfigError."""
        for kwargs in (
            {"batch_size": 0},
            {"learning_rate": 0.0},
            {"beta1": 1.0},
            {"epsilon": 0.0},
            {"patience": 0},
            {"max_epochs": -1},
            {"loss_kind": "l1"},
        ):
            with self.assertRaises(ConfigError):
                TrainConfig(**kwargs)


class TestTrain(unittest.TestCase):
    """Test suite for the training loop."""

    def setUp(self):
        """Sample a small dataset and a matching SGNN."""
        self.dataset = sample_dataset(make_candidate(3, 2), 200, make_rng(1))
        self.model = SgnnModel.initialize(2, 5, -8.0, 8.0, make_rng(2))

    def test_runs_to_max_epochs_and_records_history(self):
        """Test epoch bookkeeping and the history records."""
        history = MagicMock(spec=BaseHistory)
        cfg = TrainConfig(max_epochs=3, patience=10, learning_rate=1e-2)
        report = train(self.model, self.dataset, cfg, history)
        self.assertEqual(report.epochs_run, 3)
        self.assertIs(report.stop_reason, StopReason.MAX_EPOCHS)
        self.assertEqual(history.add_record.call_count, 3)
        last = history.add_record.call_args[0][0]
        self.assertEqual(last["epoch"], 3)
        self.assertEqual(len(report.val_losses), 3)
        self.assertEqual(report.final_val_loss, report.val_losses[-1])
        self.assertAlmostEqual(report.total_seconds, sum(report.epoch_seconds))

    def test_training_reduces_validation_loss(self):
        """Test that a few epochs improve on the initial fit."""
        before = compute_loss(
            self.model.predict(self.dataset.val_inputs), self.dataset.val_targets
        )
        cfg = TrainConfig(max_epochs=20, learning_rate=1e-2)
        report = train(self.model, self.dataset, cfg)
        self.assertLess(report.best_val_loss, before)
        self.assertEqual(report.best_val_loss, min(report.val_losses))
        self.assertEqual(report.val_losses[report.best_epoch - 1], report.best_val_loss)

    def test_best_params_reproduce_best_loss(self):
        """Test that best_params give the best validation loss."""
        report = train(self.model, self.dataset, TrainConfig(max_epochs=5))
        self.model.load_params(report.best_params)
        loss = compute_loss(
            self.model.predict(self.dataset.val_inputs), self.dataset.val_targets
        )
        self.assertAlmostEqual(loss, report.best_val_loss, places=12)

    def test_same_seed_same_result(self):
        """Test that training is deterministic for a fixed seed."""
        twin = SgnnModel.initialize(2, 5, -8.0, 8.0, make_rng(2))
        cfg = TrainConfig(max_epochs=2, seed=9)
        train(self.model, self.dataset, cfg)
        train(twin, self.dataset, cfg)
        assert_array_equal(self.model.param_vector(), twin.param_vector())

    def test_full_batch_epoch_is_one_adam_step(self):
        """Test that a batch holding every training row gives one plain Adam step."""
        twin = SgnnModel.initialize(2, 5, -8.0, 8.0, make_rng(2))
        rows = self.dataset.train_idx
        cfg = TrainConfig(max_epochs=1, batch_size=len(rows), learning_rate=1e-2)
        train(self.model, self.dataset, cfg)

        targets = self.dataset.targets[rows]
        pred, cache = twin.forward(self.dataset.inputs[rows])
        grads = twin.backward(cache, loss_gradient(pred, targets))
        state = AdamState.zeros(twin.n_params)
        twin.load_params(
            adam_step(twin.param_vector(), twin.grad_vector(grads), state, cfg)
        )
        twin.project_params()
        assert_allclose(self.model.param_vector(), twin.param_vector(), atol=1e-10)

    def test_rss_loss_monitors_rss(self):
        """Test that the RSS loss is what early stopping monitors."""
        cfg = TrainConfig(max_epochs=2, loss_kind=LossKind.RSS)
        report = train(self.model, self.dataset, cfg)
        self.assertEqual(report.final_val_loss, report.val_rss[-1])

    def test_zero_epochs(self):
        """Test that max_epochs=0 leaves the model untouched."""
        before = self.model.param_vector()
        report = train(self.model, self.dataset, TrainConfig(max_epochs=0))
        self.assertEqual(report.epochs_run, 0)
        self.assertTrue(math.isinf(report.best_val_loss))
        assert_array_equal(self.model.param_vector(), before)

    def test_dimension_mismatch(self):
        """Test that a model of the wrong dimension is rejected."""
        model = SgnnModel.initialize(3, 2, -8.0, 8.0, make_rng(0))
        with self.assertRaises(ShapeError):
            train(model, self.dataset, TrainConfig(max_epochs=1))


class TestEpochTiming(unittest.TestCase):
    """Test suite for measure_epoch_time."""

    def test_skips_warm_up_epoch(self):
        """Test that the first epoch is excluded from the mean."""
        report = TrainReport(epoch_seconds=[10.0, 1.0, 3.0], epochs_run=3)
        self.assertEqual(measure_epoch_time(report), 2.0)
        self.assertEqual(report.sec_per_epoch, 2.0)

    def test_needs_two_epochs(self):
        """Test that a single epoch cannot be timed."""
        report = TrainReport(epoch_seconds=[1.0], epochs_run=1)
        with self.assertRaises(ValueError):
            measure_epoch_time(report)
        self.assertEqual(report.sec_per_epoch, 1.0)
