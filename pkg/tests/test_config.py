"""
Unit tests for the config module.

These tests validate the layering of defaults, command defaults, config
files and flags, and the validation of the merged settings.
"""

import tempfile
import unittest
from pathlib import Path

from sgnnlab import (
    ConfigError,
    ExperimentConfig,
    LossKind,
    build_config,
    read_config_file,
)


class TestExperimentConfig(unittest.TestCase):
    """Test suite for ExperimentConfig validation."""

    def test_defaults(self):
        """Test the built-in defaults."""
        cfg = ExperimentConfig()
        self.assertEqual(cfg.model, "sgnn")
        self.assertEqual(cfg.patience, 4)
        self.assertEqual((cfg.lo, cfg.hi), (-8.0, 8.0))
        self.assertIs(cfg.loss, LossKind.MSE)

    def test_text_values_are_parsed(self):
        """Test that list fields accept comma-separated text."""
        cfg = ExperimentConfig(fn="1,3,5", dim="2,4", loss="rss", out="runs")
        self.assertEqual(cfg.fn, [1, 3, 5])
        self.assertEqual(cfg.dim, [2, 4])
        self.assertIs(cfg.loss, LossKind.RSS)
        self.assertEqual(cfg.out, Path("runs"))

    def test_invalid_values(self):
        """Test that each invalid setting raises ConfigError."""
        for kwargs in (
            {"model": "tree"},
            {"fn": [11]},
            {"fn": "a,b"},
            {"dim": [1]},
            {"neurons": 0},
            {"data": 5},
            {"lo": 1.0, "hi": 0.0},
            {"loss": "l1"},
            {"preset": "table9"},
            {"grid_size": 1},
            {"max_epochs": -1},
        ):
            with self.assertRaises(ConfigError, msg=str(kwargs)):
                ExperimentConfig(**kwargs)

    def test_train_config(self):
        """Test the conversion to trainer settings."""
        cfg = ExperimentConfig(batch=32, lr=0.01, patience=6, loss="rss")
        train_cfg = cfg.train_config(seed=17)
        self.assertEqual(train_cfg.batch_size, 32)
        self.assertEqual(train_cfg.learning_rate, 0.01)
        self.assertEqual(train_cfg.patience, 6)
        self.assertEqual(train_cfg.seed, 17)
        self.assertIs(train_cfg.loss_kind, LossKind.RSS)


class TestConfigLayers(unittest.TestCase):
    """Test suite for read_config_file and build_config."""

    def setUp(self):
        """Create a temporary directory for config files."""
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.dir = Path(self._tmp.name)

    def _write(self, text: str) -> Path:
        path = self.dir / "settings.cfg"
        path.write_text(text, encoding="utf-8")
        return path

    def test_read_config_file(self):
        """Test comments, blank lines, dashed keys and typing."""
        path = self._write("# comment\n\nmax-epochs = 7\nfn=2,4\nlr=0.5\n")
        values = read_config_file(path)
        self.assertEqual(values, {"max_epochs": 7, "fn": [2, 4], "lr": 0.5})

    def test_bad_files(self):
        """Test missing files, lines without '=' and unknown keys."""
        with self.assertRaises(ConfigError):
            read_config_file(self.dir / "missing.cfg")
        with self.assertRaises(ConfigError):
            read_config_file(self._write("epochs\n"))
        with self.assertRaises(ConfigError):
            read_config_file(self._write("colour=red\n"))
        with self.assertRaises(ConfigError):
            read_config_file(self._write("neurons=many\n"))

    def test_precedence(self):
        """Test defaults < command defaults < file < flags."""
        cfg = build_config("compare-mlp")
        self.assertEqual(cfg.data, 16384)
        self.assertEqual(cfg.model, "relu")
        cfg = build_config("compare-mlp", {"data": 512, "reps": 2}, {"data": 256})
        self.assertEqual(cfg.data, 256)
        self.assertEqual(cfg.reps, 2)
        self.assertEqual(cfg.dim, [4])
        self.assertEqual(cfg.name, "compare-mlp")

    def test_command_defaults(self):
        """Test the protocol constants of each benchmark."""
        self.assertEqual(build_config("scale-dim").dim, [2, 3, 4, 5])
        self.assertEqual(build_config("compare-grbfnn").fn, list(range(1, 11)))
        self.assertEqual(build_config("spectrum").neurons, 3)
        self.assertEqual(build_config("train").neurons, 20)

    def test_unknown_setting(self):
        """Test that unknown keys are rejected."""
        with self.assertRaises(ConfigError):
            build_config("train", flag_values={"colour": "red"})
