"""
Unit tests for the networks module.

These tests validate the plain-text model format: exact save/load round
trips for every registered network kind, extra metadata, and errors on
malformed files.
"""

import tempfile
import unittest
from pathlib import Path

from numpy.testing import assert_array_equal

from sgnnlab import (
    Activation,
    AnisotropicGrbfnn,
    ConfigError,
    GrbfnnModel,
    MlpModel,
    SgnnModel,
    load_network,
    make_rng,
    save_network,
    sgnn_to_grbfnn,
)
from sgnnlab.networks import FORMAT_HEADER


class TestSerialization(unittest.TestCase):
    """Test suite for save_network and load_network."""

    def setUp(self):
        """Create a temporary directory and a generator."""
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.dir = Path(self._tmp.name)
        self.rng = make_rng(12)

    def _round_trip(self, model, name):
        path = save_network(model, self.dir / name, extra={"fn": 3, "lo": "-8.0"})
        loaded, meta = load_network(path)
        self.assertIs(type(loaded), type(model))
        assert_array_equal(loaded.param_vector(), model.param_vector())
        self.assertEqual(meta["fn"], "3")
        self.assertEqual(meta["lo"], "-8.0")
        return loaded

    def test_every_kind_round_trips_exactly(self):
        """Test bit-exact parameters after a save/load cycle."""
        sgnn = SgnnModel.initialize(3, [2, 3, 4], -8.0, 8.0, self.rng)
        models = {
            "sgnn.txt": sgnn,
            "sgnn1.txt": SgnnModel.initialize(1, 4, -1.0, 1.0, self.rng),
            "grbfnn.txt": GrbfnnModel.initialize(2, 9, -1.0, 1.0, self.rng),
            "aniso.txt": sgnn_to_grbfnn(sgnn),
            "mlp.txt": MlpModel.initialize(2, [3, 5], Activation.SIGMOID, self.rng),
        }
        for name, model in models.items():
            self._round_trip(model, name)

    def test_loaded_model_predicts_identically(self):
        """Test that outputs survive the text format."""
        model = SgnnModel.initialize(2, 5, -8.0, 8.0, self.rng)
        loaded = self._round_trip(model, "model.txt")
        x = self.rng.uniform(-8.0, 8.0, size=(10, 2))
        assert_array_equal(loaded.predict(x), model.predict(x))
        self.assertEqual(loaded.widths, [5, 5])

    def test_file_layout(self):
        """Test the header, kind line and tensor block markers."""
        model = AnisotropicGrbfnn([[0.0, 1.0]], [[1.0, 2.0]], [0.1])
        path = save_network(model, self.dir / "unit.txt")
        lines = path.read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], FORMAT_HEADER)
        self.assertEqual(lines[1], "kind=grbfnn-aniso")
        self.assertIn("@tensor weights 1 1", lines)
        self.assertIn("@tensor centers 1 2", lines)
        self.assertIn("0.10000000000000001", lines)

    def test_malformed_files(self):
        """Test missing header, unknown kind and truncated tensors."""
        bad = self.dir / "bad.txt"
        bad.write_text("kind=sgnn\n", encoding="utf-8")
        with self.assertRaises(ConfigError):
            load_network(bad)
        bad.write_text(f"{FORMAT_HEADER}\nkind=tree\n", encoding="utf-8")
        with self.assertRaises(ConfigError):
            load_network(bad)
        bad.write_text(f"{FORMAT_HEADER}\nkind=sgnn\n@tensor x 2 1\n1\n", "utf-8")
        with self.assertRaises(ConfigError):
            load_network(bad)
        with self.assertRaises(FileNotFoundError):
            load_network(self.dir / "missing.txt")
