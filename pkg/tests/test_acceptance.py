"""
Desk-scale benchmark runs at the published protocol sizes.

Each test trains many models for up to a thousand epochs and takes minutes,
so the module only runs when ``SGNNLAB_SLOW=1`` is set. Losses are
stochastic; the assertions are order-of-magnitude bands and timing ratios.
"""

import os
import tempfile
import unittest
from pathlib import Path

from sgnnlab import build_config
from sgnnlab.bench import compare_grbfnn, compare_mlp, scale_dim

_SLOW = os.environ.get("SGNNLAB_SLOW") == "1"


def _runs(table):
    runs = table[table["dim"] != "fit"]
    return runs.astype({"sec_per_epoch": float, "final_loss": float})


@unittest.skipUnless(_SLOW, "set SGNNLAB_SLOW=1 to run desk-scale benchmarks")
class TestDeskScale(unittest.TestCase):
    """Test suite for the desk-scale benchmark protocol."""

    def setUp(self):
        """Create a temporary output directory."""
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.out = Path(self._tmp.name)

    def _cfg(self, command, **values):
        return build_config(command, flag_values={"out": self.out, **values})

    def test_sgnn_accuracy(self):
        """Test the median validation MSE of f1 and f3 at d = 3."""
        table = scale_dim(self._cfg("scale-dim", fn=[1, 3], dim=[3]), progress=False)
        runs = _runs(table)
        medians = runs.groupby("fn")["final_loss"].median()
        self.assertLessEqual(medians[3], 4e-4)
        self.assertLessEqual(medians[1], 1e-3)

    def test_epoch_time_scales_linearly(self):
        """Test the linear fit and the d = 5 to d = 2 time ratio."""
        table = scale_dim(self._cfg("scale-dim", fn=[3], reps=1), progress=False)
        fit = table.iloc[-1]
        self.assertGreaterEqual(fit["r2"], 0.9)
        runs = _runs(table)
        times = runs.groupby("dim")["sec_per_epoch"].median()
        self.assertLessEqual(times[5] / times[2], 4.0)

    def test_sgnn_faster_than_grbfnn(self):
        """Test time per epoch and loss against GRBFNN on every function."""
        _, raw = compare_grbfnn(self._cfg("compare-grbfnn"), progress=False)
        medians = raw.groupby(["fn", "model"])[["sec_per_epoch", "final_loss"]]
        medians = medians.median().unstack("model")
        for fn, row in medians.iterrows():
            with self.subTest(fn=fn):
                time, loss = row["sec_per_epoch"], row["final_loss"]
                self.assertLessEqual(time["sgnn"], time["grbfnn"] / 10.0)
                self.assertLessEqual(loss["sgnn"], 100.0 * loss["grbfnn"])

    def test_sgnn_beats_relu_on_f5(self):
        """Test the loss gap between SGNN 4x40 and a ReLU network 4x40."""
        cfg = self._cfg("compare-mlp", neurons=40, configs="4x40")
        raw, _ = compare_mlp(cfg, progress=False)
        medians = raw.groupby("model")["final_loss"].median()
        self.assertLessEqual(medians["sgnn"], 1e-2)
        self.assertGreaterEqual(medians["relu"], 0.1)
