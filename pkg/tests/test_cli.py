"""
Unit tests for the command-line interface.

These tests drive ``main`` with argument lists and check exit codes, the
files written and the verification-failure path.
"""

import contextlib
import io
import tempfile
import unittest
from pathlib import Path
from unittest.mock import MagicMock, patch

import pandas as pd

from sgnnlab import Check, CheckOutcome, VerificationSuite
from sgnnlab.cli import (
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFICATION_FAILED,
    build_parser,
    main,
)


class TestCli(unittest.TestCase):
    """Test suite for sgnnlab.cli.main."""

    def setUp(self):
        """Create an output directory and capture stdout and stderr."""
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.out = Path(self._tmp.name)
        self.stdout = io.StringIO()
        self.stderr = io.StringIO()

    def _run(self, *argv: str) -> int:
        with contextlib.redirect_stdout(self.stdout):
            with contextlib.redirect_stderr(self.stderr):
                return main(list(argv))

    def test_parser_lists_every_command(self):
        """Test that all ten commands are registered."""
        help_text = build_parser().format_help()
        for command in (
            "train",
            "scale-dim",
            "compare-grbfnn",
            "compare-mlp",
            "surface",
            "gradcheck",
            "equivalence",
            "hessian",
            "complexity",
            "spectrum",
        ):
            self.assertIn(command, help_text)

    def test_complexity(self):
        """Test the complexity command and its CSV."""
        code = self._run(
            "complexity", "--dim", "3", "--neurons", "10", "--data", "10",
            "--out", str(self.out), "-q",
        )  # fmt: skip
        self.assertEqual(code, EXIT_OK)
        table = pd.read_csv(self.out / "complexity.csv")
        self.assertEqual(table["forward_flops"].iloc[0], 5900)

    def test_train_then_surface(self):
        """Test that surface reads the model written by train."""
        code = self._run(
            "train", "--fn", "3", "--dim", "2", "--neurons", "3", "--data", "40",
            "--max-epochs", "2", "--out", str(self.out), "-q",
        )  # fmt: skip
        self.assertEqual(code, EXIT_OK)
        model_file = self.out / "sgnn_f3_d2_model.txt"
        self.assertTrue(model_file.is_file())
        self.assertTrue((self.out / "sgnn_f3_d2_log.csv").is_file())
        self.assertIn("epochs: 2", self.stdout.getvalue())

        code = self._run(
            "surface", "--model-file", str(model_file), "--grid-size", "4",
            "--out", str(self.out), "-q",
        )  # fmt: skip
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(len(pd.read_csv(self.out / "surface.csv")), 16)

    def test_config_file_and_flag_precedence(self):
        """Test that a flag overrides the same key in the config file."""
        config = self.out / "run.cfg"
        config.write_text("max-epochs=1\nneurons=2\ndata=30\nfn=9\n", "utf-8")
        code = self._run(
            "train", "--config", str(config), "--max-epochs", "2",
            "--out", str(self.out), "-q",
        )  # fmt: skip
        self.assertEqual(code, EXIT_OK)
        self.assertIn("epochs: 2", self.stdout.getvalue())
        self.assertTrue((self.out / "sgnn_f9_d2_model.txt").is_file())

    def test_usage_errors(self):
        """Test that bad invocations exit with code 2."""
        self.assertEqual(self._run(), EXIT_USAGE)
        self.assertEqual(self._run("train", "--model", "tree"), EXIT_USAGE)
        self.assertEqual(self._run("train", "--fn", "12"), EXIT_USAGE)
        self.assertEqual(self._run("surface"), EXIT_USAGE)
        self.assertEqual(
            self._run("train", "--config", str(self.out / "none.cfg")), EXIT_USAGE
        )
        self.assertEqual(self._run("compare-mlp", "--dim", "3,4"), EXIT_USAGE)
        self.assertIn("error", self.stderr.getvalue())

    def test_library_errors_exit_with_usage(self):
        """Test that a CapacityError becomes exit code 2, not a traceback."""
        code = self._run(
            "spectrum", "--dim", "3", "--neurons", "20", "--out", str(self.out)
        )
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("sgnn-lab spectrum: error:", self.stderr.getvalue())
        self.assertIn("8000", self.stderr.getvalue())

    def test_verification_pass_and_fail(self):
        """Test exit codes 0 and 1 of a verification command."""
        passing = MagicMock(spec=Check)
        passing.run.return_value = CheckOutcome("ok", True, 0.0, 1e-5, "")
        failing = MagicMock(spec=Check)
        failing.run.return_value = CheckOutcome("off", False, 0.5, 1e-5, "w")

        with patch(
            "sgnnlab.cli.gradcheck_suite",
            return_value=VerificationSuite("gradcheck", [passing]),
        ):
            self.assertEqual(self._run("gradcheck", "-q"), EXIT_OK)
        with patch(
            "sgnnlab.cli.gradcheck_suite",
            return_value=VerificationSuite("gradcheck", [passing, failing]),
        ):
            self.assertEqual(self._run("gradcheck", "-q"), EXIT_VERIFICATION_FAILED)
        self.assertIn("FAIL off", self.stdout.getvalue())
        self.assertIn("gradcheck: off failed", self.stderr.getvalue())

    def test_hessian_command(self):
        """Test the real Hessian suite end to end."""
        self.assertEqual(self._run("hessian", "--k", "2", "-q"), EXIT_OK)
