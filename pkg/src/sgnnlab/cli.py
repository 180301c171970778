"""
Command-line interface: ``sgnn-lab <command> [options]``.

Exit codes are 0 on success, 1 when a verification suite fails, and 2 for
usage errors (bad flags, invalid configuration, missing files).
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

from .bench import (
    compare_grbfnn,
    compare_mlp,
    complexity_table,
    scale_dim,
    spectrum_study,
    surface,
    train_single,
    write_csv,
)
from .config import (
    FIELD_TYPES,
    MODEL_CHOICES,
    PRESET_CHOICES,
    ExperimentConfig,
    build_config,
    read_config_file,
)
from .errors import SgnnLabError
from .trainer import LossKind
from .verification import (
    VerificationResult,
    VerificationSuite,
    Verifier,
    equivalence_suite,
    gradcheck_suite,
    hessian_suite,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2

_COMMAND_HELP = {
    "train": "train one model and save its log and parameters",
    "scale-dim": "time per epoch of SGNNs across input dimensions",
    "compare-grbfnn": "SGNN against GRBFNN on the candidate functions",
    "compare-mlp": "SGNN against ReLU or Sigmoid networks",
    "surface": "evaluate a saved model on the x1-x2 plane",
    "gradcheck": "analytic gradients against finite differences",
    "equivalence": "SGNN against its GRBFNN expansion",
    "hessian": "mapping Jacobian and projected Hessian identities",
    "complexity": "neuron, parameter and FLOP counts",
    "spectrum": "Hessian spectra of a small SGNN before and after training",
}


def _add_experiment_options(parser: argparse.ArgumentParser) -> None:
    # SUPPRESS keeps unset flags out of the namespace so file values survive.
    opt = parser.add_argument_group("experiment options")
    hidden = argparse.SUPPRESS
    opt.add_argument("--model", choices=MODEL_CHOICES, default=hidden)
    opt.add_argument("--fn", default=hidden, help="function ids, e.g. 3 or 1,3,5")
    opt.add_argument("--dim", default=hidden, help="input dimensions, e.g. 2,3,4,5")
    opt.add_argument("--neurons", type=int, default=hidden)
    opt.add_argument("--layers", type=int, default=hidden, help="MLP hidden layers")
    opt.add_argument("--data", type=int, default=hidden, help="samples per dataset")
    opt.add_argument("--batch", type=int, default=hidden)
    opt.add_argument("--reps", type=int, default=hidden)
    opt.add_argument("--seed", type=int, default=hidden)
    opt.add_argument("--out", type=Path, default=hidden, help="output directory")
    opt.add_argument("--max-epochs", type=int, default=hidden)
    opt.add_argument("--patience", type=int, default=hidden)
    opt.add_argument("--lr", type=float, default=hidden)
    opt.add_argument("--loss", choices=[k.value for k in LossKind], default=hidden)
    opt.add_argument("--lo", type=float, default=hidden)
    opt.add_argument("--hi", type=float, default=hidden)
    opt.add_argument("--workers", type=int, default=hidden)
    opt.add_argument("--configs", default=hidden, help="MLP grid, e.g. 4x20,10x80")
    opt.add_argument("--preset", choices=PRESET_CHOICES, default=hidden)
    opt.add_argument("--grid-size", type=int, default=hidden)
    opt.add_argument("--model-file", type=Path, default=hidden)
    opt.add_argument("--k", type=int, default=hidden, help="dominant eigenpairs")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value settings file")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    _add_experiment_options(common)

    parser = argparse.ArgumentParser(
        prog="sgnn-lab",
        description="Separable Gaussian neural network experiments.",
    )
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)
    for name, help_text in _COMMAND_HELP.items():
        commands.add_parser(name, parents=[common], help=help_text)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _cmd_train(cfg: ExperimentConfig, progress: bool) -> int:
    outcome = train_single(cfg)
    report = outcome.report
    print(f"epochs: {report.epochs_run} ({report.stop_reason.value})")
    print(f"final validation loss: {report.final_val_loss:.6e}")
    print(
        f"best validation loss: {report.best_val_loss:.6e} "
        f"(epoch {report.best_epoch})"
    )
    print(f"log: {outcome.log_path}")
    print(f"model: {outcome.model_path}")
    return EXIT_OK


def _cmd_scale_dim(cfg: ExperimentConfig, progress: bool) -> int:
    table = scale_dim(cfg, progress)
    write_csv(table, cfg.out / "scale_dim.csv")
    fit = table.iloc[-1]
    slope, r2 = fit["sec_per_epoch"], fit["r2"]
    print(f"slope {slope:.6g} s/epoch per dim, R^2 {r2:.4f}")
    return EXIT_OK


def _cmd_compare_grbfnn(cfg: ExperimentConfig, progress: bool) -> int:
    summary, raw = compare_grbfnn(cfg, progress)
    write_csv(summary, cfg.out / "compare_grbfnn.csv")
    write_csv(raw, cfg.out / "compare_grbfnn_runs.csv")
    print(summary.to_string(index=False))
    return EXIT_OK


def _cmd_compare_mlp(cfg: ExperimentConfig, progress: bool) -> int:
    raw, summary = compare_mlp(cfg, progress)
    write_csv(raw, cfg.out / "compare_mlp.csv")
    write_csv(summary, cfg.out / "compare_mlp_summary.csv")
    print(summary.to_string(index=False))
    return EXIT_OK


def _cmd_surface(cfg: ExperimentConfig, progress: bool) -> int:
    frame, summary = surface(cfg)
    write_csv(frame, cfg.out / "surface.csv")
    where = "on" if summary.on_boundary else "inside"
    print(
        f"{summary.grid_size}x{summary.grid_size} grid, max |error| "
        f"{summary.max_error:.6e} at ({summary.x1:.4g}, {summary.x2:.4g}), "
        f"{where} the boundary ring"
    )
    return EXIT_OK


def _cmd_complexity(cfg: ExperimentConfig, progress: bool) -> int:
    table = complexity_table(cfg)
    write_csv(table, cfg.out / "complexity.csv")
    print(table.to_string(index=False))
    return EXIT_OK


def _cmd_spectrum(cfg: ExperimentConfig, progress: bool) -> int:
    study = spectrum_study(cfg)
    dominance = study.dominance
    print(f"dominance fraction for k={dominance.k}: {dominance.fraction:.6f}")
    print(f"spectra written to {cfg.out}")
    return EXIT_OK


def _report(results: List[VerificationResult]) -> int:
    failed = False
    for result in results:
        for outcome in result.check_results.values():
            status = "PASS" if outcome.passed else "FAIL"
            print(
                f"{status} {outcome.name}: max error {outcome.max_error:.3e} "
                f"(tolerance {outcome.tolerance:.0e}) {outcome.detail}"
            )
        if not result.passed:
            failed = True
            for name in result.failures:
                outcome = result.check_results[name]
                print(
                    f"{result.suite_name}: {name} failed with error "
                    f"{outcome.max_error:.6e} ({outcome.detail})",
                    file=sys.stderr,
                )
    return EXIT_VERIFICATION_FAILED if failed else EXIT_OK


def _verify(suite: VerificationSuite) -> int:
    return _report(Verifier().run([suite]))


_HANDLERS: Dict[str, Callable[[ExperimentConfig, bool], int]] = {
    "train": _cmd_train,
    "scale-dim": _cmd_scale_dim,
    "compare-grbfnn": _cmd_compare_grbfnn,
    "compare-mlp": _cmd_compare_mlp,
    "surface": _cmd_surface,
    "gradcheck": lambda cfg, _: _verify(gradcheck_suite(cfg.seed)),
    "equivalence": lambda cfg, _: _verify(
        equivalence_suite(cfg.seed, lo=cfg.lo, hi=cfg.hi)
    ),
    "hessian": lambda cfg, _: _verify(hessian_suite(cfg.seed, k=cfg.k)),
    "complexity": _cmd_complexity,
    "spectrum": _cmd_spectrum,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the ``sgnn-lab`` console script."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    flags = vars(args)
    command = flags.pop("command")
    config_path = flags.pop("config")
    verbose, quiet = flags.pop("verbose"), flags.pop("quiet")
    configure_logging(verbose, quiet)

    try:
        file_values = read_config_file(config_path) if config_path else {}
        flag_values = {
            key: FIELD_TYPES[key](value) if isinstance(value, str) else value
            for key, value in flags.items()
        }
        cfg = build_config(command, file_values, flag_values)
        logger.debug("resolved configuration: %s", cfg)
        return _HANDLERS[command](cfg, not quiet)
    except (SgnnLabError, FileNotFoundError) as exc:
        print(f"sgnn-lab {command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
