"""
Benchmark harness.

Each benchmark expands an :class:`~sgnnlab.config.ExperimentConfig` into a
list of independent runs (function, dimension, repetition, model), executes
them sequentially or in a process pool, and assembles CSV tables with pandas.

Every run derives its random streams from the base seed and its own keys, so
the dataset of ``(fn, dim, rep)`` is the same for every model compared on it
and any single run can be replayed in isolation.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from itertools import repeat
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats
from tqdm import tqdm

from .analysis import (
    DominanceReport,
    HessianBundle,
    complexity_report,
    dominance_report,
    hessian_bundle,
    write_spectrum_csv,
)
from .candidates import Dataset, grid_points, grid_slice, make_candidate, sample_dataset
from .config import ExperimentConfig
from .errors import ConfigError
from .grbfnn import GrbfnnModel
from .history import VolatileHistory, write_training_log
from .linalg import make_rng, spawn_seeds
from .mlp import Activation, MlpModel
from .networks import BaseNetwork, load_network, save_network
from .sgnn import SgnnModel
from .trainer import TrainConfig, TrainReport, train

logger = logging.getLogger(__name__)

_MODEL_KEYS = {"sgnn": 0, "grbfnn": 1, "relu": 2, "sigmoid": 3}
_INIT_STREAM = 1
_SHUFFLE_STREAM = 2


class ModelSpec(NamedTuple):
    """
    One network configuration.

    ``neurons`` is the SGNN layer width, the GRBFNN units per dimension (the
    GRBFNN gets ``neurons ** dim`` units) or the MLP hidden width; ``layers``
    is only used by MLPs.
    """

    model: str
    neurons: int
    layers: int = 4


class RunSpec(NamedTuple):
    fn: int
    dim: int
    rep: int
    spec: ModelSpec


@dataclass
class RunResult:
    """Summary of one training run, one CSV row of the raw tables."""

    fn: int
    dim: int
    rep: int
    model: str
    neurons: int
    layers: int
    params: int
    epochs: int
    sec_per_epoch: float
    total_seconds: float
    final_loss: float
    best_loss: float
    stop_reason: str


PRESETS: Dict[str, Tuple[List[int], List[ModelSpec]]] = {
    "table6": (
        list(range(1, 11)),
        [ModelSpec("sgnn", 20), ModelSpec("relu", 20, 4), ModelSpec("sigmoid", 20, 4)],
    ),
    "table7": (
        [5],
        [ModelSpec("sgnn", 20), ModelSpec("sgnn", 40)]
        + [
            ModelSpec("relu", width, layers)
            for layers, width in (
                (4, 20),
                (4, 40),
                (7, 40),
                (10, 40),
                (10, 50),
                (10, 60),
                (10, 70),
                (10, 80),
            )
        ],
    ),
}


def parse_configs(text: str) -> List[Tuple[int, int]]:
    """
    Parses an MLP grid such as ``"4x20,10x80"`` into (layers, width) pairs.

    Raises:
        ConfigError: If an item is not ``<layers>x<width>`` with positive ints.
    """
    pairs = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        try:
            layers, width = (int(part) for part in item.split("x"))
        except ValueError as exc:
            raise ConfigError(f"MLP configuration '{item}' is not LxW") from exc
        if layers < 1 or width < 1:
            raise ConfigError(f"MLP configuration '{item}' needs positive sizes")
        pairs.append((layers, width))
    if not pairs:
        raise ConfigError("no MLP configurations given")
    return pairs


def build_model(spec: ModelSpec, dim: int, lo: float, hi: float, rng) -> BaseNetwork:
    if spec.model == "sgnn":
        return SgnnModel.initialize(dim, spec.neurons, lo, hi, rng)
    if spec.model == "grbfnn":
        return GrbfnnModel.initialize(dim, spec.neurons**dim, lo, hi, rng)
    if spec.model in ("relu", "sigmoid"):
        return MlpModel.initialize_grid(
            dim, spec.layers, spec.neurons, Activation(spec.model), rng
        )
    raise ConfigError(f"unknown model '{spec.model}'")


def _run_keys(run: RunSpec) -> Tuple[int, ...]:
    return (
        run.fn,
        run.dim,
        run.rep,
        _MODEL_KEYS[run.spec.model],
        run.spec.neurons,
        run.spec.layers,
    )


def prepare_run(
    run: RunSpec, cfg: ExperimentConfig
) -> Tuple[Dataset, BaseNetwork, TrainConfig]:
    """Seeded dataset, freshly initialized model and trainer settings of a run."""
    data_rng = make_rng(spawn_seeds(cfg.seed, run.fn, run.dim, run.rep))
    dataset = sample_dataset(
        make_candidate(run.fn, run.dim), cfg.data, data_rng, cfg.lo, cfg.hi
    )
    keys = _run_keys(run)
    init_rng = make_rng(spawn_seeds(cfg.seed, *keys, _INIT_STREAM))
    model = build_model(run.spec, run.dim, cfg.lo, cfg.hi, init_rng)
    shuffle_stream = spawn_seeds(cfg.seed, *keys, _SHUFFLE_STREAM)
    shuffle_seed = int(shuffle_stream.generate_state(1)[0])
    return dataset, model, cfg.train_config(shuffle_seed)


def _summarize(run: RunSpec, model: BaseNetwork, report: TrainReport) -> RunResult:
    return RunResult(
        fn=run.fn,
        dim=run.dim,
        rep=run.rep,
        model=run.spec.model,
        neurons=run.spec.neurons,
        layers=run.dim if run.spec.model == "sgnn" else run.spec.layers,
        params=model.n_params,
        epochs=report.epochs_run,
        sec_per_epoch=report.sec_per_epoch,
        total_seconds=report.total_seconds,
        final_loss=report.final_val_loss,
        best_loss=report.best_val_loss,
        stop_reason=report.stop_reason.value,
    )


def execute_run(run: RunSpec, cfg: ExperimentConfig) -> RunResult:
    """Trains one run from scratch; safe to call in a worker process."""
    dataset, model, train_cfg = prepare_run(run, cfg)
    report = train(model, dataset, train_cfg)
    result = _summarize(run, model, report)
    logger.info(
        "f%d d=%d rep=%d %s: %d epochs, %.4fs/epoch, final loss %.3e",
        run.fn,
        run.dim,
        run.rep,
        run.spec.model,
        result.epochs,
        result.sec_per_epoch,
        result.final_loss,
    )
    return result


def run_all(
    runs: Sequence[RunSpec],
    cfg: ExperimentConfig,
    progress: bool = True,
    desc: Optional[str] = None,
) -> List[RunResult]:
    """
    Executes runs in order, in ``cfg.workers`` processes when above one.

    Results come back in the order of ``runs`` either way.
    """
    desc = desc or cfg.name
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = pool.map(execute_run, runs, repeat(cfg))
            return list(tqdm(results, total=len(runs), desc=desc, disable=not progress))
    bar = tqdm(runs, desc=desc, disable=not progress)
    return [execute_run(run, cfg) for run in bar]


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """UTF-8 CSV with ``\\n`` line endings and 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(
        path,
        index=False,
        float_format="%.17g",
        lineterminator="\n",
        encoding="utf-8",
        na_rep="",
    )
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


def results_frame(results: Sequence[RunResult]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in results])


def _aggregate(raw: pd.DataFrame, keys: List[str]) -> pd.DataFrame:
    # Mean for losses and epochs, median for timings.
    grouped = raw.groupby(keys, sort=False)
    summary = grouped.agg(
        epochs=("epochs", "mean"),
        sec_per_epoch=("sec_per_epoch", "median"),
        ave_loss=("final_loss", "mean"),
        min_loss=("final_loss", "min"),
        ave_best_loss=("best_loss", "mean"),
        min_best_loss=("best_loss", "min"),
    )
    return summary.reset_index()


def _single_dim(cfg: ExperimentConfig) -> int:
    if len(cfg.dim) != 1:
        raise ConfigError(f"{cfg.name} runs at a single dimension, got {cfg.dim}")
    return cfg.dim[0]


@dataclass
class TrainingOutcome:
    model: BaseNetwork
    report: TrainReport
    log_path: Path
    model_path: Path


def train_single(cfg: ExperimentConfig) -> TrainingOutcome:
    """
    Trains one model on the first configured function and dimension.

    Writes ``<model>_f<fn>_d<dim>_log.csv`` and ``..._model.txt`` into
    ``cfg.out``; the model file records ``fn``, ``lo`` and ``hi``.
    """
    spec = ModelSpec(cfg.model, cfg.neurons, cfg.layers)
    run = RunSpec(cfg.fn[0], cfg.dim[0], 0, spec)
    dataset, model, train_cfg = prepare_run(run, cfg)
    history = VolatileHistory()
    report = train(model, dataset, train_cfg, history)

    cfg.out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.model}_f{run.fn}_d{run.dim}"
    log_path = write_training_log(history.get_records(), cfg.out / f"{stem}_log.csv")
    model_path = save_network(
        model,
        cfg.out / f"{stem}_model.txt",
        extra={"fn": run.fn, "lo": repr(cfg.lo), "hi": repr(cfg.hi), "seed": cfg.seed},
    )
    return TrainingOutcome(model, report, log_path, model_path)


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float]:
    """Least-squares slope and R^2; NaN when fewer than two distinct x."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    mask = np.isfinite(ys)
    if np.unique(xs[mask]).shape[0] < 2:
        return float("nan"), float("nan")
    fit = stats.linregress(xs[mask], ys[mask])
    return float(fit.slope), float(fit.rvalue**2)


def scale_dim(cfg: ExperimentConfig, progress: bool = True) -> pd.DataFrame:
    """
    Time per epoch against input dimension.

    Returns one ``dim,sec_per_epoch,final_loss,fn,rep,r2`` row per run, with
    ``r2`` left blank, and a final ``dim=fit`` row holding the slope in
    ``sec_per_epoch`` and the R^2 in ``r2`` of a line through the
    per-dimension medians.
    """
    spec = ModelSpec(cfg.model, cfg.neurons, cfg.layers)
    runs = [
        RunSpec(fn, dim, rep, spec)
        for fn in cfg.fn
        for dim in cfg.dim
        for rep in range(cfg.reps)
    ]
    raw = results_frame(run_all(runs, cfg, progress))
    table = raw[["dim", "sec_per_epoch", "final_loss", "fn", "rep"]].astype(object)
    table["r2"] = ""

    medians = raw.groupby("dim")["sec_per_epoch"].median()
    slope, r2 = fit_line(medians.index.to_numpy(), medians.to_numpy())
    logger.info("sec/epoch vs dim: slope %.4g, R^2 %.4f", slope, r2)
    fit_row = pd.DataFrame(
        [
            {
                "dim": "fit",
                "sec_per_epoch": slope,
                "final_loss": "",
                "fn": "",
                "rep": "",
                "r2": r2,
            }
        ]
    )
    return pd.concat([table, fit_row], ignore_index=True)


def compare_grbfnn(
    cfg: ExperimentConfig, progress: bool = True
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    SGNN against a GRBFNN with ``neurons ** dim`` units on every function.

    The dimension must be 2 or 3.

    Returns:
        Tuple[pd.DataFrame, pd.DataFrame]: The aggregated table
        (``fn,model,epochs,sec_per_epoch,ave_loss,min_loss,ave_best_loss,
        min_best_loss``) and the raw per-run table.
    """
    dim = _single_dim(cfg)
    if dim not in (2, 3):
        raise ConfigError(f"compare-grbfnn runs at d=2 or d=3, got d={dim}")
    specs = [ModelSpec("sgnn", cfg.neurons), ModelSpec("grbfnn", cfg.neurons)]
    runs = [
        RunSpec(fn, dim, rep, spec)
        for fn in cfg.fn
        for rep in range(cfg.reps)
        for spec in specs
    ]
    raw = results_frame(run_all(runs, cfg, progress))
    summary = _aggregate(raw, ["fn", "model"])
    for fn, group in summary.groupby("fn", sort=False):
        times = group.set_index("model")["sec_per_epoch"]
        logger.info(
            "f%d: SGNN/GRBFNN time per epoch ratio %.4g",
            fn,
            times["sgnn"] / times["grbfnn"],
        )
    return summary, raw


def mlp_grid(cfg: ExperimentConfig) -> Tuple[List[int], List[ModelSpec]]:
    """Functions and model configurations of a compare-mlp run."""
    if cfg.preset is not None:
        return PRESETS[cfg.preset]
    if cfg.model not in ("relu", "sigmoid"):
        raise ConfigError(f"compare-mlp needs --model relu or sigmoid, got {cfg.model}")
    specs = [ModelSpec("sgnn", cfg.neurons)] + [
        ModelSpec(cfg.model, width, layers)
        for layers, width in parse_configs(cfg.configs)
    ]
    return cfg.fn, specs


def compare_mlp(
    cfg: ExperimentConfig, progress: bool = True
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    SGNN against dense ReLU or Sigmoid networks.

    Returns:
        Tuple[pd.DataFrame, pd.DataFrame]: The per-run table
        (``fn,model,layers,neurons,params,sec_per_epoch,epochs,final_loss,
        best_loss``) and its aggregate per configuration.
    """
    dim = _single_dim(cfg)
    fns, specs = mlp_grid(cfg)
    runs = [
        RunSpec(fn, dim, rep, spec)
        for fn in fns
        for spec in specs
        for rep in range(cfg.reps)
    ]
    raw = results_frame(run_all(runs, cfg, progress))
    columns = [
        "fn",
        "model",
        "layers",
        "neurons",
        "params",
        "sec_per_epoch",
        "epochs",
        "final_loss",
        "best_loss",
    ]
    summary = _aggregate(raw, ["fn", "model", "layers", "neurons", "params"])
    return raw[columns], summary


@dataclass
class SurfaceSummary:
    """Where the largest absolute error of a surface slice lies."""

    grid_size: int
    max_error: float
    x1: float
    x2: float
    on_boundary: bool


def surface(cfg: ExperimentConfig) -> Tuple[pd.DataFrame, SurfaceSummary]:
    """
    Evaluates a saved model and its target on the x1-x2 plane.

    The grid defaults to twice the SGNN layer width (64 for other models).
    The target function and domain come from the model file's metadata,
    falling back to the configured values.

    Raises:
        ConfigError: If no model file is configured or the model has d < 2.
        FileNotFoundError: If the model file does not exist.
    """
    if cfg.model_file is None:
        raise ConfigError("surface needs --model-file")
    if not Path(cfg.model_file).is_file():
        raise FileNotFoundError(f"model file {cfg.model_file} does not exist")
    model, meta = load_network(cfg.model_file)
    if model.dim < 2:
        raise ConfigError("surface slices need a model with d >= 2")
    fn = int(meta.get("fn", cfg.fn[0]))
    lo = float(meta.get("lo", cfg.lo))
    hi = float(meta.get("hi", cfg.hi))
    n = cfg.grid_size
    if n is None:
        n = 2 * model.widths[0] if isinstance(model, SgnnModel) else 64

    points = grid_points(model.dim, n, lo, hi)
    prediction = model.predict(points)
    truth = grid_slice(make_candidate(fn, model.dim), n, lo, hi).ravel()
    frame = pd.DataFrame(
        {
            "x1": points[:, 0],
            "x2": points[:, 1],
            "prediction": prediction,
            "truth": truth,
        }
    )

    error = np.abs(prediction - truth)
    worst = int(np.argmax(error))
    i, j = divmod(worst, n)
    summary = SurfaceSummary(
        grid_size=n,
        max_error=float(error[worst]),
        x1=float(points[worst, 0]),
        x2=float(points[worst, 1]),
        on_boundary=i in (0, n - 1) or j in (0, n - 1),
    )
    logger.info(
        "largest |error| %.3e at (%.3g, %.3g), %s the boundary ring",
        summary.max_error,
        summary.x1,
        summary.x2,
        "on" if summary.on_boundary else "inside",
    )
    return frame, summary


def complexity_table(cfg: ExperimentConfig) -> pd.DataFrame:
    """Complexity reports of SGNN, GRBFNN and MLP at the configured sizes."""
    dim = _single_dim(cfg)
    reports = [
        complexity_report("sgnn", dim, cfg.neurons, cfg.data),
        complexity_report("grbfnn", dim, cfg.neurons, cfg.data),
        complexity_report("mlp", dim, cfg.neurons, cfg.data, cfg.layers),
    ]
    return pd.DataFrame([asdict(r) for r in reports])


@dataclass
class SpectrumStudy:
    initial: HessianBundle
    trained: HessianBundle
    dominance: DominanceReport
    report: TrainReport


def spectrum_study(cfg: ExperimentConfig) -> SpectrumStudy:
    """
    Hessian spectra of a small SGNN before and after training.

    Writes ``spectrum_initial.csv``, ``spectrum_trained.csv`` and
    ``spectrum_histogram.csv`` (log10 |eigenvalue| bins) into ``cfg.out``.
    """
    dim = _single_dim(cfg)
    run = RunSpec(cfg.fn[0], dim, 0, ModelSpec("sgnn", cfg.neurons))
    dataset, model, train_cfg = prepare_run(run, cfg)
    inputs = dataset.train_inputs
    initial = hessian_bundle(model, inputs, cfg.k)
    report = train(model, dataset, train_cfg)
    trained = hessian_bundle(model, inputs, cfg.k)
    dominance = dominance_report(trained, cfg.k, initial)

    cfg.out.mkdir(parents=True, exist_ok=True)
    write_spectrum_csv(initial, cfg.out / "spectrum_initial.csv")
    write_spectrum_csv(trained, cfg.out / "spectrum_trained.csv")
    edges = dominance.bin_edges
    write_csv(
        pd.DataFrame(
            {
                "log10_lo": edges[:-1],
                "log10_hi": edges[1:],
                "initial": dominance.initial_histogram,
                "trained": dominance.histogram,
            }
        ),
        cfg.out / "spectrum_histogram.csv",
    )
    return SpectrumStudy(initial, trained, dominance, report)
