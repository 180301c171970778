"""
Experiment configuration.

An :class:`ExperimentConfig` is assembled from four layers, later layers
winning: built-in defaults, per-command defaults (each benchmark has its own
protocol constants), a ``key=value`` config file, and command-line flags.
"""

import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

from .errors import ConfigError
from .networks import parse_int_list
from .trainer import LossKind, TrainConfig

logger = logging.getLogger(__name__)

MODEL_CHOICES = ("sgnn", "grbfnn", "relu", "sigmoid")
PRESET_CHOICES = ("table6", "table7")


def _int_list(text: Union[str, List[int]]) -> List[int]:
    if isinstance(text, list):
        return text
    try:
        return parse_int_list(str(text))
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got '{text}'") from exc


# Converters for values that arrive as text (config files and flags alike).
FIELD_TYPES: Dict[str, Callable[[str], Any]] = {
    "model": str,
    "fn": _int_list,
    "dim": _int_list,
    "neurons": int,
    "layers": int,
    "data": int,
    "batch": int,
    "reps": int,
    "seed": int,
    "out": Path,
    "max_epochs": int,
    "patience": int,
    "lr": float,
    "loss": str,
    "lo": float,
    "hi": float,
    "workers": int,
    "configs": str,
    "preset": str,
    "grid_size": int,
    "model_file": Path,
    "k": int,
}

# Protocol constants of each benchmark, applied before the config file.
COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "scale-dim": {"dim": [2, 3, 4, 5], "neurons": 20, "data": 16384, "batch": 256},
    "compare-grbfnn": {
        "fn": list(range(1, 11)),
        "dim": [3],
        "neurons": 10,
        "data": 2048,
        "batch": 64,
    },
    "compare-mlp": {
        "model": "relu",
        "dim": [4],
        "fn": [5],
        "data": 16384,
        "batch": 256,
        "configs": "4x20",
    },
    "spectrum": {"fn": [3], "dim": [3], "neurons": 3, "data": 1024, "k": 3},
}


@dataclass
class ExperimentConfig:
    """
    Settings shared by all benchmark commands.

    Attributes:
        name (str): Command name, e.g. ``"compare-mlp"``.
        model (str): One of ``sgnn``, ``grbfnn``, ``relu``, ``sigmoid``.
        fn (List[int]): Candidate function ids.
        dim (List[int]): Input dimensions.
        neurons (int): SGNN neurons per layer, GRBFNN units per dimension,
            or MLP hidden width.
        layers (int): MLP hidden layers.
        data (int): Samples per dataset (80% train, 20% validation).
        batch (int): Mini-batch size.
        reps (int): Repetitions per configuration.
        seed (int): Base seed of every derived random stream.
        out (Path): Output directory.
        max_epochs (int): Epoch limit per run.
        patience (int): Early-stopping patience.
        lr (float): Adam learning rate.
        loss (LossKind): Training loss.
        lo, hi (float): Sampling domain.
        workers (int): Parallel worker processes for repetitions.
        configs (str): MLP grid as ``LxW`` items, comma separated.
        preset (Optional[str]): Named comparison grid.
        grid_size (Optional[int]): Surface grid points per axis.
        model_file (Optional[Path]): Trained model for ``surface``.
        k (int): Dominant eigenpairs for ``spectrum``.
    """

    name: str = "train"
    model: str = "sgnn"
    fn: List[int] = field(default_factory=lambda: [3])
    dim: List[int] = field(default_factory=lambda: [2])
    neurons: int = 20
    layers: int = 4
    data: int = 2048
    batch: int = 64
    reps: int = 5
    seed: int = 0
    out: Path = Path("results")
    max_epochs: int = 1000
    patience: int = 4
    lr: float = 1e-3
    loss: LossKind = LossKind.MSE
    lo: float = -8.0
    hi: float = 8.0
    workers: int = 1
    configs: str = "4x20"
    preset: Optional[str] = None
    grid_size: Optional[int] = None
    model_file: Optional[Path] = None
    k: int = 3

    def __post_init__(self) -> None:
        self.fn = _int_list(self.fn)
        self.dim = _int_list(self.dim)
        self.out = Path(self.out)
        if self.model not in MODEL_CHOICES:
            raise ConfigError(
                f"unknown model '{self.model}', expected one of {MODEL_CHOICES}"
            )
        try:
            self.loss = LossKind(self.loss)
        except ValueError as exc:
            raise ConfigError(f"unknown loss '{self.loss}'") from exc
        if self.preset is not None and self.preset not in PRESET_CHOICES:
            raise ConfigError(f"unknown preset '{self.preset}'")
        if not self.fn or any(f not in range(1, 11) for f in self.fn):
            raise ConfigError(f"function ids must be in 1..10, got {self.fn}")
        if not self.dim or min(self.dim) < 2:
            raise ConfigError(f"dimensions must be >= 2, got {self.dim}")
        for name in ("neurons", "layers", "batch", "reps", "patience", "workers", "k"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.data < 10:
            raise ConfigError(f"data must be >= 10, got {self.data}")
        if self.max_epochs < 0:
            raise ConfigError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if not self.lo < self.hi:
            raise ConfigError(f"domain needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.grid_size is not None and self.grid_size < 2:
            raise ConfigError(f"grid_size must be >= 2, got {self.grid_size}")

    def train_config(self, seed: int) -> TrainConfig:
        """The trainer settings of one run, with its own shuffle seed."""
        return TrainConfig(
            batch_size=self.batch,
            learning_rate=self.lr,
            patience=self.patience,
            max_epochs=self.max_epochs,
            seed=seed,
            loss_kind=self.loss,
        )


def normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Parses ``key=value`` lines into typed values.

    Blank lines and lines starting with ``#`` are skipped; keys may use ``-``
    or ``_``.

    Raises:
        ConfigError: If the file is missing, a line has no ``=``, a key is
            unknown, or a value does not parse.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    values: Dict[str, Any] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected key=value, got '{line}'")
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if key not in FIELD_TYPES:
            raise ConfigError(f"{path}:{number}: unknown key '{key}'")
        try:
            values[key] = FIELD_TYPES[key](value.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{number}: bad value for {key}: {exc}") from exc
    logger.debug("read %d settings from %s", len(values), path)
    return values


def build_config(
    command: str,
    file_values: Optional[Dict[str, Any]] = None,
    flag_values: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Merges defaults, command defaults, file values and flags, in that order.

    Raises:
        ConfigError: If a key is unknown or the merged values are invalid.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    merged: Dict[str, Any] = dict(COMMAND_DEFAULTS.get(command, {}))
    for layer in (file_values or {}, flag_values or {}):
        for key, value in layer.items():
            key = normalize_key(key)
            if key not in known:
                raise ConfigError(f"unknown setting '{key}'")
            merged[key] = value
    merged["name"] = command
    return ExperimentConfig(**merged)
