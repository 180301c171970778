"""
Mini-batch Adam training shared by every network family.

:func:`train` drives any :class:`~sgnnlab.networks.BaseNetwork` through
shuffled mini-batch epochs, evaluates the validation split at the end of each
epoch, and stops once the monitored validation loss has failed to improve for
``patience`` consecutive epochs. It knows nothing about the model beyond the
flat-parameter contract, so the SGNN, both GRBFNNs and the MLPs are trained by
the same loop.
"""

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .candidates import Dataset
from .errors import ConfigError, ShapeError
from .history import BaseHistory, EpochRecord, VolatileHistory
from .linalg import Vector, make_rng
from .networks import BaseNetwork

logger = logging.getLogger(__name__)


class LossKind(str, enum.Enum):
    MSE = "mse"
    RSS = "rss"


class StopReason(str, enum.Enum):
    PATIENCE = "patience"
    MAX_EPOCHS = "max_epochs"


@dataclass
class TrainConfig:
    """
    Hyper-parameters of one training run.

    Attributes:
        batch_size (int): Rows per mini-batch; the last batch may be smaller.
        learning_rate (float): Adam step size.
        beta1 (float): Decay rate of the first-moment estimate.
        beta2 (float): Decay rate of the second-moment estimate.
        epsilon (float): Denominator guard of the Adam update.
        patience (int): Epochs without strict validation improvement that
            trigger early stopping.
        max_epochs (int): Hard epoch limit; 0 returns an empty report.
        seed (int): Seed of the shuffling stream.
        loss_kind (LossKind): Training loss, mean squared error or
            root-sum-squared.
    """

    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    patience: int = 4
    max_epochs: int = 1000
    seed: int = 0
    loss_kind: LossKind = LossKind.MSE

    def __post_init__(self) -> None:
        try:
            self.loss_kind = LossKind(self.loss_kind)
        except ValueError as exc:
            raise ConfigError(f"unknown loss kind '{self.loss_kind}'") from exc
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.max_epochs < 0:
            raise ConfigError(f"max_epochs must be >= 0, got {self.max_epochs}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigError("beta1 and beta2 must lie strictly between 0 and 1")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass
class AdamState:
    """First and second moment estimates plus the step counter."""

    m: Vector
    v: Vector
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params, grads, state: AdamState, cfg: TrainConfig) -> Vector:
    """
    One bias-corrected Adam update.

    Updates ``state`` in place and returns the new parameter vector; the input
    array is not modified.

    Raises:
        ShapeError: If params, grads and the moment vectors differ in length.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if not params.shape == grads.shape == state.m.shape == state.v.shape:
        raise ShapeError(
            f"adam_step got params {params.shape}, grads {grads.shape} and "
            f"moments {state.m.shape}"
        )
    state.t += 1
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads * grads
    m_hat = state.m / (1.0 - cfg.beta1**state.t)
    v_hat = state.v / (1.0 - cfg.beta2**state.t)
    return params - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


def _residual(pred, target) -> Vector:
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    if pred.shape != target.shape:
        raise ShapeError(f"{pred.shape[0]} predictions for {target.shape[0]} targets")
    if pred.size == 0:
        raise ValueError("loss of an empty batch is undefined")
    return pred - target


def compute_loss(pred, target, kind: LossKind = LossKind.MSE) -> float:
    """
    Mean squared error or root-sum-squared error ``sqrt(sum (f - t)^2)``.

    Raises:
        ShapeError: If the lengths differ.
        ValueError: If the inputs are empty.
    """
    r = _residual(pred, target)
    if LossKind(kind) is LossKind.MSE:
        return float(np.mean(r * r))
    return float(np.sqrt(np.sum(r * r)))


def loss_gradient(pred, target, kind: LossKind = LossKind.MSE) -> Vector:
    """Gradient of :func:`compute_loss` with respect to ``pred``."""
    r = _residual(pred, target)
    if LossKind(kind) is LossKind.MSE:
        return 2.0 * r / r.size
    norm = np.sqrt(np.sum(r * r))
    if norm == 0.0:
        return np.zeros_like(r)
    return r / norm


class EarlyStopping:
    """
    Patience rule on a monitored loss.

    A loss counts as an improvement only when it is strictly lower than the
    best seen so far. :meth:`update` returns True once ``patience``
    consecutive epochs have passed without improvement.
    """

    def __init__(self, patience: int):
        if patience < 1:
            raise ConfigError(f"patience must be >= 1, got {patience}")
        self.patience = patience
        self.best = np.inf
        self.best_epoch = 0
        self.epochs_seen = 0
        self.stale_epochs = 0

    def update(self, loss: float) -> bool:
        self.epochs_seen += 1
        if loss < self.best:
            self.best = float(loss)
            self.best_epoch = self.epochs_seen
            self.stale_epochs = 0
        else:
            self.stale_epochs += 1
        return self.stale_epochs >= self.patience

    @property
    def improved(self) -> bool:
        """Whether the most recent update set a new best."""
        return self.epochs_seen > 0 and self.best_epoch == self.epochs_seen


@dataclass
class TrainReport:
    """
    Outcome of :func:`train`.

    Attributes:
        train_losses (List[float]): Per-epoch mean minibatch training loss.
        val_losses (List[float]): Per-epoch validation MSE.
        val_rss (List[float]): Per-epoch validation root-sum-squared error.
        epoch_seconds (List[float]): Per-epoch wall-clock time.
        epochs_run (int): Number of completed epochs.
        stop_reason (StopReason): Why training ended.
        best_val_loss (float): Lowest monitored validation loss (MSE, or RSS
            when training with that loss); ``inf`` when no epoch ran.
        best_epoch (int): 1-based epoch of ``best_val_loss``, 0 when none.
        best_params (Optional[Vector]): Parameters at ``best_epoch``. The model
            itself keeps the last-epoch parameters.
        final_val_loss (float): Monitored validation loss of the last epoch.
        total_seconds (float): Sum of ``epoch_seconds``.
    """

    train_losses: List[float] = field(default_factory=list)
    val_losses: List[float] = field(default_factory=list)
    val_rss: List[float] = field(default_factory=list)
    epoch_seconds: List[float] = field(default_factory=list)
    epochs_run: int = 0
    stop_reason: StopReason = StopReason.MAX_EPOCHS
    best_val_loss: float = float("inf")
    best_epoch: int = 0
    best_params: Optional[Vector] = None
    final_val_loss: float = float("nan")
    total_seconds: float = 0.0

    @property
    def sec_per_epoch(self) -> float:
        """Mean epoch time, skipping the warm-up epoch when there are two or more."""
        if self.epochs_run >= 2:
            return measure_epoch_time(self)
        if self.epochs_run == 1:
            return self.epoch_seconds[0]
        return float("nan")


def measure_epoch_time(report: TrainReport) -> float:
    """
    Mean wall-clock seconds per epoch, excluding the first (warm-up) epoch.

    Raises:
        ValueError: If fewer than two epochs were run.
    """
    if report.epochs_run < 2 or len(report.epoch_seconds) < 2:
        raise ValueError(
            f"epoch timing needs at least two epochs, got {report.epochs_run}"
        )
    return float(np.mean(report.epoch_seconds[1:]))


def train(
    model: BaseNetwork,
    dataset: Dataset,
    cfg: TrainConfig,
    history: Optional[BaseHistory] = None,
) -> TrainReport:
    """
    Trains ``model`` in place on the training split of ``dataset``.

    Each epoch shuffles the training rows with a generator seeded from
    ``cfg.seed``, runs sequential mini-batches with one Adam step each
    (followed by the model's parameter projection), and then evaluates the
    validation split. Epoch time covers both.

    Args:
        model: Any network whose ``dim`` matches the dataset.
        dataset: Inputs, targets and the train/validation split.
        cfg: Hyper-parameters.
        history: Optional store receiving one record per epoch.

    Raises:
        ShapeError: If the model and dataset dimensions differ.
        ValueError: If either split is empty.
    """
    if model.dim != dataset.dim:
        raise ShapeError(f"model expects d={model.dim}, dataset has d={dataset.dim}")
    if len(dataset.train_idx) == 0 or len(dataset.val_idx) == 0:
        raise ValueError("training needs non-empty train and validation splits")

    history = history if history is not None else VolatileHistory()
    rng = make_rng(cfg.seed)
    state = AdamState.zeros(model.n_params)
    stopper = EarlyStopping(cfg.patience)
    report = TrainReport()
    x_val, y_val = dataset.val_inputs, dataset.val_targets

    for epoch in range(1, cfg.max_epochs + 1):
        start = time.perf_counter()
        order = rng.permutation(dataset.train_idx)
        losses, sizes = [], []
        for offset in range(0, order.shape[0], cfg.batch_size):
            rows = order[offset : offset + cfg.batch_size]
            targets = dataset.targets[rows]
            pred, cache = model.forward(dataset.inputs[rows])
            losses.append(compute_loss(pred, targets, cfg.loss_kind))
            sizes.append(rows.shape[0])
            grads = model.backward(cache, loss_gradient(pred, targets, cfg.loss_kind))
            model.load_params(
                adam_step(model.param_vector(), model.grad_vector(grads), state, cfg)
            )
            model.project_params()

        val_pred = model.predict(x_val)
        val_mse = compute_loss(val_pred, y_val, LossKind.MSE)
        val_rss = compute_loss(val_pred, y_val, LossKind.RSS)
        seconds = time.perf_counter() - start

        record = EpochRecord(
            epoch=epoch,
            train_mse=float(np.average(losses, weights=sizes)),
            val_mse=val_mse,
            val_rss=val_rss,
            seconds=seconds,
        )
        history.add_record(record)
        report.train_losses.append(record["train_mse"])
        report.val_losses.append(val_mse)
        report.val_rss.append(val_rss)
        report.epoch_seconds.append(seconds)
        report.epochs_run = epoch

        monitored = val_mse if cfg.loss_kind is LossKind.MSE else val_rss
        report.final_val_loss = monitored
        stop = stopper.update(monitored)
        if stopper.improved:
            report.best_params = model.param_vector()
        logger.debug(
            "epoch %d: train=%.6e val_mse=%.6e val_rss=%.6e (%.3fs)",
            epoch,
            record["train_mse"],
            val_mse,
            val_rss,
            seconds,
        )
        if stop:
            report.stop_reason = StopReason.PATIENCE
            break

    report.best_val_loss = stopper.best
    report.best_epoch = stopper.best_epoch
    report.total_seconds = float(sum(report.epoch_seconds))
    logger.info(
        "%s training stopped after %d epochs (%s); best val loss %.6e at epoch %d",
        model.kind,
        report.epochs_run,
        report.stop_reason.value,
        report.best_val_loss,
        report.best_epoch,
    )
    return report
