"""
Training history module for sgnn-lab.

The trainer records one :class:`EpochRecord` per epoch into a history
backend. Backends implement the small :class:`BaseHistory` interface, so a
caller can collect records in memory (the default, :class:`VolatileHistory`)
or plug in something that streams them elsewhere while training runs.

The record layout is also the column layout of the training log CSV written
by :func:`write_training_log`.
"""

import abc
import logging
from pathlib import Path
from typing import List, Sequence, TypedDict, Union

import pandas as pd

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["epoch", "train_mse", "val_mse", "val_rss", "seconds"]


class EpochRecord(TypedDict):
    """
    Losses and timing of one finished epoch.

    Attributes:

        epoch (int): 1-based epoch number.

        train_mse (float): Mean of the minibatch training losses seen during
            the epoch (MSE, or root-sum-squared when training with that loss).

        val_mse (float): Mean squared error on the validation set, measured
            on the model as of the end of the epoch.

        val_rss (float): Root-sum-squared error on the validation set.

        seconds (float): Wall-clock time of the epoch, validation included.
    """

    epoch: int
    train_mse: float
    val_mse: float
    val_rss: float
    seconds: float


class BaseHistory(abc.ABC):
    """
    Abstract Base Class for epoch-record stores.

    The trainer only appends and never reads back, so implementations are free
    to buffer, forward or persist records as they see fit.
    """

    @abc.abstractmethod
    def add_record(self, record: EpochRecord) -> None:
        """
        Appends the record of one finished epoch.

        Args:
            record (EpochRecord): The record to store.
        """
        raise NotImplementedError

    @abc.abstractmethod
    def get_records(self) -> List[EpochRecord]:
        """
        Returns every stored record in insertion order.
        """
        raise NotImplementedError

    @abc.abstractmethod
    def clear(self) -> None:
        """Removes all records."""
        raise NotImplementedError


class VolatileHistory(BaseHistory):
    """
    In-memory history backed by a list; records vanish with the object.
    """

    def __init__(self) -> None:
        self._records: List[EpochRecord] = []

    def add_record(self, record: EpochRecord) -> None:
        self._records.append(record)

    def get_records(self) -> List[EpochRecord]:
        """
        Returns:
            List[EpochRecord]: A copy of the internal list, so callers cannot
            modify the stored history.
        """
        return self._records.copy()

    def clear(self) -> None:
        self._records.clear()

    def __len__(self) -> int:
        return len(self._records)

    def __repr__(self) -> str:
        return f"<VolatileHistory epochs={len(self._records)}>"


def write_training_log(
    records: Sequence[EpochRecord], path: Union[str, Path]
) -> Path:
    """
    Writes epoch records as ``epoch,train_mse,val_mse,val_rss,seconds`` CSV.

    Floats keep 17 significant digits. An empty record list produces a file
    with only the header.
    """
    path = Path(path)
    frame = pd.DataFrame(list(records), columns=LOG_COLUMNS)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.debug("wrote %d epoch records to %s", len(frame), path)
    return path
