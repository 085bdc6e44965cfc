"""Mini-batch training loop shared by the autoencoder and the prediction model."""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np
from loguru import logger

from app.exceptions import NumericError
from .optim import AdamState, Params, adam_step


class Trainable(Protocol):
    """What the trainer needs from a model."""

    def get_parameters(self) -> Params: ...

    def set_parameters(self, params: Params) -> None: ...

    def loss_and_grads(self, inputs: np.ndarray, targets: np.ndarray) -> tuple[float, Params]: ...

    def evaluate_loss(self, inputs: np.ndarray, targets: np.ndarray) -> float: ...


@dataclass
class EpochRecord:
    """Losses after one epoch."""

    epoch: int
    train_loss: float
    val_loss: float | None


@dataclass
class TrainingHistory:
    """Per-epoch losses of one training run."""

    initial_loss: float = 0.0
    final_loss: float = 0.0
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False
    reverted: bool = False

    def write_csv(self, path: str | Path) -> None:
        """Write epoch, train_loss, val_loss rows (empty cell for a missing val loss)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["epoch", "train_loss", "val_loss"])
            for record in self.epochs:
                writer.writerow([
                    record.epoch,
                    repr(record.train_loss),
                    "" if record.val_loss is None else repr(record.val_loss),
                ])


def _copy_params(params: Params) -> Params:
    return {name: value.copy() for name, value in params.items()}


class MinibatchTrainer:
    """Seeded mini-batch Adam training with optional early stopping.

    The validation split is the suffix of the data. With early stopping on,
    the best-monitored weights are restored at the end, and if the training
    loss still ended above where it started the initial weights come back.
    """

    def __init__(
        self,
        learning_rate: float = 1e-3,
        max_epochs: int = 75,
        batch_size: int = 32,
        validation_fraction: float = 0.1,
        patience: int = 5,
        early_stopping: bool = True,
        seed: int = 0,
        trainable: Iterable[str] | None = None,
        label: str = "model",
    ):
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.early_stopping = early_stopping
        self.seed = seed
        self.trainable = None if trainable is None else set(trainable)
        self.label = label

    def _split(self, n: int) -> int:
        """Number of training examples; the rest is validation."""
        if not self.early_stopping or self.validation_fraction <= 0:
            return n
        n_val = int(n * self.validation_fraction)
        if n_val == 0 or n_val >= n:
            return n
        return n - n_val

    def fit(self, model: Trainable, inputs: np.ndarray, targets: np.ndarray) -> TrainingHistory:
        """
        Train the model in place.

        Args:
            model: Model exposing the Trainable methods
            inputs: Examples along axis 0
            targets: Targets along axis 0

        Returns:
            TrainingHistory of the run
        """
        history = TrainingHistory()
        n = len(inputs)
        if n == 0 or self.max_epochs == 0:
            return history

        n_train = self._split(n)
        x_train, y_train = inputs[:n_train], targets[:n_train]
        x_val, y_val = (inputs[n_train:], targets[n_train:]) if n_train < n else (None, None)

        rng = np.random.default_rng(self.seed)
        initial_params = _copy_params(model.get_parameters())
        names = [name for name in initial_params if self.trainable is None or name in self.trainable]
        state = AdamState.for_params(
            {name: initial_params[name] for name in names}, learning_rate=self.learning_rate
        )

        history.initial_loss = model.evaluate_loss(x_train, y_train)
        best_monitor = (
            model.evaluate_loss(x_val, y_val) if x_val is not None else history.initial_loss
        )
        best_params = initial_params
        wait = 0

        for epoch in range(1, self.max_epochs + 1):
            order = rng.permutation(n_train)
            for start in range(0, n_train, self.batch_size):
                idx = order[start:start + self.batch_size]
                loss, grads = model.loss_and_grads(x_train[idx], y_train[idx])
                if not np.isfinite(loss):
                    raise NumericError(f"{self.label}: non-finite loss in epoch {epoch}")
                current = model.get_parameters()
                updated, state = adam_step(
                    state,
                    {name: current[name] for name in names},
                    {name: grads[name] for name in names},
                )
                current.update(updated)
                model.set_parameters(current)

            train_loss = model.evaluate_loss(x_train, y_train)
            val_loss = model.evaluate_loss(x_val, y_val) if x_val is not None else None
            history.epochs.append(EpochRecord(epoch, train_loss, val_loss))
            logger.debug(
                f"{self.label} epoch={epoch} train_loss={train_loss:.6f}"
                + (f" val_loss={val_loss:.6f}" if val_loss is not None else "")
            )

            if not self.early_stopping:
                continue
            monitor = val_loss if val_loss is not None else train_loss
            if monitor < best_monitor:
                best_monitor = monitor
                best_params = _copy_params(model.get_parameters())
                history.best_epoch = epoch
                wait = 0
            else:
                wait += 1
                if wait >= self.patience:
                    history.stopped_early = True
                    break

        if self.early_stopping:
            model.set_parameters(_copy_params(best_params))
            if model.evaluate_loss(x_train, y_train) > history.initial_loss:
                model.set_parameters(_copy_params(initial_params))
                history.reverted = True
        else:
            history.best_epoch = len(history.epochs)

        history.final_loss = model.evaluate_loss(x_train, y_train)
        logger.info(
            f"{self.label} trained: epochs={len(history.epochs)} "
            f"loss {history.initial_loss:.6f} -> {history.final_loss:.6f}"
            + (" (stopped early)" if history.stopped_early else "")
            + (" (reverted to initial weights)" if history.reverted else "")
        )
        return history
