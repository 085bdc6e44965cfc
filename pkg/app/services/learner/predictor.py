"""Training, prediction, top-k selection and head-only fine-tuning."""

import numpy as np
from loguru import logger

from app.exceptions import ConfigurationError, DimensionError
from app.nn import MinibatchTrainer, TrainingHistory
from .prediction_model import HEAD_PARAMETERS, PredictionModel
from .query_encoder import TrainingSet


def train_model(
    examples: TrainingSet,
    n_partitions: int,
    seed: int,
    compressor_units: int = 128,
    lstm_units: int = 64,
    learning_rate: float = 1e-3,
    max_epochs: int = 75,
    batch_size: int = 32,
    validation_fraction: float = 0.1,
    patience: int = 5,
) -> tuple[PredictionModel, TrainingHistory]:
    """
    Train a fresh prediction model with Adam and early stopping.

    Args:
        examples: Windows and next-query bit-vectors
        n_partitions: |P| including spare partitions
        seed: Initialization and shuffling seed

    Returns:
        (trained model, training history)
    """
    if len(examples) < 1:
        raise ConfigurationError("Cannot train the prediction model without examples")
    if examples.n_partitions != n_partitions:
        raise DimensionError(f"Targets have {examples.n_partitions} bits, expected |P|={n_partitions}")
    model = PredictionModel.initialize(
        input_dim=examples.inputs.shape[2],
        n_partitions=n_partitions,
        lookback=examples.lookback,
        seed=seed,
        compressor_units=compressor_units,
        lstm_units=lstm_units,
    )
    trainer = MinibatchTrainer(
        learning_rate=learning_rate,
        max_epochs=max_epochs,
        batch_size=batch_size,
        validation_fraction=validation_fraction,
        patience=patience,
        seed=seed,
        label="prediction model",
    )
    history = trainer.fit(model, examples.inputs, examples.targets)
    return model, history


def predict_next(model: PredictionModel, window: np.ndarray) -> np.ndarray:
    """Probability per partition that the next query touches it."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim < 2 or window.shape[0] != model.lookback:
        raise DimensionError(f"Window of length {window.shape[0] if window.ndim else 0} != lookback {model.lookback}")
    return model.predict(window)


def select_topk(yhat: np.ndarray, k: int) -> list[int]:
    """Ids of the k largest probabilities, descending; ties go to the lower id."""
    if k < 0:
        raise ConfigurationError(f"k must be non-negative, got {k}")
    yhat = np.asarray(yhat, dtype=np.float64)
    order = np.lexsort((np.arange(yhat.size), -yhat))
    return [int(i) for i in order[:k]]


def fine_tune(
    model: PredictionModel,
    examples: TrainingSet,
    learning_rate: float = 1e-5,
    epochs: int = 15,
    batch_size: int = 32,
    seed: int = 0,
) -> TrainingHistory:
    """
    Update only the two head layers on recent examples.

    Compressor and both LSTMs stay frozen; a fresh optimizer state runs for
    exactly `epochs` epochs without early stopping.

    Args:
        model: Trained model, updated in place
        examples: Recent examples rebuilt with the new partition encodings
        learning_rate: Fine-tuning learning rate
        epochs: Number of epochs

    Returns:
        TrainingHistory (empty when there are no examples)
    """
    if len(examples) == 0:
        logger.debug("Fine-tune skipped: no recent examples")
        return TrainingHistory()
    trainer = MinibatchTrainer(
        learning_rate=learning_rate,
        max_epochs=epochs,
        batch_size=batch_size,
        early_stopping=False,
        seed=seed,
        trainable=HEAD_PARAMETERS,
        label="fine-tune",
    )
    return trainer.fit(model, examples.inputs, examples.targets)
