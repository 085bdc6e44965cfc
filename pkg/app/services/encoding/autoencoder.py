"""Per-table MLP autoencoder turning a flattened block matrix into an l_be vector."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger

from app.exceptions import ConfigurationError, DimensionError, IntegrityError
from app.nn import (
    DenseLayer,
    MinibatchTrainer,
    TrainingHistory,
    load_checkpoint,
    mean_squared_error,
    save_checkpoint,
)

HIDDEN_FACTOR = 4


@dataclass
class AutoencoderModel:
    """encoder [in -> 4*l_be tanh -> l_be tanh], decoder [l_be -> 4*l_be tanh -> in linear]."""

    table_id: int
    encoder: list[DenseLayer]
    decoder: list[DenseLayer]

    def __post_init__(self) -> None:
        if len(self.encoder) != 2 or len(self.decoder) != 2:
            raise ConfigurationError("Autoencoder needs two encoder and two decoder layers")
        if self.decoder[-1].output_dim != self.encoder[0].input_dim:
            raise DimensionError("Decoder output must match encoder input")
        if self.decoder[0].input_dim != self.encoder[-1].output_dim:
            raise DimensionError("Decoder input must match the latent dimension")

    @classmethod
    def initialize(cls, table_id: int, input_dim: int, l_be: int, seed: int) -> "AutoencoderModel":
        if input_dim < 1 or l_be < 1:
            raise ConfigurationError(f"Invalid autoencoder shape in={input_dim} l_be={l_be}")
        rng = np.random.default_rng([seed, table_id])
        hidden = HIDDEN_FACTOR * l_be
        return cls(
            table_id=table_id,
            encoder=[
                DenseLayer.initialize(input_dim, hidden, "tanh", rng),
                DenseLayer.initialize(hidden, l_be, "tanh", rng),
            ],
            decoder=[
                DenseLayer.initialize(l_be, hidden, "tanh", rng),
                DenseLayer.initialize(hidden, input_dim, "linear", rng),
            ],
        )

    @property
    def input_dim(self) -> int:
        return self.encoder[0].input_dim

    @property
    def latent_dim(self) -> int:
        return self.encoder[-1].output_dim

    def _layers(self) -> list[tuple[str, DenseLayer]]:
        named = [(f"encoder.{i}", layer) for i, layer in enumerate(self.encoder)]
        named += [(f"decoder.{i}", layer) for i, layer in enumerate(self.decoder)]
        return named

    def encode(self, x: np.ndarray) -> np.ndarray:
        for layer in self.encoder:
            x, _ = layer.forward(x)
        return x

    def reconstruct(self, x: np.ndarray) -> np.ndarray:
        z = self.encode(x)
        for layer in self.decoder:
            z, _ = layer.forward(z)
        return z

    # Trainable protocol

    def get_parameters(self) -> dict[str, np.ndarray]:
        return {
            f"{prefix}.{name}": value.copy()
            for prefix, layer in self._layers()
            for name, value in layer.parameters().items()
        }

    def set_parameters(self, params: dict[str, np.ndarray]) -> None:
        for prefix, layer in self._layers():
            layer.weights = np.array(params[f"{prefix}.weights"], dtype=np.float64)
            layer.bias = np.array(params[f"{prefix}.bias"], dtype=np.float64)

    def loss_and_grads(self, inputs: np.ndarray, targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        h = inputs
        caches = []
        for _, layer in self._layers():
            h, cache = layer.forward(h)
            caches.append(cache)
        loss, dh = mean_squared_error(targets, h)
        grads: dict[str, np.ndarray] = {}
        for (prefix, layer), cache in zip(reversed(self._layers()), reversed(caches)):
            dh, layer_grads = layer.backward(cache, dh)
            for name, value in layer_grads.items():
                grads[f"{prefix}.{name}"] = value
        return loss, grads

    def evaluate_loss(self, inputs: np.ndarray, targets: np.ndarray) -> float:
        loss, _ = mean_squared_error(targets, self.reconstruct(inputs))
        return loss

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(
            path,
            self.get_parameters(),
            {"kind": "autoencoder", "table_id": self.table_id,
             "input_dim": self.input_dim, "l_be": self.latent_dim},
        )

    @classmethod
    def load(cls, path: str | Path) -> "AutoencoderModel":
        params, meta = load_checkpoint(path)
        if meta.get("kind") != "autoencoder":
            raise IntegrityError(f"{path} is not an autoencoder checkpoint")
        model = cls.initialize(meta["table_id"], meta["input_dim"], meta["l_be"], seed=0)
        model.set_parameters(params)
        return model


def train_autoencoder(
    table_id: int,
    blocks: np.ndarray,
    l_be: int,
    seed: int,
    learning_rate: float = 1e-3,
    max_epochs: int = 75,
    batch_size: int = 32,
    validation_fraction: float = 0.1,
    patience: int = 5,
) -> tuple[AutoencoderModel, TrainingHistory]:
    """
    Train one table's autoencoder on its preprocessed blocks.

    Args:
        table_id: Owning table
        blocks: (n_blocks x rows x d) block matrices, or already-flattened (n_blocks x features)
        l_be: Latent (block encoding) length
        seed: Initialization and shuffling seed

    Returns:
        (trained model, training history)
    """
    blocks = np.asarray(blocks, dtype=np.float64)
    if blocks.shape[0] < 1:
        raise ConfigurationError(f"Table {table_id} has no blocks to train on")
    flat = blocks.reshape(blocks.shape[0], -1)
    model = AutoencoderModel.initialize(table_id, flat.shape[1], l_be, seed)
    trainer = MinibatchTrainer(
        learning_rate=learning_rate,
        max_epochs=max_epochs,
        batch_size=batch_size,
        validation_fraction=validation_fraction,
        patience=patience,
        seed=seed,
        label=f"autoencoder[table {table_id}]",
    )
    history = trainer.fit(model, flat, flat)
    logger.debug(f"Autoencoder table={table_id} reconstruction MSE {history.final_loss:.6f}")
    return model, history
