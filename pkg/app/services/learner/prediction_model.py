"""Encoder-decoder LSTM predicting which partitions the next query will touch."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.exceptions import ConfigurationError, DimensionError, IntegrityError
from app.nn import DenseLayer, LstmCell, binary_cross_entropy, load_checkpoint, save_checkpoint

HEAD_PARAMETERS = ("head.0.weights", "head.0.bias", "head.1.weights", "head.1.bias")


@dataclass
class PredictionModel:
    """compressor (time-distributed dense, tanh) -> encoder LSTM -> decoder LSTM -> two dense heads.

    The decoder starts from the encoder's final state and replays the
    compressed window; its last hidden state feeds the heads, the second of
    which ends in a sigmoid over the |P| partitions.
    """

    compressor: DenseLayer
    encoder: LstmCell
    decoder: LstmCell
    head: list[DenseLayer]
    lookback: int

    def __post_init__(self) -> None:
        if self.lookback < 1:
            raise ConfigurationError(f"lookback must be at least 1, got {self.lookback}")
        if len(self.head) != 2:
            raise ConfigurationError("Prediction model needs exactly two head layers")
        if self.encoder.input_dim != self.compressor.output_dim or self.decoder.input_dim != self.compressor.output_dim:
            raise DimensionError("LSTM inputs must match the compressor width")
        if self.decoder.hidden_size != self.encoder.hidden_size:
            raise DimensionError("Decoder and encoder hidden sizes differ")
        if self.head[0].input_dim != self.decoder.hidden_size:
            raise DimensionError("First head layer must consume the decoder state")

    @classmethod
    def initialize(
        cls,
        input_dim: int,
        n_partitions: int,
        lookback: int,
        seed: int,
        compressor_units: int = 128,
        lstm_units: int = 64,
    ) -> "PredictionModel":
        if min(input_dim, n_partitions, compressor_units, lstm_units) < 1:
            raise ConfigurationError(
                f"Invalid model shape in={input_dim} |P|={n_partitions} "
                f"compressor={compressor_units} lstm={lstm_units}"
            )
        rng = np.random.default_rng(seed)
        return cls(
            compressor=DenseLayer.initialize(input_dim, compressor_units, "tanh", rng),
            encoder=LstmCell.initialize(compressor_units, lstm_units, rng),
            decoder=LstmCell.initialize(compressor_units, lstm_units, rng),
            head=[
                DenseLayer.initialize(lstm_units, n_partitions, "tanh", rng),
                DenseLayer.initialize(n_partitions, n_partitions, "sigmoid", rng),
            ],
            lookback=lookback,
        )

    @property
    def input_dim(self) -> int:
        return self.compressor.input_dim

    @property
    def n_partitions(self) -> int:
        return self.head[-1].output_dim

    def _modules(self) -> list[tuple[str, DenseLayer | LstmCell]]:
        return [
            ("compressor", self.compressor),
            ("encoder", self.encoder),
            ("decoder", self.decoder),
            ("head.0", self.head[0]),
            ("head.1", self.head[1]),
        ]

    def _check_inputs(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim == 4:
            inputs = inputs.reshape(inputs.shape[0], inputs.shape[1], -1)
        if inputs.ndim != 3 or inputs.shape[1] != self.lookback or inputs.shape[2] != self.input_dim:
            raise DimensionError(
                f"Expected windows shaped (batch, {self.lookback}, {self.input_dim}), got {inputs.shape}"
            )
        return inputs

    def _forward(self, inputs: np.ndarray):
        batch, steps, _ = inputs.shape
        z, comp_cache = self.compressor.forward(inputs.reshape(batch * steps, -1))
        z = z.reshape(batch, steps, -1)
        _, h_enc, c_enc, enc_caches = self.encoder.forward_sequence(z)
        _, h_dec, _, dec_caches = self.decoder.forward_sequence(z, h_enc, c_enc)
        a, head0_cache = self.head[0].forward(h_dec)
        yhat, head1_cache = self.head[1].forward(a)
        return yhat, (comp_cache, enc_caches, dec_caches, head0_cache, head1_cache)

    def predict_batch(self, inputs: np.ndarray) -> np.ndarray:
        yhat, _ = self._forward(self._check_inputs(inputs))
        return yhat

    def predict(self, window: np.ndarray) -> np.ndarray:
        """yhat for one window shaped (l x n_tb*l_be) or (l x n_tb x l_be)."""
        window = np.asarray(window, dtype=np.float64)
        return self.predict_batch(window[None, ...])[0]

    # Trainable protocol

    def get_parameters(self) -> dict[str, np.ndarray]:
        return {
            f"{prefix}.{name}": value.copy()
            for prefix, module in self._modules()
            for name, value in module.parameters().items()
        }

    def set_parameters(self, params: dict[str, np.ndarray]) -> None:
        for prefix, module in self._modules():
            for name in module.parameters():
                setattr(module, name, np.array(params[f"{prefix}.{name}"], dtype=np.float64))

    def loss_and_grads(self, inputs: np.ndarray, targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        """Batch-mean of the per-example summed cross entropy, with analytic gradients."""
        inputs = self._check_inputs(inputs)
        batch, steps, _ = inputs.shape
        yhat, (comp_cache, enc_caches, dec_caches, head0_cache, head1_cache) = self._forward(inputs)
        loss, dyhat = binary_cross_entropy(targets, yhat)
        loss /= batch
        dyhat = dyhat / batch

        grads: dict[str, np.ndarray] = {}
        da, g = self.head[1].backward(head1_cache, dyhat)
        grads.update({f"head.1.{k}": v for k, v in g.items()})
        dh_dec, g = self.head[0].backward(head0_cache, da)
        grads.update({f"head.0.{k}": v for k, v in g.items()})
        dz_dec, dh_enc, dc_enc, g = self.decoder.backward_sequence(dec_caches, None, dh_dec)
        grads.update({f"decoder.{k}": v for k, v in g.items()})
        dz_enc, _, _, g = self.encoder.backward_sequence(enc_caches, None, dh_enc, dc_enc)
        grads.update({f"encoder.{k}": v for k, v in g.items()})
        dz = (dz_dec + dz_enc).reshape(batch * steps, -1)
        _, g = self.compressor.backward(comp_cache, dz)
        grads.update({f"compressor.{k}": v for k, v in g.items()})
        return loss, grads

    def evaluate_loss(self, inputs: np.ndarray, targets: np.ndarray) -> float:
        inputs = self._check_inputs(inputs)
        loss, _ = binary_cross_entropy(targets, self.predict_batch(inputs))
        return loss / inputs.shape[0]

    def save(self, path: str | Path) -> Path:
        return save_checkpoint(
            path,
            self.get_parameters(),
            {
                "kind": "prediction_model",
                "input_dim": self.input_dim,
                "n_partitions": self.n_partitions,
                "lookback": self.lookback,
                "compressor_units": self.compressor.output_dim,
                "lstm_units": self.encoder.hidden_size,
            },
        )

    @classmethod
    def load(cls, path: str | Path) -> "PredictionModel":
        params, meta = load_checkpoint(path)
        if meta.get("kind") != "prediction_model":
            raise IntegrityError(f"{path} is not a prediction model checkpoint")
        model = cls.initialize(
            meta["input_dim"],
            meta["n_partitions"],
            meta["lookback"],
            seed=0,
            compressor_units=meta["compressor_units"],
            lstm_units=meta["lstm_units"],
        )
        model.set_parameters(params)
        return model
