"""Minimal neural substrate: dense and LSTM layers, losses, Adam, gradient checks."""

from .activations import get_activation, sigmoid
from .gradcheck import gradient_check
from .layers import DenseLayer, LstmCell, dense_forward, lstm_step
from .losses import binary_cross_entropy, mean_squared_error
from .optim import AdamState, adam_step
from .serialization import load_checkpoint, save_checkpoint
from .training import EpochRecord, MinibatchTrainer, TrainingHistory

__all__ = [
    "AdamState",
    "DenseLayer",
    "EpochRecord",
    "LstmCell",
    "MinibatchTrainer",
    "TrainingHistory",
    "adam_step",
    "binary_cross_entropy",
    "dense_forward",
    "get_activation",
    "gradient_check",
    "load_checkpoint",
    "lstm_step",
    "mean_squared_error",
    "save_checkpoint",
    "sigmoid",
]
