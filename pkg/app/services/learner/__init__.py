"""Query encodings and the partition-access prediction model."""

from .prediction_model import HEAD_PARAMETERS, PredictionModel
from .predictor import fine_tune, predict_next, select_topk, train_model
from .query_encoder import (
    QueryEncoding,
    TrainingSet,
    build_examples,
    build_training_set,
    encode_query,
)

__all__ = [
    "HEAD_PARAMETERS",
    "PredictionModel",
    "QueryEncoding",
    "TrainingSet",
    "build_examples",
    "build_training_set",
    "encode_query",
    "fine_tune",
    "predict_next",
    "select_topk",
    "train_model",
]
