"""The learned prefetching system as one stateful pipeline.

Training: block encodings, initial partitions, an affinity graph warmed up
on the training prefix (repartitioning every l_p queries), then the
prediction model. Replay: every observed query feeds the graph and the
lookback window; every l_p queries the partitions are rebalanced, the
weights decayed, the partition encodings recomputed and the model heads
fine-tuned on the queries since the previous rebalance. Wall-clock time
per stage accumulates in `timings`.
"""

from collections import deque
from typing import Callable

import numpy as np
from loguru import logger

from app.nn import TrainingHistory
from app.schemas import ExperimentConfig
from app.services.cache import StageTimings
from app.services.datastore import BlockId, Database, QueryRecord, QueryTrace
from app.services.encoding import EncodingStore, encode_database
from app.services.learner import (
    PredictionModel,
    build_examples,
    build_training_set,
    encode_query,
    fine_tune,
    predict_next,
    select_topk,
    train_model,
)
from app.services.partitioning import (
    AffinityGraph,
    ClumpMigrationRepartitioner,
    MigrationRecord,
    PartitionSet,
    decay_weights,
    encode_partitions,
    initial_partitions,
    observe_query,
)


class SemanticPipeline:
    """Partitions, affinity graph, encodings and model of the learned system."""

    def __init__(
        self,
        db: Database,
        config: ExperimentConfig,
        encodings: EncodingStore,
        partitions: PartitionSet,
        graph: AffinityGraph,
        model: PredictionModel,
        history: TrainingHistory | None = None,
        context: list[frozenset[BlockId]] | None = None,
        timings: StageTimings | None = None,
    ):
        self.db = db
        self.config = config
        self.encodings = encodings
        self.partitions = partitions
        self.graph = graph
        self.model = model
        self.history = history or TrainingHistory()
        self.timings = timings or StageTimings()
        self.repartitioner = ClumpMigrationRepartitioner(config.theta_growth)
        self.partition_matrices = encode_partitions(partitions, encodings, db.n_tables)

        lookback = config.lookback
        self._window: deque[frozenset[BlockId]] = deque(context or [], maxlen=lookback)
        self._batch_prefix: list[frozenset[BlockId]] = list(self._window)
        self._batch: list[frozenset[BlockId]] = []

        self.repartition_count = 0
        self.fine_tune_count = 0
        self.migrations: list[MigrationRecord] = []
        self.fine_tune_histories: list[TrainingHistory] = []

    @classmethod
    def build(
        cls,
        db: Database,
        train_trace: QueryTrace,
        config: ExperimentConfig,
        encodings: EncodingStore | None = None,
        progress_callback: Callable[[str, int, int], None] | None = None,
    ) -> "SemanticPipeline":
        """
        Train the learned system on a training prefix.

        Args:
            db: Generated database
            train_trace: Training queries
            config: Experiment configuration
            encodings: Precomputed block encodings (computed when omitted)
            progress_callback: Optional (stage, current, total) callback

        Returns:
            Trained SemanticPipeline, ready to replay test queries
        """
        timings = StageTimings()
        if encodings is None:
            with timings.measure("encode"):
                encodings = encode_database(db, config, progress_callback).store

        with timings.measure("partition"):
            partitions = initial_partitions(
                db,
                config.max_par_size,
                fill_frac=config.fill_frac,
                spare_frac=config.spare_frac,
                theta=config.theta_init,
                k_w=config.k_w,
            )
        logger.info(f"Initial partitions: {partitions.n_partitions} ({len(partitions.empty_partitions())} spare)")

        graph = AffinityGraph()
        repartitioner = ClumpMigrationRepartitioner(config.theta_growth)
        migrations: list[MigrationRecord] = []
        total = len(train_trace)
        with timings.measure("partition"):
            for i, record in enumerate(train_trace, start=1):
                observe_query(graph, record.accessed_blocks, config.l_p)
                if i % config.l_p == 0:
                    migrations.extend(repartitioner.repartition(partitions, graph).migrations)
                    decay_weights(graph, config.decay_factor)
                    if progress_callback:
                        progress_callback("partition", i, total)
            matrices = encode_partitions(partitions, encodings, db.n_tables)

        with timings.measure("train"):
            examples = build_training_set(train_trace, partitions, matrices, config.lookback)
            model, history = train_model(
                examples,
                partitions.n_partitions,
                seed=config.model_seed,
                compressor_units=config.compressor_units,
                lstm_units=config.lstm_units,
                learning_rate=config.learning_rate,
                max_epochs=config.max_epochs,
                batch_size=config.batch_size,
                validation_fraction=config.validation_fraction,
                patience=config.patience,
            )
        if progress_callback:
            progress_callback("train", 1, 1)

        context = [r.accessed_blocks for r in list(train_trace)[-config.lookback:]]
        pipeline = cls(db, config, encodings, partitions, graph, model, history, context, timings)
        pipeline.migrations.extend(migrations)
        return pipeline

    @property
    def queries_since_repartition(self) -> int:
        return len(self._batch)

    def _window_matrix(self, queries: list[frozenset[BlockId]]) -> np.ndarray:
        return np.stack([
            encode_query(
                self.partitions.partitions_of(blocks),
                self.partition_matrices,
                self.db.n_tables,
                self.encodings.l_be,
            ).matrix.reshape(-1)
            for blocks in queries
        ])

    def observe(self, record: QueryRecord) -> None:
        blocks = record.accessed_blocks
        observe_query(self.graph, blocks, self.config.l_p)
        self._window.append(blocks)
        self._batch.append(blocks)
        if len(self._batch) >= self.config.l_p:
            self.repartition_and_fine_tune(record.query_id)

    def predict(self, k: int) -> list[int]:
        """Top-k partition ids for the next query; empty until the window is full."""
        if len(self._window) < self.config.lookback:
            return []
        with self.timings.measure("predict"):
            yhat = predict_next(self.model, self._window_matrix(list(self._window)))
            return select_topk(yhat, k)

    def repartition_and_fine_tune(self, query_id: int | None = None) -> None:
        with self.timings.measure("repartition"):
            result = self.repartitioner.repartition(self.partitions, self.graph)
            decay_weights(self.graph, self.config.decay_factor)
            self.migrations.extend(result.migrations)
            self.repartition_count += 1
            self.partition_matrices = encode_partitions(self.partitions, self.encodings, self.db.n_tables)

        recent = self._batch_prefix + self._batch
        with self.timings.measure("fine_tune"):
            examples = build_examples(
                [self.partitions.partitions_of(blocks) for blocks in recent],
                self.partition_matrices,
                self.config.lookback,
            )
            if len(examples) and self.config.fine_tune_epochs > 0:
                history = fine_tune(
                    self.model,
                    examples,
                    learning_rate=self.config.fine_tune_learning_rate,
                    epochs=self.config.fine_tune_epochs,
                    batch_size=self.config.batch_size,
                    seed=self.config.model_seed,
                )
                self.fine_tune_histories.append(history)
                self.fine_tune_count += 1

        logger.info(
            f"Repartition #{self.repartition_count} after query {query_id}: "
            f"{result.moved_blocks} blocks moved, theta={self.partitions.theta:.3f}, "
            f"fine-tuned on {len(examples)} examples"
        )
        self._batch_prefix = recent[-self.config.lookback:]
        self._batch = []
