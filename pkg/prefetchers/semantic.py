"""The learned system: predict the next query's partitions and prefetch them whole."""

from app.exceptions import ConfigurationError
from app.services.cache import CacheState, IoCostModel, StageTimings, prefetch_partitions
from app.services.datastore import BlockId, QueryRecord, QueryTrace
from app.services.harness.semantic_pipeline import SemanticPipeline
from prefetchers.base import BasePrefetcher, PrefetchContext


class SemanticPrefetcher(BasePrefetcher):
    """Top-k partition prefetching driven by the encoder-decoder model.

    Uses the pipeline handed in through the context, or trains one on the
    context's training trace.
    """

    pipeline: SemanticPipeline

    @property
    def name(self) -> str:
        return "semantic"

    @property
    def display_name(self) -> str:
        return "Semantic (learned partitions)"

    def setup(self, context: PrefetchContext) -> None:
        super().setup(context)
        if context.pipeline is not None:
            self.pipeline = context.pipeline
        elif context.train_trace is not None:
            self.pipeline = SemanticPipeline.build(context.db, context.train_trace, context.config)
        else:
            raise ConfigurationError("The semantic system needs a trained pipeline or a training trace")

    def warm_up(self, trace: QueryTrace) -> None:
        pass

    def observe(self, record: QueryRecord) -> None:
        self.pipeline.observe(record)

    def predicted_partitions(self) -> list[int]:
        return self.pipeline.predict(self.context.k)

    def candidates(self, budget: int) -> list[BlockId]:
        blocks: list[BlockId] = []
        for pid in self.predicted_partitions():
            blocks.extend(self.pipeline.partitions[pid].sorted_blocks())
        return blocks[:budget]

    def prefetch(self, cache: CacheState, io: IoCostModel) -> int:
        return prefetch_partitions(cache, self.pipeline.partitions, self.predicted_partitions(), io)

    @property
    def repartition_count(self) -> int:
        return self.pipeline.repartition_count

    @property
    def fine_tune_count(self) -> int:
        return self.pipeline.fine_tune_count

    @property
    def stage_timings(self) -> StageTimings:
        return self.pipeline.timings
