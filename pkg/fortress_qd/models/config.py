"""
Run configuration models.

Validated with Pydantic so every field error is reported before work starts.
"""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

import constants


class ArchiveMode(str, Enum):
    """Behavior-characteristic pairing of the archive."""

    INSTANCES_NODES = "instances-nodes"
    INSTANCES_ENTROPY = "instances-entropy"


class MutationConfig(BaseModel):
    """Mutation probabilities and offspring batching."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    node_prob: float = Field(
        constants.NODE_PROB, ge=0.0, le=1.0, description="Node edit loop probability"
    )
    edge_prob: float = Field(
        constants.EDGE_PROB, ge=0.0, le=1.0, description="Edge edit loop probability"
    )
    instance_prob: float = Field(
        constants.INSTANCE_PROB,
        ge=0.0,
        le=1.0,
        description="Instance edit loop probability",
    )
    batch_size: int = Field(
        constants.BATCH_SIZE, ge=1, description="Offspring per generation"
    )
    random_injection_period: int = Field(
        constants.RANDOM_INJECTION_PERIOD,
        ge=0,
        description="Mutants per injected random genotype (0 disables injection)",
    )
    max_loops: int = Field(
        constants.MAX_MUTATION_LOOPS,
        ge=1,
        description="Iteration cap per mutation while-loop",
    )
    max_node_edit: int = Field(
        constants.MAX_NODE_EDIT,
        ge=1,
        description="Largest node count touched by one node edit",
    )
    step_max: int = Field(
        constants.STEP_MAX, ge=1, description="Upper bound of step(k) parameters"
    )


class RunConfig(BaseModel):
    """Everything needed to reproduce an evolution run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    master_seed: int = Field(constants.MASTER_SEED, ge=0)
    generations: int = Field(constants.GENERATIONS, ge=0)
    n_classes: int = Field(
        constants.N_CLASSES, ge=1, le=len(constants.GLYPH_POOL)
    )
    width: int = Field(constants.FORTRESS_WIDTH, ge=3)
    height: int = Field(constants.FORTRESS_HEIGHT, ge=3)
    horizon: int = Field(constants.HORIZON, ge=1)
    overpopulation_cap: int = Field(constants.OVERPOPULATION_CAP, ge=1)
    n_seeds: int = Field(constants.N_SEEDS, ge=1)
    eval_seeds: Optional[list[int]] = Field(
        None, description="Explicit evaluation seeds; derived from master_seed if unset"
    )
    init_batch: int = Field(constants.INIT_BATCH, ge=1)
    archive_mode: ArchiveMode = ArchiveMode(constants.ARCHIVE_MODE)
    bins_x: int = Field(constants.ARCHIVE_BINS_X, ge=1)
    bins_y: int = Field(constants.ARCHIVE_BINS_Y, ge=1)
    jobs: int = Field(constants.JOBS, ge=1)
    checkpoint_every: int = Field(constants.CHECKPOINT_EVERY, ge=0)
    mutation: MutationConfig = Field(default_factory=MutationConfig)

    @model_validator(mode="after")
    def check_seeds(self) -> "RunConfig":
        if self.eval_seeds is not None:
            if len(self.eval_seeds) != self.n_seeds:
                raise ValueError(
                    f"eval_seeds has {len(self.eval_seeds)} entries, n_seeds is {self.n_seeds}"
                )
            if any(s < 0 for s in self.eval_seeds):
                raise ValueError("eval_seeds must be non-negative")
        return self

    @property
    def resolution(self) -> tuple[int, int]:
        return (self.bins_x, self.bins_y)

    def provenance(self) -> dict[str, Any]:
        """Configuration echoed into artifacts.

        `jobs` is left out so outputs do not depend on parallelism.
        """
        return self.model_dump(mode="json", exclude={"jobs"})
