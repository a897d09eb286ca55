"""
Pytest configuration and fixtures for Fortress QD.
"""

import numpy as np
import pytest

from fortress_qd.core.fsm import FortressGenotype, default_alphabet
from fortress_qd.core.search import random_genotype
from fortress_qd.models.config import MutationConfig, RunConfig
from fortress_qd.services.config_manager import set_config_manager
from tests.factories import idle_class


@pytest.fixture(autouse=True)
def reset_config_manager():
    """Each test starts without a process-global config manager."""
    set_config_manager(None)
    yield
    set_config_manager(None)


@pytest.fixture
def minimal_genotype() -> FortressGenotype:
    """Fifteen classes of one idle node each, no placements."""
    return FortressGenotype(
        tuple(idle_class(g, i) for i, g in enumerate(default_alphabet(15)))
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def random_genotypes() -> list[FortressGenotype]:
    gen = np.random.default_rng(99)
    return [random_genotype(gen) for _ in range(20)]


@pytest.fixture
def desk_config() -> RunConfig:
    """A small, fast run configuration."""
    return RunConfig(
        master_seed=7,
        generations=3,
        n_classes=4,
        width=8,
        height=6,
        horizon=20,
        n_seeds=2,
        init_batch=6,
        bins_x=10,
        bins_y=10,
        checkpoint_every=0,
        mutation=MutationConfig(batch_size=5),
    )
