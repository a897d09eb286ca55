"""
Deterministic random streams.

Every stream is a numpy Generator built from a SeedSequence keyed by the
master seed plus stream-specific integers, so streams are independent of each
other and of the order in which they are requested.
"""

import numpy as np

import constants

# Stream keys; offspring streams use (generation, batch index) instead
EVAL_SEED_STREAM = 0x5EED
REEVAL_SEED_STREAM = 0x2EE7


def derive_rng(master_seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, *keys]))


def offspring_rng(
    master_seed: int, generation: int, batch_index: int
) -> np.random.Generator:
    return derive_rng(master_seed, generation, batch_index)


def draw_seeds(rng: np.random.Generator, count: int) -> list[int]:
    return [int(s) for s in rng.integers(0, constants.SEED_UPPER_BOUND, size=count)]


def evaluation_seeds(master_seed: int, count: int) -> list[int]:
    """Seeds drawn once per run and reused for every evaluation."""
    return draw_seeds(derive_rng(master_seed, EVAL_SEED_STREAM), count)


def reevaluation_seeds(master_seed: int, count: int, trial: int = 0) -> list[int]:
    return draw_seeds(derive_rng(master_seed, REEVAL_SEED_STREAM, trial), count)
