"""
Configuration constants for the Fortress QD toolkit.
This module contains all configurable defaults including fortress geometry,
rollout settings, MAP-Elites parameters and logging options.
"""

import os

from dotenv import load_dotenv

# Load environment variables from .env file if it exists
load_dotenv()


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("true", "1", "yes")


# Fortress geometry (walls included)
N_CLASSES = int(os.getenv("FORTRESS_N_CLASSES", "15"))
FORTRESS_WIDTH = int(os.getenv("FORTRESS_WIDTH", "15"))
FORTRESS_HEIGHT = int(os.getenv("FORTRESS_HEIGHT", "8"))

# Glyphs handed out to entity classes, in ascending code points
GLYPH_POOL = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz{|}~"
WALL_GLYPH = "#"
EMPTY_GLYPH = "."
FIELD_PLACEHOLDER = "-"

# Rollout settings
HORIZON = int(os.getenv("FORTRESS_HORIZON", "100"))
OVERPOPULATION_CAP = int(os.getenv("FORTRESS_OVERPOPULATION_CAP", "156"))
STEP_MAX = int(os.getenv("FORTRESS_STEP_MAX", "20"))

# Evaluation settings
N_SEEDS = int(os.getenv("FORTRESS_N_SEEDS", "5"))
SEED_UPPER_BOUND = 2**31 - 1

# MAP-Elites settings
ARCHIVE_BINS_X = int(os.getenv("FORTRESS_ARCHIVE_BINS_X", "100"))
ARCHIVE_BINS_Y = int(os.getenv("FORTRESS_ARCHIVE_BINS_Y", "100"))
ARCHIVE_MODE = os.getenv("FORTRESS_ARCHIVE_MODE", "instances-nodes")
BATCH_SIZE = int(os.getenv("FORTRESS_BATCH_SIZE", "10"))
INIT_BATCH = int(os.getenv("FORTRESS_INIT_BATCH", "10"))
RANDOM_INJECTION_PERIOD = int(os.getenv("FORTRESS_RANDOM_INJECTION_PERIOD", "9"))
GENERATIONS = int(os.getenv("FORTRESS_GENERATIONS", "10000"))
MASTER_SEED = int(os.getenv("FORTRESS_MASTER_SEED", "0"))
CHECKPOINT_EVERY = int(os.getenv("FORTRESS_CHECKPOINT_EVERY", "1000"))

# Mutation settings
NODE_PROB = float(os.getenv("FORTRESS_NODE_PROB", "0.5"))
EDGE_PROB = float(os.getenv("FORTRESS_EDGE_PROB", "0.5"))
INSTANCE_PROB = float(os.getenv("FORTRESS_INSTANCE_PROB", "0.5"))
MAX_MUTATION_LOOPS = int(os.getenv("FORTRESS_MAX_MUTATION_LOOPS", "32"))
MAX_NODE_EDIT = int(os.getenv("FORTRESS_MAX_NODE_EDIT", "10"))

# Parallel evaluation
JOBS = int(os.getenv("FORTRESS_JOBS", "1"))

# Output location for artifacts
OUTPUT_DIR = os.getenv("FORTRESS_OUTPUT_DIR", "runs")

# Logging configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_FORMAT = os.getenv("LOG_FORMAT", "json")  # json or text

# Progress logging cadence (generations)
PROGRESS_INTERVAL = int(os.getenv("FORTRESS_PROGRESS_INTERVAL", "100"))
ENABLE_PROGRESS_LOG = _env_bool("FORTRESS_ENABLE_PROGRESS_LOG", "true")

# File format versions
GENOTYPE_SCHEMA_VERSION = 1
SNAPSHOT_SCHEMA_VERSION = 1
ROLLOUT_SCHEMA_VERSION = 1

# CLI exit codes
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_PARSE_ERROR = 3
EXIT_IO_ERROR = 4
