"""Defaults shared across modules and environment configuration."""

import logging
import os

logger = logging.getLogger(__name__)

DEFAULT_SEED = 7
DEFAULT_N_PER_CLASS = 512
DEFAULT_LENGTH = 128
DESK_PERIOD = 32.0

DEFAULT_TAU = 0.85
DEFAULT_MIN_BLOCK = 3

DEFAULT_VARIANCE_KEEP = 0.99

DEFAULT_LAMBDA = 1.0
LAMBDA_RANGE = (0.1, 2.0)

DEFAULT_BENCH_REPS = 100
BENCH_WARMUP = 5

DEFAULT_RIDGE_ALPHA = 1.0
TRAIN_FRACTION = 0.8

THREADS_ENV = "TSLENS_THREADS"


def worker_count() -> int:
    """Number of worker threads for parallel cell evaluation.

    Reads TSLENS_THREADS; falls back to min(4, cpu count). Invalid values mean 1.
    """
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return max(1, min(4, os.cpu_count() or 1))
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring invalid %s=%r, using 1 worker", THREADS_ENV, raw)
        return 1
    return max(1, value)
