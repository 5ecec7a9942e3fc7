from __future__ import annotations

import concurrent.futures
import logging
import os

logger = logging.getLogger(__name__)


def init_executor(
    workers: int,
    backend: str = "process",  # "process" hoặc "thread"
):
    """Worker pool for candidate evaluation; None means run inline."""
    backend = str(backend).lower()
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    # =============================
    # 1 worker -> chạy tuần tự, không cần pool
    # =============================
    if workers == 1:
        return None

    if backend == "process":
        executor = concurrent.futures.ProcessPoolExecutor(max_workers=workers)
    elif backend == "thread":
        executor = concurrent.futures.ThreadPoolExecutor(max_workers=workers)
    else:
        raise ValueError(f"Unsupported executor backend: {backend}")

    logger.info("[Executor] %s pool with %d workers (cpu_count=%s)", backend, workers, os.cpu_count())
    return executor
