"""Utility functions for abnorm"""

import logging
import os
import time
from contextlib import contextmanager
from datetime import datetime
from typing import Dict, Optional

import numpy as np

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(level: Optional[str] = None, log_dir: Optional[str] = None,
                  to_file: Optional[bool] = None):
    """Setup logging configuration"""
    from abnorm.config.settings import Config

    level = level or Config.LOG_LEVEL
    log_dir = log_dir or Config.LOG_DIR
    to_file = Config.LOG_TO_FILE if to_file is None else to_file
    log_level = getattr(logging, level.upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)
    for handler in list(root_logger.handlers):
        if getattr(handler, '_abnorm', False):
            root_logger.removeHandler(handler)

    # Console handler (stderr; stdout carries the summary)
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    console_handler.setLevel(log_level)
    console_handler._abnorm = True
    root_logger.addHandler(console_handler)

    if to_file:
        os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(
            os.path.join(log_dir, f'abnorm_{datetime.now().strftime("%Y%m%d")}.log'),
            encoding='utf-8'
        )
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        file_handler.setLevel(log_level)
        file_handler._abnorm = True
        root_logger.addHandler(file_handler)

    # Suppress noisy libraries
    logging.getLogger('sqlalchemy').setLevel(logging.WARNING)


def check_seed(seed: int, name: str) -> int:
    """Stable per-check seed derived from the run seed and the check name"""
    digest = sum((index + 1) * ord(char) for index, char in enumerate(name))
    return int(np.random.SeedSequence([seed, digest]).generate_state(1)[0])


@contextmanager
def timed(timings: Dict[str, float], name: str):
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - start


def format_value(value) -> str:
    """Short human form for the summary"""
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    if isinstance(value, (complex, np.complexfloating)):
        return f"{value.real:.6g}{value.imag:+.6g}i"
    if isinstance(value, (list, tuple)):
        return '[' + ', '.join(format_value(item) for item in value) + ']'
    return str(value)
