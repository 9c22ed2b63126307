# src/utils/log_config.py
"""loguru 싱크 설정"""

import os
import sys

from loguru import logger

LOG_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan> - <level>{message}</level>"


def configure_logging(level: str = None) -> str:
    """기본 싱크를 제거하고 stderr 싱크 하나를 LOG_LEVEL로 설치"""
    level = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    logger.remove()
    logger.add(sys.stderr, level=level, format=LOG_FORMAT)
    return level
