from __future__ import annotations

import logging
import os
from typing import Optional, Union

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LEVEL_ENV = "FUZZY_CONNECTOME_LOG_LEVEL"


def configure_logging(level: Optional[Union[int, str]] = None) -> None:
    """Install one stream handler on the root logger; level from env when not given."""
    if level is None:
        level = os.getenv(LEVEL_ENV, "INFO")
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
