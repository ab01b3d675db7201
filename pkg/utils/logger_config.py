import logging
import os

import config


def configure_logging(log_dir=config.LOG_DIR, level=config.LOG_LEVEL):
    # --------------------------------------------------
    # Configure Logging
    # --------------------------------------------------
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=config.LOG_FORMAT,
        handlers=[
            logging.FileHandler(os.path.join(log_dir, 'app.log')),
            logging.StreamHandler()
        ]
    )
    return logging.getLogger(__name__)


logger = logging.getLogger(__name__)
