import os
import logging
from datetime import datetime

LOGGER_NAME = 'url_ranker'


def setup_logger(level="INFO", log_dir='.logs'):
    """Setup logger configuration"""
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)

    # Already configured by an earlier call in this process
    if logger.handlers:
        for handler in logger.handlers:
            handler.setLevel(level)
        return logger

    os.makedirs(log_dir, exist_ok=True)

    # One log file per day
    current_date = datetime.now().strftime("%Y-%m-%d")
    log_file = os.path.join(log_dir, f"{current_date}.txt")

    file_handler = logging.FileHandler(log_file)
    file_handler.setLevel(level)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)

    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    file_handler.setFormatter(formatter)
    console_handler.setFormatter(formatter)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)

    return logger


def get_logger():
    """Get the logger instance"""
    return logging.getLogger(LOGGER_NAME)
