import logging
from logging import DEBUG, INFO, WARNING, ERROR, CRITICAL, FATAL, NOTSET # pylint: disable=unused-import

from colorama import Fore, Style

LOGGER_NAME: str = "tiny-raman-cnn"
DEFAULT_LOG_LEVEL: int = INFO


class ColorFormatter(logging.Formatter):
    """Colours the level name and message by severity; numbers stay readable in a terminal."""

    message_format: str = "%(levelname)s [%(module)s] %(message)s"

    FORMATS = {
        logging.DEBUG: Fore.LIGHTBLUE_EX + message_format + Style.RESET_ALL,
        logging.INFO: Fore.BLUE + message_format + Style.RESET_ALL,
        logging.WARNING: Fore.YELLOW + message_format + Style.RESET_ALL,
        logging.ERROR: Fore.RED + message_format + Style.RESET_ALL,
        logging.CRITICAL: Fore.RED + Style.BRIGHT + message_format + Style.RESET_ALL,
    }

    def format(self, record: logging.LogRecord) -> str:
        formatter = logging.Formatter(self.FORMATS.get(record.levelno, self.message_format))
        return formatter.format(record)


def get_logger() -> logging.Logger:
    return logging.getLogger(LOGGER_NAME)


def set_logging_level(level: int) -> None:
    get_logger().setLevel(level=level)


def set_verbose(verbose: bool) -> None:
    set_logging_level(DEBUG if verbose else INFO)


get_logger().setLevel(level=DEFAULT_LOG_LEVEL)

console_handler = logging.StreamHandler()
console_handler.setLevel(logging.DEBUG)

console_handler.setFormatter(ColorFormatter())

get_logger().addHandler(console_handler)
