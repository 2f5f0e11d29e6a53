from typing import Type, Any
import abc
import logging.handlers
import os

from cardy_lab.models.exceptions import (
    StatisticalFloor,
    ZeroCount,
    MeshTooCoarse,
    WorkerFailure,
)
from cardy_lab.config import LoggingConfig as _Config


LOGGER_NAME = "cardy_lab"
PROJECT_ROOT = os.path.dirname(os.path.dirname(__file__))
_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
DEFAULT_EXCEPTION_LOG_LEVEL = logging.WARNING
LOG_LEVELS: dict[Type[Exception], int] = {
    StatisticalFloor: DEFAULT_EXCEPTION_LOG_LEVEL,
    ZeroCount: DEFAULT_EXCEPTION_LOG_LEVEL,
    MeshTooCoarse: DEFAULT_EXCEPTION_LOG_LEVEL,
    WorkerFailure: logging.ERROR,
}


class _Logger(abc.ABC):
    """Abstract class for wrapping a logger from the Python logging module."""

    def __init__(self, logger_name: str = LOGGER_NAME) -> None:
        self._logger = logging.getLogger(logger_name)
        self._logger.setLevel(logging.INFO)

    @property
    def logger(self) -> logging.Logger:
        return self._logger

    @abc.abstractmethod
    def debug(self, msg: str, context: str) -> None:
        pass

    @abc.abstractmethod
    def info(self, msg: str, context: str) -> None:
        pass

    @abc.abstractmethod
    def warning(self, msg: str, context: str) -> None:
        pass

    @abc.abstractmethod
    def error(self, msg: str, context: str) -> None:
        pass

    @abc.abstractmethod
    def log_on_exception(self, e: Exception, context: str) -> None:
        pass

    def format_caller_info(self, caller_info: tuple[str, int, str, Any]) -> str:
        module_path, line, _, _ = caller_info
        module_path = os.path.relpath(module_path, PROJECT_ROOT)
        return f"[{module_path}:{line}]"


class ExperimentLogger(_Logger):
    """Logger class forcing an experiment context (experiment kind and scale point)
    into every message, so that interleaved output of parallel points stays readable.
    """

    def debug(self, msg: str, context: str) -> None:
        self._emit(logging.DEBUG, msg, context)

    def info(self, msg: str, context: str) -> None:
        self._emit(logging.INFO, msg, context)

    def warning(self, msg: str, context: str) -> None:
        self._emit(logging.WARNING, msg, context)

    def error(self, msg: str, context: str) -> None:
        self._emit(logging.ERROR, msg, context)

    def log_on_exception(self, e: Exception, context: str) -> None:
        self._emit(LOG_LEVELS.get(type(e), logging.ERROR), str(e), context)

    def _emit(self, level: int, msg: str, context: str) -> None:
        if not self._logger.isEnabledFor(level):
            return
        # stacklevel 3 skips _emit and the public method
        caller = self.format_caller_info(self._logger.findCaller(stacklevel=3))
        point = context.strip() or "no experiment"
        self._logger.log(level, f"{caller}\t({point})\t{msg}")


class LabLogger(_Logger):
    """Logger class for messages outside of any experiment's context."""

    def debug(self, msg: str, *args) -> None:
        self._emit(logging.DEBUG, msg)

    def info(self, msg: str, *args) -> None:
        self._emit(logging.INFO, msg)

    def warning(self, msg: str, *args) -> None:
        self._emit(logging.WARNING, msg)

    def error(self, msg: str, *args) -> None:
        self._emit(logging.ERROR, msg)

    def log_on_exception(self, e: Exception, *args) -> None:
        self._emit(LOG_LEVELS.get(type(e), logging.ERROR), str(e))

    def _emit(self, level: int, msg: str) -> None:
        if not self._logger.isEnabledFor(level):
            return
        caller = self.format_caller_info(self._logger.findCaller(stacklevel=3))
        self._logger.log(level, f"{caller} (lab)\t{msg}")


def configure_logging(component_name: str, config: _Config) -> None:
    """Configure the logging for the application, replacing any earlier handlers.

    The component name is written in the log messages to identify the source of the log message.
    """
    for handler in list(logging.getLogger(LOGGER_NAME).handlers):
        logging.getLogger(LOGGER_NAME).removeHandler(handler)
        handler.close()
    try:
        if config.console.use:
            _configure_logging_to_console(config.console, component_name)
        if config.file.use:
            _configure_logging_to_file(config.file, component_name)
        # handlers decide the effective level
        logging.getLogger(LOGGER_NAME).setLevel(logging.DEBUG)
    except ValueError as ve:
        logging.error(f"{component_name}: Configuration error: {ve}")
        raise
    except Exception as e:
        logging.error(f"{component_name}: Error when configuring logging: {e}")
        raise


def _configure_logging_to_console(config: _Config.HandlerConfig, component_name: str):
    handler = logging.StreamHandler()
    handler.setLevel(config.level)
    _add_formatter(handler, component_name)
    _use_handler(handler)


def _configure_logging_to_file(config: _Config.HandlerConfig, component_name: str) -> None:
    """Configure the logging to a rotating file in the directory given by the configuration."""
    if not config.path:
        raise ValueError(f"Log directory does not exist: {config.path}. Check the config file.")
    os.makedirs(config.path, exist_ok=True)
    file_path = os.path.join(config.path, _log_file_name(component_name) + ".log")
    handler = logging.handlers.RotatingFileHandler(file_path, maxBytes=10485760, backupCount=5)
    handler.setLevel(config.level)
    _add_formatter(handler, component_name)
    _use_handler(handler)


def _add_formatter(handler: logging.Handler, component_name: str) -> None:
    formatter = logging.Formatter(_log_format(component_name), datefmt=_DATE_FORMAT)
    handler.setFormatter(formatter)


def _use_handler(handler: logging.Handler) -> None:
    logging.getLogger(LOGGER_NAME).addHandler(handler)


def _log_format(component_name: str) -> str:
    log_component_name = "-".join(component_name.lower().split())
    return f"[%(asctime)s.%(msecs)03d] [{log_component_name}] [%(levelname)s]\t %(message)s"


def _log_file_name(component_name: str) -> str:
    return "_".join(component_name.lower().split())
