import logging

from rich.logging import RichHandler

ROOT_LOGGER = "specine"


class Logger:
    """Named logger that writes through a single rich handler per name.

    Services are rebuilt for every run, so a second `Logger` with the same name
    reuses the handler of the first and only moves its level.
    """

    def __init__(self, name: str, level: int = logging.INFO):
        self.name = name
        self.logger = logging.getLogger(name)
        self.logger.setLevel(level)
        self.logger.propagate = False
        self.handler = self._attach()
        self.handler.setLevel(level)

    @classmethod
    def for_service(cls, service: str, level: int = logging.INFO) -> "Logger":
        """Logger named `specine::<service>`."""
        return cls(f"{ROOT_LOGGER}::{service}", level)

    def _attach(self) -> logging.Handler:
        for handler in self.logger.handlers:
            if isinstance(handler, RichHandler):
                return handler
        handler = RichHandler(rich_tracebacks=True, show_time=False)
        handler.setFormatter(logging.Formatter("[%(name)s] %(message)s"))
        self.logger.addHandler(handler)
        return handler

    @property
    def level(self) -> int:
        return self.logger.level

    @property
    def verbose(self) -> bool:
        return self.logger.isEnabledFor(logging.DEBUG)

    def debug(self, message: str, *args: object):
        self.logger.debug(message, *args)

    def info(self, message: str, *args: object):
        self.logger.info(message, *args)

    def warning(self, message: str, *args: object):
        self.logger.warning(message, *args)

    def error(self, message: str, *args: object):
        self.logger.error(message, *args)

    def exception(self, message: str, *args: object):
        self.logger.exception(message, *args)


_logger_instance: Logger | None = None


def get_logger(name: str = ROOT_LOGGER, level: int = logging.INFO) -> Logger:
    """Provides the CLI's Logger.

    The first call creates it; later calls with another level move the level of
    the existing instance.

    Args:
        name (str, optional): Logger name. Defaults to "specine".
        level (int, optional): Logging level. Defaults to logging.INFO.

    Returns:
        Logger: The shared Logger instance.
    """
    global _logger_instance
    if _logger_instance is None or _logger_instance.name != name:
        _logger_instance = Logger(name, level)
    elif _logger_instance.level != level:
        _logger_instance.logger.setLevel(level)
        _logger_instance.handler.setLevel(level)
    return _logger_instance
