import logging
import socket
import sys
from importlib.metadata import PackageNotFoundError, version as _dist_version


def _get_version():
    try:
        return _dist_version('toxtrig')
    except PackageNotFoundError:
        return 'unknown'


__version__ = _get_version()


class ContextFilter(logging.Filter):
    hostname = socket.gethostname()
    version = __version__

    def filter(self, record):
        record.hostname = ContextFilter.hostname
        record.version = ContextFilter.version
        return True


ctx_filter = ContextFilter()

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(version)s - %(threadName)s - %(message)s'


def init_logger(level=logging.INFO, stream=None):
    """Attaches the package handler. Calling it again only adjusts the level."""
    log = logging.getLogger(__name__)
    log.setLevel(level)

    for handler in log.handlers:
        if getattr(handler, '_toxtrig', False):
            handler.setLevel(level)
            return log

    formatter = logging.Formatter(LOG_FORMAT)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(formatter)
    handler.addFilter(ctx_filter)
    handler._toxtrig = True
    log.addHandler(handler)
    return log
