"""Single-line JSON solver telemetry on standard error."""

import json
import logging
import sys
from typing import Any

from dsii_scattering.config import settings

TELEMETRY_LOGGER = "dsii_scattering.telemetry"

_logger = logging.getLogger(TELEMETRY_LOGGER)
_logger.propagate = False


class _JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = record.msg if isinstance(record.msg, dict) else {"message": record.getMessage()}
        return json.dumps(payload, sort_keys=True, default=str)


def configure_telemetry(enabled: bool | None = None) -> None:
    """Attach (or detach) the standard-error JSON handler."""
    if enabled is None:
        enabled = settings.telemetry
    for handler in list(_logger.handlers):
        _logger.removeHandler(handler)
    if enabled:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(_JsonLineFormatter())
        _logger.addHandler(handler)
        _logger.setLevel(logging.INFO)
    else:
        _logger.setLevel(logging.CRITICAL + 1)


def emit(event: str, **fields: Any) -> None:
    """Emit one telemetry record if telemetry is enabled."""
    if not _logger.isEnabledFor(logging.INFO):
        return
    _logger.info({"event": event, **fields})


configure_telemetry()
