"""
Structured event logging for preprocessing and join runs.

Events are JSON objects written to the ``polyjoin.events`` logger, and
optionally to a dated file in a log directory.
"""

import json
import logging
import os
import uuid
from datetime import datetime
from typing import Any, Dict, Optional

import numpy as np

logger = logging.getLogger(__name__)


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


class JoinEventLogger:
    """
    Logger for pipeline events with a stable JSON layout.

    Every entry carries ``timestamp``, ``event_id``, ``event_type``,
    ``event_code``, ``message`` and, when given, ``details``.
    """

    EVENT_TYPES = {
        "preprocess": "PREP",
        "filter": "FILT",
        "refine": "REFN",
        "knn": "KNN",
        "pipeline": "PIPE",
        "result": "RSLT",
        "soundness_violation": "SOUND",
        "configuration": "CONFIG",
    }

    def __init__(self, log_dir: Optional[str] = None):
        """
        Initialize the event logger.

        Args:
            log_dir: Directory for an events file (if None, only the logger is used)
        """
        self.log_dir = log_dir
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir, exist_ok=True)
        self._setup_logger()

    def _setup_logger(self) -> None:
        self.event_logger = logging.getLogger("polyjoin.events")
        if self.log_dir:
            log_file = os.path.join(
                self.log_dir, f"events_{datetime.now().strftime('%Y%m%d')}.log"
            )
            try:
                handler: logging.Handler = logging.FileHandler(log_file)
            except FileNotFoundError:
                handler = logging.NullHandler()
            handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)s] %(message)s"))
            self.event_logger.addHandler(handler)

    def log_event(
        self,
        event_type: str,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        severity: str = "INFO",
    ) -> Dict[str, Any]:
        """
        Log an event in the standard layout.

        Args:
            event_type: One of ``EVENT_TYPES``
            message: Brief description
            details: JSON-serializable extras (numpy scalars allowed)
            severity: DEBUG, INFO, WARNING, ERROR or CRITICAL

        Returns:
            The logged entry
        """
        entry: Dict[str, Any] = {
            "timestamp": datetime.now().isoformat(),
            "event_id": str(uuid.uuid4()),
            "event_type": event_type,
            "event_code": self.EVENT_TYPES.get(event_type, "GENERAL"),
            "message": message,
        }
        if details:
            entry["details"] = json.loads(json.dumps(details, default=_to_builtin))
        self.event_logger.log(getattr(logging, severity.upper()), json.dumps(entry))
        return entry

    def log_stage(self, stage: str, event_type: str, details: Dict[str, Any]) -> None:
        """Log the completion of a pipeline stage."""
        self.log_event(event_type, f"Stage {stage} finished", details)

    def log_chunk(self, stage: str, index: int, details: Optional[Dict[str, Any]] = None) -> None:
        """Log a drained chunk at DEBUG."""
        self.log_event("pipeline", f"{stage} chunk {index} drained", details, severity="DEBUG")

    def log_soundness_violation(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        """Log a bound crossing; these always indicate a bug."""
        self.log_event("soundness_violation", message, details, severity="ERROR")

    def log_configuration(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        self.log_event("configuration", message, details)


# Singleton instance
_event_logger = None


def get_event_logger(log_dir: Optional[str] = None) -> JoinEventLogger:
    """
    Get the singleton JoinEventLogger instance.

    Args:
        log_dir: Optional directory for the events file

    Returns:
        The shared JoinEventLogger instance
    """
    global _event_logger
    if _event_logger is None:
        _event_logger = JoinEventLogger(log_dir)
    return _event_logger
