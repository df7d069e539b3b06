# activity_logger.py
#
# This module provides the ActivityLogger class, a singleton for recording pipeline activity.
# Each record (timestamp, stage, action, target, details) is kept in memory and, when a run
# directory is attached, appended as one JSON line to activity.jsonl for replay audits.
#
# Usage: Instantiated as a singleton (ActivityLogger()), used by the stage decorator, the
# pipeline runner and the artifact writers.
#
# Helper modules: Uses json for details serialization, datetime for timestamps.

import json
import logging
import os
from datetime import datetime

logger = logging.getLogger(__name__)


class ActivityLogger:
    """
    Singleton class for logging pipeline activities to memory and to the active run directory.
    Used for audit trails of repeated runs and for debugging failed stages.
    """
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(ActivityLogger, cls).__new__(cls)
            cls._instance.records = []
            cls._instance.log_path = None
        return cls._instance

    def attach(self, run_dir):
        """Direct subsequent records to <run_dir>/activity.jsonl and clear the in-memory buffer."""
        os.makedirs(run_dir, exist_ok=True)
        self.log_path = os.path.join(run_dir, "activity.jsonl")
        self.records = []
        with open(self.log_path, "w", encoding="utf-8"):
            pass

    def detach(self):
        self.log_path = None

    def log_activity(self, stage, action, target="", details=None):
        """
        Record one pipeline activity.
        Args:
            stage (str): Pipeline stage name (e.g. "segment")
            action (str): What happened ("start", "finish", "warning", "write")
            target (str): Entity affected (optional)
            details (dict): Extra details (optional, must be JSON serializable)
        Returns: True if the record was stored, False otherwise
        """
        entry = {
            "timestamp": datetime.now().isoformat(),
            "stage": stage,
            "action": action,
            "target": target,
            "details": details or {},
        }
        self.records.append(entry)
        if self.log_path is None:
            return True
        try:
            with open(self.log_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(entry, sort_keys=True, default=str) + "\n")
            return True
        except OSError as e:
            logger.error("Error writing activity record: %s", e)
            return False

    def get_logs(self, limit=50, stage=None):
        """
        Retrieve the most recent records, newest first, optionally filtered by stage.
        """
        logs = [r for r in self.records if stage is None or r["stage"] == stage]
        return list(reversed(logs))[:limit]

    def clear_logs(self):
        self.records = []
