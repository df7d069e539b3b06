# helpers.py
#
# This module provides small file helpers shared by the pipeline runner and the command
# line: canonical JSON output, CSV tables, NPY arrays, and creation of unique run directories.
# Every write is recorded through the ActivityLogger so a run's artifacts can be audited.
#
# Usage: write_json(path, data), write_csv(path, header, rows), create_run_dir(root, config_hash).
#
# Helper modules: Uses os, csv, json and numpy; core.activity_logger for write records.

import csv
import json
import logging
import os

import numpy as np

from core.activity_logger import ActivityLogger

logger = logging.getLogger(__name__)


def _record_write(path):
    ActivityLogger().log_activity("artifacts", "write", target=os.path.basename(path))


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(path, data):
    """Sorted keys, two-space indent and a trailing newline, so equal data gives equal bytes."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, indent=2, sort_keys=True, default=_json_default, allow_nan=True)
        handle.write("\n")
    _record_write(path)
    return path


def read_json(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    _record_write(path)
    return path


def write_loss_traces(path, traces):
    """Long-format CSV (repeat, epoch, loss) for one or more loss traces."""
    rows = ((r, epoch, loss) for r, trace in enumerate(traces) for epoch, loss in enumerate(trace))
    return write_csv(path, ["repeat", "epoch", "loss"], rows)


def save_array(path, array):
    np.save(path, np.asarray(array))
    _record_write(path)
    return path


def create_run_dir(root, config_hash):
    """
    <root>/run-<hash prefix>, with a numeric suffix when that directory already exists,
    so concurrent or repeated runs never share a directory.
    """
    os.makedirs(root, exist_ok=True)
    base = os.path.join(root, f"run-{config_hash[:12]}")
    candidate, suffix = base, 1
    while True:
        try:
            os.makedirs(candidate)
            return candidate
        except FileExistsError:
            suffix += 1
            candidate = f"{base}-{suffix}"
