# decorators.py
#
# This module provides custom decorators used by the pipeline runner.
# `pipeline_stage` names a step of the end-to-end run: it logs start/finish activity,
# measures wall-clock time and converts any failure into a StageError carrying the stage name.
#
# Usage: Applied as @pipeline_stage("segment") on PipelineRunner methods.
#
# Helper modules: Uses functools.wraps for proper decorator metadata, time for timing.

import logging
import time
from functools import wraps

from core.activity_logger import ActivityLogger
from core.errors import StageError

logger = logging.getLogger(__name__)


def pipeline_stage(stage_name):
    """
    Decorator that marks a method as a named pipeline stage.

    Args:
        stage_name (str): Name reported in logs, activity records and StageError.
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            activity = ActivityLogger()
            activity.log_activity(stage_name, "start")
            logger.info("Stage %s started", stage_name)
            started = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except StageError:
                raise
            except Exception as e:
                activity.log_activity(stage_name, "error", details={"error": f"{type(e).__name__}: {e}"})
                logger.error("Stage %s failed: %s", stage_name, e)
                raise StageError(stage_name, e) from e
            elapsed = time.perf_counter() - started
            activity.log_activity(stage_name, "finish", details={"seconds": round(elapsed, 6)})
            logger.info("Stage %s finished in %.3fs", stage_name, elapsed)
            return result
        return wrapper
    return decorator
