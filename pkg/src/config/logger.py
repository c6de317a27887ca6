"""
Structured logging configuration for the melmine pipeline
Uses structlog for consistent JSON logging on standard error
"""

import logging
import sys
from datetime import datetime, timezone
from functools import wraps
from typing import Any, Dict, Optional

import structlog

from .settings import get_settings

settings = get_settings()


def add_timestamp(logger, method_name, event_dict):
    """Add timestamp to log entries"""
    event_dict["timestamp"] = datetime.now(timezone.utc).isoformat()
    return event_dict


def add_service_context(logger, method_name, event_dict):
    """Add service context to log entries"""
    event_dict.update({
        "service": settings.app_name,
        "version": settings.app_version,
        "environment": settings.environment
    })
    return event_dict


# stdout carries machine output only
logging.basicConfig(
    stream=sys.stderr,
    level=getattr(logging, settings.log_level),
    format="%(message)s",
)

# Configure structlog
structlog.configure(
    processors=[
        structlog.stdlib.filter_by_level,
        structlog.contextvars.merge_contextvars,
        add_timestamp,
        add_service_context,
        structlog.dev.ConsoleRenderer() if settings.is_development else structlog.processors.JSONRenderer()
    ],
    context_class=dict,
    logger_factory=structlog.stdlib.LoggerFactory(),
    wrapper_class=structlog.stdlib.BoundLogger,
    cache_logger_on_first_use=True,
)

# Get structured logger
logger = structlog.get_logger("melmine")


class PipelineLogger:
    """Specialized logger for pipeline stage events"""

    def __init__(self):
        self.logger = logger

    def info(self, message: str, **kwargs):
        """Log info level message"""
        self.logger.info(message, **kwargs)

    def error(self, message: str, **kwargs):
        """Log error level message"""
        self.logger.error(message, **kwargs)

    def warning(self, message: str, **kwargs):
        """Log warning level message"""
        self.logger.warning(message, **kwargs)

    def debug(self, message: str, **kwargs):
        """Log debug level message"""
        self.logger.debug(message, **kwargs)

    def log_stage_start(self, stage: str, **metadata):
        """Log the start of a pipeline stage"""
        self.info(
            f"Stage started: {stage}",
            event_type="stage_start",
            stage=stage,
            **metadata
        )

    def log_stage_end(self, stage: str, duration_ms: int, success: bool = True, **metadata):
        """Log pipeline stage completion"""
        self.info(
            f"Stage completed: {stage}",
            event_type="stage_end",
            stage=stage,
            duration_ms=duration_ms,
            success=success,
            **metadata
        )

    def log_seed(self, stage: str, seed: int, **metadata):
        """Log the effective seed of a randomized stage"""
        self.info(
            f"Effective seed for {stage}: {seed}",
            event_type="seed",
            stage=stage,
            seed=seed,
            **metadata
        )

    def log_validation_warning(self, record_id: str, reason: str, line: Optional[int] = None, **metadata):
        """Log a record that loaded but breaks a soft invariant"""
        self.warning(
            f"Validation warning: {record_id}",
            event_type="validation_warning",
            record_id=record_id,
            reason=reason,
            line=line,
            **metadata
        )

    def log_epoch(self, epoch: int, loss: float, **metadata):
        """Log one training epoch"""
        self.debug(
            "Epoch finished",
            event_type="epoch",
            epoch=epoch,
            loss=loss,
            **metadata
        )

    def log_error_with_context(self, error: Exception, context: Dict[str, Any]):
        """Log errors with full context"""
        self.error(
            f"Application Error: {str(error)}",
            event_type="application_error",
            error_type=type(error).__name__,
            error_message=str(error),
            **context
        )


# Global logger instance
pipeline_logger = PipelineLogger()


def get_logger() -> PipelineLogger:
    """Get the pipeline logger instance"""
    return pipeline_logger


def set_run_context(**context):
    """Bind run-wide keys (command, seed) to every subsequent record"""
    structlog.contextvars.bind_contextvars(**context)


def clear_run_context():
    """Clear run context"""
    structlog.contextvars.clear_contextvars()


def log_stage_execution(stage_name: Optional[str] = None):
    """Decorator to log stage execution around a CLI command"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            stage = stage_name or func.__name__
            start_time = datetime.now()

            set_run_context(command=stage)
            pipeline_logger.log_stage_start(stage)

            try:
                result = func(*args, **kwargs)
                duration_ms = int((datetime.now() - start_time).total_seconds() * 1000)
                pipeline_logger.log_stage_end(stage, duration_ms, success=True)
                return result

            except Exception as e:
                duration_ms = int((datetime.now() - start_time).total_seconds() * 1000)
                pipeline_logger.log_stage_end(stage, duration_ms, success=False)
                pipeline_logger.log_error_with_context(e, {"stage": stage})
                raise

            finally:
                clear_run_context()

        return wrapper
    return decorator
