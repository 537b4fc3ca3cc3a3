"""
Observability for simulation runs.

Provides structured JSON logging, solver metrics collection, and error categorization.
"""
import json
import logging
import time
from contextvars import ContextVar
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from enum import Enum
from functools import wraps
from typing import Any, Optional

# Context variables for run tracking
run_id_ctx: ContextVar[Optional[str]] = ContextVar("run_id", default=None)
phase_ctx: ContextVar[Optional[str]] = ContextVar("phase", default=None)


class ErrorCategory(str, Enum):
    """Categorized failure types for monitoring."""
    DOMAIN = "domain"  # Q left the physical eigenvalue range
    CONVERGENCE = "convergence"  # Newton / proximal solve failed
    TEMPERATURE = "temperature"  # theta reached zero or below
    STABILITY = "stability"  # CFL abort, incompressibility loss
    CONFIG = "config"  # config parse / validation
    IO = "io"  # snapshot and CSV files
    VALIDATION = "validation"  # property battery failures
    INTERNAL = "internal"  # unexpected internal errors


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class StructuredLog:
    """Structured log entry."""
    timestamp: str
    level: str
    message: str
    run_id: Optional[str] = None
    phase: Optional[str] = None
    duration_ms: Optional[float] = None
    error_category: Optional[str] = None
    metadata: Optional[dict[str, Any]] = None

    def to_json(self) -> str:
        """Convert to JSON string."""
        return json.dumps(asdict(self), default=str)


class StructuredLogger:
    """Logger that outputs structured JSON logs."""

    def __init__(self, name: str):
        self.logger = logging.getLogger(name)
        self._setup_handler()

    def _setup_handler(self):
        if not self.logger.handlers:
            handler = logging.StreamHandler()
            handler.setFormatter(JSONFormatter())
            self.logger.addHandler(handler)
            self.logger.setLevel(logging.INFO)
            self.logger.propagate = False

    def _create_log(self, level: str, message: str, **kwargs) -> StructuredLog:
        return StructuredLog(
            timestamp=_now(),
            level=level,
            message=message,
            run_id=run_id_ctx.get(),
            phase=phase_ctx.get(),
            **kwargs
        )

    def info(self, message: str, **kwargs):
        """Log info level."""
        log = self._create_log("INFO", message, **kwargs)
        self.logger.info(log.to_json())

    def warning(self, message: str, **kwargs):
        """Log warning level."""
        log = self._create_log("WARNING", message, **kwargs)
        self.logger.warning(log.to_json())

    def error(self, message: str, error_category: ErrorCategory = ErrorCategory.INTERNAL, **kwargs):
        """Log error level with categorization."""
        log = self._create_log(
            "ERROR",
            message,
            error_category=error_category.value,
            **kwargs
        )
        self.logger.error(log.to_json())

    def debug(self, message: str, **kwargs):
        """Log debug level."""
        log = self._create_log("DEBUG", message, **kwargs)
        self.logger.debug(log.to_json())


class JSONFormatter(logging.Formatter):
    """Formatter that passes structured entries through and wraps plain records."""

    def format(self, record: logging.LogRecord) -> str:
        if isinstance(record.msg, str) and record.msg.startswith("{"):
            return record.msg

        return json.dumps({
            "timestamp": _now(),
            "level": record.levelname,
            "message": record.getMessage(),
            "logger": record.name,
        })


@dataclass
class MetricData:
    """Metric data point."""
    name: str
    value: float
    unit: str
    timestamp: str
    tags: dict[str, str]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


class MetricsCollector:
    """Collect solver metrics over the lifetime of a process."""

    def __init__(self):
        self.metrics: list[MetricData] = []
        self.logger = StructuredLogger("metrics")

    def _append(self, name: str, value: float, unit: str, **tags: str):
        self.metrics.append(MetricData(
            name=name,
            value=float(value),
            unit=unit,
            timestamp=_now(),
            tags=dict(tags),
        ))

    def record_latency(self, operation: str, duration_ms: float, status: str = "ok"):
        """Record wall time of one solver operation."""
        self._append("solver.latency", duration_ms, "ms", operation=operation, status=status)
        self.logger.debug(
            f"Latency: {operation}",
            duration_ms=duration_ms,
            metadata={"status": status}
        )

    def record_newton(self, iterations: int, operation: str = "potential"):
        """Record the worst Newton iteration count of a batched potential solve."""
        self._append("potential.newton_iters", iterations, "iterations", operation=operation)

    def record_floor_activation(self, count: int):
        """Record grid points clipped at the temperature floor."""
        self._append("theta.floor_activations", count, "points")
        self.logger.warning(
            "Temperature floor activated",
            error_category=ErrorCategory.TEMPERATURE.value,
            metadata={"points": count}
        )

    def record_error(self, category: ErrorCategory, operation: Optional[str] = None):
        """Record error occurrence."""
        self._append("solver.errors", 1.0, "count", category=category.value, operation=operation or "unknown")

    def reset(self):
        self.metrics.clear()

    def get_summary(self) -> dict[str, Any]:
        """Get metrics summary."""
        if not self.metrics:
            return {"total_metrics": 0}

        latencies = [m.value for m in self.metrics if m.name == "solver.latency"]
        newton = [m.value for m in self.metrics if m.name == "potential.newton_iters"]
        floors = [m.value for m in self.metrics if m.name == "theta.floor_activations"]
        errors = [m for m in self.metrics if m.name == "solver.errors"]

        return {
            "total_metrics": len(self.metrics),
            "latency": {
                "count": len(latencies),
                "avg_ms": sum(latencies) / len(latencies) if latencies else 0,
                "max_ms": max(latencies) if latencies else 0,
                "min_ms": min(latencies) if latencies else 0,
            },
            "newton": {
                "solves": len(newton),
                "max_iters": max(newton) if newton else 0,
            },
            "floor_activations": sum(floors),
            "errors": {
                "total": len(errors),
                "by_category": self._group_errors(errors),
            }
        }

    def _group_errors(self, errors: list[MetricData]) -> dict[str, int]:
        groups: dict[str, int] = {}
        for error in errors:
            category = error.tags.get("category", "unknown")
            groups[category] = groups.get(category, 0) + 1
        return groups


# Global instance
metrics = MetricsCollector()


def track_latency(operation: str):
    """Decorator to record the wall time of a solver operation."""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            status = "ok"

            try:
                return func(*args, **kwargs)
            except Exception:
                status = "error"
                raise
            finally:
                duration_ms = (time.perf_counter() - start_time) * 1000
                metrics.record_latency(operation, duration_ms, status)

        return wrapper
    return decorator
