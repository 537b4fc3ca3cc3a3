# tests/test_observability.py
import json

import pytest

from src.errors import CFLViolation, ConfigError, SchemeFailure
from src.observability import (
    ErrorCategory,
    MetricsCollector,
    StructuredLogger,
    metrics,
    phase_ctx,
    run_id_ctx,
    track_latency,
)


def test_structured_log_carries_context():
    logger = StructuredLogger("nematic.test")
    run_token = run_id_ctx.set("abc123")
    phase_token = phase_ctx.set("run")
    try:
        entry = logger._create_log("INFO", "hello", metadata={"step": 3})
    finally:
        phase_ctx.reset(phase_token)
        run_id_ctx.reset(run_token)
    payload = json.loads(entry.to_json())
    assert payload["run_id"] == "abc123"
    assert payload["phase"] == "run"
    assert payload["metadata"] == {"step": 3}


def test_metrics_summary():
    collector = MetricsCollector()
    assert collector.get_summary() == {"total_metrics": 0}
    collector.record_latency("step", 2.0)
    collector.record_latency("step", 4.0)
    collector.record_newton(7)
    collector.record_error(ErrorCategory.DOMAIN, "run")
    collector.record_error(ErrorCategory.DOMAIN, "run")
    summary = collector.get_summary()
    assert summary["latency"]["avg_ms"] == 3.0
    assert summary["newton"]["max_iters"] == 7
    assert summary["errors"]["by_category"] == {"domain": 2}
    collector.reset()
    assert collector.get_summary()["total_metrics"] == 0


def test_track_latency_marks_errors():
    metrics.reset()

    @track_latency("unit")
    def fails():
        raise CFLViolation("too fast")

    with pytest.raises(CFLViolation):
        fails()
    latest = metrics.metrics[-1]
    assert latest.tags == {"operation": "unit", "status": "error"}


def test_error_categories():
    assert CFLViolation("x").category == ErrorCategory.STABILITY
    assert isinstance(CFLViolation("x"), SchemeFailure)
    error = ConfigError("bad value", key_path="scheme.r", line=4)
    assert str(error) == "[scheme.r, line 4] bad value"
    assert error.category == ErrorCategory.CONFIG
