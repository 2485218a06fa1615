import io
import json
import threading
import time

import pytest

from personasim.dispatch import AuditLog, dispatch, run_with_retries
from personasim.errors import ConfigurationError, ParseError, RejectedPersonaError, TransportError
from personasim.persona import Violation


def responder(*items):
    """Request callable replaying items, raising the exceptions among them"""
    queue = list(items)

    def _request():
        item = queue.pop(0)
        if isinstance(item, Exception):
            raise item
        return item

    return _request


def strict_int(raw):
    if not raw.isdigit():
        raise ParseError(f"not a number [{raw}]")
    return int(raw)


def test_first_attempt_success():
    audit = AuditLog()
    outcome = run_with_retries("k", responder("42"), strict_int, 3, audit)
    assert (outcome.ok, outcome.value, outcome.attempts) == (True, 42, 1)
    assert audit.entries == [
        {"key": "k", "attempt": 1, "ok": True, "raw": "42", "error": None, "violations": []}
    ]


def test_failures_are_recorded_and_retried():
    audit = AuditLog()
    violation = Violation("EDUCATION", "PhD", "not an allowed value")
    outcome = run_with_retries(
        ["k", 1],
        responder(
            TransportError("refused"),
            "forty",
            RejectedPersonaError("catalog", [violation]),
            "7",
        ),
        strict_int,
        retry_limit=5,
        audit=audit,
    )
    assert outcome.value == 7 and outcome.attempts == 4
    errors = [e["error"] for e in audit.attempts_for(["k", 1])]
    assert errors[0].startswith("transport:")
    assert errors[1].startswith("parse:")
    assert errors[2].startswith("rejected:")
    assert errors[3] is None
    assert audit.entries[0]["raw"] is None
    assert audit.entries[2]["violations"] == [
        {"field": "EDUCATION", "value": "PhD", "reason": "not an allowed value"}
    ]


def test_retry_limit_reached():
    outcome = run_with_retries("k", responder("a", "b"), strict_int, 2, AuditLog())
    assert not outcome.ok and outcome.value is None
    assert outcome.attempts == 2 and outcome.error.startswith("parse:")


def test_unexpected_errors_propagate():
    with pytest.raises(KeyError):
        run_with_retries("k", responder(KeyError("bug")), strict_int, 3, AuditLog())
    with pytest.raises(ConfigurationError):
        run_with_retries("k", responder("1"), strict_int, 0, AuditLog())


def test_audit_sink_streams_entries(tmp_path):
    sink = io.StringIO()
    audit = AuditLog(sink)
    run_with_retries("k", responder("x", "1"), strict_int, 2, audit)
    lines = [json.loads(x) for x in sink.getvalue().splitlines()]
    assert [x["attempt"] for x in lines] == [1, 2]
    path = str(tmp_path / "audit.jsonl")
    audit.write(path)
    assert open(path).read() == sink.getvalue()


def test_dispatch_keeps_order():
    done = []
    results = dispatch(list(range(10)), lambda x: x * x, concurrency=1, on_done=done.append)
    assert results == done == [x * x for x in range(10)]


def test_concurrent_dispatch():
    active, peak = [0], [0]
    lock = threading.Lock()

    def _slow(x):
        with lock:
            active[0] += 1
            peak[0] = max(peak[0], active[0])
        time.sleep(0.01 * (x % 3))
        with lock:
            active[0] -= 1
        return x

    done = []
    results = dispatch(list(range(30)), _slow, concurrency=4, on_done=done.append)
    assert results == list(range(30))
    assert sorted(done) == list(range(30))
    assert 1 <= peak[0] <= 4


def test_dispatch_errors():
    with pytest.raises(ConfigurationError):
        dispatch([1], lambda x: x, concurrency=0)

    def _fail(x):
        if x == 3:
            raise RuntimeError("boom")
        return x

    with pytest.raises(RuntimeError):
        dispatch(list(range(6)), _fail, concurrency=3)
