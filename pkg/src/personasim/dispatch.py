"""
dispatch.py

Execution of independent backend-calling tasks. Tasks are submitted to a
thread pool bounded by the configured concurrency, results are collected back
into input order, and each task runs a fixed-count retry loop that re-prompts
on transport and parse failures. Every attempt is recorded in an append-only
audit log.
"""

import concurrent.futures
import logging
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TextIO, TypeVar

from .errors import ConfigurationError, ParseError, RejectedPersonaError, TransportError
from .utils import append_jsonl, write_jsonl

logger = logging.getLogger("PersonaSim.dispatch")

T = TypeVar("T")
R = TypeVar("R")

# Progress wrapper of long loops, the session passes a tqdm wrapper here
Iterate = Callable[[Iterable], Iterable]


def passthrough(x: Iterable, *args, **kwargs) -> Iterable:
    return x


class AuditLog:
    """
    Append-only record of every backend attempt. Entries are plain
    dictionaries with the task key, the attempt number, the raw response (None
    if the backend call itself failed), the error message and any catalog
    violations. If a sink is given, entries are also streamed to it as JSONL.
    """

    def __init__(self, sink: Optional[TextIO] = None):
        self._entries: List[Dict[str, Any]] = []
        self._lock = threading.Lock()
        self._sink = sink

    def record(
        self,
        key: Any,
        attempt: int,
        raw: Optional[str],
        error: Optional[str] = None,
        violations: Sequence[Dict[str, Any]] = (),
    ) -> None:
        entry = {
            "key": key,
            "attempt": attempt,
            "ok": error is None,
            "raw": raw,
            "error": error,
            "violations": list(violations),
        }
        with self._lock:
            self._entries.append(entry)
            if self._sink is not None:
                append_jsonl(self._sink, entry)

    @property
    def entries(self) -> List[Dict[str, Any]]:
        with self._lock:
            return list(self._entries)

    def attempts_for(self, key: Any) -> List[Dict[str, Any]]:
        return [e for e in self.entries if e["key"] == key]

    def write(self, path: str) -> None:
        write_jsonl(path, self.entries)


@dataclass(frozen=True)
class TaskOutcome:
    key: Any
    value: Any
    attempts: int
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def run_with_retries(
    key: Any,
    request: Callable[[], str],
    accept: Callable[[str], Any],
    retry_limit: int,
    audit: AuditLog,
    retry_wait: float = 0.0,
) -> TaskOutcome:
    """
    Calling request, then accept on the returned text, at most retry_limit
    times. Transport and parse failures are recorded and retried with a full
    re-prompt, any other exception is left to propagate.
    """
    if retry_limit < 1:
        raise ConfigurationError(f"Retry limit must be at least 1, got [{retry_limit}]")
    error = None
    for attempt in range(1, retry_limit + 1):
        raw = None
        try:
            raw = request()
            value = accept(raw)
        except TransportError as err:
            error = f"transport: {err}"
            audit.record(key, attempt, raw, error)
            if retry_wait > 0 and attempt < retry_limit:
                time.sleep(retry_wait)
            continue
        except RejectedPersonaError as err:
            error = f"rejected: {err}"
            audit.record(
                key,
                attempt,
                raw,
                error,
                violations=[
                    {"field": v.field, "value": v.value, "reason": v.reason}
                    for v in err.violations
                ],
            )
            continue
        except ParseError as err:
            error = f"parse: {err}"
            audit.record(key, attempt, raw, error)
            continue
        audit.record(key, attempt, raw)
        return TaskOutcome(key=key, value=value, attempts=attempt)

    logger.warning(f"Task {key} failed after {retry_limit} attempts: {error}")
    return TaskOutcome(key=key, value=None, attempts=retry_limit, error=error)


def dispatch(
    tasks: Sequence[T],
    fn: Callable[[T], R],
    concurrency: int = 1,
    iterate: Iterate = passthrough,
    on_done: Optional[Callable[[R], None]] = None,
) -> List[R]:
    """
    Running fn over all tasks with at most `concurrency` calls in flight.
    Results are returned in task order, on_done is called from the calling
    thread in completion order (for streaming results to disk).
    """
    if concurrency < 1:
        raise ConfigurationError(f"Concurrency must be at least 1, got [{concurrency}]")

    if concurrency == 1:
        results = []
        for task in iterate(tasks, total=len(tasks)):
            result = fn(task)
            if on_done is not None:
                on_done(result)
            results.append(result)
        return results

    results: List[Optional[R]] = [None] * len(tasks)
    pool = concurrent.futures.ThreadPoolExecutor(max_workers=concurrency)
    try:
        futures = {pool.submit(fn, task): index for index, task in enumerate(tasks)}
        for future in iterate(concurrent.futures.as_completed(futures), total=len(tasks)):
            result = future.result()
            results[futures[future]] = result
            if on_done is not None:
                on_done(result)
    except BaseException:
        pool.shutdown(wait=True, cancel_futures=True)
        raise
    pool.shutdown(wait=True)
    return results
