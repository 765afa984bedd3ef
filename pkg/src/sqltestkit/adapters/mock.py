"""Scripted executor for hermetic tests, plus a recorder that captures scripts
from a real engine.

A script is a list of steps, or a mapping from session label (the test file
path) to such a list. Each step is a dict with the expected ``sql`` and one
outcome key::

    {"sql": "SELECT 1", "result": {"columns": 1, "rows": [[1]]}}
    {"sql": "SELEC 1", "error": "syntax error"}
    {"sql": "...", "lost": true}        # connection dropped
    {"sql": "...", "timeout": true}     # optional "message" for either
    {"sql": "CREATE TABLE t(a)"}        # success without a result

Any divergence from the script raises :class:`MockDivergence`.
"""

from __future__ import annotations

import json
from typing import Dict, List, Optional

from .base import (
    ConnectionLost, ConnectionSpec, EngineError, ExecFailure, QueryTable, Session, SetupError,
    StatementTimeout, execute, open_session, register_engine, teardown,
)


class MockDivergence(AssertionError):
    pass


class MockSession(Session):
    engine = "mock"

    def __init__(self, spec: ConnectionSpec, label: Optional[str] = None):
        super().__init__(spec, label)
        script = spec.parameters.get("script")
        if isinstance(script, str):
            with open(script, encoding="utf-8") as fh:
                script = json.load(fh)
        if isinstance(script, dict):
            if label not in script:
                raise SetupError(f"mock script has no steps for {label!r}")
            script = script[label]
        if not isinstance(script, list):
            raise SetupError("mock script must be a list of steps or a mapping of lists")
        self.steps: List[dict] = script
        self.pos = 0

    def execute(self, sql: str) -> Optional[QueryTable]:
        if self.pos >= len(self.steps):
            raise MockDivergence(f"unscripted statement #{self.pos + 1}: {sql!r}")
        step = self.steps[self.pos]
        self.pos += 1
        if step.get("sql") is not None and step["sql"] != sql:
            raise MockDivergence(f"step {self.pos}: expected {step['sql']!r}, got {sql!r}")
        if step.get("lost"):
            raise ConnectionLost(step.get("message", "scripted connection loss"))
        if step.get("timeout"):
            raise StatementTimeout(step.get("message", "scripted timeout"))
        if "error" in step:
            raise EngineError(step["error"])
        if "result" in step:
            res = step["result"]
            return QueryTable(res["columns"], [tuple(r) for r in res["rows"]])
        return None

    def reopen(self, path: str) -> None:
        pass


register_engine("mock", MockSession)


class RecordingSession(Session):
    """Wraps a real session and appends each exchange to ``parameters["sink"]``.

    Open it with ``ConnectionSpec("recording", {"inner": spec, "sink": {}})``;
    the sink ends up as a mock script keyed by session label.
    """

    engine = "recording"

    def __init__(self, spec: ConnectionSpec, label: Optional[str] = None):
        super().__init__(spec, label)
        inner = spec.parameters["inner"]
        self.inner = open_session(inner, label)
        self.engine = self.inner.engine
        self.steps: List[dict] = spec.parameters["sink"].setdefault(label, [])

    def execute(self, sql: str) -> Optional[QueryTable]:
        step: Dict[str, object] = {"sql": sql}
        self.steps.append(step)
        try:
            table = execute(self.inner, sql)
        except ExecFailure as exc:
            if isinstance(exc, ConnectionLost):
                step["lost"] = True
                step["message"] = str(exc)
            elif isinstance(exc, StatementTimeout):
                step["timeout"] = True
                step["message"] = str(exc)
            else:
                step["error"] = exc.message
            raise
        if table is not None:
            step["result"] = {"columns": table.column_count,
                              "rows": [[_jsonable(c) for c in row] for row in table.rows]}
        return table

    def reopen(self, path: str) -> None:
        self.inner.reopen(path)

    def close(self) -> None:
        teardown(self.inner)


def _jsonable(cell):
    if isinstance(cell, bytes):
        return cell.decode("utf-8", errors="backslashreplace")
    if cell is None or isinstance(cell, (bool, int, float, str)):
        return cell
    return float(cell)  # Decimal


register_engine("recording", RecordingSession)
