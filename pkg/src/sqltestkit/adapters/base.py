"""Executor contract shared by every engine adapter.

An adapter is a small class with ``execute``/``close`` registered under an
engine tag. The module level :func:`open_session`, :func:`execute` and
:func:`teardown` functions are what the runner calls.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 10.0


class SetupError(RuntimeError):
    """The session could not be opened (engine missing, connection refused, bad auth)."""


class ExecFailure(Exception):
    kind = "failure"


class EngineError(ExecFailure):
    kind = "error"

    def __init__(self, message: str):
        super().__init__(message or "unknown engine error")
        self.message = message or "unknown engine error"


class ConnectionLost(ExecFailure):
    kind = "connection-lost"


class StatementTimeout(ExecFailure):
    kind = "timeout"


@dataclass(frozen=True)
class ConnectionSpec:
    engine: str
    parameters: Dict[str, object] = field(default_factory=dict, hash=False)
    statement_timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        if not self.engine:
            raise ValueError("engine tag must be non-empty")
        if not self.statement_timeout > 0:
            raise ValueError("statement_timeout must be positive")


@dataclass
class QueryTable:
    """Rows of plain Python cells: None, int, float, Decimal, str, bytes or bool."""
    column_count: int
    rows: List[tuple] = field(default_factory=list)

    def __post_init__(self):
        for row in self.rows:
            if len(row) != self.column_count:
                raise ValueError(f"row {row!r} does not have {self.column_count} cells")


class Session:
    """Base class for adapter sessions. One session, one thread at a time."""

    engine = "?"

    def __init__(self, spec: ConnectionSpec, label: Optional[str] = None):
        self.spec = spec
        self.label = label
        self.alive = True
        self.closed = False

    def execute(self, sql: str) -> Optional[QueryTable]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def reopen(self, path: str) -> None:
        """Switch to the database file at ``path`` (``load`` in DuckDB tests)."""
        raise EngineError(f"{self.engine} cannot load database files")


_REGISTRY: Dict[str, Callable[[ConnectionSpec, Optional[str]], Session]] = {}
_ALIASES = {"psql": "postgresql", "postgres": "postgresql", "sqlite3": "sqlite"}


def canonical_engine(tag: str) -> str:
    tag = tag.lower()
    return _ALIASES.get(tag, tag)


def register_engine(tag: str, factory: Callable[[ConnectionSpec, Optional[str]], Session]) -> None:
    _REGISTRY[canonical_engine(tag)] = factory


def registered_engines() -> List[str]:
    return sorted(_REGISTRY)


def open_session(spec: ConnectionSpec, label: Optional[str] = None) -> Session:
    """Open a session over a fresh, empty database.

    ``label`` identifies the test file (the mock uses it to pick a script).
    """
    factory = _REGISTRY.get(canonical_engine(spec.engine))
    if factory is None:
        raise SetupError(f"no adapter registered for engine {spec.engine!r}")
    return factory(spec, label)


def execute(session: Session, sql: str) -> Optional[QueryTable]:
    """Run one statement. Returns a table, or None for statements without a result."""
    if not session.alive:
        raise ConnectionLost("session is dead")
    try:
        return session.execute(sql)
    except ConnectionLost:
        session.alive = False
        raise


def teardown(session: Session) -> None:
    if session.closed:
        return
    session.closed = True
    session.alive = False
    try:
        session.close()
    except Exception as exc:  # best effort
        log.warning("teardown of %s session failed: %s", session.engine, exc)


def normalize_cell(value):
    """Map driver values onto the cell kinds the canonicalizer understands."""
    if value is None or isinstance(value, (bool, int, float, str, bytes)):
        return value
    if isinstance(value, (bytearray, memoryview)):
        return bytes(value)
    from decimal import Decimal
    if isinstance(value, Decimal):
        return value
    return str(value)


def make_table(description: Optional[Sequence], rows) -> Optional[QueryTable]:
    if description is None:
        return None
    width = len(description)
    return QueryTable(width, [tuple(normalize_cell(v) for v in row) for row in rows])
