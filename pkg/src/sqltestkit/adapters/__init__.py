"""Database engine adapters behind one executor contract."""

from .base import (
    DEFAULT_TIMEOUT, ConnectionLost, ConnectionSpec, EngineError, ExecFailure, QueryTable,
    Session, SetupError, StatementTimeout, canonical_engine, execute, open_session,
    register_engine, registered_engines, teardown,
)
from . import duckdb as _duckdb  # noqa: F401  (registers the engine)
from . import sqlite as _sqlite  # noqa: F401
from . import postgres as _postgres  # noqa: F401
from .config import load_connection_spec
from .mock import MockDivergence, MockSession, RecordingSession

__all__ = [
    "DEFAULT_TIMEOUT", "ConnectionLost", "ConnectionSpec", "EngineError", "ExecFailure",
    "MockDivergence", "MockSession", "QueryTable", "RecordingSession", "Session", "SetupError",
    "StatementTimeout", "canonical_engine", "execute", "load_connection_spec", "open_session",
    "register_engine", "registered_engines", "teardown",
]
