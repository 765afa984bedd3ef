from __future__ import annotations

import os
import sqlite3
import time
from typing import Optional

from .base import (
    ConnectionLost, ConnectionSpec, EngineError, QueryTable, Session, SetupError,
    StatementTimeout, make_table, register_engine,
)


class SqliteSession(Session):
    engine = "sqlite"

    def __init__(self, spec: ConnectionSpec, label: Optional[str] = None):
        super().__init__(spec, label)
        path = str(spec.parameters.get("path", ":memory:"))
        if path != ":memory:" and os.path.exists(path):
            # the contract is a fresh database per session
            raise SetupError(f"refusing to reuse existing database file {path}")
        self.path = path
        self._deadline = None
        self._conn = self._connect(path)

    def _connect(self, path: str) -> sqlite3.Connection:
        try:
            conn = sqlite3.connect(path, isolation_level=None, check_same_thread=False)
        except sqlite3.Error as exc:
            raise SetupError(str(exc)) from exc
        conn.set_progress_handler(self._tick, 1000)
        return conn

    def _tick(self) -> int:
        return int(self._deadline is not None and time.monotonic() > self._deadline)

    def execute(self, sql: str) -> Optional[QueryTable]:
        self._deadline = time.monotonic() + self.spec.statement_timeout
        try:
            try:
                cur = self._conn.execute(sql)
            except (sqlite3.Warning, sqlite3.ProgrammingError) as exc:
                if "one statement at a time" not in str(exc):
                    raise
                self._conn.executescript(sql)
                return None
            return make_table(cur.description, cur.fetchall())
        except sqlite3.OperationalError as exc:
            if str(exc) == "interrupted" and self._tick():
                raise StatementTimeout(f"statement exceeded {self.spec.statement_timeout}s") from exc
            raise EngineError(str(exc)) from exc
        except sqlite3.ProgrammingError as exc:
            if "closed" in str(exc):
                raise ConnectionLost(str(exc)) from exc
            raise EngineError(str(exc)) from exc
        except sqlite3.Error as exc:
            raise EngineError(str(exc)) from exc
        except (ValueError, OverflowError) as exc:  # e.g. out-of-range values on fetch
            raise EngineError(str(exc)) from exc
        finally:
            self._deadline = None

    def reopen(self, path: str) -> None:
        self._conn.close()
        self.path = path
        self._conn = self._connect(path)

    def close(self) -> None:
        self._conn.close()


register_engine("sqlite", SqliteSession)
