from __future__ import annotations

import threading
from typing import Optional

from .base import (
    ConnectionLost, ConnectionSpec, EngineError, QueryTable, Session, SetupError,
    StatementTimeout, make_table, register_engine,
)

try:
    import duckdb as _duckdb
except ImportError:  # pragma: no cover - duckdb is a declared dependency
    _duckdb = None


class DuckdbSession(Session):
    engine = "duckdb"

    def __init__(self, spec: ConnectionSpec, label: Optional[str] = None):
        super().__init__(spec, label)
        if _duckdb is None:
            raise SetupError("the duckdb package is not installed")
        self.path = str(spec.parameters.get("path", ":memory:"))
        self._conn = self._connect(self.path)

    @staticmethod
    def _connect(path: str):
        try:
            return _duckdb.connect(path)
        except _duckdb.Error as exc:
            raise SetupError(str(exc)) from exc

    def execute(self, sql: str) -> Optional[QueryTable]:
        fired = threading.Event()

        def cancel():
            fired.set()
            self._conn.interrupt()

        timer = threading.Timer(self.spec.statement_timeout, cancel)
        timer.daemon = True
        timer.start()
        try:
            cur = self._conn.execute(sql)
            desc = cur.description
            rows = cur.fetchall() if desc is not None else []
        except _duckdb.InterruptException as exc:
            if fired.is_set():
                raise StatementTimeout(f"statement exceeded {self.spec.statement_timeout}s") from exc
            raise EngineError(str(exc)) from exc
        except _duckdb.FatalException as exc:
            raise ConnectionLost(str(exc)) from exc
        except _duckdb.ConnectionException as exc:
            raise ConnectionLost(str(exc)) from exc
        except _duckdb.Error as exc:
            if "database has been invalidated" in str(exc):
                raise ConnectionLost(str(exc)) from exc
            raise EngineError(str(exc)) from exc
        finally:
            timer.cancel()
        # DDL/DML come back as a one-column "Count"/"Success" table; kept as is
        # because DuckDB tests assert on the affected-row count with "query I"
        return make_table(desc, rows)

    def reopen(self, path: str) -> None:
        self._conn.close()
        self.path = path
        self._conn = self._connect(path)

    def close(self) -> None:
        self._conn.close()


register_engine("duckdb", DuckdbSession)
