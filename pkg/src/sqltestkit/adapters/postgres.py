"""PostgreSQL adapter (needs the optional ``psycopg`` package).

Each session creates its own database named ``sqt_<random hex>`` through an
administrative connection and drops it again on teardown.
"""

from __future__ import annotations

import logging
import uuid
from typing import Optional

from .base import (
    ConnectionLost, ConnectionSpec, EngineError, QueryTable, Session, SetupError,
    StatementTimeout, make_table, register_engine,
)

log = logging.getLogger(__name__)

_CONNECT_KEYS = ("host", "port", "user", "password")


def _psycopg():
    try:
        import psycopg
    except ImportError as exc:
        raise SetupError("PostgreSQL support needs psycopg: pip install 'sqltestkit[postgres]'") from exc
    return psycopg


class PostgresSession(Session):
    engine = "postgresql"

    def __init__(self, spec: ConnectionSpec, label: Optional[str] = None):
        super().__init__(spec, label)
        self._pg = _psycopg()
        params = spec.parameters
        self._kwargs = {k: params[k] for k in _CONNECT_KEYS if params.get(k) not in (None, "")}
        self._dsn = str(params.get("dsn", ""))
        self._admin_db = str(params.get("database", "postgres"))
        self.database = "sqt_" + uuid.uuid4().hex[:16]
        try:
            with self._connect(self._admin_db) as admin:
                admin.execute(f'CREATE DATABASE "{self.database}"')
            self._conn = self._connect(self.database)
            ms = int(spec.statement_timeout * 1000)
            self._conn.execute(f"SET statement_timeout = {ms}")
        except self._pg.Error as exc:
            raise SetupError(str(exc)) from exc

    def _connect(self, dbname: str):
        return self._pg.connect(self._dsn, dbname=dbname, autocommit=True, **self._kwargs)

    def execute(self, sql: str) -> Optional[QueryTable]:
        errors = self._pg.errors
        try:
            cur = self._conn.execute(sql)
            desc = cur.description
            return make_table(desc, cur.fetchall() if desc is not None else [])
        except errors.QueryCanceled as exc:
            raise StatementTimeout(str(exc).strip()) from exc
        except self._pg.OperationalError as exc:
            if self._conn.closed or self._conn.broken:
                raise ConnectionLost(str(exc).strip()) from exc
            raise EngineError(str(exc).strip()) from exc
        except self._pg.Error as exc:
            raise EngineError(str(exc).strip()) from exc

    def close(self) -> None:
        try:
            self._conn.close()
        finally:
            with self._connect(self._admin_db) as admin:
                admin.execute(f'DROP DATABASE IF EXISTS "{self.database}" WITH (FORCE)')


register_engine("postgresql", PostgresSession)
