"""Connection settings from an INI file, one section per engine tag.

    [postgresql]
    host = localhost
    port = 5432
    user = postgres
    statement_timeout = 10

Environment variables ``SQLTESTKIT_<ENGINE>_<KEY>`` override file values,
e.g. ``SQLTESTKIT_POSTGRESQL_PASSWORD``.
"""

from __future__ import annotations

import configparser
import os
from typing import Mapping, Optional

from .base import DEFAULT_TIMEOUT, ConnectionSpec, canonical_engine


def load_connection_spec(engine: str, config_path: Optional[str] = None,
                         environ: Optional[Mapping[str, str]] = None,
                         timeout: Optional[float] = None) -> ConnectionSpec:
    engine = canonical_engine(engine)
    environ = os.environ if environ is None else environ
    params = {}
    if config_path:
        parser = configparser.ConfigParser()
        if not parser.read(config_path, encoding="utf-8"):
            raise FileNotFoundError(config_path)
        if parser.has_section(engine):
            params.update(parser[engine])
    prefix = f"SQLTESTKIT_{engine.upper()}_"
    for key, value in environ.items():
        if key.startswith(prefix):
            params[key[len(prefix):].lower()] = value
    if engine == "postgresql" and "dsn" not in params and environ.get("SQLTESTKIT_PG_DSN"):
        params["dsn"] = environ["SQLTESTKIT_PG_DSN"]
    file_timeout = params.pop("statement_timeout", None)
    if timeout is None:
        timeout = float(file_timeout) if file_timeout else DEFAULT_TIMEOUT
    return ConnectionSpec(engine, params, timeout)
