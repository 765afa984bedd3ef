"""Loading test files from disk, plus access to the bundled fixture corpus."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Optional, Tuple, Union

from .ir import Dialect, TestScript
from .parsers import ParseDiagnostic, parse_pg_regression, parse_slt

SLT_SUFFIXES = (".test", ".slt", ".test_slow")


def bundled_path(*parts: str) -> str:
    """Filesystem path of a directory or file inside the bundled corpus."""
    return str(resources.files("sqltestkit").joinpath("corpus", *parts))


def guess_dialect(path: str) -> Dialect:
    if path.endswith(".sql") or os.path.isdir(os.path.join(path, "sql")):
        return Dialect.PG_REGRESSION
    return Dialect.SLT_SQLITE


@dataclass
class LoadedSuite:
    scripts: List[TestScript] = field(default_factory=list)
    diagnostics: Dict[str, List[ParseDiagnostic]] = field(default_factory=dict)

    @property
    def error_count(self) -> int:
        return sum(1 for ds in self.diagnostics.values() for d in ds if d.severity == "error")


def load_file(path: str, dialect: Union[Dialect, str, None] = None,
              relative_to: Optional[str] = None) -> Tuple[TestScript, List[ParseDiagnostic]]:
    """Parse one file. For PostgreSQL, the expected file is found by stem pairing:
    ``<root>/sql/<stem>.sql`` pairs with ``<root>/expected/<stem>.out``."""
    dialect = Dialect(dialect) if dialect is not None else guess_dialect(path)
    name = os.path.relpath(path, relative_to) if relative_to else path
    with open(path, "rb") as fh:
        data = fh.read()
    if dialect is Dialect.PG_REGRESSION:
        sql_dir = os.path.dirname(path)
        stem = os.path.splitext(os.path.basename(path))[0]
        expected_path = os.path.join(os.path.dirname(sql_dir), "expected", stem + ".out")
        expected = None
        if os.path.isfile(expected_path):
            with open(expected_path, "rb") as fh:
                expected = fh.read()
        return parse_pg_regression(data, expected, name, base_dir=sql_dir)
    return parse_slt(data, dialect, name)


def find_files(root: str, dialect: Dialect) -> List[str]:
    if os.path.isfile(root):
        return [root]
    if dialect is Dialect.PG_REGRESSION:
        sql_dir = os.path.join(root, "sql") if os.path.isdir(os.path.join(root, "sql")) else root
        return sorted(os.path.join(sql_dir, f) for f in os.listdir(sql_dir) if f.endswith(".sql"))
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for f in sorted(filenames):
            if f.endswith(SLT_SUFFIXES):
                found.append(os.path.join(dirpath, f))
    return found


def load_suite(root: str, dialect: Union[Dialect, str, None] = None) -> LoadedSuite:
    """Parse every test file under ``root`` in sorted path order.

    Script paths are relative to ``root`` so reports do not depend on where
    the suite lives.
    """
    dialect = Dialect(dialect) if dialect is not None else guess_dialect(root)
    base = root if os.path.isdir(root) else os.path.dirname(root)
    if dialect is Dialect.PG_REGRESSION and os.path.isdir(os.path.join(root, "sql")):
        base = os.path.join(root, "sql")
    suite = LoadedSuite()
    for path in find_files(root, dialect):
        script, diags = load_file(path, dialect, relative_to=base)
        suite.scripts.append(script)
        suite.diagnostics[script.source_path] = diags
    return suite


def bundled_suite(name: str) -> LoadedSuite:
    """One of the fixture suites shipped with the package (see ``corpus/README``)."""
    dialects = {"slt": Dialect.SLT_SQLITE, "duckdb": Dialect.SLT_DUCKDB, "pg": Dialect.PG_REGRESSION,
                "coalesce": Dialect.SLT_SQLITE, "stats": Dialect.SLT_SQLITE}
    if name not in dialects:
        raise KeyError(f"no bundled suite {name!r}; choose from {sorted(dialects)}")
    return load_suite(bundled_path(name), dialects[name])
