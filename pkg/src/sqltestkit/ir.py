"""Unified intermediate representation for SQL test files.

Every supported format is lowered into a :class:`TestScript`: an ordered
tuple of :class:`TestRecord` objects, each wrapping exactly one body
(a :class:`Statement`, a :class:`Query` or one of the control kinds).
All classes are frozen dataclasses; scripts are safe to share between
worker threads and processes.

Record equality ignores line numbers and metadata, which is what the
round-trip tests rely on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union


class Dialect(str, Enum):
    SLT_SQLITE = "slt-sqlite"
    SLT_DUCKDB = "slt-duckdb"
    PG_REGRESSION = "pg-regression"


class SortMode(str, Enum):
    NOSORT = "nosort"
    ROWSORT = "rowsort"
    VALUESORT = "valuesort"


class Shape(str, Enum):
    VALUE_WISE = "value-wise"
    ROW_WISE = "row-wise"
    DIGEST = "digest"


TYPE_LETTERS = frozenset("TIR")
_HASH_RE = re.compile(r"^[0-9a-f]{32}$")


@dataclass(frozen=True)
class Condition:
    polarity: str  # "skipif" | "onlyif"
    system: str


@dataclass(frozen=True)
class ExpectedResult:
    shape: Shape
    lines: Tuple[str, ...] = ()
    value_count: Optional[int] = None
    hash: Optional[str] = None

    @classmethod
    def digest(cls, value_count: int, hash: str) -> "ExpectedResult":
        return cls(Shape.DIGEST, (), value_count, hash)


@dataclass(frozen=True)
class Statement:
    sql: str
    expect_error: bool = False
    error_message: Optional[str] = None


@dataclass(frozen=True)
class Query:
    sql: str
    types: str
    sort: SortMode = SortMode.NOSORT
    label: Optional[str] = None
    expected: Optional[ExpectedResult] = None


# -- controls ---------------------------------------------------------------

@dataclass(frozen=True)
class Halt:
    pass


@dataclass(frozen=True)
class SkipIf:
    """A dangling ``skipif`` with nothing after it; a no-op at run time."""
    system: str


@dataclass(frozen=True)
class OnlyIf:
    system: str


@dataclass(frozen=True)
class HashThreshold:
    n: int


@dataclass(frozen=True)
class Loop:
    var: str
    start: int
    end: int
    body: Tuple["TestRecord", ...] = ()


@dataclass(frozen=True)
class Require:
    name: str


@dataclass(frozen=True)
class SetVariable:
    name: str
    value: str


@dataclass(frozen=True)
class Load:
    resource: str


@dataclass(frozen=True)
class Mode:
    flag: str


@dataclass(frozen=True)
class ClientCommand:
    """Source text the runner does not interpret (psql meta-commands,
    unsupported runner directives, ``COPY ... FROM STDIN`` blocks)."""
    raw: str


Control = Union[Halt, SkipIf, OnlyIf, HashThreshold, Loop, Require, SetVariable,
                Load, Mode, ClientCommand]
Body = Union[Statement, Query, Control]
CONTROL_TYPES = (Halt, SkipIf, OnlyIf, HashThreshold, Loop, Require, SetVariable,
                 Load, Mode, ClientCommand)


@dataclass(frozen=True)
class TestRecord:
    body: Body
    line: int = field(default=1, compare=False)
    conditions: Tuple[Condition, ...] = ()
    meta: Mapping[str, str] = field(default_factory=dict, compare=False, hash=False)

    __test__ = False  # keep pytest from collecting this class

    @property
    def is_test_case(self) -> bool:
        return isinstance(self.body, (Statement, Query))

    @property
    def sql(self) -> Optional[str]:
        return getattr(self.body, "sql", None)


@dataclass(frozen=True)
class TestScript:
    source_path: str
    dialect: Dialect
    records: Tuple[TestRecord, ...] = ()
    metadata: Mapping[str, str] = field(default_factory=dict, compare=False, hash=False)

    __test__ = False

    def iter_records(self):
        """Yield every record, descending into loop bodies (unexpanded)."""
        stack = list(reversed(self.records))
        while stack:
            rec = stack.pop()
            yield rec
            if isinstance(rec.body, Loop):
                stack.extend(reversed(rec.body.body))


def records_equivalent(a: TestScript, b: TestScript) -> bool:
    """Same variants, sql, conditions and expectations, ignoring lines."""
    return a.records == b.records


# -- validation -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    line: int
    message: str


def validate_script(script: TestScript) -> List[Violation]:
    """Return every structural invariant violation in ``script``."""
    out: List[Violation] = []
    _validate_records(script.records, 0, out)
    return out


def _validate_records(records, floor: int, out: List[Violation]) -> None:
    prev = floor
    prev_source = None
    for rec in records:
        source = rec.meta.get("source")
        if rec.line < 1:
            out.append(Violation(rec.line, f"line number {rec.line} < 1"))
        elif source == prev_source and rec.line <= prev:
            # records inlined from another file restart their own numbering
            out.append(Violation(rec.line, f"line {rec.line} does not follow line {prev}"))
        prev, prev_source = rec.line, source
        for cond in rec.conditions:
            if cond.polarity not in ("skipif", "onlyif"):
                out.append(Violation(rec.line, f"bad condition polarity {cond.polarity!r}"))
            if not cond.system or cond.system != cond.system.lower():
                out.append(Violation(rec.line, f"condition system {cond.system!r} must be lowercase, non-empty"))
        _validate_body(rec, out)


def _validate_body(rec: TestRecord, out: List[Violation]) -> None:
    body, line = rec.body, rec.line
    if isinstance(body, Statement):
        if not body.sql.strip():
            out.append(Violation(line, "empty statement sql"))
        if body.error_message is not None and not body.expect_error:
            out.append(Violation(line, "error message on a statement expected to succeed"))
    elif isinstance(body, Query):
        if not body.sql.strip():
            out.append(Violation(line, "empty query sql"))
        if not body.types or set(body.types) - TYPE_LETTERS:
            out.append(Violation(line, f"type-string {body.types!r} not over {{T,I,R}}"))
        if not isinstance(body.sort, SortMode):
            out.append(Violation(line, f"unknown sort mode {body.sort!r}"))
        if body.expected is not None:
            _validate_expected(body, line, out)
    elif isinstance(body, HashThreshold):
        if body.n < 0:
            out.append(Violation(line, "negative hash-threshold"))
    elif isinstance(body, Loop):
        if not re.match(r"^[A-Za-z_]\w*$", body.var):
            out.append(Violation(line, f"bad loop variable {body.var!r}"))
        _validate_records(body.body, line, out)
    elif isinstance(body, (Require, Load, Mode)):
        value = getattr(body, "name", None) or getattr(body, "resource", None) or getattr(body, "flag", None)
        if not value:
            out.append(Violation(line, f"empty {type(body).__name__} argument"))
    elif isinstance(body, SetVariable):
        if not body.name:
            out.append(Violation(line, "empty variable name"))
    elif isinstance(body, (SkipIf, OnlyIf)):
        if not body.system or body.system != body.system.lower():
            out.append(Violation(line, f"condition system {body.system!r} must be lowercase, non-empty"))
    elif isinstance(body, (Halt, ClientCommand)):
        pass
    else:
        out.append(Violation(line, f"unknown record body {type(body).__name__}"))


def _validate_expected(q: Query, line: int, out: List[Violation]) -> None:
    exp = q.expected
    if exp.shape is Shape.DIGEST:
        if exp.lines:
            out.append(Violation(line, "digest result carries lines"))
        if exp.value_count is None or exp.value_count < 0:
            out.append(Violation(line, "digest value count missing or negative"))
        if exp.hash is None or not _HASH_RE.match(exp.hash):
            out.append(Violation(line, f"digest hash {exp.hash!r} is not 32 hex chars"))
        return
    if exp.value_count is not None or exp.hash is not None:
        out.append(Violation(line, "non-digest result carries digest fields"))
    width = len(q.types)
    for i, text in enumerate(exp.lines):
        if exp.shape is Shape.VALUE_WISE:
            if "\t" in text:
                out.append(Violation(line, f"value-wise line {i} holds more than one value"))
            elif text == "":
                out.append(Violation(line, f"value-wise line {i} is empty"))
        elif len(text.split("\t")) != width:
            out.append(Violation(
                line, f"row-wise line {i} has {len(text.split(chr(9)))} values, type-string {q.types!r} has {width}"))


# -- plain-data conversion (IR dumps, mock fixtures) --------------------------

def record_to_dict(rec: TestRecord) -> Dict[str, Any]:
    body = rec.body
    d: Dict[str, Any] = {"line": rec.line, "kind": type(body).__name__}
    if rec.conditions:
        d["conditions"] = [[c.polarity, c.system] for c in rec.conditions]
    if rec.meta:
        d["meta"] = dict(rec.meta)
    if isinstance(body, Statement):
        d.update(sql=body.sql, expect="error" if body.expect_error else "ok")
        if body.error_message is not None:
            d["error_message"] = body.error_message
    elif isinstance(body, Query):
        d.update(sql=body.sql, types=body.types, sort=body.sort.value)
        if body.label:
            d["label"] = body.label
        if body.expected is not None:
            exp = body.expected
            e: Dict[str, Any] = {"shape": exp.shape.value}
            if exp.shape is Shape.DIGEST:
                e.update(value_count=exp.value_count, hash=exp.hash)
            else:
                e["lines"] = list(exp.lines)
            d["expected"] = e
    elif isinstance(body, Loop):
        d.update(var=body.var, start=body.start, end=body.end,
                 body=[record_to_dict(r) for r in body.body])
    else:
        for name in body.__dataclass_fields__:
            d[name] = getattr(body, name)
    return d


def script_to_dict(script: TestScript) -> Dict[str, Any]:
    return {
        "source_path": script.source_path,
        "dialect": script.dialect.value,
        "metadata": dict(script.metadata),
        "records": [record_to_dict(r) for r in script.records],
    }
