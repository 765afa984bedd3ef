"""PostgreSQL regression suite reader.

A regression test is a psql script (``sql/<name>.sql``) plus the output psql
printed when run with echo on (``expected/<name>.out``). The script is split
into statements and each statement is located in the output by its echoed
text; the block printed right after the echo becomes its expectation.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from ..ir import (
    ClientCommand, Dialect, ExpectedResult, Query, Shape, SortMode, Statement,
    TestRecord, TestScript,
)
from ..sqltext import Chunk, find_psql_variables, split_statements
from .common import ParseDiagnostic, decode_text

_INCLUDE = re.compile(r"^\\(i|ir|include|include_relative)\s+(\S+)")
_ERROR_LINE = re.compile(r"^(?:psql:[^:]*:\d+:\s*)?ERROR:\s+(.*)$")
_CHATTER = re.compile(r"^(?:psql:[^:]*:\d+:\s*)?(NOTICE|WARNING|INFO|DEBUG|LOG|DETAIL|HINT|CONTEXT):")
_SEPARATOR = re.compile(r"^-+(\+-+)*$")
_ROW_COUNT = re.compile(r"^\((\d+) rows?\)$")
_MAX_INCLUDE_DEPTH = 8


@dataclass
class _Item:
    chunk: Chunk
    source: Optional[str]  # None for the main file


def parse_pg_regression(sql_text: Union[str, bytes], expected_text: Union[str, bytes, None] = None,
                        source_path: str = "<string>", base_dir: Optional[str] = None,
                        ) -> Tuple[TestScript, List[ParseDiagnostic]]:
    """Parse a regression test file, aligning it with its expected output.

    ``base_dir`` is where ``\\i``/``\\ir`` includes are looked up; included
    files are inlined when found. Never raises on malformed input.
    """
    sql_text, diags = decode_text(sql_text)
    expected_lines = None
    if expected_text is not None:
        expected_text, more = decode_text(expected_text)
        diags.extend(more)
        expected_lines = [ln.rstrip("\r") for ln in expected_text.split("\n")]

    items = _chunks(sql_text, None, base_dir, diags, 0)
    if expected_lines is None:
        records = [_record(item, None) for item in items]
    else:
        records = _align(items, expected_lines, diags)

    metadata = {"expected": "present" if expected_lines is not None else "absent"}
    return TestScript(source_path, Dialect.PG_REGRESSION, tuple(records), metadata), diags


def _split(text: str) -> List[Chunk]:
    return split_statements(text, backslash_meta=True, copy_stdin=True)


def _chunks(text: str, source: Optional[str], base_dir: Optional[str],
            diags: List[ParseDiagnostic], depth: int) -> List[_Item]:
    out: List[_Item] = []
    for chunk in _split(text):
        m = _INCLUDE.match(chunk.text) if chunk.kind == "meta" else None
        if m and base_dir is not None and depth < _MAX_INCLUDE_DEPTH:
            path = os.path.join(base_dir, m.group(2))
            if os.path.isfile(path):
                with open(path, "rb") as fh:
                    inc_text, more = decode_text(fh.read())
                diags.extend(more)
                out.extend(_chunks(inc_text, m.group(2), base_dir, diags, depth + 1))
                continue
        out.append(_Item(chunk, source))
    return out


def _record(item: _Item, body) -> TestRecord:
    chunk = item.chunk
    meta = {}
    if item.source is not None:
        meta["source"] = item.source
    if chunk.kind == "meta":
        m = _INCLUDE.match(chunk.text)
        if m:
            meta["include"] = m.group(2)
            meta["unresolved"] = "include"
        return TestRecord(ClientCommand(chunk.text), chunk.line, (), meta)
    if chunk.kind == "copy":
        meta["client"] = "copy-stdin"
        return TestRecord(ClientCommand(chunk.text), chunk.line, (), meta)
    names = find_psql_variables(chunk.text)
    if names:
        meta["client_variables"] = ",".join(names)
    return TestRecord(body or Statement(chunk.text), chunk.line, (), meta)


def _norm(text: str) -> str:
    return " ".join(text.split())


def _locate(sql: str, lines: List[str], cursor: int) -> Optional[Tuple[int, int]]:
    """Find the echo of ``sql`` at or after line ``cursor``.

    Returns (first line, last line) of the echo, or None.
    """
    target = _norm(sql)
    first = _norm(sql.split("\n", 1)[0])
    for j in range(cursor, len(lines)):
        line = _norm(lines[j])
        pos = line.find(first)
        if pos < 0:
            continue
        acc = line[pos:]
        k = j
        while len(acc) < len(target) and k + 1 < len(lines):
            k += 1
            acc = _norm(acc + " " + lines[k])
        if acc.startswith(target):
            return j, k
    return None


def _read_output(lines: List[str], p: int, limit: int):
    """Interpret the psql output starting at line ``p``.

    Returns ("error", message), ("table", (ncols, rows)), ("none", None)
    or ("bad", reason).
    """
    while p < limit and _CHATTER.match(lines[p]):
        p += 1
    if p >= limit:
        return "none", None
    m = _ERROR_LINE.match(lines[p])
    if m:
        return "error", m.group(1).strip()
    if p + 1 < limit and _SEPARATOR.match(lines[p + 1]) and lines[p + 1]:
        sep = lines[p + 1]
        bounds = [i for i, ch in enumerate(sep) if ch == "+"]
        ncols = len(bounds) + 1
        rows: List[str] = []
        q = p + 2
        while q < limit:
            rc = _ROW_COUNT.match(lines[q])
            if rc:
                if int(rc.group(1)) != len(rows):
                    return "bad", f"row count {rc.group(1)} disagrees with {len(rows)} printed rows"
                return "table", (ncols, rows)
            cells = _cells(lines[q], bounds, ncols)
            if cells is None:
                return "bad", f"cannot split row {lines[q]!r} into {ncols} columns"
            rows.append("\t".join(cells))
            q += 1
        return "bad", "result table without a row-count footer"
    return "none", None


def _cells(line: str, bounds: List[int], ncols: int) -> Optional[List[str]]:
    if all(b < len(line) and line[b] == "|" for b in bounds):
        edges = [-1] + bounds + [len(line)]
        return [line[edges[i] + 1:edges[i + 1]].strip() for i in range(ncols)]
    parts = line.split("|")
    if len(parts) == ncols:
        return [part.strip() for part in parts]
    return None


def _align(items: List[_Item], lines: List[str], diags: List[ParseDiagnostic]) -> List[TestRecord]:
    # pass 1: find echo positions, scanning forward only
    spans: List[Optional[Tuple[int, int]]] = []
    cursor = 0
    prev_key = None
    for item in items:
        if item.chunk.kind != "sql":
            spans.append(None)
            continue
        key = (item.source, item.chunk.line)
        span = None
        if key != prev_key:  # two statements on one line share one echo
            span = _locate(item.chunk.text, lines, cursor)
        if span is not None:
            cursor = span[1] + 1
        spans.append(span)
        prev_key = key

    starts = [s[0] for s in spans if s is not None] + [len(lines)]
    records = []
    nxt = 0
    for item, span in zip(items, spans):
        if item.chunk.kind != "sql":
            records.append(_record(item, None))
            continue
        if span is None:
            records.append(_unaligned(item, "statement echo not found in expected output", diags))
            continue
        nxt += 1
        kind, payload = _read_output(lines, span[1] + 1, starts[nxt])
        sql = item.chunk.text
        if kind == "error":
            body = Statement(sql, True, payload)
        elif kind == "table":
            ncols, rows = payload
            body = Query(sql, "T" * ncols, SortMode.NOSORT, None,
                         ExpectedResult(Shape.ROW_WISE, tuple(rows)))
        elif kind == "none":
            body = Statement(sql)
        else:
            records.append(_unaligned(item, payload, diags))
            continue
        records.append(_record(item, body))
    return records


def _unaligned(item: _Item, reason: str, diags: List[ParseDiagnostic]) -> TestRecord:
    diags.append(ParseDiagnostic(item.chunk.line, "warning", f"unaligned statement: {reason}"))
    rec = _record(item, None)
    meta = dict(rec.meta)
    meta["unaligned"] = reason
    return TestRecord(rec.body, rec.line, (), meta)
