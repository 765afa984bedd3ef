"""sqllogictest reader/writer, including the DuckDB dialect extensions."""

from __future__ import annotations

import re
from typing import List, Optional, Tuple, Union

from ..ir import (
    ClientCommand, Condition, Dialect, ExpectedResult, Halt, HashThreshold, Load, Loop,
    Mode, OnlyIf, Query, Require, SetVariable, Shape, SkipIf, SortMode, Statement,
    TestRecord, TestScript, TYPE_LETTERS,
)
from .common import ParseDiagnostic, SerializeError, decode_text

_DIGEST_PREFIX = re.compile(r"^\d+\s+values\s+hashing\s+to\b")
_DIGEST = re.compile(r"^(\d+) values hashing to ([0-9a-fA-F]{32})$")
_SORT_MODES = {m.value: m for m in SortMode}

# DuckDB runner directives we recognise but do not execute
_DUCKDB_PASSTHROUGH = frozenset({
    "restart", "reconnect", "sleep", "unzip", "require-env", "tags", "continue",
    "test-env", "unskip", "reset",
})
_DUCKDB_RAW_BLOCKS = frozenset({"foreach", "concurrentforeach"})
_LOOP_HEADS = frozenset({"loop", "concurrentloop"}) | _DUCKDB_RAW_BLOCKS


class _Frame:
    def __init__(self, header_line: int, conditions, var=None, start=0, end=0, raw=False):
        self.header_line = header_line
        self.conditions = conditions
        self.var, self.start, self.end = var, start, end
        self.raw = raw
        self.records: List[TestRecord] = []
        self.raw_lines: List[str] = []
        self.nesting = 1


def parse_slt(text: Union[str, bytes], dialect: Union[Dialect, str] = Dialect.SLT_SQLITE,
              source_path: str = "<string>") -> Tuple[TestScript, List[ParseDiagnostic]]:
    """Parse sqllogictest content into a :class:`TestScript`.

    Malformed records are skipped with an error diagnostic; nothing raises.
    """
    dialect = Dialect(dialect)
    if dialect is Dialect.PG_REGRESSION:
        raise ValueError("parse_slt handles slt-sqlite and slt-duckdb only")
    text, diags = decode_text(text)
    parser = _SltParser(text, dialect is Dialect.SLT_DUCKDB, diags)
    records = parser.run()
    return TestScript(source_path, dialect, tuple(records)), diags


class _SltParser:
    def __init__(self, text: str, duck: bool, diags: List[ParseDiagnostic]):
        self.lines = [ln.rstrip("\r") for ln in text.split("\n")]
        self.duck = duck
        self.diags = diags
        self.top: List[TestRecord] = []
        self.frames: List[_Frame] = []
        self.pending: List[Condition] = []

    # -- helpers --
    def container(self) -> List[TestRecord]:
        return self.frames[-1].records if self.frames else self.top

    def error(self, line: int, msg: str) -> None:
        self.diags.append(ParseDiagnostic(line, "error", msg))

    def warn(self, line: int, msg: str) -> None:
        self.diags.append(ParseDiagnostic(line, "warning", msg))

    def reject(self, line: int, msg: str) -> None:
        self.error(line, msg)
        self.pending.clear()

    def block_end(self, i: int) -> int:
        n = len(self.lines)
        while i < n and self.lines[i].strip():
            i += 1
        return i

    def emit(self, body, line: int) -> None:
        self.container().append(TestRecord(body, line, tuple(self.pending)))
        self.pending.clear()

    def flush_dangling(self, index: int) -> None:
        # the condition lines sit directly above ``index``
        k = len(self.pending)
        for j, cond in enumerate(self.pending):
            body = SkipIf(cond.system) if cond.polarity == "skipif" else OnlyIf(cond.system)
            self.container().append(TestRecord(body, index - k + j + 1))
        self.pending.clear()

    def open_frame(self, frame: _Frame) -> None:
        self.frames.append(frame)
        self.pending.clear()

    # -- main loop --
    def run(self) -> List[TestRecord]:
        lines = self.lines
        i = 0
        while i < len(lines):
            i = self.step(i)
        if self.pending:
            self.flush_dangling(len(lines))
        while self.frames:
            f = self.frames.pop()
            self.error(f.header_line, "loop not closed by endloop")
            self.close_frame(f)
        return self.top

    def close_frame(self, f: _Frame) -> None:
        if f.raw:
            body = ClientCommand("\n".join(f.raw_lines))
        else:
            body = Loop(f.var, f.start, f.end, tuple(f.records))
        self.container().append(TestRecord(body, f.header_line, f.conditions))

    def step(self, i: int) -> int:
        raw = self.lines[i]
        stripped = raw.strip()
        if self.frames and self.frames[-1].raw:
            frame = self.frames[-1]
            frame.raw_lines.append(raw)
            word = stripped.split("#")[0].split()[:1]
            if word and word[0] in _LOOP_HEADS:
                frame.nesting += 1
            elif word == ["endloop"]:
                frame.nesting -= 1
                if frame.nesting == 0:
                    self.close_frame(self.frames.pop())
            return i + 1
        if not stripped:
            if self.pending:
                self.flush_dangling(i)
            return i + 1
        if stripped.startswith("#"):
            return i + 1
        tokens = stripped.split("#", 1)[0].split()
        head = tokens[0]
        lineno = i + 1

        if head in ("skipif", "onlyif"):
            if len(tokens) < 2:
                self.error(lineno, f"{head} without a system name")
            else:
                self.pending.append(Condition(head, tokens[1].lower()))
            return i + 1
        if head == "statement":
            return self.statement(i, tokens)
        if head == "query":
            return self.query(i, tokens)
        if head == "halt":
            self.emit(Halt(), lineno)
            return i + 1
        if head == "hash-threshold":
            if len(tokens) != 2 or not tokens[1].isdigit():
                self.reject(lineno, f"malformed hash-threshold: {stripped!r}")
            else:
                self.emit(HashThreshold(int(tokens[1])), lineno)
            return i + 1
        if self.duck:
            nxt = self.duck_directive(i, head, tokens, stripped)
            if nxt is not None:
                return nxt
        self.reject(lineno, f"unrecognised record header: {stripped!r}")
        return self.block_end(i)

    def duck_directive(self, i: int, head: str, tokens: List[str], stripped: str) -> Optional[int]:
        lineno = i + 1
        if head in ("loop", "concurrentloop"):
            if len(tokens) != 4 or not _is_int(tokens[2]) or not _is_int(tokens[3]):
                self.error(lineno, f"malformed loop header: {stripped!r}")
                frame = _Frame(lineno, tuple(self.pending), raw=True)
                frame.raw_lines.append(self.lines[i])
            else:
                if head == "concurrentloop":
                    self.warn(lineno, "concurrentloop executed as a sequential loop")
                frame = _Frame(lineno, tuple(self.pending), tokens[1], int(tokens[2]), int(tokens[3]))
            self.open_frame(frame)
            return i + 1
        if head == "endloop":
            if not self.frames:
                self.error(lineno, "endloop without loop")
            else:
                self.close_frame(self.frames.pop())
            return i + 1
        if head in _DUCKDB_RAW_BLOCKS:
            self.warn(lineno, f"{head} block kept as an uninterpreted client command")
            frame = _Frame(lineno, tuple(self.pending), raw=True)
            frame.raw_lines.append(self.lines[i])
            self.open_frame(frame)
            return i + 1
        if head == "require" and len(tokens) >= 2:
            self.emit(Require(" ".join(tokens[1:])), lineno)
        elif head == "load" and len(tokens) >= 2:
            self.emit(Load(" ".join(tokens[1:])), lineno)
        elif head == "mode" and len(tokens) == 2:
            self.warn(lineno, f"mode {tokens[1]} is recorded but not acted upon")
            self.emit(Mode(tokens[1]), lineno)
        elif head == "set" and len(tokens) >= 3:
            self.emit(SetVariable(tokens[1], " ".join(tokens[2:])), lineno)
        elif head in _DUCKDB_PASSTHROUGH:
            self.warn(lineno, f"runner directive {head!r} kept as an uninterpreted client command")
            self.emit(ClientCommand(stripped), lineno)
        else:
            return None
        return i + 1

    def statement(self, i: int, tokens: List[str]) -> int:
        lines, lineno = self.lines, i + 1
        end = self.block_end(i)
        kind = tokens[1] if len(tokens) > 1 else ""
        if kind not in ("ok", "error") or len(tokens) > 2:
            if self.duck and kind in ("ok", "error", "maybe"):
                self.warn(lineno, f"statement variant {' '.join(tokens[1:])!r} kept as an uninterpreted client command")
                self.emit(ClientCommand("\n".join(lines[i:end])), lineno)
            else:
                self.reject(lineno, f"malformed statement header: {lines[i].strip()!r}")
            return end
        body_lines = lines[i + 1:end]
        stripped = [ln.strip() for ln in body_lines]
        message = None
        if "----" in stripped:
            k = stripped.index("----")
            if not self.duck:
                self.reject(lineno, "'----' inside a statement record")
                return end
            if kind != "error":
                self.reject(lineno, "expected-message block on 'statement ok'")
                return end
            message = "\n".join(body_lines[k + 1:]) or None
            body_lines = body_lines[:k]
        sql = "\n".join(body_lines).strip()
        if not sql:
            self.reject(lineno, "statement without sql")
            return end
        self.emit(Statement(sql, kind == "error", message), lineno)
        return end

    def query(self, i: int, tokens: List[str]) -> int:
        lines, lineno = self.lines, i + 1
        end = self.block_end(i)
        if len(tokens) < 2 or len(tokens) > 4:
            self.reject(lineno, f"malformed query header: {lines[i].strip()!r}")
            return end
        types = tokens[1]
        if set(types) - TYPE_LETTERS:
            self.reject(lineno, f"unknown column type letter in {types!r}")
            return end
        sort, label = SortMode.NOSORT, None
        rest = tokens[2:]
        if rest and rest[0] in _SORT_MODES:
            sort = _SORT_MODES[rest.pop(0)]
        if len(rest) > 1:
            self.reject(lineno, f"malformed query header: {lines[i].strip()!r}")
            return end
        if rest:
            label = rest[0]
        body = lines[i + 1:end]
        stripped = [ln.strip() for ln in body]
        expected = None
        sql_lines = body
        if "----" in stripped:
            k = stripped.index("----")
            sql_lines = body[:k]
            result_lines = body[k + 1:]
            if len(result_lines) == 1 and _DIGEST_PREFIX.match(result_lines[0].strip()):
                m = _DIGEST.match(result_lines[0].strip())
                if not m:
                    self.reject(lineno + k + 2, f"malformed digest line: {result_lines[0].strip()!r}")
                    return end
                expected = ExpectedResult.digest(int(m.group(1)), m.group(2).lower())
            elif any("\t" in ln for ln in result_lines):
                expected = ExpectedResult(Shape.ROW_WISE, tuple(result_lines))
            else:
                expected = ExpectedResult(Shape.VALUE_WISE, tuple(result_lines))
        sql = "\n".join(sql_lines).strip()
        if not sql:
            self.reject(lineno, "query without sql")
            return end
        self.emit(Query(sql, types, sort, label, expected), lineno)
        return end


def _is_int(s: str) -> bool:
    return bool(re.match(r"^-?\d+$", s))


# ---------------------------------------------------------------------------

def serialize_slt(script: TestScript) -> str:
    """Write ``script`` back as sqllogictest text.

    Raises :class:`SerializeError` for content SLT syntax cannot carry
    (client commands, sql or expected lines with blank lines in them).
    """
    chunks: List[str] = []
    _serialize_records(script.records, chunks)
    return "\n\n".join(chunks) + ("\n" if chunks else "")


def _serialize_records(records, chunks: List[str]) -> None:
    for rec in records:
        head = [f"{c.polarity} {c.system}" for c in rec.conditions]
        body = rec.body
        if isinstance(body, ClientCommand):
            raise SerializeError(f"line {rec.line}: client command cannot be written as SLT")
        if isinstance(body, Loop):
            chunks.append("\n".join(head + [f"loop {body.var} {body.start} {body.end}"]))
            _serialize_records(body.body, chunks)
            chunks.append("endloop")
            continue
        chunks.append("\n".join(head + _serialize_body(body, rec.line)))


def _check_block(text: str, line: int, what: str) -> str:
    if any(not ln.strip() for ln in text.split("\n")):
        raise SerializeError(f"line {line}: {what} contains a blank line")
    if "----" in [ln.strip() for ln in text.split("\n")]:
        raise SerializeError(f"line {line}: {what} contains a '----' line")
    return text


def _serialize_body(body, line: int) -> List[str]:
    if isinstance(body, Statement):
        out = ["statement error" if body.expect_error else "statement ok",
               _check_block(body.sql, line, "sql")]
        if body.error_message is not None:
            out += ["----", _check_block(body.error_message, line, "error message")]
        return out
    if isinstance(body, Query):
        header = f"query {body.types} {body.sort.value}"
        if body.label:
            header += f" {body.label}"
        out = [header, _check_block(body.sql, line, "sql")]
        exp = body.expected
        if exp is not None:
            out.append("----")
            if exp.shape is Shape.DIGEST:
                out.append(f"{exp.value_count} values hashing to {exp.hash}")
            else:
                for text in exp.lines:
                    if not text.strip() and "\t" not in text:
                        raise SerializeError(f"line {line}: blank expected line")
                out.extend(exp.lines)
        return out
    if isinstance(body, Halt):
        return ["halt"]
    if isinstance(body, HashThreshold):
        return [f"hash-threshold {body.n}"]
    if isinstance(body, SkipIf):
        return [f"skipif {body.system}"]
    if isinstance(body, OnlyIf):
        return [f"onlyif {body.system}"]
    if isinstance(body, Require):
        return [f"require {body.name}"]
    if isinstance(body, Load):
        return [f"load {body.resource}"]
    if isinstance(body, Mode):
        return [f"mode {body.flag}"]
    if isinstance(body, SetVariable):
        return [f"set {body.name} {body.value}"]
    raise SerializeError(f"line {line}: cannot serialize {type(body).__name__}")
