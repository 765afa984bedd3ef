"""Lexical helpers shared by the parsers and the analyzer.

The statement splitter understands enough SQL to find top-level statement
boundaries: quotes, ``--``/``#`` line comments, nested block comments,
PostgreSQL dollar quoting, parentheses and ``BEGIN ATOMIC`` bodies of SQL
functions. It does not build a parse tree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, List, Optional

_IDENT_CHARS = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")
_DOLLAR_TAG = re.compile(r"\$([A-Za-z_\x80-\uffff][A-Za-z0-9_\x80-\uffff]*)?\$")
_COPY_STDIN = re.compile(r"^\s*COPY\b.*\bFROM\s+STDIN\b", re.IGNORECASE | re.DOTALL)
_COPY_END = re.compile(r"^\\\.[ \t]*$", re.M)
_ROUTINE_HEAD = re.compile(
    r"CREATE\s+(OR\s+REPLACE\s+)?(FUNCTION|PROCEDURE)\b", re.IGNORECASE
)
_WORD = re.compile(r"[A-Za-z_]+")


@dataclass(frozen=True)
class Chunk:
    """One top-level piece of a script.

    ``kind`` is ``"sql"`` for a statement (text excludes the terminator),
    ``"meta"`` for a backslash client command and ``"copy"`` for a
    ``COPY ... FROM STDIN`` statement together with its inline data.
    """

    text: str
    line: int
    kind: str = "sql"


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


def _skip_quoted(text: str, i: int, quote: str, backslash: bool) -> int:
    """Return the index just past the closing quote that matches ``text[i]``."""
    n = len(text)
    i += 1
    while i < n:
        c = text[i]
        if backslash and c == "\\":
            i += 2
            continue
        if c == quote:
            if i + 1 < n and text[i + 1] == quote:
                i += 2
                continue
            return i + 1
        i += 1
    return n


def _skip_block_comment(text: str, i: int) -> int:
    n = len(text)
    depth = 0
    while i < n:
        if text.startswith("/*", i):
            depth += 1
            i += 2
        elif text.startswith("*/", i):
            depth -= 1
            i += 2
            if depth == 0:
                return i
        else:
            i += 1
    return n


def skip_opaque(text: str, i: int, *, hash_comments: bool = False,
                backticks: bool = False, dollar_quotes: bool = True,
                backslash_escapes: bool = False) -> Optional[int]:
    """If an opaque region (string, identifier, comment) starts at ``i``,
    return the index after it; otherwise None."""
    c = text[i]
    if c == "'":
        backslash = backslash_escapes or (
            i > 0 and text[i - 1] in "eE" and (i < 2 or text[i - 2] not in _IDENT_CHARS))
        return _skip_quoted(text, i, "'", backslash)
    if c == '"':
        return _skip_quoted(text, i, '"', backslash_escapes)
    if c == "`" and backticks:
        return _skip_quoted(text, i, "`", False)
    if text.startswith("--", i) or (c == "#" and hash_comments):
        j = text.find("\n", i)
        return len(text) if j < 0 else j
    if text.startswith("/*", i):
        return _skip_block_comment(text, i)
    if c == "$" and dollar_quotes and (i == 0 or text[i - 1] not in _IDENT_CHARS):
        m = _DOLLAR_TAG.match(text, i)
        if m:
            end = text.find(m.group(0), m.end())
            return len(text) if end < 0 else end + len(m.group(0))
    return None


def strip_leading_noise(text: str) -> str:
    """Drop leading whitespace and comments."""
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
        elif text.startswith("--", i):
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
        elif text.startswith("/*", i):
            i = _skip_block_comment(text, i)
        else:
            break
    return text[i:]


def split_statements(text: str, *, delimiter: str = ";", dollar_quotes: bool = True,
                     backslash_meta: bool = False, hash_comments: bool = False,
                     backticks: bool = False, copy_stdin: bool = False) -> List[Chunk]:
    """Split ``text`` into top-level statements.

    Semicolons inside quotes, comments, dollar-quoted bodies and parentheses
    never split. With ``backslash_meta`` a backslash outside quotes ends the
    current statement and starts a psql meta-command running to end of line.
    """
    return list(iter_statements(
        text, delimiter=delimiter, dollar_quotes=dollar_quotes,
        backslash_meta=backslash_meta, hash_comments=hash_comments,
        backticks=backticks, copy_stdin=copy_stdin,
    ))


def iter_statements(text: str, *, delimiter: str = ";", dollar_quotes: bool = True,
                    backslash_meta: bool = False, hash_comments: bool = False,
                    backticks: bool = False, copy_stdin: bool = False) -> Iterator[Chunk]:
    n = len(text)
    i = 0
    start: Optional[int] = None  # first significant char of the current statement
    depth = 0
    begin_depth = 0
    routine = False

    def flush(end: int) -> Optional[Chunk]:
        if start is None:
            return None
        body = text[start:end].rstrip()
        if not body:
            return None
        return Chunk(body, _line_of(text, start), "sql")

    while i < n:
        c = text[i]
        if start is None:
            if c.isspace():
                i += 1
                continue
            if text.startswith("--", i) or (c == "#" and hash_comments) or text.startswith("/*", i):
                i = skip_opaque(text, i, hash_comments=hash_comments) or i + 1
                continue
            if text.startswith(delimiter, i):
                i += len(delimiter)
                continue
        if backslash_meta and c == "\\":
            chunk = flush(i)
            if chunk:
                yield chunk
            j = text.find("\n", i)
            j = n if j < 0 else j
            yield Chunk(text[i:j].rstrip(), _line_of(text, i), "meta")
            i, start, depth, begin_depth, routine = j, None, 0, 0, False
            continue
        skipped = skip_opaque(text, i, hash_comments=hash_comments,
                              backticks=backticks, dollar_quotes=dollar_quotes)
        if skipped is not None:
            if start is None:
                start = i
            i = skipped
            continue
        if start is None:
            start = i
            routine = bool(_ROUTINE_HEAD.match(text, i))
        if c == "(":
            depth += 1
        elif c == ")":
            depth = max(0, depth - 1)
        elif routine and c.isalpha() and (i == 0 or text[i - 1] not in _IDENT_CHARS):
            word = _WORD.match(text, i).group(0).upper()
            if word == "BEGIN" or (word == "CASE" and begin_depth > 0):
                begin_depth += 1
            elif word == "END" and begin_depth > 0:
                begin_depth -= 1
            i += len(word)
            continue
        if depth == 0 and begin_depth == 0 and text.startswith(delimiter, i):
            chunk = flush(i)
            i += len(delimiter)
            if chunk and copy_stdin and _COPY_STDIN.match(chunk.text):
                # inline data runs until a line holding only "\."
                nl = text.find("\n", i)
                data_start = n if nl < 0 else nl + 1
                m = _COPY_END.search(text, data_start)
                data_end = n if m is None else m.end()
                chunk = Chunk(text[start:data_end].rstrip(), chunk.line, "copy")
                i = data_end
            if chunk:
                yield chunk
            start, depth, begin_depth, routine = None, 0, 0, False
            continue
        i += 1

    chunk = flush(n)
    if chunk:
        yield chunk


def statement_end(text: str, pos: int, delimiter: str = ";", parens: bool = True, **lex) -> int:
    """Index just past the first top-level ``delimiter`` at or after ``pos``
    (``len(text)`` when the statement is unterminated). ``lex`` takes the
    :func:`skip_opaque` flags."""
    n = len(text)
    i = pos
    depth = 0
    while i < n:
        skipped = skip_opaque(text, i, **lex)
        if skipped is not None:
            i = skipped
            continue
        c = text[i]
        if parens and c == "(":
            depth += 1
        elif parens and c == ")":
            depth = max(0, depth - 1)
        elif depth == 0 and text.startswith(delimiter, i):
            return i + len(delimiter)
        i += 1
    return n


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*|/\*.*?\*/)
  | (?P<string>[eEbBxXnN]?'(?:[^']|'')*'?)
  | (?P<qident>"(?:[^"]|"")*"?|`[^`]*`?|\[[^\]]*\])
  | (?P<dollar>\$(?P<tag>[A-Za-z_][A-Za-z0-9_]*)?\$.*?\$(?P=tag)\$)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<op>::|<=|>=|<>|!=|==|\|\||->>|->|<<|>>|[-+*/%<>=~!^&|])
  | (?P<param>[$?:@][A-Za-z0-9_]*)
  | (?P<word>[A-Za-z_\x80-\uffff][A-Za-z0-9_$\x80-\uffff]*)
  | (?P<punct>[(),.;\[\]{}])
  | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str

    @property
    def upper(self) -> str:
        return self.text.upper()


def tokenize(sql: str) -> List[Token]:
    """Lex ``sql`` into significant tokens (whitespace and comments dropped)."""
    out = []
    for m in _TOKEN_RE.finditer(sql):
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        if kind == "dollar":
            kind = "string"
        out.append(Token(kind, m.group(0)))
    return out


_PSQL_VAR = re.compile(r":(?:'([A-Za-z_]\w*)'|\"([A-Za-z_]\w*)\"|([A-Za-z_]\w*))")


def find_psql_variables(sql: str) -> List[str]:
    """Names of psql variable references (``:name``, ``:'name'``, ``:"name"``)
    appearing outside quotes and comments, in order of first use."""
    names: List[str] = []
    i, n = 0, len(sql)
    while i < n:
        c = sql[i]
        if c == ":":
            prev = sql[i - 1] if i else ""
            if prev != ":" and prev not in _IDENT_CHARS and not sql.startswith("::", i):
                m = _PSQL_VAR.match(sql, i)
                if m:
                    name = m.group(1) or m.group(2) or m.group(3)
                    if name not in names:
                        names.append(name)
                    i = m.end()
                    continue
            i += 1
            continue
        skipped = skip_opaque(sql, i)
        i = skipped if skipped is not None else i + 1
    return names
