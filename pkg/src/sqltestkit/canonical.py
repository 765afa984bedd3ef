"""Rendering, ordering, digesting and comparison of query results.

Cells are rendered under the declared column letter (``T``, ``I`` or ``R``)
following the sqllogictest conventions, then sorted as text. Sorting is
always by code point on the rendered strings, never numeric.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from decimal import Decimal
from typing import List, Optional, Sequence, Tuple

from .ir import ExpectedResult, Shape, SortMode

_NUMERIC_PREFIX = re.compile(r"^\s*[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_INT64_MAX = 2 ** 63 - 1
_INT64_MIN = -(2 ** 63)


class RenderError(ValueError):
    pass


class ArityMismatch(ValueError):
    """Result column count differs from the declared type-string."""


@dataclass(frozen=True)
class ComparePolicy:
    mode: str = "strict"  # "strict" | "approx"
    tolerance: float = 0.01
    null_text: str = "NULL"
    empty_text: str = "(empty)"
    bool_text: Tuple[str, str] = ("true", "false")

    def __post_init__(self):
        if self.mode not in ("strict", "approx"):
            raise ValueError(f"unknown compare mode {self.mode!r}")
        if self.mode == "approx" and not 0 < self.tolerance < 1:
            raise ValueError("approx tolerance must lie in (0, 1)")

    @classmethod
    def parse(cls, text: str, **kw) -> "ComparePolicy":
        """Build from ``"strict"``, ``"approx"`` or ``"approx:<tol>"``."""
        if text == "strict":
            return cls(**kw)
        if text == "approx":
            return cls(mode="approx", **kw)
        if text.startswith("approx:"):
            return cls(mode="approx", tolerance=float(text.split(":", 1)[1]), **kw)
        raise ValueError(f"unknown compare policy {text!r}")


STRICT = ComparePolicy()
# psql prints NULL and empty strings alike as nothing, booleans as t/f
PSQL_POLICY = ComparePolicy(null_text="", empty_text="", bool_text=("t", "f"))


@dataclass(frozen=True)
class CanonicalResult:
    lines: Tuple[str, ...]
    shape: Shape = Shape.VALUE_WISE
    value_count: Optional[int] = None
    hash: Optional[str] = None

    @property
    def is_digest(self) -> bool:
        return self.hash is not None

    def summary(self) -> str:
        if self.is_digest:
            return f"{self.value_count} values hashing to {self.hash}"
        return "\n".join(self.lines)


def _numeric_prefix(text: str):
    m = _NUMERIC_PREFIX.match(text)
    if not m:
        return 0
    token = m.group(0).strip()
    if re.match(r"^[+-]?\d+$", token):
        return int(token)
    return float(token)


def _as_int(value) -> int:
    if isinstance(value, float):
        if math.isnan(value):
            return 0
        if math.isinf(value):
            return _INT64_MAX if value > 0 else _INT64_MIN
    return int(value)  # truncates toward zero for float and Decimal


def render_cell(cell, declared: str, policy: ComparePolicy = STRICT) -> str:
    """Render one cell as text under a declared column type."""
    if cell is None:
        return policy.null_text
    if declared == "I":
        if isinstance(cell, bool):
            return "1" if cell else "0"
        if isinstance(cell, (bytes, bytearray, memoryview)):
            raise RenderError("blob cannot be rendered as an integer")
        if isinstance(cell, str):
            cell = _numeric_prefix(cell)
        return str(_as_int(cell))
    if declared == "R":
        if isinstance(cell, (bytes, bytearray, memoryview)):
            raise RenderError("blob cannot be rendered as a real")
        if isinstance(cell, str):
            cell = _numeric_prefix(cell)
        if isinstance(cell, bool):
            cell = int(cell)
        if isinstance(cell, int):
            return f"{cell}.000"
        if isinstance(cell, Decimal):
            return f"{cell:.3f}"
        return f"{float(cell):.3f}"
    if declared == "T":
        if isinstance(cell, str):
            text = cell
        elif isinstance(cell, bool):
            text = policy.bool_text[0] if cell else policy.bool_text[1]
        elif isinstance(cell, (bytes, bytearray, memoryview)):
            text = bytes(cell).decode("utf-8", errors="backslashreplace")
        else:
            text = str(cell)
        return policy.empty_text if text == "" else text
    raise RenderError(f"unknown column type {declared!r}")


def render_row(row: Sequence, types: str, policy: ComparePolicy = STRICT) -> List[str]:
    out = []
    for cell, letter in zip(row, types):
        try:
            out.append(render_cell(cell, letter, policy))
        except RenderError as exc:
            # surfaces as a value-level mismatch instead of aborting the record
            out.append(f"<render error: {exc}>")
    return out


def canonicalize(table, types: str, sort: SortMode = SortMode.NOSORT,
                 shape: Shape = Shape.VALUE_WISE, policy: ComparePolicy = STRICT) -> CanonicalResult:
    """Render, order and lay out ``table`` (anything with ``column_count`` and ``rows``).

    Raises :class:`ArityMismatch` when the column count disagrees with ``types``.
    """
    if table.column_count != len(types):
        raise ArityMismatch(f"expected {len(types)} columns, got {table.column_count}")
    sort = SortMode(sort)
    rendered = [render_row(row, types, policy) for row in table.rows]
    if sort is SortMode.ROWSORT:
        rendered.sort(key=lambda r: "\t".join(r))
    if shape is Shape.ROW_WISE:
        lines = ["\t".join(r) for r in rendered]
        if sort is SortMode.VALUESORT:
            # row-wise valuesort keeps the row layout but orders every value
            flat = sorted(v for r in rendered for v in r)
            width = len(types)
            lines = ["\t".join(flat[i:i + width]) for i in range(0, len(flat), width)]
        return CanonicalResult(tuple(lines), Shape.ROW_WISE)
    values = [v for r in rendered for v in r]
    if sort is SortMode.VALUESORT:
        values.sort()
    return CanonicalResult(tuple(values), Shape.VALUE_WISE)


def hash_lines(lines: Sequence[str]) -> str:
    h = hashlib.md5()
    for line in lines:
        h.update(line.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def digest(result: CanonicalResult, threshold: int) -> CanonicalResult:
    """Replace the lines by ``(count, md5)`` once they exceed ``threshold`` (0 disables)."""
    if result.is_digest or threshold <= 0 or len(result.lines) <= threshold:
        return result
    return force_digest(result)


def force_digest(result: CanonicalResult) -> CanonicalResult:
    if result.is_digest:
        return result
    return CanonicalResult((), Shape.DIGEST, len(result.lines), hash_lines(result.lines))


# -- comparison ---------------------------------------------------------------

class Match:
    def __bool__(self) -> bool:
        return True

    def __repr__(self) -> str:
        return "Match()"

    def __eq__(self, other) -> bool:
        return isinstance(other, Match)

    __hash__ = object.__hash__


@dataclass(frozen=True)
class Mismatch:
    index: int
    expected: Optional[str]
    actual: Optional[str]

    def __bool__(self) -> bool:
        return False


def _close(e: str, a: str, tol: float) -> bool:
    try:
        ev, av = float(e), float(a)
    except ValueError:
        return False
    if math.isnan(ev) or math.isnan(av):
        return False
    return abs(av - ev) <= tol * max(abs(ev), 1.0)


def _line_matches(e: str, a: str, policy: ComparePolicy, line_types: Optional[str]) -> bool:
    if e == a:
        return True
    if policy.mode != "approx":
        return False
    e_tok, a_tok = e.split("\t"), a.split("\t")
    if len(e_tok) != len(a_tok):
        return False
    for j, (et, at) in enumerate(zip(e_tok, a_tok)):
        if et == at:
            continue
        if line_types is not None and (j >= len(line_types) or line_types[j] != "R"):
            return False
        if not _close(et, at, policy.tolerance):
            return False
    return True


def compare(expected: ExpectedResult, actual: CanonicalResult, policy: ComparePolicy = STRICT,
            types: Optional[str] = None):
    """Compare an expected block with a canonical result.

    Returns :class:`Match` or :class:`Mismatch` (first divergent line).
    When exactly one side is a digest, the other side is digested first.
    ``types`` restricts approximate matching to ``R`` columns.
    """
    if expected.shape is Shape.DIGEST or actual.is_digest:
        exp = (expected.value_count, expected.hash) if expected.shape is Shape.DIGEST else \
            (len(expected.lines), hash_lines(expected.lines))
        act = force_digest(actual)
        if exp == (act.value_count, act.hash):
            return Match()
        return Mismatch(0, f"{exp[0]} values hashing to {exp[1]}", act.summary())

    e_lines, a_lines = expected.lines, actual.lines
    for i in range(max(len(e_lines), len(a_lines))):
        e = e_lines[i] if i < len(e_lines) else None
        a = a_lines[i] if i < len(a_lines) else None
        if e is None or a is None:
            return Mismatch(i, e, a)
        line_types = None
        if types is not None:
            line_types = types if expected.shape is Shape.ROW_WISE else types[i % len(types)]
        if not _line_matches(e, a, policy, line_types):
            return Mismatch(i, e, a)
    return Match()
