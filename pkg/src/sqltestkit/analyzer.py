"""Statement-type, standard-compliance and predicate statistics over test suites.

Classification looks only at the head keywords of a statement, after comments
and leading parentheses are removed; there is no SQL grammar involved.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence

from .ir import TestScript
from .sqltext import Token, strip_leading_noise, tokenize

UNKNOWN = "UNKNOWN"

# heads that classify on their own
_SINGLE_HEADS = frozenset("""
SELECT INSERT UPDATE DELETE WITH VALUES TABLE FROM MERGE REPLACE UPSERT
PRAGMA SET RESET SHOW DESCRIBE DESC SUMMARIZE EXPLAIN ANALYZE ANALYSE VACUUM REINDEX
CHECKPOINT CLUSTER REFRESH BEGIN COMMIT ROLLBACK END ABORT SAVEPOINT RELEASE
GRANT REVOKE COPY ATTACH DETACH CALL DO TRUNCATE COMMENT LOCK DISCARD PREPARE
EXECUTE DEALLOCATE DECLARE FETCH CLOSE MOVE LISTEN NOTIFY UNLISTEN LOAD INSTALL
IMPORT EXPORT USE PIVOT UNPIVOT SECURITY REASSIGN FORCE UNINSTALL
""".split())

# object kinds after CREATE / DROP / ALTER; multi-word kinds are matched first
_OBJECT_KINDS = (
    ("MATERIALIZED", "VIEW"), ("FOREIGN", "TABLE"), ("FOREIGN", "DATA", "WRAPPER"),
    ("EVENT", "TRIGGER"), ("TEXT", "SEARCH"), ("USER", "MAPPING"), ("ACCESS", "METHOD"),
    ("VIRTUAL", "TABLE"), ("OPERATOR", "CLASS"), ("OPERATOR", "FAMILY"),
    ("DEFAULT", "PRIVILEGES"),
    ("TABLE",), ("VIEW",), ("INDEX",), ("SCHEMA",), ("SEQUENCE",), ("FUNCTION",),
    ("PROCEDURE",), ("TRIGGER",), ("TYPE",), ("DOMAIN",), ("EXTENSION",), ("ROLE",),
    ("USER",), ("DATABASE",), ("MACRO",), ("AGGREGATE",), ("OPERATOR",), ("CAST",),
    ("COLLATION",), ("CONVERSION",), ("LANGUAGE",), ("RULE",), ("POLICY",),
    ("PUBLICATION",), ("SUBSCRIPTION",), ("SERVER",), ("TABLESPACE",), ("STATISTICS",),
    ("SECRET",), ("GROUP",), ("TRANSFORM",), ("ROUTINE",), ("OWNED",), ("SYSTEM",),
    ("COLUMN",), ("CONSTRAINT",),
)
# words between CREATE and the object kind that do not change the kind
_CREATE_MODIFIERS = frozenset(
    "OR REPLACE TEMP TEMPORARY UNIQUE UNLOGGED GLOBAL LOCAL RECURSIVE TRUSTED "
    "PROCEDURAL PERSISTENT CONSTRAINT IF NOT EXISTS".split())
_TWO_WORD = {("START", "TRANSACTION"), ("SET", "TRANSACTION"), ("SET", "SESSION")}

REGISTRY: FrozenSet[str] = frozenset(
    _SINGLE_HEADS
    | {f"{verb} {' '.join(kind)}" for verb in ("CREATE", "DROP", "ALTER") for kind in _OBJECT_KINDS}
    | {"CREATE", "DROP", "ALTER", "START TRANSACTION", "SET TRANSACTION", "SET SESSION", UNKNOWN}
)

DEFAULT_STANDARD_SET = frozenset({
    "SELECT", "INSERT", "UPDATE", "DELETE", "CREATE TABLE", "CREATE VIEW", "DROP", "ALTER",
    "COMMIT", "ROLLBACK", "START TRANSACTION", "WITH", "VALUES", "GRANT", "REVOKE",
    "CREATE SCHEMA", "SET TRANSACTION",
})


class StatementType(str):
    """Upper-case head phrase such as ``SELECT`` or ``CREATE INDEX``."""

    @property
    def name(self) -> str:
        return str(self)


@dataclass(frozen=True)
class CompliancePolicy:
    standard_set: FrozenSet[str] = DEFAULT_STANDARD_SET
    count_create_index_as_standard: bool = False

    def __post_init__(self):
        if not self.standard_set:
            raise ValueError("standard_set must not be empty")


def _head_tokens(sql: str) -> List[Token]:
    text = sql
    while True:
        text = strip_leading_noise(text)
        if text.startswith("("):
            text = text[1:]
            continue
        break
    return tokenize(text[:400])


def classify_statement(sql: str) -> StatementType:
    words = []
    for tok in _head_tokens(sql)[:8]:
        if tok.kind != "word":
            break
        words.append(tok.upper)
    if not words:
        return StatementType(UNKNOWN)
    head = words[0]
    if head in ("CREATE", "DROP", "ALTER"):
        rest = words[1:]
        if head == "CREATE":
            while rest and rest[0] in _CREATE_MODIFIERS:
                rest = rest[1:]
        for kind in _OBJECT_KINDS:
            if tuple(rest[:len(kind)]) == kind:
                return StatementType(f"{head} {' '.join(kind)}")
        return StatementType(head)
    if len(words) > 1 and (head, words[1]) in _TWO_WORD:
        return StatementType(f"{head} {words[1]}")
    if head in _SINGLE_HEADS:
        return StatementType(head)
    return StatementType(UNKNOWN)


def is_standard(stype: str, policy: CompliancePolicy = CompliancePolicy()) -> bool:
    if stype == "CREATE INDEX":
        return policy.count_create_index_as_standard or stype in policy.standard_set
    return stype in policy.standard_set or stype.split(" ", 1)[0] in policy.standard_set


# -- clause scanning ------------------------------------------------------------

WHERE_TERMINATORS = frozenset({"GROUP", "ORDER", "LIMIT", "HAVING", "WINDOW",
                               "UNION", "INTERSECT", "EXCEPT"})
_FROM_TERMINATORS = WHERE_TERMINATORS | {"WHERE", "QUALIFY", "OFFSET", "FETCH"}


def _top_level(sql: str):
    """Tokens paired with their depth relative to the statement's own level."""
    toks = tokenize(sql)
    base = 0
    while base < len(toks) and toks[base].text == "(":
        base += 1
    depth = 0
    out = []
    for tok in toks:
        if tok.text == ")":
            depth -= 1
        out.append((tok, depth - base))
        if tok.text == "(":
            depth += 1
    return out


def _clause(sql: str, start_kw: str, terminators) -> Optional[List[Token]]:
    toks = _top_level(sql)
    for i, (tok, d) in enumerate(toks):
        if d == 0 and tok.kind == "word" and tok.upper == start_kw:
            body = []
            for tok2, d2 in toks[i + 1:]:
                if d2 < 0 or (d2 == 0 and tok2.text == ";"):
                    break
                if d2 == 0 and tok2.kind == "word" and tok2.upper in terminators:
                    break
                body.append(tok2)
            return body
    return None


def where_token_count(sql: str) -> int:
    """Lexical tokens in the top-level WHERE predicate (0 when absent)."""
    body = _clause(sql, "WHERE", WHERE_TERMINATORS)
    return len(body) if body else 0


@dataclass(frozen=True)
class JoinProfile:
    category: str  # "none" | "implicit" | "explicit"
    join_type: Optional[str] = None  # INNER, LEFT, RIGHT, FULL, CROSS

    @property
    def key(self) -> str:
        return f"explicit:{self.join_type}" if self.category == "explicit" else self.category


_JOIN_KINDS = ("INNER", "LEFT", "RIGHT", "FULL", "CROSS")


def join_profile(sql: str) -> JoinProfile:
    body = _clause(sql, "FROM", _FROM_TERMINATORS)
    if not body:
        return JoinProfile("none")
    depth = 0
    commas = 0
    words: List[str] = []
    for tok in body:
        if tok.text == "(":
            depth += 1
        elif tok.text == ")":
            depth -= 1
        elif depth == 0:
            if tok.text == ",":
                commas += 1
            elif tok.kind == "word":
                if tok.upper == "JOIN":
                    kind = next((w for w in reversed(words[-3:]) if w in _JOIN_KINDS), "INNER")
                    return JoinProfile("explicit", kind)
                words.append(tok.upper)
    return JoinProfile("implicit") if commas else JoinProfile("none")


# -- aggregation ----------------------------------------------------------------

DEFAULT_BUCKET_EDGES = (0, 1, 3, 11, 101)


def bucket_labels(edges: Sequence[int]) -> List[str]:
    labels = []
    for i, lo in enumerate(edges):
        if i + 1 == len(edges):
            labels.append(f"{lo}+")
        elif edges[i + 1] - 1 == lo:
            labels.append(str(lo))
        else:
            labels.append(f"{lo}-{edges[i + 1] - 1}")
    return labels


def bucket_of(count: int, edges: Sequence[int]) -> str:
    labels = bucket_labels(edges)
    for i in range(len(edges) - 1, -1, -1):
        if count >= edges[i]:
            return labels[i]
    return labels[0]


@dataclass
class SuiteStats:
    type_counts: Dict[str, int] = field(default_factory=dict)
    total_statements: int = 0
    standard_statements: int = 0
    file_count: int = 0
    files_with_statements: int = 0
    exclusive_standard_files: int = 0
    where_token_histogram: Dict[str, int] = field(default_factory=dict)
    join_profile: Dict[str, int] = field(default_factory=dict)

    def fraction(self, stype: str) -> float:
        return self.type_counts.get(stype, 0) / self.total_statements if self.total_statements else 0.0

    @property
    def type_fractions(self) -> Dict[str, float]:
        return {k: self.fraction(k) for k in self.type_counts}

    @property
    def standard_fraction(self) -> float:
        return self.standard_statements / self.total_statements if self.total_statements else 0.0

    @property
    def exclusive_standard_file_fraction(self) -> float:
        if not self.files_with_statements:
            return 0.0
        return self.exclusive_standard_files / self.files_with_statements

    @property
    def unknown_fraction(self) -> float:
        return self.fraction(UNKNOWN)

    def most_common(self, n: int = 1):
        return Counter(self.type_counts).most_common(n)

    def to_dict(self) -> dict:
        types = sorted(self.type_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return {
            "total_statements": self.total_statements,
            "file_count": self.file_count,
            "files_with_statements": self.files_with_statements,
            "types": [{"type": k, "count": v, "fraction": round(self.fraction(k), 6)} for k, v in types],
            "standard_statements": self.standard_statements,
            "standard_fraction": round(self.standard_fraction, 6),
            "exclusive_standard_files": self.exclusive_standard_files,
            "exclusive_standard_file_fraction": round(self.exclusive_standard_file_fraction, 6),
            "where_token_histogram": dict(self.where_token_histogram),
            "join_profile": dict(sorted(self.join_profile.items())),
        }


def suite_stats(scripts: Iterable[TestScript], policy: CompliancePolicy = CompliancePolicy(),
                bucket_edges: Sequence[int] = DEFAULT_BUCKET_EDGES) -> SuiteStats:
    """Aggregate statement statistics over every Statement and Query record.

    Loop bodies are counted once (unexpanded).
    """
    stats = SuiteStats(where_token_histogram={label: 0 for label in bucket_labels(bucket_edges)})
    types: Counter = Counter()
    joins: Counter = Counter()
    for script in scripts:
        stats.file_count += 1
        n_file = 0
        all_standard = True
        for rec in script.iter_records():
            if not rec.is_test_case:
                continue
            sql = rec.sql
            stype = classify_statement(sql)
            types[stype] += 1
            n_file += 1
            if is_standard(stype, policy):
                stats.standard_statements += 1
            else:
                all_standard = False
            if stype == "SELECT":
                stats.where_token_histogram[bucket_of(where_token_count(sql), bucket_edges)] += 1
                joins[join_profile(sql).key] += 1
        stats.total_statements += n_file
        if n_file:
            stats.files_with_statements += 1
            stats.exclusive_standard_files += all_standard
    stats.type_counts = {str(k): v for k, v in types.items()}
    stats.join_profile = dict(joins)
    return stats


def stats_to_json(stats: SuiteStats) -> str:
    return json.dumps(stats.to_dict(), indent=2, sort_keys=False) + "\n"


def stats_to_csv(stats: SuiteStats) -> Dict[str, str]:
    """Two CSV tables: ``types`` (type, count, fraction) and ``where_tokens`` (bucket, count)."""
    d = stats.to_dict()
    types = io.StringIO()
    w = csv.writer(types, lineterminator="\n")
    w.writerow(["type", "count", "fraction"])
    for row in d["types"]:
        w.writerow([row["type"], row["count"], f"{row['fraction']:.6f}"])
    buckets = io.StringIO()
    w = csv.writer(buckets, lineterminator="\n")
    w.writerow(["bucket", "count"])
    for label, count in stats.where_token_histogram.items():
        w.writerow([label, count])
    return {"types": types.getvalue(), "where_tokens": buckets.getvalue()}
