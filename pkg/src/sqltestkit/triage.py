"""Rule-based classification of failed test records.

A failure on its own donor engine is a dependency problem (RQ3 labels); a
failure on another engine is an incompatibility (RQ4 labels). Rules are read
from YAML, evaluated in order, and the first match wins.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import yaml

from .analyzer import classify_statement

RQ3 = "RQ3"
RQ4 = "RQ4"
RQ3_LABELS = frozenset({"env-file-paths", "env-setting", "env-setup", "extension",
                        "client-format", "client-numeric", "client-exception", "runner"})
RQ4_LABELS = frozenset({"statements", "functions", "types", "operators", "configurations",
                        "semantic", "misc", "timeout", "crash"})
LABELS = {RQ3: RQ3_LABELS, RQ4: RQ4_LABELS}

STATUS_MISMATCH = "status-mismatch"
RESULT_MISMATCH = "result-mismatch"
CRASH = "crash"
TIMEOUT = "timeout"
OUTCOME_KINDS = (STATUS_MISMATCH, RESULT_MISMATCH, CRASH, TIMEOUT)

DEFAULT_RULE_LIMIT = 15


class RuleError(ValueError):
    pass


class RuleLimitExceeded(RuleError):
    def __init__(self, count: int, limit: int, scope: Tuple[str, str, str]):
        super().__init__(f"{count} rules apply to {'/'.join(scope)}; the limit is {limit}")
        self.count = count
        self.limit = limit
        self.scope = scope


@dataclass(frozen=True)
class FailureCategory:
    taxonomy: str
    label: str

    def __post_init__(self):
        if self.taxonomy not in LABELS:
            raise RuleError(f"unknown taxonomy {self.taxonomy!r}")
        if self.label not in LABELS[self.taxonomy]:
            raise RuleError(f"{self.label!r} is not a {self.taxonomy} label")

    def __str__(self) -> str:
        return f"{self.taxonomy}:{self.label}"


@dataclass(frozen=True)
class FailureRecord:
    suite: str  # donor engine tag of the suite
    host: str
    script_path: str
    line: int
    sql: str
    expected: str
    actual: Optional[str]
    outcome: str
    error_message: Optional[str] = None

    def __post_init__(self):
        if self.outcome not in OUTCOME_KINDS:
            raise ValueError(f"unknown outcome kind {self.outcome!r}")
        if self.outcome in (CRASH, TIMEOUT) and self.actual is not None:
            raise ValueError("crash and timeout failures carry no actual result")

    @property
    def taxonomy(self) -> str:
        return RQ3 if self.suite == self.host else RQ4

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FailureRecord":
        return cls(**{k: d.get(k) for k in cls.__dataclass_fields__})


_MATCHER_KEYS = {"statement_type", "sql", "error", "expected", "actual", "outcome", "approx"}


@dataclass(frozen=True)
class TriageRule:
    id: str
    category: FailureCategory
    statement_types: Tuple[str, ...] = ()
    sql: Optional[str] = None
    error: Optional[str] = None
    expected: Optional[str] = None
    actual: Optional[str] = None
    outcome: Optional[str] = None
    approx: Optional[float] = None
    suite: str = "*"
    host: str = "*"
    note: str = ""
    _compiled: Dict[str, "re.Pattern"] = field(default_factory=dict, compare=False, repr=False)

    @property
    def taxonomy(self) -> str:
        return self.category.taxonomy

    def __post_init__(self):
        if self.outcome is not None and self.outcome not in (STATUS_MISMATCH, RESULT_MISMATCH):
            raise RuleError(f"rule {self.id}: outcome must be status-mismatch or result-mismatch")
        if self.category.label == "semantic" and self.outcome != RESULT_MISMATCH:
            raise RuleError(f"rule {self.id}: semantic rules must require outcome result-mismatch")
        if self.category.label in (CRASH, TIMEOUT):
            raise RuleError(f"rule {self.id}: crash and timeout are assigned without rules")
        for name in ("sql", "error", "expected", "actual"):
            pattern = getattr(self, name)
            if pattern is not None:
                try:
                    self._compiled[name] = re.compile(pattern, re.IGNORECASE)
                except re.error as exc:
                    raise RuleError(f"rule {self.id}: bad {name} pattern: {exc}") from exc

    def applies_to(self, rec: FailureRecord) -> bool:
        return (self.taxonomy == rec.taxonomy
                and self.suite in ("*", rec.suite) and self.host in ("*", rec.host))

    def matches(self, rec: FailureRecord) -> bool:
        if not self.applies_to(rec):
            return False
        if self.outcome is not None and rec.outcome != self.outcome:
            return False
        if self.statement_types and classify_statement(rec.sql) not in self.statement_types:
            return False
        for name, text in (("sql", rec.sql), ("error", rec.error_message),
                           ("expected", rec.expected), ("actual", rec.actual)):
            pattern = self._compiled.get(name)
            if pattern is not None and (text is None or not pattern.search(text)):
                return False
        if self.approx is not None and not _numerically_close(rec.expected, rec.actual, self.approx):
            return False
        return True


def _numerically_close(expected: Optional[str], actual: Optional[str], tol: float) -> bool:
    if expected is None or actual is None:
        return False
    e_tok, a_tok = expected.split(), actual.split()
    if len(e_tok) != len(a_tok) or e_tok == a_tok:
        return False
    for e, a in zip(e_tok, a_tok):
        if e == a:
            continue
        try:
            ev, av = float(e), float(a)
        except ValueError:
            return False
        if math.isnan(ev) or math.isnan(av) or abs(av - ev) > tol * max(abs(ev), 1.0):
            return False
    return True


@dataclass(frozen=True)
class RuleSet:
    rules: Tuple[TriageRule, ...]
    limit: int = DEFAULT_RULE_LIMIT
    version: int = 1

    def __iter__(self):
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)


def check_rule_limit(rules: Sequence[TriageRule], limit: int = DEFAULT_RULE_LIMIT) -> None:
    """Reject rule lists where more than ``limit`` rules apply to one (taxonomy, suite, host)."""
    scopes = {(r.taxonomy, r.suite, r.host) for r in rules}
    for tax, suite, host in sorted(scopes):
        # a concrete scope also inherits every wildcard rule
        n = sum(1 for r in rules if r.taxonomy == tax
                and r.suite in ("*", suite) and r.host in ("*", host))
        if n > limit:
            raise RuleLimitExceeded(n, limit, (tax, suite, host))


def parse_rules(data: Union[str, dict]) -> RuleSet:
    """Build a :class:`RuleSet` from YAML text or an already loaded mapping."""
    if isinstance(data, str):
        data = yaml.safe_load(data) or {}
    if not isinstance(data, dict) or not isinstance(data.get("rules", []), list):
        raise RuleError("ruleset must be a mapping with a 'rules' list")
    limit = int(data.get("limit", DEFAULT_RULE_LIMIT))
    rules = []
    seen = set()
    for i, entry in enumerate(data.get("rules") or []):
        if not isinstance(entry, dict) or "id" not in entry:
            raise RuleError(f"rule #{i + 1} needs an id")
        rid = str(entry["id"])
        if rid in seen:
            raise RuleError(f"duplicate rule id {rid!r}")
        seen.add(rid)
        match = entry.get("match") or {}
        unknown = set(match) - _MATCHER_KEYS
        if unknown:
            raise RuleError(f"rule {rid}: unknown matcher(s) {sorted(unknown)}")
        stypes = match.get("statement_type") or ()
        if isinstance(stypes, str):
            stypes = (stypes,)
        rules.append(TriageRule(
            id=rid,
            category=FailureCategory(str(entry.get("taxonomy", "")), str(entry.get("category", ""))),
            statement_types=tuple(s.upper() for s in stypes),
            sql=match.get("sql"), error=match.get("error"),
            expected=match.get("expected"), actual=match.get("actual"),
            outcome=match.get("outcome"),
            approx=float(match["approx"]) if match.get("approx") is not None else None,
            suite=str(entry.get("suite", "*")), host=str(entry.get("host", "*")),
            note=str(entry.get("note", "")),
        ))
    check_rule_limit(rules, limit)
    return RuleSet(tuple(rules), limit, int(data.get("version", 1)))


def load_rules(path: str) -> RuleSet:
    with open(path, encoding="utf-8") as fh:
        return parse_rules(fh.read())


def starter_rules() -> RuleSet:
    text = resources.files("sqltestkit").joinpath("rules/starter.yaml").read_text(encoding="utf-8")
    return parse_rules(text)


def classify_failure(rec: FailureRecord, rules: Iterable[TriageRule]) -> Optional[FailureCategory]:
    """Category of the first matching rule; ``None`` means unclassified."""
    if rec.outcome == CRASH:
        return FailureCategory(RQ4, "crash")
    if rec.outcome == TIMEOUT:
        return FailureCategory(RQ4, "timeout")
    rule = first_match(rec, rules)
    return rule.category if rule else None


def first_match(rec: FailureRecord, rules: Iterable[TriageRule]) -> Optional[TriageRule]:
    for rule in rules:
        if rule.matches(rec):
            return rule
    return None


def sample_failures(failures: Sequence[FailureRecord], n: int, seed: int) -> List[FailureRecord]:
    if n < 0:
        raise ValueError("sample size must be non-negative")
    failures = list(failures)
    if n >= len(failures):
        return failures
    return random.Random(seed).sample(failures, n)


@dataclass
class Coverage:
    classified_fraction: float
    unclassified: List[FailureRecord]


def rule_coverage(failures: Sequence[FailureRecord], rules: Iterable[TriageRule]) -> Coverage:
    rules = list(rules)
    residue = [f for f in failures if classify_failure(f, rules) is None]
    if not failures:
        return Coverage(1.0, [])
    return Coverage((len(failures) - len(residue)) / len(failures), residue)


# -- reports --------------------------------------------------------------------

def triage(failures: Sequence[FailureRecord], rules: Iterable[TriageRule]) -> List[dict]:
    rules = list(rules)
    out = []
    for rec in failures:
        rule = None if rec.outcome in (CRASH, TIMEOUT) else first_match(rec, rules)
        cat = classify_failure(rec, rules)
        d = rec.to_dict()
        d["category"] = str(cat) if cat else None
        d["rule"] = rule.id if rule else None
        out.append(d)
    return out


def category_table(classified: Sequence[dict]) -> Tuple[List[str], Dict[str, Dict[str, int]]]:
    """Counts per category label and host, with unclassified failures last."""
    hosts = sorted({c["host"] for c in classified})
    counts: Dict[str, Counter] = {}
    for c in classified:
        counts.setdefault(c["category"] or "unclassified", Counter())[c["host"]] += 1
    order = sorted(k for k in counts if k != "unclassified")
    if "unclassified" in counts:
        order.append("unclassified")
    return hosts, {k: {h: counts[k][h] for h in hosts} for k in order}


def triage_to_csv(classified: Sequence[dict]) -> str:
    hosts, table = category_table(classified)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["category"] + hosts)
    for cat, row in table.items():
        w.writerow([cat] + [row[h] for h in hosts])
    return buf.getvalue()


def triage_to_json(classified: Sequence[dict]) -> str:
    hosts, table = category_table(classified)
    return json.dumps({"hosts": hosts, "counts": table, "failures": list(classified)},
                      indent=2) + "\n"
