"""Run test scripts against an engine and collect per-record verdicts.

Every file gets its own session. Records run strictly in order; controls
update the run state (halt, require, loops, variables, hash threshold) and
only Statement, Query and ClientCommand records produce outcomes.
"""

from __future__ import annotations

import csv
import io
import json
import re
import shutil
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

from .adapters import (
    ConnectionLost, ConnectionSpec, EngineError, QueryTable, SetupError, StatementTimeout,
    canonical_engine, execute, open_session, teardown,
)
from .canonical import (
    STRICT, ArityMismatch, ComparePolicy, PSQL_POLICY, canonicalize, compare, digest,
)
from .ir import (
    ClientCommand, Dialect, ExpectedResult, Halt, HashThreshold, Load, Loop, Mode, OnlyIf, Query,
    Require, SetVariable, Shape, SkipIf, Statement, TestRecord, TestScript,
)
from .triage import CRASH, RESULT_MISMATCH, STATUS_MISMATCH, TIMEOUT, FailureRecord

PASS, FAIL, SKIP = "pass", "fail", "skip"
VERDICTS = (PASS, FAIL, SKIP, CRASH, TIMEOUT)

DONOR_OF_DIALECT = {
    Dialect.SLT_SQLITE: "sqlite",
    Dialect.SLT_DUCKDB: "duckdb",
    Dialect.PG_REGRESSION: "postgresql",
}

# DuckDB-style path roots such as __TEST_DIR__ or __WORKING_DIRECTORY__
_PLACEHOLDER = re.compile(r"__[A-Z][A-Z0-9_]*__")
_BRACED = re.compile(r"\$\{([A-Za-z_]\w*)\}")


def host_tag(tag: str) -> str:
    return canonical_engine(tag.strip())


@dataclass(frozen=True)
class RunOptions:
    host: str = "sqlite"
    policy: ComparePolicy = STRICT
    timeout: Optional[float] = None  # overrides the connection spec when set
    loop_cap: int = 10_000
    bindings: Mapping[str, str] = field(default_factory=dict, hash=False)
    extensions: FrozenSet[str] = frozenset()
    stop_on_crash: bool = True
    file_budget: float = 600.0
    check_labels: bool = False
    suite: Optional[str] = None  # donor tag; derived from the dialect when None

    def __post_init__(self):
        if self.loop_cap < 1:
            raise ValueError("loop cap must be at least 1")
        object.__setattr__(self, "host", host_tag(self.host))


@dataclass
class Outcome:
    line: int
    verdict: str
    sql: Optional[str] = None
    reason: Optional[str] = None  # skip reason or failure detail
    failure: Optional[FailureRecord] = None
    duration: float = 0.0

    def to_dict(self, timings: bool = False) -> dict:
        d = {"line": self.line, "verdict": self.verdict}
        if self.sql is not None:
            d["sql"] = self.sql
        if self.reason is not None:
            d["reason"] = self.reason
        if self.failure is not None:
            d["failure"] = self.failure.to_dict()
        if timings:
            d["duration"] = round(self.duration, 6)
        return d


def _counts(outcomes: Sequence[Outcome]) -> Dict[str, int]:
    c = {v: 0 for v in VERDICTS}
    for o in outcomes:
        c[o.verdict] += 1
    return {
        "total": len(outcomes),
        "executed": c[PASS] + c[FAIL],
        "passed": c[PASS],
        "failed": c[FAIL],
        "skipped": c[SKIP],
        "crashed": c[CRASH],
        "timed_out": c[TIMEOUT],
    }


def _rate(counts: Mapping[str, int]) -> Optional[float]:
    return counts["passed"] / counts["executed"] if counts["executed"] else None


@dataclass
class FileReport:
    path: str
    outcomes: List[Outcome] = field(default_factory=list)
    setup_error: Optional[str] = None
    notes: List[str] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def counts(self) -> Dict[str, int]:
        return _counts(self.outcomes)

    def to_dict(self, timings: bool = False) -> dict:
        d = {"path": self.path, "counts": self.counts}
        if self.setup_error is not None:
            d["setup_error"] = self.setup_error
        if self.notes:
            d["notes"] = list(self.notes)
        if timings:
            d["wall_clock"] = round(self.wall_clock, 6)
        d["outcomes"] = [o.to_dict(timings) for o in self.outcomes]
        return d


@dataclass
class RunReport:
    host: str
    suite: Optional[str]
    files: List[FileReport] = field(default_factory=list)

    @property
    def outcomes(self) -> List[Outcome]:
        return [o for f in self.files for o in f.outcomes]

    @property
    def counts(self) -> Dict[str, int]:
        return _counts(self.outcomes)

    @property
    def success_rate(self) -> Optional[float]:
        return _rate(self.counts)

    @property
    def failures(self) -> List[FailureRecord]:
        return [o.failure for o in self.outcomes if o.failure is not None]

    @property
    def setup_errors(self) -> int:
        return sum(1 for f in self.files if f.setup_error is not None)

    def to_dict(self, timings: bool = False) -> dict:
        counts = self.counts
        return {
            "host": self.host,
            "suite": self.suite,
            "counts": counts,
            "success_rate": _rate(counts),
            "setup_errors": self.setup_errors,
            "files": [f.to_dict(timings) for f in self.files],
        }

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True) + "\n"

    def summary(self) -> str:
        c = self.counts
        rate = self.success_rate
        rate_text = "n/a" if rate is None else f"{rate:.2%}"
        return (f"{self.suite or '?'} on {self.host}: {len(self.files)} files, {c['total']} records, "
                f"{c['executed']} executed, {c['passed']} passed, {c['failed']} failed, "
                f"{c['skipped']} skipped, {c['crashed']} crashed, {c['timed_out']} timed out, "
                f"success rate {rate_text}, {self.setup_errors} setup errors")


def failures_from_report(data: Mapping) -> List[FailureRecord]:
    """Recover failure records from a report produced by :meth:`RunReport.to_dict`."""
    out = []
    for f in data.get("files", []):
        for o in f.get("outcomes", []):
            if o.get("failure"):
                out.append(FailureRecord.from_dict(o["failure"]))
    return out


# -- substitution ---------------------------------------------------------------

def substitute(text: str, bindings: Mapping[str, str], psql: bool = False) -> str:
    """Replace ``${name}``, ``$name``, ``__NAME__`` and (for psql) ``:name`` references."""
    for name, value in bindings.items():
        if not re.match(r"^[A-Za-z_]\w*$", name):
            continue
        text = text.replace("${" + name + "}", value)
        text = re.sub(r"\$" + re.escape(name) + r"(?![\w$])", lambda m: value, text)
        if psql:
            text = text.replace(f":'{name}'", "'" + value.replace("'", "''") + "'")
            text = text.replace(f':"{name}"', '"' + value.replace('"', '""') + '"')
            text = re.sub(r"(?<![\w:]):" + re.escape(name) + r"\b", lambda m: value, text)
    for m in set(_PLACEHOLDER.findall(text)):
        key = m.strip("_")
        for candidate in (m, key, key.lower()):
            if candidate in bindings:
                text = text.replace(m, bindings[candidate])
                break
    return text


def unresolved(text: str, psql_vars: Sequence[str] = (), bindings: Mapping[str, str] = {}) -> List[str]:
    missing = sorted(set(_PLACEHOLDER.findall(text)) | {"${%s}" % n for n in _BRACED.findall(text)})
    missing += [":" + v for v in psql_vars if v not in bindings]
    return missing


# -- per-file execution -----------------------------------------------------------

class _FileRun:
    def __init__(self, script: TestScript, spec: ConnectionSpec, options: RunOptions):
        self.script = script
        self.spec = spec
        self.options = options
        self.report = FileReport(script.source_path)
        self.psql = script.dialect is Dialect.PG_REGRESSION
        self.suite = options.suite or DONOR_OF_DIALECT[script.dialect]
        self.policy = options.policy
        if self.psql:
            self.policy = replace(options.policy, null_text=PSQL_POLICY.null_text,
                                  empty_text=PSQL_POLICY.empty_text, bool_text=PSQL_POLICY.bool_text)
        self.bindings: Dict[str, str] = {}
        self.threshold = 0
        self.stop_reason: Optional[str] = None  # once set, every later record is skipped
        self.labels: Dict[str, Tuple[str, ...]] = {}
        self.session = None
        self.deadline = 0.0
        self.expanded = 0
        self.capped = False
        self.sessions_opened = 0

    # records, with loops expanded lazily and loop variables substituted
    def _expand(self, records, loop_vars: Dict[str, str]) -> Iterator[Tuple[TestRecord, Dict[str, str]]]:
        for rec in records:
            if isinstance(rec.body, Loop) and self._conditions_hold(rec) is None:
                loop = rec.body
                for value in range(loop.start, loop.end):
                    if self.expanded >= self.options.loop_cap:
                        if not self.capped:
                            self.capped = True
                            self.report.notes.append(
                                f"line {rec.line}: loop expansion capped at {self.options.loop_cap} iterations")
                        break
                    self.expanded += 1
                    yield from self._expand(loop.body, {**loop_vars, loop.var: str(value)})
            else:
                yield rec, loop_vars

    def _conditions_hold(self, rec: TestRecord) -> Optional[str]:
        """None when the record should run, else the skip reason."""
        host = self.options.host
        for cond in rec.conditions:
            system = host_tag(cond.system)
            if cond.polarity == "skipif" and system == host:
                return f"skipif {cond.system}"
            if cond.polarity == "onlyif" and system != host:
                return f"onlyif {cond.system}"
        return None

    def _open(self):
        # sessions reopened after a crash or timeout get their own label, so a
        # recorded mock script replays each session separately
        self.sessions_opened += 1
        label = self.script.source_path
        if self.sessions_opened > 1:
            label = f"{label}#{self.sessions_opened}"
        self.session = open_session(self.spec, label)

    def _recycle(self):
        teardown(self.session)
        self._open()

    def run(self) -> FileReport:
        start = time.monotonic()
        self.deadline = start + self.options.file_budget
        tmp = tempfile.mkdtemp(prefix="sqltestkit-")
        self.bindings = {"TEST_DIR": tmp}
        self.bindings.update(self.options.bindings)
        try:
            try:
                self._open()
            except SetupError as exc:
                self.report.setup_error = str(exc)
                return self.report
            for rec, loop_vars in self._expand(self.script.records, {}):
                self._step(rec, loop_vars)
        finally:
            if self.session is not None:
                teardown(self.session)
            shutil.rmtree(tmp, ignore_errors=True)
            self.report.wall_clock = time.monotonic() - start
        return self.report

    def _skip(self, rec: TestRecord, reason: str, sql: Optional[str] = None):
        self.report.outcomes.append(Outcome(rec.line, SKIP, sql if sql is not None else rec.sql, reason))

    def _step(self, rec: TestRecord, loop_vars: Dict[str, str]) -> None:
        body = rec.body
        produces = rec.is_test_case or isinstance(body, ClientCommand)
        if self.stop_reason is not None:
            if produces:
                self._skip(rec, self.stop_reason)
            return
        if time.monotonic() > self.deadline:
            self.stop_reason = "file-budget"
            self.report.notes.append(f"line {rec.line}: per-file budget exhausted")
            if produces:
                self._skip(rec, self.stop_reason)
            return
        cond_skip = self._conditions_hold(rec)
        if cond_skip is not None:
            if produces:
                self._skip(rec, cond_skip)
            return

        if isinstance(body, Halt):
            self.stop_reason = "halt"
        elif isinstance(body, HashThreshold):
            self.threshold = body.n
        elif isinstance(body, Require):
            if body.name not in self.options.extensions:
                self.stop_reason = f"require:{body.name}"
        elif isinstance(body, SetVariable):
            self.bindings[body.name] = substitute(body.value, {**self.bindings, **loop_vars})
        elif isinstance(body, Load):
            self._load(rec, body, loop_vars)
        elif isinstance(body, ClientCommand):
            self._skip(rec, "unresolved-include" if rec.meta.get("unresolved") == "include"
                       else "client-command", body.raw)
        elif isinstance(body, (Mode, SkipIf, OnlyIf)):
            pass  # recorded by the parser, no effect at run time
        elif isinstance(body, (Statement, Query)):
            self._execute(rec, loop_vars)

    def _load(self, rec: TestRecord, body: Load, loop_vars) -> None:
        path = substitute(body.resource, {**self.bindings, **loop_vars})
        missing = unresolved(path)
        if missing:
            self.report.notes.append(f"line {rec.line}: unresolved path {body.resource}")
            self.stop_reason = "unresolved-path"
            return
        try:
            self.session.reopen(path)
        except (EngineError, SetupError) as exc:
            self.report.notes.append(f"line {rec.line}: load {path} failed: {exc}")
            self.stop_reason = "unresolved-path"

    def _fail(self, rec: TestRecord, sql: str, kind: str, expected: str, actual: Optional[str],
              error: Optional[str], detail: str, duration: float) -> None:
        failure = FailureRecord(self.suite, self.options.host, self.script.source_path, rec.line,
                                sql, expected, actual, kind, error)
        verdict = kind if kind in (CRASH, TIMEOUT) else FAIL
        self.report.outcomes.append(Outcome(rec.line, verdict, sql, detail, failure, duration))

    def _execute(self, rec: TestRecord, loop_vars: Dict[str, str]) -> None:
        if rec.meta.get("unaligned"):
            self._skip(rec, "unaligned")
            return
        psql_vars = [v for v in rec.meta.get("client_variables", "").split(",") if v]
        sql = substitute(rec.sql, {**self.bindings, **loop_vars}, self.psql)
        missing = unresolved(sql, psql_vars, self.bindings)
        if missing:
            self._skip(rec, "unresolved-path", sql)
            return
        body = rec.body
        expected = _expected_summary(body)
        t0 = time.monotonic()
        table = error = None
        try:
            table = execute(self.session, sql)
        except EngineError as exc:
            error = exc.message
        except ConnectionLost as exc:
            self._fail(rec, sql, CRASH, expected, None, str(exc), "connection lost", time.monotonic() - t0)
            if self.options.stop_on_crash:
                self.stop_reason = "crashed"
            else:
                self._recycle()
            return
        except StatementTimeout as exc:
            self._fail(rec, sql, TIMEOUT, expected, None, str(exc), "timeout", time.monotonic() - t0)
            self._recycle()
            return
        duration = time.monotonic() - t0

        if isinstance(body, Statement):
            if not body.expect_error:
                if error is None:
                    self._pass(rec, sql, duration)
                else:
                    self._fail(rec, sql, STATUS_MISMATCH, expected, f"error: {error}", error,
                               "statement failed", duration)
            elif error is None:
                self._fail(rec, sql, STATUS_MISMATCH, expected, "ok", None,
                           "statement succeeded but an error was expected", duration)
            elif body.error_message and body.error_message not in error:
                self._fail(rec, sql, STATUS_MISMATCH, expected, f"error: {error}", error,
                           "error message differs", duration)
            else:
                self._pass(rec, sql, duration)
            return

        if error is not None:
            self._fail(rec, sql, STATUS_MISMATCH, expected, f"error: {error}", error,
                       "query failed", duration)
            return
        self._check_query(rec, body, sql, table, expected, duration)

    def _pass(self, rec: TestRecord, sql: str, duration: float) -> None:
        self.report.outcomes.append(Outcome(rec.line, PASS, sql, None, None, duration))

    def _check_query(self, rec, q: Query, sql: str, table: Optional[QueryTable], expected: str,
                     duration: float) -> None:
        if table is None:
            table = QueryTable(0, [])
        shape = Shape.ROW_WISE if (self.psql or (q.expected is not None and q.expected.shape is Shape.ROW_WISE)) \
            else Shape.VALUE_WISE
        try:
            actual = canonicalize(table, q.types, q.sort, shape, self.policy)
        except ArityMismatch as exc:
            self._fail(rec, sql, RESULT_MISMATCH, expected, f"{table.column_count} columns", None,
                       str(exc), duration)
            return
        if shape is Shape.VALUE_WISE:
            actual = digest(actual, self.threshold)
        if self.options.check_labels and q.label:
            prior = self.labels.setdefault(q.label, actual.lines or (actual.hash,))
            if prior != (actual.lines or (actual.hash,)):
                self._fail(rec, sql, RESULT_MISMATCH, expected, actual.summary(), None,
                           f"result differs from earlier query labelled {q.label}", duration)
                return
        if q.expected is None:
            self._pass(rec, sql, duration)
            return
        verdict = compare(q.expected, actual, self.policy, q.types)
        if verdict:
            self._pass(rec, sql, duration)
        else:
            detail = f"line {verdict.index}: expected {verdict.expected!r}, got {verdict.actual!r}"
            self._fail(rec, sql, RESULT_MISMATCH, expected, actual.summary(), None, detail, duration)


def _expected_summary(body) -> str:
    if isinstance(body, Statement):
        if not body.expect_error:
            return "ok"
        return f"error: {body.error_message}" if body.error_message else "error"
    exp: Optional[ExpectedResult] = body.expected
    if exp is None:
        return ""
    if exp.shape is Shape.DIGEST:
        return f"{exp.value_count} values hashing to {exp.hash}"
    return "\n".join(exp.lines)


def _effective_spec(spec: ConnectionSpec, options: RunOptions) -> ConnectionSpec:
    if options.timeout is not None:
        return replace(spec, statement_timeout=options.timeout)
    return spec


def run_script_report(script: TestScript, spec: ConnectionSpec, options: RunOptions) -> FileReport:
    return _FileRun(script, _effective_spec(spec, options), options).run()


def run_script(script: TestScript, spec: ConnectionSpec, options: RunOptions) -> List[Outcome]:
    """Execute one file in a fresh session and return its outcomes in order.

    Raises :class:`SetupError` when the session cannot be opened.
    """
    report = run_script_report(script, spec, options)
    if report.setup_error is not None:
        raise SetupError(report.setup_error)
    return report.outcomes


def run_suite(scripts: Sequence[TestScript], spec: ConnectionSpec, options: RunOptions,
              jobs: int = 1) -> RunReport:
    """Run every file in its own session, up to ``jobs`` files at a time."""
    spec = _effective_spec(spec, options)
    suite = options.suite
    if suite is None and scripts:
        donors = {DONOR_OF_DIALECT[s.dialect] for s in scripts}
        suite = donors.pop() if len(donors) == 1 else "mixed"
    if jobs <= 1:
        files = [_FileRun(s, spec, options).run() for s in scripts]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            files = list(pool.map(lambda s: _FileRun(s, spec, options).run(), scripts))
    return RunReport(options.host, suite, files)


# -- cross execution ------------------------------------------------------------

@dataclass
class Matrix:
    suites: List[str]
    hosts: List[str]
    rates: Dict[Tuple[str, str], Optional[float]]
    reports: Dict[Tuple[str, str], Optional[RunReport]]

    def cell(self, suite: str, host: str) -> Optional[float]:
        return self.rates.get((suite, host))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["suite"] + self.hosts)
        for s in self.suites:
            row = [s]
            for h in self.hosts:
                rate = self.rates.get((s, h))
                row.append("" if rate is None else f"{rate:.4f}")
            w.writerow(row)
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "suites": self.suites,
            "hosts": self.hosts,
            "rates": {s: {h: self.rates.get((s, h)) for h in self.hosts} for s in self.suites},
            "available": {s: {h: self.reports.get((s, h)) is not None for h in self.hosts}
                          for s in self.suites},
        }


def engine_available(spec: ConnectionSpec) -> Optional[str]:
    """None when a session can be opened, otherwise the reason it cannot."""
    try:
        session = open_session(spec, None)
    except SetupError as exc:
        return str(exc)
    teardown(session)
    return None


def cross_matrix(suites: Mapping[str, Sequence[TestScript]], specs: Sequence[ConnectionSpec],
                 options: RunOptions = RunOptions(), jobs: int = 1) -> Matrix:
    """Run every suite on every engine with the host tag set to that engine.

    Cells for engines that cannot be opened are absent (None), not zero.
    """
    if not suites or not specs:
        raise ValueError("need at least one suite and one engine")
    hosts = [host_tag(str(spec.parameters.get("host_tag", spec.engine))) for spec in specs]
    rates: Dict[Tuple[str, str], Optional[float]] = {}
    reports: Dict[Tuple[str, str], Optional[RunReport]] = {}
    for spec, host in zip(specs, hosts):
        problem = None if spec.engine == "mock" else engine_available(spec)
        for name, scripts in suites.items():
            if problem is not None:
                rates[(name, host)] = None
                reports[(name, host)] = None
                continue
            report = run_suite(scripts, spec, replace(options, host=host), jobs)
            rates[(name, host)] = report.success_rate
            reports[(name, host)] = report
    return Matrix(list(suites), hosts, rates, reports)


def record_mock_script(scripts: Sequence[TestScript], spec: ConnectionSpec,
                       options: RunOptions) -> Dict[str, List[dict]]:
    """Run ``scripts`` on a real engine and capture every exchange as a mock script."""
    sink: Dict[str, List[dict]] = {}
    inner = _effective_spec(spec, options)
    run_suite(scripts, ConnectionSpec("recording", {"inner": inner, "sink": sink},
                                      inner.statement_timeout), options)
    return sink
