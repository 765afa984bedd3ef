"""Rule loading, classification and sampling."""

import itertools
import json

import pytest

from sqltestkit.corpus import bundled_path
from sqltestkit.triage import (
    CRASH, RESULT_MISMATCH, STATUS_MISMATCH, TIMEOUT, FailureCategory, FailureRecord, RuleError,
    RuleLimitExceeded, classify_failure, first_match, load_rules, parse_rules, rule_coverage,
    sample_failures, starter_rules, triage, triage_to_csv, triage_to_json,
)


def fail(sql="SELECT 1", error=None, outcome=STATUS_MISMATCH, suite="postgresql", host="duckdb",
         expected="ok", actual=None, line=1):
    if actual is None and outcome in (STATUS_MISMATCH,):
        actual = f"error: {error}" if error else "ok"
    return FailureRecord(suite, host, "x.test", line, sql, expected, actual, outcome, error)


def load_fixture(name):
    with open(bundled_path("triage", name)) as fh:
        data = json.load(fh)
    return [(FailureRecord.from_dict(d), d.get("expected_category")) for d in data]


def many_rules(n, host="*"):
    return {"rules": [{"id": f"r{i}", "taxonomy": "RQ4", "category": "functions", "host": host,
                       "match": {"error": f"fn{i}"}} for i in range(n)]}


class TestRecords:
    def test_crash_has_no_actual(self):
        with pytest.raises(ValueError):
            FailureRecord("sqlite", "duckdb", "x", 1, "SELECT 1", "ok", "boom", CRASH)

    def test_taxonomy_from_suite_and_host(self):
        assert fail(suite="duckdb", host="duckdb").taxonomy == "RQ3"
        assert fail(suite="sqlite", host="duckdb").taxonomy == "RQ4"

    def test_round_trip(self):
        rec = fail(error="x")
        assert FailureRecord.from_dict(rec.to_dict()) == rec

    def test_label_validation(self):
        with pytest.raises(RuleError):
            FailureCategory("RQ3", "functions")


class TestStarterRules:
    rules = starter_rules()

    def test_pg_typeof(self):
        rec = fail("SELECT pg_typeof(1)", "no such function: pg_typeof", suite="postgresql", host="sqlite")
        assert str(classify_failure(rec, self.rules)) == "RQ4:functions"

    def test_config_parameter(self):
        rec = fail("SET default_null_order='nulls_first'",
                   'unrecognized configuration parameter "default_null_order"',
                   suite="duckdb", host="postgresql")
        assert str(classify_failure(rec, self.rules)) == "RQ4:configurations"

    def test_crash_and_timeout_bypass_rules(self):
        for outcome, label in ((CRASH, "crash"), (TIMEOUT, "timeout")):
            rec = FailureRecord("sqlite", "duckdb", "x", 1, "SELECT 1", "ok", None, outcome)
            assert classify_failure(rec, []) == FailureCategory("RQ4", label)
            # even on the donor engine
            rec = FailureRecord("duckdb", "duckdb", "x", 1, "SELECT 1", "ok", None, outcome)
            assert classify_failure(rec, self.rules).label == label

    def test_synthetic_corpus(self):
        for rec, expected in load_fixture("synthetic_failures.json"):
            got = classify_failure(rec, self.rules)
            assert (str(got) if got else None) == expected, rec.sql

    def test_first_match_exclusive(self):
        rules = list(self.rules)
        for rec, _ in load_fixture("synthetic_failures.json"):
            hits = [r for r in rules if r.matches(rec)]
            chosen = first_match(rec, rules)
            assert chosen is (hits[0] if hits else None)

    def test_semantic_needs_result_mismatch(self):
        rec = fail("SELECT 7 / 2", "whatever", suite="sqlite", host="duckdb")
        got = classify_failure(rec, self.rules)
        assert got is None or got.label != "semantic"

    def test_order_independent_of_input_order(self):
        recs = [r for r, _ in load_fixture("synthetic_failures.json")]
        forward = [str(classify_failure(r, self.rules)) for r in recs]
        backward = [str(classify_failure(r, self.rules)) for r in reversed(recs)]
        assert forward == backward[::-1]


class TestRuleValidation:
    def test_limit_rejected_with_count(self):
        with pytest.raises(RuleLimitExceeded) as info:
            parse_rules(many_rules(16))
        assert info.value.count == 16
        assert "16" in str(info.value)

    def test_fifteen_accepted(self):
        assert len(parse_rules(many_rules(15))) == 15

    def test_limit_counts_wildcards_for_a_pair(self):
        data = many_rules(10)
        data["rules"] += many_rules(6, host="sqlite")["rules"]
        for i, r in enumerate(data["rules"][10:]):
            r["id"] = f"s{i}"
        with pytest.raises(RuleLimitExceeded):
            parse_rules(data)

    def test_semantic_without_outcome(self):
        with pytest.raises(RuleError):
            parse_rules({"rules": [{"id": "a", "taxonomy": "RQ4", "category": "semantic",
                                    "match": {"sql": "/"}}]})

    def test_unknown_matcher(self):
        with pytest.raises(RuleError):
            parse_rules({"rules": [{"id": "a", "taxonomy": "RQ4", "category": "types",
                                    "match": {"colour": "red"}}]})

    def test_duplicate_id(self):
        with pytest.raises(RuleError):
            parse_rules({"rules": [{"id": "a", "taxonomy": "RQ4", "category": "types"}] * 2})

    def test_approx_matcher(self):
        rules = parse_rules({"rules": [{"id": "n", "taxonomy": "RQ3", "category": "client-numeric",
                                        "match": {"outcome": RESULT_MISMATCH, "approx": 0.01}}]})
        rec = fail(outcome=RESULT_MISMATCH, suite="duckdb", host="duckdb", expected="4999", actual="4999.500")
        assert classify_failure(rec, rules).label == "client-numeric"


class TestCoverage:
    def test_all_crash(self):
        recs = [FailureRecord("a", "b", "x", i, "SELECT 1", "ok", None, CRASH) for i in range(3)]
        assert rule_coverage(recs, []).classified_fraction == 1.0

    def test_one_unclassified(self):
        cov = rule_coverage([fail(error="x")], [])
        assert cov.classified_fraction == 0 and len(cov.unclassified) == 1

    def test_fixture(self):
        recs = [r for r, _ in load_fixture("coverage_failures.json")]
        cov = rule_coverage(recs, load_rules(bundled_path("triage", "coverage_rules.yaml")))
        assert len(recs) == 20
        assert cov.classified_fraction == 0.75
        assert len(cov.unclassified) == 5


class TestSampling:
    failures = [fail(f"SELECT {i}", line=i + 1) for i in range(1000)]

    def test_all_when_small(self):
        assert sample_failures(self.failures[:5], 100, 1) == self.failures[:5]

    def test_deterministic(self):
        assert sample_failures(self.failures, 100, 42) == sample_failures(self.failures, 100, 42)

    def test_seeds_differ(self):
        assert sample_failures(self.failures, 100, 1) != sample_failures(self.failures, 100, 2)

    def test_small_scale_enumeration(self):
        # 4 choose 2 has 6 subsets; 200 seeds should reach all of them, each without repeats
        items = self.failures[:4]
        seen = set()
        for seed in range(200):
            pick = sample_failures(items, 2, seed)
            assert len(set(pick)) == 2
            seen.add(frozenset(p.line for p in pick))
        assert seen == {frozenset(c) for c in itertools.combinations([1, 2, 3, 4], 2)}

    def test_negative(self):
        with pytest.raises(ValueError):
            sample_failures(self.failures, -1, 0)


class TestReports:
    def test_csv_and_json(self):
        recs = [r for r, _ in load_fixture("synthetic_failures.json")]
        out = triage(recs, starter_rules())
        assert all(set(d) >= {"category", "rule"} for d in out)
        lines = triage_to_csv(out).splitlines()
        assert lines[0].startswith("category,")
        assert lines[-1].startswith("unclassified,")
        data = json.loads(triage_to_json(out))
        assert len(data["failures"]) == len(recs)
