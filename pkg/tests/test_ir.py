"""IR construction, validation and plain-data dumps."""

from sqltestkit.ir import (
    Condition, Dialect, ExpectedResult, Halt, Loop, Query, Shape, SortMode, Statement,
    TestRecord, TestScript, records_equivalent, script_to_dict, validate_script,
)
from sqltestkit.parsers import parse_slt


def script(*records):
    return TestScript("t.test", Dialect.SLT_SQLITE, tuple(records))


class TestValidate:
    def test_empty_script_is_valid(self):
        assert validate_script(script()) == []

    def test_rowwise_arity_violation(self):
        q = Query("SELECT 1, 2", "II", expected=ExpectedResult(Shape.ROW_WISE, ("1\t2\t3",)))
        violations = validate_script(script(TestRecord(q, line=4)))
        assert len(violations) == 1
        assert violations[0].line == 4

    def test_unknown_type_letter(self):
        q = Query("SELECT 1", "X")
        assert validate_script(script(TestRecord(q, line=1)))

    def test_line_numbers_must_increase(self):
        a = TestRecord(Statement("SELECT 1"), line=5)
        b = TestRecord(Statement("SELECT 2"), line=5)
        assert validate_script(script(a, b))

    def test_uppercase_condition_system(self):
        rec = TestRecord(Statement("SELECT 1"), line=1, conditions=(Condition("skipif", "MySQL"),))
        assert validate_script(script(rec))

    def test_bad_digest_hash(self):
        q = Query("SELECT 1", "I", expected=ExpectedResult.digest(3, "xyz"))
        assert validate_script(script(TestRecord(q, line=1)))

    def test_loop_body_lines_follow_header(self):
        body = (TestRecord(Statement("SELECT $i"), line=3),)
        rec = TestRecord(Loop("i", 0, 3, body), line=1)
        assert validate_script(script(rec)) == []

    def test_validate_does_not_mutate(self):
        s = script(TestRecord(Statement("SELECT 1"), line=1))
        before = script_to_dict(s)
        validate_script(s)
        assert script_to_dict(s) == before

    def test_bundled_fixtures_valid(self, slt_suite, duckdb_suite, pg_suite):
        for suite in (slt_suite, duckdb_suite, pg_suite):
            for s in suite.scripts:
                assert validate_script(s) == [], s.source_path


class TestEquivalence:
    def test_lines_ignored(self):
        a = script(TestRecord(Statement("SELECT 1"), line=1))
        b = script(TestRecord(Statement("SELECT 1"), line=9))
        assert records_equivalent(a, b)

    def test_conditions_compared(self):
        a = script(TestRecord(Halt(), conditions=(Condition("onlyif", "sqlite"),)))
        b = script(TestRecord(Halt()))
        assert not records_equivalent(a, b)


class TestDump:
    def test_query_dump(self):
        s, _ = parse_slt("query I rowsort\nSELECT 1\n----\n1\n")
        d = script_to_dict(s)
        assert d["dialect"] == "slt-sqlite"
        rec = d["records"][0]
        assert rec["kind"] == "Query"
        assert rec["sort"] == "rowsort"
        assert rec["expected"] == {"shape": "value-wise", "lines": ["1"]}

    def test_sort_modes_enumerated(self):
        assert [m.value for m in SortMode] == ["nosort", "rowsort", "valuesort"]
