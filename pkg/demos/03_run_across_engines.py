"""Run the bundled suites on SQLite and DuckDB and build a success-rate matrix."""

from sqltestkit.adapters import ConnectionSpec, execute, open_session, teardown
from sqltestkit.corpus import bundled_suite
from sqltestkit.runner import RunOptions, cross_matrix, run_suite
from sqltestkit.triage import classify_failure, starter_rules

sqlite, duckdb = ConnectionSpec("sqlite"), ConnectionSpec("duckdb")

slt = bundled_suite("slt").scripts
report = run_suite(slt, sqlite, RunOptions(host="sqlite"))
print(report.summary())

# suites from other donors, one matrix (PostgreSQL shows up empty unless configured)
suites = {"slt": slt, "duckdb": bundled_suite("duckdb").scripts, "pg": bundled_suite("pg").scripts}
matrix = cross_matrix(suites, [sqlite, duckdb, ConnectionSpec("postgresql")], RunOptions())
print(matrix.to_csv())

# the same expression, two answers
for spec in (sqlite, duckdb):
    s = open_session(spec)
    cell = execute(s, "SELECT COALESCE(1, 1.0)").rows[0][0]
    print(spec.engine, repr(cell))
    teardown(s)

coalesce = run_suite(bundled_suite("coalesce").scripts, duckdb, RunOptions(host="duckdb"))
for f in coalesce.failures:
    print(f.sql, "expected", f.expected, "got", f.actual, "->", classify_failure(f, starter_rules()))
