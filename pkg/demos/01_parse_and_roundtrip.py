"""Parse a sqllogictest file, look at the records, write it back out."""

from sqltestkit.ir import script_to_dict, validate_script, records_equivalent
from sqltestkit.parsers import parse_slt, serialize_slt

text = """statement ok
CREATE TABLE t1(a INTEGER)

statement ok
INSERT INTO t1 VALUES (3), (1), (2)

skipif mysql
query I rowsort
SELECT a FROM t1
----
1
2
3
"""

script, diags = parse_slt(text)
print("diagnostics:", diags)
for rec in script.records:
    print(rec.line, type(rec.body).__name__, rec.conditions, rec.sql)

# the query record, as plain data
print(script_to_dict(script)["records"][2])
print("violations:", validate_script(script))

# writing and re-reading gives the same records (line numbers aside)
again, _ = parse_slt(serialize_slt(script))
print("round trip equivalent:", records_equivalent(script, again))

# DuckDB-dialect files add loops, require, load and friends
duck, _ = parse_slt("require json\n\nloop i 0 3\n\nstatement ok\nSELECT $i\n\nendloop\n", "slt-duckdb")
print([type(r.body).__name__ for r in duck.records])
print(serialize_slt(duck))
