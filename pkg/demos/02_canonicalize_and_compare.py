"""Render typed rows, order them, digest them, and compare with an expected block."""

from sqltestkit.adapters import QueryTable
from sqltestkit.canonical import ComparePolicy, canonicalize, compare, digest, render_cell
from sqltestkit.ir import ExpectedResult, Shape

render_cell(1.5, "R")       # '1.500'
render_cell(4999, "R")      # '4999.000'
render_cell(True, "I")      # '1'
render_cell("", "T")        # '(empty)'
render_cell(None, "I")      # 'NULL'

table = QueryTable(2, [(10, "b"), (9, "a"), (None, "")])
for mode in ("nosort", "rowsort", "valuesort"):
    print(mode, canonicalize(table, "IT", mode).lines)   # sorting is on text: "10" < "9"

print(digest(canonicalize(QueryTable(1, [(i,) for i in range(10)]), "I"), 8).summary())

# strict comparison demands identical text; approx tolerates a relative difference on R columns
expected = ExpectedResult(Shape.VALUE_WISE, ("4999",))
actual = canonicalize(QueryTable(1, [(4999.5,)]), "R")
print(compare(expected, actual))
print(compare(expected, actual, ComparePolicy.parse("approx:0.01")))
