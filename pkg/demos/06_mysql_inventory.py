"""Count mysqltest runner commands. These files are inventoried, never executed."""

from sqltestkit.corpus import bundled_path
from sqltestkit.parsers import scan_mysql_commands

with open(bundled_path("mysql", "mixed_commands.test")) as fh:
    inv = scan_mysql_commands(fh.read())
print(inv.distinct_count, "distinct commands")
for name, n in sorted(inv.histogram.items(), key=lambda kv: -kv[1]):
    print(f"{name:20} {n}")

# SQL lines are skipped even when they start with a command word
print(scan_mysql_commands("SELECT 1\nlet;\n--echo hi\n").histogram)
