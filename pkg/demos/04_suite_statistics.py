"""Statement-type mix, standard compliance and WHERE-predicate sizes of a suite."""

from sqltestkit.analyzer import (
    CompliancePolicy, classify_statement, join_profile, stats_to_csv, suite_stats, where_token_count,
)
from sqltestkit.corpus import bundled_suite

classify_statement("(((select * from int8_tbl)))")   # 'SELECT'
classify_statement("SELEC 1")                        # 'UNKNOWN'
where_token_count("SELECT a FROM t WHERE a = 1")     # 3
join_profile("SELECT * FROM a, b WHERE a.x = b.x")   # implicit

scripts = bundled_suite("stats").scripts
stats = suite_stats(scripts)
print(stats.most_common(3))
print("standard fraction", round(stats.standard_fraction, 4))
print("files with only standard statements", stats.exclusive_standard_file_fraction)

# counting CREATE INDEX as standard moves one more file into the exclusive set
lenient = suite_stats(scripts, CompliancePolicy(count_create_index_as_standard=True))
print("with CREATE INDEX", lenient.exclusive_standard_file_fraction)

print(stats_to_csv(stats)["where_tokens"])
print(stats.join_profile)
