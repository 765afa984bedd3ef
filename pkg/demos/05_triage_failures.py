"""Classify failures with the starter rules, check coverage, draw a seeded sample."""

import json

from sqltestkit.corpus import bundled_path
from sqltestkit.triage import (
    FailureRecord, load_rules, rule_coverage, sample_failures, starter_rules, triage, triage_to_csv,
)

with open(bundled_path("triage", "synthetic_failures.json")) as fh:
    failures = [FailureRecord.from_dict(d) for d in json.load(fh)]

rules = starter_rules()
print(len(rules), "rules")
classified = triage(failures, rules)
for c in classified[:5]:
    print(c["category"], c["rule"], c["sql"])
print(triage_to_csv(classified))

# iterate-until-covered: what fraction do three rules reach, and what is left over
with open(bundled_path("triage", "coverage_failures.json")) as fh:
    pool = [FailureRecord.from_dict(d) for d in json.load(fh)]
cov = rule_coverage(pool, load_rules(bundled_path("triage", "coverage_rules.yaml")))
print(cov.classified_fraction, [f.sql for f in cov.unclassified])

# same seed, same sample
print([f.line for f in sample_failures(failures, 5, seed=7)])
print([f.line for f in sample_failures(failures, 5, seed=7)])
