"""Command line entry point: ``sqltestkit <subcommand> ...``.

Exit status is 0 whenever the tool itself worked, whatever the test verdicts;
reports carry the verdicts.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from typing import Dict, List, Optional

from . import analyzer, triage
from .adapters import SetupError, load_connection_spec
from .canonical import ComparePolicy
from .corpus import load_file, load_suite
from .ir import Dialect, script_to_dict
from .parsers import SerializeError, scan_mysql_commands, serialize_slt
from .runner import RunOptions, cross_matrix, failures_from_report, run_suite

log = logging.getLogger("sqltestkit")

FORMATS = [d.value for d in Dialect]


def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _bindings(pairs: List[str]) -> Dict[str, str]:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ValueError(f"--bind expects name=value, got {pair!r}")
        name, value = pair.split("=", 1)
        out[name] = value
    return out


def _options(args, host: Optional[str] = None) -> RunOptions:
    return RunOptions(
        host=host or args.host_tag or args.engine[0],
        policy=ComparePolicy.parse(args.compare),
        timeout=args.timeout,
        bindings=_bindings(args.bind),
        extensions=frozenset(args.ext or ()),
    )


def _load(path: str, fmt: Optional[str]):
    suite = load_suite(path, fmt)
    for name, diags in suite.diagnostics.items():
        for d in diags:
            log.info("%s:%s", name, d)
    return suite


# -- subcommands ------------------------------------------------------------------

def cmd_parse(args) -> int:
    dumps = []
    for path in args.paths:
        if os.path.isdir(path):
            suite = load_suite(path, args.format)
            items = [(s, suite.diagnostics[s.source_path]) for s in suite.scripts]
        else:
            items = [load_file(path, args.format)]
        for script, diags in items:
            if args.slt:
                try:
                    _write(serialize_slt(script), args.out)
                except SerializeError as exc:
                    print(f"{script.source_path}: cannot serialize: {exc}", file=sys.stderr)
                    return 1
                continue
            d = script_to_dict(script)
            d["diagnostics"] = [vars(x) for x in diags]
            dumps.append(d)
    if not args.slt:
        _write(json.dumps(dumps if len(dumps) != 1 else dumps[0], indent=2) + "\n", args.out)
    return 0


def cmd_stats(args) -> int:
    scripts = []
    for path in args.paths:
        scripts.extend(_load(path, args.format).scripts)
    policy = analyzer.CompliancePolicy(count_create_index_as_standard=args.create_index_standard)
    stats = analyzer.suite_stats(scripts, policy)
    if args.out and args.out.endswith(".csv"):
        stem = args.out[:-4]
        for name, text in analyzer.stats_to_csv(stats).items():
            _write(text, f"{stem}_{name}.csv")
    else:
        _write(analyzer.stats_to_json(stats), args.out)
    return 0


def cmd_run(args) -> int:
    suite = _load(args.path, args.format)
    spec = load_connection_spec(args.engine[0], args.config, timeout=args.timeout)
    report = run_suite(suite.scripts, spec, _options(args), jobs=args.jobs)
    if args.out:
        _write(report.to_json(timings=args.timings), args.out)
    print(report.summary())
    return 0


def cmd_matrix(args) -> int:
    suites = {}
    for item in args.suites:
        name, _, path = item.rpartition("=")
        path = path or item
        name = name or os.path.basename(os.path.normpath(path))
        suites[name] = _load(path, args.format).scripts
    specs = [load_connection_spec(e, args.config, timeout=args.timeout) for e in args.engine]
    matrix = cross_matrix(suites, specs, _options(args, host="sqlite"), jobs=args.jobs)
    _write(matrix.to_csv(), args.out)
    if args.out:
        for (s, h), rep in matrix.reports.items():
            print(rep.summary() if rep is not None else f"{s} on {h}: engine unavailable")
    return 0


def _read_failures(paths: List[str]) -> List[triage.FailureRecord]:
    failures = []
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if isinstance(data, list):  # a plain list of failure records
            failures.extend(triage.FailureRecord.from_dict(d) for d in data)
        else:
            failures.extend(failures_from_report(data))
    return failures


def cmd_triage(args) -> int:
    rules = triage.load_rules(args.rules) if args.rules else triage.starter_rules()
    classified = triage.triage(_read_failures(args.reports), rules)
    if args.out and args.out.endswith(".csv"):
        _write(triage.triage_to_csv(classified), args.out)
    else:
        _write(triage.triage_to_json(classified), args.out)
    return 0


def cmd_sample(args) -> int:
    picked = triage.sample_failures(_read_failures(args.reports), args.n, args.seed)
    _write(json.dumps([f.to_dict() for f in picked], indent=2) + "\n", args.out)
    return 0


def cmd_scan_mysql(args) -> int:
    files = []
    for path in args.paths:
        if os.path.isdir(path):
            for dirpath, dirnames, names in os.walk(path):
                dirnames.sort()
                files.extend(os.path.join(dirpath, n) for n in sorted(names) if n.endswith(".test"))
        else:
            files.append(path)
    total: Counter = Counter()
    per_file = {}
    for path in files:
        with open(path, "rb") as fh:
            inv = scan_mysql_commands(fh.read())
        total.update(inv.histogram)
        per_file[path] = inv.to_dict()
    result = {"files": len(files), "histogram": dict(sorted(total.items())),
              "distinct_count": len(total)}
    if args.per_file:
        result["per_file"] = per_file
    _write(json.dumps(result, indent=2) + "\n", args.out)
    return 0


# -- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sqltestkit", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log parse diagnostics")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=True, out=True):
        if fmt:
            sp.add_argument("--format", choices=FORMATS, help="input dialect (guessed when omitted)")
        if out:
            sp.add_argument("--out", help="output file (stdout when omitted)")

    def execution(sp):
        sp.add_argument("--engine", action="append", required=True,
                        help="engine tag: sqlite, duckdb, postgresql, mock (repeatable for matrix)")
        sp.add_argument("--config", help="INI file with one section per engine")
        sp.add_argument("--timeout", type=float, help="per-statement timeout in seconds")
        sp.add_argument("--compare", default="strict", help="strict | approx | approx:<tolerance>")
        sp.add_argument("--host-tag", help="tag matched by skipif/onlyif (defaults to the engine)")
        sp.add_argument("--ext", nargs="*", default=[], help="extensions reported as available")
        sp.add_argument("--bind", action="append", default=[], metavar="NAME=VALUE",
                        help="variable or path binding, e.g. TEST_DIR=/tmp/x")
        sp.add_argument("--jobs", type=int, default=1, help="files run in parallel")

    sp = sub.add_parser("parse", help="parse test files and dump the IR with diagnostics")
    sp.add_argument("paths", nargs="+")
    sp.add_argument("--slt", action="store_true", help="write SLT text instead of a JSON dump")
    common(sp)
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("stats", help="statement statistics as JSON (or CSV when --out ends in .csv)")
    sp.add_argument("paths", nargs="+")
    sp.add_argument("--create-index-standard", action="store_true",
                    help="count CREATE INDEX as standard-compliant")
    common(sp)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("run", help="run one suite on one engine")
    sp.add_argument("path")
    sp.add_argument("--timings", action="store_true", help="include wall-clock times in the report")
    common(sp)
    execution(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("matrix", help="success-rate matrix of suites x engines as CSV")
    sp.add_argument("suites", nargs="+", metavar="[NAME=]PATH")
    common(sp)
    execution(sp)
    sp.set_defaults(func=cmd_matrix)

    sp = sub.add_parser("triage", help="classify failures from run reports")
    sp.add_argument("reports", nargs="+")
    sp.add_argument("--rules", help="YAML ruleset (the starter set when omitted)")
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_triage)

    sp = sub.add_parser("sample", help="seeded random sample of failures")
    sp.add_argument("reports", nargs="+")
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("scan-mysql", help="runner-command inventory of mysqltest files")
    sp.add_argument("paths", nargs="+")
    sp.add_argument("--per-file", action="store_true")
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_scan_mysql)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, SetupError, triage.RuleError) as exc:
        print(f"sqltestkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
