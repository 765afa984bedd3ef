import os

import pytest

from sqltestkit.corpus import bundled_path, bundled_suite

PG_DSN = os.environ.get("SQLTESTKIT_PG_DSN")
CORPUS_DIR = os.environ.get("SQLTESTKIT_CORPUS_DIR")


def pytest_collection_modifyitems(config, items):
    skip_pg = pytest.mark.skip(reason="set SQLTESTKIT_PG_DSN to run PostgreSQL tests")
    skip_full = pytest.mark.skip(reason="set SQLTESTKIT_CORPUS_DIR to run full-corpus tests")
    for item in items:
        if "postgres" in item.keywords and not PG_DSN:
            item.add_marker(skip_pg)
        if "fullcorpus" in item.keywords and not CORPUS_DIR:
            item.add_marker(skip_full)


@pytest.fixture(scope="session")
def slt_suite():
    return bundled_suite("slt")


@pytest.fixture(scope="session")
def duckdb_suite():
    return bundled_suite("duckdb")


@pytest.fixture(scope="session")
def pg_suite():
    return bundled_suite("pg")


@pytest.fixture
def corpus():
    return bundled_path


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
