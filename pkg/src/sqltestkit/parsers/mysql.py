"""Runner-command inventory for MySQL Test Framework (``mysqltest``) files.

The format mixes SQL with runner commands; files are only scanned, never
lowered into the IR. A command is either a ``--name`` line or a bare line
whose first word is a known mysqltest command. Everything else is SQL and
is skipped with the shared statement scanner.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Union

from ..sqltext import statement_end
from .common import decode_text

# mysqltest command words (mysqltest.cc command table, plus long-standing aliases)
MYSQLTEST_COMMANDS = frozenset("""
append_file assert cat_file change_user character_set chmod connect connection
copy_file copy_files_wildcard dec delimiter die diff_files dirty_close
disable_abort_on_error disable_async_client disable_connect_log disable_info
disable_metadata disable_ps_protocol disable_query_log disable_reconnect
disable_result_log disable_session_track_info disable_testcase disable_warnings
disconnect echo enable_abort_on_error enable_async_client enable_connect_log
enable_info enable_metadata enable_ps_protocol enable_query_log enable_reconnect
enable_result_log enable_session_track_info enable_testcase enable_warnings end
end_timer error eval exec exec_in_background execw exit expr file_exists
force-cpdir force-rmdir horizontal_results if inc let list_files
list_files_append_file list_files_write_file lowercase_result mkdir move_file
output partially_sorted_result perl ping query query_attributes query_horizontal
query_vertical reap real_sleep remove_file remove_files_wildcard replace_column
replace_numeric_round replace_regex replace_result reset_connection result_format
rmdir save_master_pos send send_eval send_quit send_shutdown shutdown_server skip
skip_if_hypergraph sleep sorted_result source start_timer sync_slave_with_master
sync_with_master vertical_results wait_for_slave_to_stop while write_file
""".split())

_COMMAND_SHAPE = re.compile(r"[a-z_][a-z0-9_]*(?:-[a-z0-9_]+)*")
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*")
_SQL_LEX = dict(hash_comments=True, backticks=True, dollar_quotes=False, backslash_escapes=True)


@dataclass
class CommandInventory:
    histogram: Dict[str, int] = field(default_factory=dict)

    @property
    def distinct_count(self) -> int:
        return len(self.histogram)

    def to_dict(self) -> dict:
        return {"histogram": dict(sorted(self.histogram.items())),
                "distinct_count": self.distinct_count}


def scan_mysql_commands(text: Union[str, bytes]) -> CommandInventory:
    """Count runner commands in one mysqltest ``.test`` file."""
    text, _ = decode_text(text)
    counts: Counter = Counter()
    delimiter = ";"
    n = len(text)
    pos = 0
    while pos < n:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        eol = text.find("\n", pos)
        eol = n if eol < 0 else eol
        line = text[pos:eol]

        if line.startswith("#") or line.lstrip().startswith(("{", "}")):
            pos = eol + 1
            continue
        if line.startswith("--"):
            rest = line[2:].lstrip()
            m = _COMMAND_SHAPE.match(rest)
            if m and (m.end() == len(rest) or not (rest[m.end()].isalnum() or rest[m.end()] in "_-")):
                counts[m.group(0)] += 1
                if m.group(0) == "delimiter" and rest[m.end():].strip():
                    delimiter = rest[m.end():].strip()
            pos = eol + 1
            continue

        m = _WORD.match(text, pos)
        word = m.group(0) if m else ""
        if word in MYSQLTEST_COMMANDS:
            counts[word] += 1
            if word in ("if", "while"):
                # block header: "if (cond)" then "{" on this or the next line
                pos = eol + 1
                continue
            if word == "delimiter":
                arg = line[m.end() - pos:].strip()
                if arg.endswith(delimiter) and len(arg) > len(delimiter):
                    arg = arg[: -len(delimiter)].strip()
                delimiter = arg or delimiter
                pos = eol + 1
                continue
            end = text.find(delimiter, pos)
            pos = n if end < 0 else end + len(delimiter)
            continue

        pos = statement_end(text, pos, delimiter, parens=False, **_SQL_LEX)
    return CommandInventory(dict(counts))
