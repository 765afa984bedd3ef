"""Readers for the supported test-file formats."""

from .common import ParseDiagnostic, SerializeError, decode_text, has_errors
from .mysql import CommandInventory, scan_mysql_commands
from .pgregress import parse_pg_regression
from .slt import parse_slt, serialize_slt

__all__ = [
    "CommandInventory", "ParseDiagnostic", "SerializeError", "decode_text", "has_errors",
    "parse_pg_regression", "parse_slt", "scan_mysql_commands", "serialize_slt",
]
