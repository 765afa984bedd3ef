from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple, Union


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    severity: str  # "error" | "warning"
    message: str

    def __str__(self) -> str:
        return f"{self.line}: {self.severity}: {self.message}"


class SerializeError(ValueError):
    pass


def decode_text(data: Union[str, bytes]) -> Tuple[str, List[ParseDiagnostic]]:
    """Decode file content as UTF-8, replacing bad bytes with a warning."""
    if isinstance(data, str):
        return data, []
    try:
        return data.decode("utf-8"), []
    except UnicodeDecodeError as exc:
        line = data.count(b"\n", 0, exc.start) + 1
        text = data.decode("utf-8", errors="replace")
        return text, [ParseDiagnostic(line, "warning", "invalid UTF-8 replaced with U+FFFD")]


def has_errors(diagnostics) -> bool:
    return any(d.severity == "error" for d in diagnostics)
