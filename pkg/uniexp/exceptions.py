from typing import Any, Optional


class UniexpError(Exception):
    """
    Base error carrying a process exit code and a machine-readable detail.

    Attributes:
        exit_code (int): Exit status the CLI returns for this error.
        detail (str): Human-readable description of the failure.
        extra (Optional[dict]): Structured payload echoed in the JSON envelope.
    """

    exit_code: int = 4

    def __init__(self, detail: str, extra: Optional[dict[str, Any]] = None):
        super().__init__(detail)
        self.detail = detail
        self.extra = extra

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "error": type(self).__name__,
            "exit_code": self.exit_code,
            "detail": self.detail,
        }
        if self.extra:
            payload.update(self.extra)
        return payload


class InputError(UniexpError):
    """Invalid arguments: negative mass, negative time, bad tolerance, dimension mismatch."""
    exit_code = 2


class StructuralError(UniexpError):
    """Malformed sparse structure: out-of-range or duplicate coordinates, entry-count mismatch."""
    exit_code = 2


class MatrixValidationError(UniexpError):
    """Semantic generator violations; `extra` holds the serialized validation report."""
    exit_code = 2


class MatrixParseError(UniexpError):
    """Unparseable Matrix Market or vector text; the detail names the 1-based line."""
    exit_code = 2

    def __init__(self, detail: str, line: int):
        super().__init__(f"line {line}: {detail}", {"line": line})
        self.line = line


class ArtifactIOError(UniexpError):
    """Missing, unreadable or unwritable file."""
    exit_code = 3


class InternalError(UniexpError):
    """A kernel invariant was broken (e.g. a negative accumulated entry)."""
    exit_code = 4
