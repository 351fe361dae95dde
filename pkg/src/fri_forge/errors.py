# src/fri_forge/errors.py
from __future__ import annotations

__all__ = [
    "FriForgeError",
    "ConfigError",
    "NumericError",
    "InfeasibleDataError",
    "UsageError",
    "InputError",
]


class FriForgeError(Exception):
    """Base error. `exit_code` is what the CLI returns, `code` is the JSON error tag."""

    exit_code: int = 1
    code: str = "error"

    def to_record(self) -> dict[str, dict[str, str]]:
        return {"error": {"code": self.code, "message": str(self)}}


class ConfigError(FriForgeError, ValueError):
    exit_code = 2
    code = "config"


class NumericError(FriForgeError, ValueError):
    exit_code = 3
    code = "numeric"


class InfeasibleDataError(FriForgeError):
    exit_code = 4
    code = "infeasible_data"


class UsageError(FriForgeError):
    """Unknown flag, missing argument or bad flag value on the command line."""

    exit_code = 64
    code = "usage"


class InputError(FriForgeError):
    """An input or output file could not be read or written."""

    exit_code = 74
    code = "io"
