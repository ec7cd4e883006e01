"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PatternScoutError(Exception):
    """Base class for all operational errors raised by this package."""


class ConfigError(PatternScoutError):
    """Invalid or unloadable run configuration."""


class ProfileError(PatternScoutError):
    """Invalid profile file or profile set."""

    def __init__(self, message: str, *, field: str | None = None, path: str | None = None):
        self.field = field
        self.path = path
        parts = [message]
        if field is not None:
            parts.append(f"field={field!r}")
        if path is not None:
            parts.append(f"file={path}")
        super().__init__(" ".join(parts))


class GlobSyntaxError(PatternScoutError):
    """Malformed glob expression; carries the offending position."""

    def __init__(self, pattern: str, position: int, reason: str):
        self.pattern = pattern
        self.position = position
        self.reason = reason
        super().__init__(f"bad glob {pattern!r} at position {position}: {reason}")


class ScanError(PatternScoutError):
    """Repository scanning failure (missing root, escaping path, unreadable file)."""


class ProviderError(PatternScoutError):
    """Backend failure after retries were exhausted."""


class ProviderSchemaError(ProviderError):
    """Backend answered, but the body never validated against the expected schema.

    The raw text of the last response is preserved for debugging.
    """

    def __init__(self, message: str, raw: str):
        self.raw = raw
        super().__init__(f"{message}; raw response preserved ({len(raw)} chars)")


class StoreError(PatternScoutError):
    """Vector store seeding, persistence, or query failure."""


class EvaluationError(PatternScoutError):
    """Ground-truth mismatch or undefined statistic requested as a number."""
