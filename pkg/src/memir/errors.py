"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class MemIRError(Exception):
    """Base class for all engine errors."""


class DanglingReference(MemIRError):
    pass


class SupportViolation(MemIRError):
    pass


class DuplicateId(MemIRError):
    pass


class InvalidAtom(MemIRError):
    """Atom content disagrees with the atoms it cites (substring or range checks)."""


class UnknownId(MemIRError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class NotAClaim(MemIRError):
    pass


class CorruptRecord(MemIRError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class VersionMismatch(MemIRError):
    pass


class EmptyHistory(MemIRError):
    pass


class ParseError(MemIRError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ProviderFailure(MemIRError):
    def __init__(self, provider: str, reason: str):
        super().__init__(f"{provider}: {reason}")
        self.provider = provider
        self.reason = reason


class UnknownRoute(MemIRError):
    pass


class MixedRoutes(MemIRError):
    pass


class EmbedderDimensionMismatch(MemIRError):
    pass


class UnresolvedGoldId(MemIRError):
    pass


class ConfigError(MemIRError):
    pass
