from __future__ import annotations


class ConfigError(ValueError):
    """Configuration payload failed schema or invariant validation."""


class DomainError(ValueError):
    """Argument outside the domain of a model function."""


class InfeasibleActionError(DomainError):
    """Action leaves the height band, overdraws data or skips the landing."""


class InfeasibleInstanceError(ValueError):
    """No schedule meets the data-volume and height constraints."""

    def __init__(self, message: str, *, constraint: str) -> None:
        super().__init__(message)
        self.constraint = constraint


class MissingPolicyEntryError(KeyError):
    """A rollout reached a state the policy table does not cover."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "missing policy entry"


class OracleGuardError(ValueError):
    """Brute-force search refused because the instance is too large."""


__all__ = [
    "ConfigError",
    "DomainError",
    "InfeasibleActionError",
    "InfeasibleInstanceError",
    "MissingPolicyEntryError",
    "OracleGuardError",
]
