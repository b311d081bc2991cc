"""Exception hierarchy shared across the pipeline.

ConfigError maps to CLI exit code 1 (user/config mistakes), InfrastructureError
to exit code 2 (gateway/sandbox trouble). Everything else is a bug.
"""

from __future__ import annotations


class FeedjudgeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FeedjudgeError):
    """Bad user input: malformed files, invalid flags, violated preconditions."""


class BenchmarkFormatError(ConfigError):
    """A benchmark record violates the file schema."""

    def __init__(self, message: str, *, record_index: int | None = None, field: str | None = None):
        parts = [message]
        if record_index is not None:
            parts.append(f"record {record_index}")
        if field is not None:
            parts.append(f"field '{field}'")
        super().__init__(" | ".join(parts))
        self.record_index = record_index
        self.field = field


class InfrastructureError(FeedjudgeError):
    """The environment failed us: network, sandbox runner, filesystem."""


class GatewayError(InfrastructureError):
    """A chat-completion backend could not produce a response."""


class AuthenticationError(GatewayError):
    """Backend rejected our credentials; never retried."""


class SandboxUnavailableError(InfrastructureError):
    """The sandbox runner command cannot be executed at all."""
