"""Exception hierarchy shared by the library and the CLI."""


class DiffractorError(Exception):
    """Base class for all library errors."""


class ContractError(DiffractorError, ValueError):
    """An argument violates an operation's precondition."""


class MembershipError(DiffractorError, KeyError):
    """A word is missing from a model, list or bank."""

    def __str__(self):
        # KeyError quotes its argument; keep the plain message instead
        return str(self.args[0]) if self.args else ""


class EmbeddingFormatError(DiffractorError):
    """An embedding file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyModelError(DiffractorError):
    """An embedding file produced no usable rows."""


class ListFormatError(DiffractorError):
    """A list file is well-formed but semantically invalid (e.g. duplicate tokens)."""


class ListCorruptionError(DiffractorError):
    """A list file is truncated or fails its checksum."""


class ConfigError(DiffractorError):
    """A run configuration is invalid.

    ``fields`` names the offending keys so the CLI can list them.
    """

    def __init__(self, message, fields=()):
        self.fields = tuple(fields)
        super().__init__(message)
