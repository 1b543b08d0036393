"""Exception types shared across the package.

The hierarchy splits into validation failures (bad inputs, malformed
artifacts, broken invariants) and I/O failures (the OS refused to read or
write).  The CLI maps these onto distinct exit codes.
"""


class WarpforgeError(Exception):
    """Base class for every error raised by this package."""


class ValidationFailure(WarpforgeError):
    """Base class for input/artifact validation errors (CLI exit code 2)."""


class DimensionMismatch(ValidationFailure):
    """Arrays that must share dimensions do not."""


class LengthMismatch(ValidationFailure):
    """Sequences that must share length do not."""


class TrajectorySyntaxError(ValidationFailure):
    """Lexical or grammatical error in trajectory DSL source."""

    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class TrajectorySemanticError(ValidationFailure):
    """Well-formed trajectory program that violates a semantic rule."""


class InvalidSchedule(ValidationFailure):
    """Stage plan parameters out of range."""


class StageOrderViolation(ValidationFailure):
    """A stage state transition was attempted out of order."""


class IngestMissing(ValidationFailure):
    """A later stage was requested before its inputs were ingested."""


class ValidationError(ValidationFailure):
    """Ingested artifact does not match the plan (frame count, resolution)."""


class InvalidK(ValidationFailure):
    """k outside [1, len(scores)] for top-k selection."""


class MissingFile(ValidationFailure):
    """A file promised by a manifest does not exist."""


class BadMagic(ValidationFailure):
    """A binary file does not start with its expected magic bytes."""


class ManifestMismatch(ValidationFailure):
    """Manifest contents disagree with the files actually present."""


class UnsupportedVersion(ValidationFailure):
    """Artifact carries a format tag this version cannot read."""


class IoError(WarpforgeError):
    """Underlying OS read/write failure (CLI exit code 3)."""
