"""Exception types shared across the package."""


class DanceSigError(Exception):
    """Base class for all package-specific errors."""


class ParseError(DanceSigError):
    """A text record could not be parsed; message carries the line number."""


class SchemaError(DanceSigError):
    """A file or record has the wrong structure (counts, magic, lengths)."""


class DegeneratePoseError(DanceSigError):
    """All joints coincide; no normalization scale can be derived."""


class ContractError(DanceSigError):
    """An API precondition was violated (shapes, labels, modes)."""


class ConfigError(DanceSigError):
    """A model or run configuration is invalid."""


class TrainingError(DanceSigError):
    """Training aborted (non-finite loss or gradients); carries diagnostics."""


class CheckpointError(DanceSigError):
    """A checkpoint file is unreadable, truncated, or version-incompatible."""


class LayoutError(DanceSigError):
    """Feature layout of an input does not match what a model was trained on."""
