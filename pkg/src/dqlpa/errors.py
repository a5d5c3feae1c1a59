class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateInputError(ValueError):
    """Input that makes a feature or normalization undefined (e.g. zero direct gain)."""


class SearchSpaceError(ValueError):
    """Exhaustive search refused because the grid is too large."""


class TrainingError(RuntimeError):
    """Training produced a non-finite loss or parameters."""


class CheckpointError(ValueError):
    """Checkpoint file is malformed or incompatible with the requested use."""
