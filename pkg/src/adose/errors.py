"""Exception types shared across the package."""


class AdoseError(Exception):
    """Base class for package-specific failures."""


class DatasetError(AdoseError):
    """Raised when a manifest, record file, or generator spec is invalid."""


class BudgetError(AdoseError):
    """Raised when an annotation request would violate the labeling budget."""


class CheckpointError(AdoseError):
    """Raised when a checkpoint file is malformed or incompatible."""


class DivergenceError(AdoseError):
    """Raised when training produces non-finite losses or gradients."""


class ConfigError(AdoseError):
    """Raised when a run configuration fails validation."""
