"""Exception types shared across the package."""


class BolabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BolabError):
    """Invalid numerical or physical configuration (bad grid size, gamma <= 0, ...)."""


class UsageError(BolabError):
    """Operation applied to inputs that violate its contract (mismatched grids, wrong frame, ...)."""


class DecompositionError(BolabError):
    """Soliton-parameter fit failed: data outside the tube or Newton divergence."""


class EvolutionError(BolabError):
    """Time integration aborted (blow-up guard or seam guard triggered)."""


class DiagnosticError(BolabError):
    """A diagnostic estimate failed to converge.  Carries the partial estimate."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ExperimentError(BolabError):
    """An experiment sweep produced no usable runs."""
