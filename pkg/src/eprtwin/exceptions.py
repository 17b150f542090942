"""Exception types raised across the package."""


class EprTwinError(Exception):
    """Base class for all package errors."""


class DomainError(EprTwinError, ValueError):
    """An argument lies outside the domain of a physical formula."""


class ResolutionError(EprTwinError, ValueError):
    """A sampling grid is too coarse for the state it must represent."""


class ResolutionWarning(UserWarning):
    """A grid or fit is close to the limit of what it can resolve."""


class DegenerateStateError(EprTwinError, ValueError):
    """An amplitude, slice or mask carries no usable weight."""


class ModelInconsistencyError(EprTwinError, ValueError):
    """A forward model produced a physically impossible quantity."""


class GridMismatchError(EprTwinError, ValueError):
    """Two images or axes that must share a grid do not."""


class ConfigError(EprTwinError, ValueError):
    """A run configuration failed validation.

    ``violations`` holds one human-readable line per problem.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
