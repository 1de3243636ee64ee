"""Exception types shared across the package."""


class SearchSimError(Exception):
    """Base class for all package-specific errors."""


class GridBoundsError(SearchSimError):
    """A world point or voxel index lies outside the grid."""


class InvalidPoseError(SearchSimError):
    """An agent pose is inside occupied space or otherwise unusable."""


class UnreachableError(SearchSimError):
    """No collision-free path exists between the requested endpoints."""


class NoViewpointError(SearchSimError):
    """A viewpoint was requested from an empty candidate list."""


class DegenerateDirectionError(SearchSimError):
    """A direction vector has zero length where a direction is required."""


class ScenarioError(SearchSimError):
    """A scenario file failed to parse or validate."""


class StallError(SearchSimError):
    """The search loop cannot make progress; carries a diagnostic dump."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump
