"""Exception types shared across the package."""


class Bih4Error(Exception):
    """Base class for all package-specific failures."""


class GridMismatchError(Bih4Error):
    """Two objects that must share a grid do not."""


class NumericalError(Bih4Error):
    """A numerical procedure failed to reach its requested accuracy."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class TruncationError(NumericalError):
    """An integral truncation bound exceeded the requested tolerance."""

    def __init__(self, message, suggested_mu_max=None, achieved=None):
        super().__init__(message, achieved=achieved)
        self.suggested_mu_max = suggested_mu_max


class SingularityError(Bih4Error):
    """An inversion hit the condition-number cap."""

    def __init__(self, message, stage=None, condition=None):
        super().__init__(message)
        self.stage = stage
        self.condition = condition


class ChainError(Bih4Error):
    """A projection-chain stage could not be built."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class RankDeficiencyError(Bih4Error):
    """A span handed to an orthonormalization routine was numerically dependent."""


class DegeneratePotentialError(Bih4Error):
    """The potential is identically zero (or undetectably small) on the grid."""


class SearchFailure(Bih4Error):
    """A parameter search found no crossing; endpoint diagnostics attached."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
