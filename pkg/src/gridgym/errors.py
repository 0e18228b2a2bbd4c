"""Exception types shared across the package."""


class GridGymError(Exception):
    """Base class for all gridgym errors."""


class CaseFormatError(GridGymError):
    """A case file is missing keys or holds values of the wrong shape."""


class SingularSystem(GridGymError):
    """An island's reduced susceptance matrix could not be factored.

    This signals a modeling bug (islands are connected by construction),
    not a recoverable runtime condition.
    """


class DimensionMismatch(GridGymError):
    """Injection sets or solutions do not line up with the case elements."""


class NotACycle(GridGymError):
    """A line list handed to the loop-voltage check does not close."""


class ChronicsMismatch(GridGymError):
    """Chronics column ids do not match the case's generators and loads."""


class ParseError(GridGymError):
    """A chronics or log file could not be parsed at all."""


class ValidationError(GridGymError):
    """A chronics file parsed but holds invalid data (negative, NaN, ragged)."""


class InfeasibleProfile(GridGymError):
    """A synthetic demand profile exceeds total generation capability."""


class EpisodeFinished(GridGymError):
    """step() or simulate() was called after the episode ended."""
