"""Exception hierarchy shared by all modules.

Every library-raised error derives from :class:`ExceedanceError` so callers
(and the CLI) can map failures to a single machine-parsable category, the
class name.
"""


class ExceedanceError(Exception):
    """Base class for all errors raised by this package."""


class InvalidCount(ExceedanceError):
    """A count argument (N, n, ...) is outside its admissible range."""


class InsufficientLocalData(ExceedanceError):
    """Fewer than 2 distinct observation times in every expanded window."""


class SingularLocalDesign(ExceedanceError):
    """Local design denominator below the ridge threshold after expansion."""


class InsufficientData(ExceedanceError):
    """Not enough observations or candidates for the requested operation."""


class EmptyTrajectory(ExceedanceError):
    """Trajectory has no usable grid/values."""


class DeltaOutOfRange(ExceedanceError):
    """Difference-quotient half-width outside (0, range/2)."""


class EmptyCentralityDomain(ExceedanceError):
    """No threshold satisfies the tail cutoff 1 - F(u) >= eps_tail."""


class GridMismatch(ExceedanceError):
    """Profiles live on different grids and resampling is disabled."""


class LengthMismatch(ExceedanceError):
    """Sequences that must be paired have different lengths."""


class SingularCovariance(ExceedanceError):
    """Sample covariance of the predictors is (numerically) singular."""


class DegenerateLocalDesign(ExceedanceError):
    """No kernel mass near the query point in local Frechet regression."""


class ThresholdOutOfRange(ExceedanceError):
    """Requested threshold lies outside the model's threshold box."""


class ConfigError(ExceedanceError):
    """Invalid or unknown configuration keys/values."""


class CsvFormatError(ExceedanceError):
    """Malformed input CSV; message names the offending line."""


class ExtrapolationWarning(UserWarning):
    """Query point outside the covariate range of a local model."""
