"""Exception types shared across the package."""


class PhantomNetError(Exception):
    """Base class for every error the library raises deliberately."""


class ShapeError(PhantomNetError):
    """Array shapes are inconsistent with the operation's contract."""


class NumericError(PhantomNetError):
    """A NaN or Inf appeared where only finite values are allowed."""


class LabelError(PhantomNetError):
    """A label lies outside the declared class range."""


class ParameterError(PhantomNetError):
    """A scalar argument violates its domain (temperature < 1, c < j, ...)."""


class StateError(PhantomNetError):
    """An operation was called out of order (backward without forward)."""


class DataError(PhantomNetError):
    """A dataset is empty or internally inconsistent."""


class DataRangeError(DataError):
    """Sample values fall outside the normalized [-1, 1] range."""


class FormatError(PhantomNetError):
    """A file does not parse as the format it claims to be."""


class IntegrityError(PhantomNetError):
    """A stored bundle fails its checksum or cannot be restored whole."""


class ConfigError(PhantomNetError):
    """A run configuration is invalid or self-contradictory."""


class MembraneError(PhantomNetError):
    """The data membrane between sites would be violated."""
