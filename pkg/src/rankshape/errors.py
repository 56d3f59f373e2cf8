"""Exception hierarchy shared across the toolkit.

Two families matter to callers. InputError covers bad arguments, malformed
files, and out-of-range requests; DegenerateDataError covers data that is
structurally valid but carries no usable signal. The CLI maps them to exit
codes 1 and 2 respectively. Every error exposes a stable machine-readable
``code`` string.
"""


class RankshapeError(Exception):
    """Base class for all toolkit errors."""

    code = "error"
    exit_code = 1


class InputError(RankshapeError):
    """Malformed arguments, files, or out-of-range requests."""

    code = "input"
    exit_code = 1


class DegenerateDataError(RankshapeError):
    """Well-formed data with no usable signal for the requested computation."""

    code = "degenerate"
    exit_code = 2


class DegenerateSpectrumError(DegenerateDataError):
    code = "degenerate_spectrum"


class ZeroVarianceError(DegenerateDataError):
    code = "zero_variance"


class NormalizationError(DegenerateDataError):
    code = "normalization_degenerate"


class DegenerateLabelsError(DegenerateDataError):
    code = "degenerate_labels"


class SeparableDataError(DegenerateDataError):
    code = "separable_data"


class TrajectoryTooShortError(InputError):
    code = "trajectory_too_short"


class GroupSizeError(InputError):
    code = "group_too_small"


class RangeError(InputError):
    code = "range"


class ConfigError(InputError):
    code = "config"


class FileFormatError(InputError):
    """A trajectory or CSV file violates its format contract.

    The ``code`` is set per instance (bad_magic, bad_version,
    truncated_payload, trailing_data, non_finite_value, dimension_mismatch,
    bad_value, ...) so callers can branch without parsing messages.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
