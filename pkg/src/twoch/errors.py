"""Exception types shared across the package.

The CLI maps these onto its exit codes: ConfigError -> 2, NumericalFailure
(including ConstraintViolation) -> 3.
"""


class TwochError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TwochError):
    """Invalid configuration: bad keys, out-of-range values, malformed files."""


class NumericalFailure(TwochError):
    """The computation left its validity envelope (NaN, blow-up, under-resolution)."""


class ConstraintViolation(NumericalFailure):
    """A state left the admissible set beyond the allowed tolerance."""
