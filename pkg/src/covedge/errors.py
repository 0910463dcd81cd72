"""Exception taxonomy shared across the package."""


class CovedgeError(Exception):
    """Base class for all package-specific errors."""


class NonConvergence(CovedgeError):
    """An iterative solver exhausted its budget without reaching tolerance."""


class EdgeConditionViolated(CovedgeError):
    """The population spectrum sits too close to the 1/lambda_max pole for
    the edge normalization to be trustworthy."""


class InvalidModel(CovedgeError):
    """A covariance or alternative model specification is malformed."""


class EigenFailure(CovedgeError):
    """An eigenvalue decomposition did not converge."""


class DegenerateSpectrum(CovedgeError):
    """The top three eigenvalues coincide; the gap-ratio statistic is
    undefined and the sample must be rejected by the caller."""


class InsufficientSizes(CovedgeError):
    """A scaling scan was given too few (or too small) matrix sizes."""


class ConfigError(CovedgeError):
    """Bad experiment configuration or malformed input file."""
