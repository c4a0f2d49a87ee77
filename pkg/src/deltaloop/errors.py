"""Exception types shared across the toolkit."""


class CurveError(ValueError):
    """A curve specification cannot be turned into a valid loop."""


class DomainError(ValueError):
    """A requested point or width lies outside the admissible strip."""


class InsufficientFactorsError(RuntimeError):
    """Truncated factor spectra cannot certify the requested tensor sums."""


class MRangeError(RuntimeError):
    """The angular-momentum window is too narrow to certify a radial spectrum."""


class MeshError(ValueError):
    """A mesh violates the conformity requirements of the 2D solver."""


class ConfigError(ValueError):
    """An experiment configuration is malformed."""
