"""Exception types shared across the package."""


class ImmseError(Exception):
    """Base class for package-specific failures."""


class NonConvergence(ImmseError):
    """Adaptive quadrature refinement stalled above the requested tolerance."""


class StepTooLarge(ImmseError):
    """SDE integration step violates the stability precondition."""


class DegenerateCovariance(ImmseError):
    """Covariance matrix too ill-conditioned for reliable factorization."""


class TailNotResolved(ImmseError):
    """Truncated snr-integral tail is too large and no tail estimator was allowed."""
