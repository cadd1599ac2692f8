"""Exception and warning types shared across the package."""


class ConfigError(ValueError):
    """Invalid experiment configuration. ``path`` names the offending field."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class NumericalRegimeError(ArithmeticError):
    """A computation left the regime where its result is meaningful."""


class EigenGapError(NumericalRegimeError):
    """Two eigenvalues that appear in a denominator are too close."""

    def __init__(self, message, pair=None):
        self.pair = pair
        super().__init__(message)


class RankDeficiencyError(NumericalRegimeError):
    """A least-squares system is too ill-conditioned to solve."""


class NonConvergenceError(NumericalRegimeError):
    """Power iteration cannot separate two eigenvectors."""


class OrthogonalEstimateError(NumericalRegimeError):
    """An estimate has no overlap with its reference, so it cannot be phase aligned."""


class DegenerateSpectrumWarning(RuntimeWarning):
    """Consecutive eigenvalues are numerically equal."""


class ConsensusWarning(RuntimeWarning):
    """The weight matrix does not drive consensus to the network average."""
