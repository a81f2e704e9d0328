"""Exception types raised across the package."""


class ShrinkerLabError(Exception):
    """Base class for all package errors."""


class DegenerateMetric(ShrinkerLabError):
    pass


class NonImmersion(ShrinkerLabError):
    pass


class ShapeMismatch(ShrinkerLabError, ValueError):
    pass


class NonPositiveTime(ShrinkerLabError, ValueError):
    pass


class NotNormal(ShrinkerLabError):
    """A vector field expected to be normal has a tangential component."""


class NotClosed(ShrinkerLabError):
    pass


class NotAShrinker(ShrinkerLabError):
    """Raised where a formula is only valid at a self-shrinker."""


class InvalidWindow(ShrinkerLabError, ValueError):
    """Abresch-Langer (p, q) outside 1/2 < p/q < sqrt(2)/2."""


class NoConvergence(ShrinkerLabError):
    pass


class SolverFailure(ShrinkerLabError):
    pass


class RHSNotCompatible(ShrinkerLabError):
    pass


class NotApplicable(ShrinkerLabError):
    pass


class CertificateWeak(ShrinkerLabError):
    """The optimized second variation is not clearly negative."""


class ModelSpecError(ShrinkerLabError, ValueError):
    """A model spec string could not be parsed."""
