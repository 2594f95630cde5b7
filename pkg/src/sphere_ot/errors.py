"""Exception types shared across the package."""


class SphereOTError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedDimension(SphereOTError):
    """Ambient dimension below 3 requested."""


class AntipodalError(SphereOTError):
    """Logarithm map queried within tolerance of the antipode."""


class DegenerateAxis(SphereOTError):
    """A requested frame axis has (numerically) zero length."""


class CutLocusError(SphereOTError):
    """A cost-family operation was queried at or beyond the cut locus."""


class GradientOutOfRange(SphereOTError):
    """c-exponential queried outside the admissible gradient ball."""


class AntipodalEndpoint(SphereOTError):
    """c-segment endpoint sits at the cut locus of the base point."""


class DomainError(SphereOTError, ValueError):
    """Numeric argument outside the mathematical domain of an operation."""


class NonConvergence(SphereOTError):
    """An iterative solver exhausted its iteration budget."""


class InfeasibleError(SphereOTError):
    """Transport marginals cannot be coupled (should not occur for balanced input)."""


class PlanInvariantError(SphereOTError):
    """A transport plan violates marginal, feasibility, or slackness bounds."""


class ConfigError(SphereOTError):
    """Malformed CLI or file configuration."""


class DominatedSupportError(SphereOTError, ValueError):
    """A finite-max potential contains a support that never attains the max."""
