"""Exception hierarchy shared by every module."""


class GeometryError(Exception):
    """Base class for all numerical-geometry failures."""


class OutOfChart(GeometryError):
    pass


class SingularMetric(GeometryError):
    pass


class MissingFrame(GeometryError):
    pass


class StepUnderflow(GeometryError):
    pass


class AsymmetricField(GeometryError):
    pass


class NonCodazziT(GeometryError):
    pass


class NonCodazziH(GeometryError):
    pass


class BoundViolated(GeometryError):
    pass


class SingularA(GeometryError):
    pass


class EmptyInterval(GeometryError):
    pass


class WrongBase(GeometryError):
    pass


class LogDivergence(GeometryError):
    pass


class OpenLoop(GeometryError):
    pass


class AmbiguousRank(GeometryError):
    """Singular-value gap too small to decide a numerical rank."""

    def __init__(self, message, singular_values=None):
        super().__init__(message)
        self.singular_values = singular_values


class DimTooLarge(GeometryError):
    pass


class VanishingSpinor(GeometryError):
    pass


class NonParallelFiber(GeometryError):
    pass


class HolonomyObstruction(GeometryError):
    pass


class NotCodazzi(GeometryError):
    pass


class GridTooCoarse(GeometryError):
    pass


class ConfigError(Exception):
    pass


class FixtureError(Exception):
    pass


class UnknownId(KeyError):
    pass
