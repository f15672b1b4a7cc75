"""Numerical checks for Codazzi tensors, Lorentzian cylinders, holonomy and spinors."""

__version__ = "0.1.0"

from .errors import ConfigError, FixtureError, GeometryError, UnknownId  # noqa: E402
from .fixtures import build_fixture, list_fixtures  # noqa: E402
from .geometry import ManifoldModel, christoffel, riemann  # noqa: E402

__all__ = [
    "ConfigError",
    "FixtureError",
    "GeometryError",
    "ManifoldModel",
    "UnknownId",
    "__version__",
    "build_fixture",
    "christoffel",
    "list_fixtures",
    "riemann",
]
