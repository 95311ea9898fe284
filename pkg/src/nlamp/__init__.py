"""Nonlinear Schroedinger generators, EPR measurement protocols and the growth of
first-order nonlocal signals with localization sharpness."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    EmptyMixtureError,
    FitConditioningError,
    GridMismatchError,
    IntegrationError,
    QuadratureError,
    SingularPointError,
    UnitError,
)
from .generators import GeneratorSpec, apply_generator, apply_N  # noqa: F401
from .grid import ComplexField, GridSpec, TwoParticleField, inner_product  # noqa: F401
