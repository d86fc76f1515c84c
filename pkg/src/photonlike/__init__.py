"""Differential-form toolkit for nonlinear vacuum field equations and their helical solutions.

Modules:
    fields     scalar and vector fields over (x, y, z, xi) with analytic derivatives
    geometry   exterior algebra on flat 4-space: wedge, Hodge star, d, interior products
    stress     Maxwell stress, invariants, boosts, duality, the 4D energy tensor
    eed        residuals of the nonlinear equations in vector and form language
    frobenius  integrability tests, frame curvatures, projections and scale recovery
    strain     Lie derivatives of the metric and their fluxes
    phlo       the (u, p) solution families, motion residuals, integral quantities
    coulomb    two-charge interaction energy by quadrature
    cli        command-line front end
"""
from . import coulomb, eed, fields, frobenius, geometry, phlo, strain, stress
from .errors import (ConfigurationError, DomainError, NumericalDomainError,
                     SingularAmplitudeError, UndefinedScaleError)

__all__ = [
    "coulomb", "eed", "fields", "frobenius", "geometry", "phlo", "strain", "stress",
    "ConfigurationError", "DomainError", "NumericalDomainError",
    "SingularAmplitudeError", "UndefinedScaleError",
]
__version__ = "0.1.0"
