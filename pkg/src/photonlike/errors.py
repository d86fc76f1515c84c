"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters, specs or config files."""


class DomainError(ValueError):
    """An operation was asked for outside its mathematical domain."""


class NumericalDomainError(ArithmeticError):
    """A field evaluation produced a non-finite value."""


class SingularAmplitudeError(NumericalDomainError):
    """The amplitude u**2 + p**2 vanishes where a phase is needed."""


class UndefinedScaleError(NumericalDomainError):
    """The scale l0 is undefined because the field is a pure running wave."""
