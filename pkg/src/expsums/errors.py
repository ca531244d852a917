"""Exception hierarchy shared by all modules."""


class ExpSumsError(Exception):
    """Base class for every error raised by this package."""


class ResourceCap(ExpSumsError):
    """A configured size cap would be exceeded (CLI exit code 4)."""


class PreconditionError(ExpSumsError, ValueError):
    """Inputs violate a documented precondition of an operation."""


# field arithmetic
class NotPrime(PreconditionError):
    pass


class EvenPrime(PreconditionError):
    pass


class TooLarge(ResourceCap):
    pass


# trace-function catalog
class NotDisjoint(PreconditionError):
    pass


class DegreeTooLarge(PreconditionError):
    pass


class SingularMatrix(PreconditionError):
    pass


class ExtensionTooLarge(ResourceCap):
    """Splitting field of the critical points exceeds the degree/size cap."""


class UnsupportedExtension(ExpSumsError):
    """Kernel has no formula-level definition over field extensions."""


# complete sums
class BoxTooLarge(ResourceCap):
    pass


class DegreeOverflow(ResourceCap):
    pass


# bilinear forms
class BadExponent(PreconditionError):
    pass


class RangeViolation(PreconditionError):
    pass


class ConstraintViolation(PreconditionError):
    pass


# finite groups
class OrderCapExceeded(ResourceCap):
    pass


class NotSurjective(PreconditionError):
    pass


class NotIntegral(ExpSumsError):
    """Character average is not close to an integer: the representation is broken."""


class NotNormal(PreconditionError):
    pass


class NotQuasisimple(PreconditionError):
    pass


class PreconditionFailed(PreconditionError):
    pass


class ConfigError(ExpSumsError, ValueError):
    """Experiment configuration could not be parsed or validated."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class CheckFailed(ExpSumsError):
    """A run completed but one of its built-in checks failed (CLI exit code 3)."""
