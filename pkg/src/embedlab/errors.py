"""Exception types shared across the package."""


class EmbedLabError(Exception):
    """Base class for all package errors."""


class DimensionError(EmbedLabError, ValueError):
    """Operand shapes are incompatible."""


class ContractViolation(EmbedLabError, ValueError):
    """An input fails a precondition of the operation (e.g. not Hermitian)."""


class ValidationError(EmbedLabError, ValueError):
    """A value fails to validate as a stochastic matrix, rate matrix, etc."""


class DomainError(EmbedLabError, ValueError):
    """A scalar argument lies outside the domain of the function."""


class UnsupportedDimension(EmbedLabError, ValueError):
    """The operation is only defined for particular dimensions."""


class ResourceGuardError(EmbedLabError, ValueError):
    """The requested computation exceeds a hard size guard."""
