"""Exceptions raised by the operator layer."""


class RieszToolkitError(Exception):
    """Base class for every error raised by this package"""


class DomainError(RieszToolkitError, ValueError):
    """An argument lies outside the mathematical domain of an operation"""


class ShapeMismatchError(RieszToolkitError, ValueError):
    """Coefficient data does not match the index set it is applied on"""


class MemoryBudgetError(RieszToolkitError, ValueError):
    """A grid or tensor would exceed the configured point budget"""


class AdjointMismatchError(RieszToolkitError):
    """A map and its claimed adjoint fail the inner-product test"""


class ConfigValidationError(RieszToolkitError, ValueError):
    """Experiment configuration rejected before any allocation"""


class SchemaError(RieszToolkitError, ValueError):
    """A result file does not carry the expected columns"""
