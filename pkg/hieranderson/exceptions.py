"""Exception hierarchy shared by every sub-package."""


class HierarchicalModelError(Exception):
    pass


class ValidationError(HierarchicalModelError, ValueError):
    """An argument or config field violates a documented precondition."""


class RangeError(HierarchicalModelError, IndexError):
    """An index, rank or point lies outside the materialized volume."""


class DomainError(HierarchicalModelError, ValueError):
    """A function is evaluated where it is not defined (e.g. log of 0)."""


class ResourceError(HierarchicalModelError, RuntimeError):
    """A dense computation would exceed the configured size cap."""


class PreconditionError(HierarchicalModelError):
    def __init__(self, message, deficit):
        super().__init__(f"{message} (deficit {deficit:.3e})")
        self.deficit = deficit


class ConvergenceError(HierarchicalModelError, RuntimeError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InvariantViolation(HierarchicalModelError):
    pass
