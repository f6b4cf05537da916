"""Exception types shared across the package."""


class SizeError(ValueError):
    """Requested register size is outside the supported range."""


class QubitIndexError(IndexError):
    """Qubit index out of range or repeated."""


class ValidationError(ValueError):
    """An operator, vector or parameter violates its invariants."""


class LocalityViolation(PermissionError):
    """A party asked for an operation on qubits it does not own."""


class BoundViolation(RuntimeError):
    """A classical strategy scored above the LOCC bound; always a bug."""
