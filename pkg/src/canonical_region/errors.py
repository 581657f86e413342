"""Exception and warning types shared across the package."""


class CanonicalRegionError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(CanonicalRegionError, ValueError):
    """A structural contract was violated: bad axes, shapes, or index ranges."""


class PreconditionError(StructuralError):
    """An operation was invoked on inputs outside its stated precondition."""


class NumericIntegrityError(CanonicalRegionError, ArithmeticError):
    """A computed quantity violated a numeric guarantee beyond tolerance.

    This signals a bug or broken input, not ordinary floating-point noise:
    tolerances are chosen so that correct code never trips it.
    """


class BudgetError(CanonicalRegionError, RuntimeError):
    """A computation was refused because its estimated cost exceeds the
    desk-scale budget this package promises to stay within."""


class InputError(CanonicalRegionError, ValueError):
    """A problem file failed to parse or validate."""


class DegeneracyWarning(UserWarning):
    """Degenerate input detected: zero-probability symbols or vanishing
    statistical dependence.  Results remain correct but uniqueness and
    distinctness guarantees are weakened."""
