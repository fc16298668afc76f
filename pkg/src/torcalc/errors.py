"""Exception hierarchy shared by all torcalc modules."""


class TorcalcError(Exception):
    """Base class for every error raised by the library."""

    code = "error"


class DomainError(TorcalcError, ValueError):
    code = "domain"


class OnAxis(DomainError):
    """The point lies on the z axis, which no natural chart covers."""

    code = "on_axis"


class OutOfRange(DomainError):
    """|u| >= a(k): the natural coordinate is outside its finite interval."""

    code = "out_of_range"


class OutsideTorus(DomainError):
    code = "outside_torus"


class NonConvergence(TorcalcError, ArithmeticError):
    code = "non_convergence"


class NoBracket(TorcalcError, ValueError):
    code = "no_bracket"


class Singular(TorcalcError, ArithmeticError):
    code = "singular"


class FieldVanishes(TorcalcError, ArithmeticError):
    code = "field_vanishes"
