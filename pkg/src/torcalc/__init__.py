"""Natural-coordinate calculus for the toroidal-moment operator T3.

Submodules: :mod:`numerics`, :mod:`coords`, :mod:`fields`, :mod:`calculus`,
:mod:`spectral`, :mod:`verify` and the command line in :mod:`cli`.
"""

from . import calculus, coords, fields, numerics, spectral
from .coords import CartPoint, CylPoint, NatK12, NatKU, ScaleConfig, DEFAULT_CFG
from .errors import (DomainError, FieldVanishes, NoBracket, NonConvergence, OnAxis, OutOfRange,
                     OutsideTorus, Singular, TorcalcError)

__version__ = "0.1.0"

__all__ = [
    "calculus", "coords", "fields", "numerics", "spectral",
    "CartPoint", "CylPoint", "NatK12", "NatKU", "ScaleConfig", "DEFAULT_CFG",
    "DomainError", "FieldVanishes", "NoBracket", "NonConvergence", "OnAxis", "OutOfRange",
    "OutsideTorus", "Singular", "TorcalcError",
]
