"""Error types shared across the package.

Each class corresponds to one failure mode of the public API; they all derive
from BranchixError so callers can catch the package's failures in one clause.
"""

from __future__ import annotations


class BranchixError(Exception):
    """Base class for all package errors."""


# field construction / arithmetic

class NonPrimeModulus(BranchixError):
    """Modulus is composite (e.g. 9, 15)."""


class EvenCharacteristic(BranchixError):
    """Modulus is even; only odd primes are supported."""


class TooSmall(BranchixError):
    """Modulus below 2."""


class DivisionByZero(BranchixError):
    """Multiplicative inverse of 0 requested."""


# triangular group construction

class DimensionMismatch(BranchixError):
    """Matrix operands of different sizes."""


class NotInGroup(BranchixError):
    """Matrix fails the group's membership conditions (zero diagonal entry,
    or non-unit diagonal for a unitriangular group)."""


class ResourceGuardExceeded(BranchixError):
    """Group order exceeds the enumeration guard."""

    def __init__(self, message, order=None, guard=None):
        super().__init__(message)
        self.order = order
        self.guard = guard


# engine

class OrderMismatch(BranchixError):
    """Subgroups from different ambient groups combined."""


class SizeGuardExceeded(BranchixError):
    """Isomorphism backtracking refused: operand group too large."""


class ElementNotInSubgroup(BranchixError):
    """Element code not contained in the subgroup it was used with."""


# branching

class FingerprintCollision(BranchixError):
    """Two centralizers that should be distinct types share all fingerprint
    tiers and are too large for the isomorphism referee."""


# reference / verify

class UnsupportedGroup(BranchixError):
    """No transcribed reference table for this (family, n)."""


class UnsupportedK(BranchixError):
    """Tuple length outside the tabulated range."""


class DimensionIncompatible(BranchixError):
    """Empirical and reference matrices cannot be aligned."""

    def __init__(self, message, empirical=None, reference=None):
        super().__init__(message)
        self.empirical = empirical
        self.reference = reference


class InsufficientPoints(BranchixError):
    """Too few sample primes for the requested interpolation degree."""


class NonIntegralCoefficients(BranchixError):
    """Interpolation produced a non-integer coefficient."""
