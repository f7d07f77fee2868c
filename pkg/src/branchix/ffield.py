"""Prime fields F_q for odd primes q.

A PrimeField is a small immutable container of lookup tables: the nonzero
residues (unit_list), the inverse table, multiplicative orders of units and a
primitive root.  Residues are plain ints in [0, q); all arithmetic is mod q.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DivisionByZero, EvenCharacteristic, NonPrimeModulus, TooSmall


def _is_prime(m: int) -> bool:
    if m < 2:
        return False
    d = 2
    while d * d <= m:
        if m % d == 0:
            return False
        d += 1
    return True


def _multiplicative_order(a: int, q: int) -> int:
    acc, k = a % q, 1
    while acc != 1:
        acc = acc * a % q
        k += 1
    return k


@dataclass(frozen=True)
class PrimeField:
    """Arithmetic tables for F_q, q an odd prime."""

    q: int
    unit_list: tuple          # the q-1 nonzero residues, ascending
    inverse_table: tuple      # inverse_table[a] = a^-1 for a in 1..q-1; slot 0 unused
    unit_index: tuple         # unit_index[a] = position of a in unit_list (a >= 1)
    unit_order: tuple         # unit_order[a] = multiplicative order of a (a >= 1)
    primitive_root: int
    _ops: dict = field(default_factory=dict, repr=False, compare=False)

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return a * b % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise DivisionByZero(f"0 has no inverse mod {self.q}")
        return self.inverse_table[a]


def make_field(q: int) -> PrimeField:
    """Build F_q.  q must be an odd prime: 2 and even moduli are rejected as
    EvenCharacteristic, composite odd moduli as NonPrimeModulus, q < 2 as
    TooSmall."""
    if not isinstance(q, int) or isinstance(q, bool):
        raise NonPrimeModulus(f"modulus must be an int, got {q!r}")
    if q < 2:
        raise TooSmall(f"modulus {q} is below 2")
    if q % 2 == 0:
        raise EvenCharacteristic(f"modulus {q} is even; odd primes only")
    if not _is_prime(q):
        raise NonPrimeModulus(f"modulus {q} is not prime")

    units = tuple(range(1, q))
    inverse = (0,) + tuple(pow(a, q - 2, q) for a in units)
    index = (None,) + tuple(a - 1 for a in units)
    order = (0,) + tuple(_multiplicative_order(a, q) for a in units)
    root = next(a for a in units if order[a] == q - 1)
    return PrimeField(q=q, unit_list=units, inverse_table=inverse,
                      unit_index=index, unit_order=order, primitive_root=root)
