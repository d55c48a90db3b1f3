"""Finite field arithmetic for GF(p^k).

Elements are coefficient vectors of length k over the integers mod p, lowest
degree first, reduced modulo a fixed monic irreducible polynomial. Each element
also has an integer index sum(c_i * p**i) used by the lookup tables.
"""

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence, TypeAlias

import numpy as np

from mubspectra.utils import is_prime

FieldElement: TypeAlias = tuple[int, ...]
Poly: TypeAlias = tuple[int, ...]

DEFAULT_MAX_ORDER = 1024


def _trim(poly: Sequence[int]) -> Poly:
    poly = list(poly)
    while poly and poly[-1] == 0:
        poly.pop()
    return tuple(poly)


def poly_rem(f: Sequence[int], g: Sequence[int], p: int) -> Poly:
    """Remainder of f divided by a monic g over GF(p)."""
    g = _trim(g)
    assert g and g[-1] == 1, "divisor must be monic"
    r = [c % p for c in f]
    dg = len(g) - 1
    for d in range(len(r) - 1, dg - 1, -1):
        c = r[d]
        if c:
            for i, gi in enumerate(g):
                r[d - dg + i] = (r[d - dg + i] - c * gi) % p
    return _trim(r[:dg])


def monic_polys(degree: int, p: int) -> Iterator[Poly]:
    """Monic polynomials of a given degree, lower coefficients lexicographic."""
    for lower in itertools.product(range(p), repeat=degree):
        yield (*lower, 1)


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..deg/2."""
    poly = _trim(poly)
    degree = len(poly) - 1
    if degree < 1:
        return False
    for d in range(1, degree // 2 + 1):
        for g in monic_polys(d, p):
            if not poly_rem(poly, g, p):
                return False
    return True


@dataclass(frozen=True)
class FieldCtx:
    """The field GF(q), q = p**k, presented as GF(p)[x] / (modulus)."""

    p: int
    k: int
    modulus: Poly  # k+1 coefficients, lowest first, monic

    def __post_init__(self):
        assert len(self.modulus) == self.k + 1 and self.modulus[-1] == 1

    @property
    def q(self) -> int:
        return self.p**self.k

    @property
    def zero(self) -> FieldElement:
        return (0,) * self.k

    @property
    def one(self) -> FieldElement:
        return (1,) + (0,) * (self.k - 1)

    def element(self, index: int) -> FieldElement:
        if not 0 <= index < self.q:
            raise ValueError(f"Element index {index} outside GF({self.q})")
        digits = []
        for _ in range(self.k):
            index, c = divmod(index, self.p)
            digits.append(c)
        return tuple(digits)

    def index(self, x: FieldElement) -> int:
        self.check(x)
        return sum(c * self.p**i for i, c in enumerate(x))

    def check(self, x: FieldElement) -> None:
        if len(x) != self.k or any(not 0 <= c < self.p for c in x):
            raise ValueError(f"{x} is not an element of GF({self.p}^{self.k})")

    def elements(self) -> list[FieldElement]:
        return [self.element(i) for i in range(self.q)]

    def add(self, x: FieldElement, y: FieldElement) -> FieldElement:
        return tuple((a + b) % self.p for a, b in zip(x, y))

    def neg(self, x: FieldElement) -> FieldElement:
        return tuple(-a % self.p for a in x)

    def sub(self, x: FieldElement, y: FieldElement) -> FieldElement:
        return self.add(x, self.neg(y))

    def mul(self, x: FieldElement, y: FieldElement) -> FieldElement:
        prod = [0] * (2 * self.k - 1)
        for i, a in enumerate(x):
            if a:
                for j, b in enumerate(y):
                    prod[i + j] += a * b
        r = poly_rem(prod, self.modulus, self.p)
        return r + (0,) * (self.k - len(r))

    def pow(self, x: FieldElement, e: int) -> FieldElement:
        result, base = self.one, x
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, x: FieldElement) -> FieldElement:
        if x == self.zero:
            raise ZeroDivisionError("zero has no inverse")
        return self.pow(x, self.q - 2)

    def trace(self, x: FieldElement) -> int:
        return field_trace(self, x)

    @cached_property
    def mul_table(self) -> np.ndarray:
        """q×q table of product indices."""
        elems = self.elements()
        table = np.zeros((self.q, self.q), dtype=np.int64)
        for i, x in enumerate(elems):
            for j in range(i, self.q):
                table[i, j] = table[j, i] = self.index(self.mul(x, elems[j]))
        return table

    @cached_property
    def trace_table(self) -> np.ndarray:
        return np.array([field_trace(self, x) for x in self.elements()], dtype=np.int64)


def field_make(p: int, k: int, max_order: int = DEFAULT_MAX_ORDER) -> FieldCtx:
    """Build GF(p^k) with the lexicographically smallest monic irreducible modulus.

    Candidates are compared on their coefficients from the constant term upwards.
    """
    if not is_prime(p):
        raise ValueError(f"Characteristic {p} is not prime")
    if k < 1:
        raise ValueError(f"Extension degree must be positive, got {k}")
    if p == 2 and k > 1:
        raise ValueError("Characteristic-2 extensions are not supported")
    if p**k > max_order:
        raise ValueError(f"Field order {p}^{k} exceeds the cap of {max_order}")

    modulus = next(f for f in monic_polys(k, p) if is_irreducible(f, p))
    return FieldCtx(p=p, k=k, modulus=modulus)


def field_trace(ctx: FieldCtx, x: FieldElement) -> int:
    """Absolute trace x + x^p + ... + x^(p^(k-1)), an element of GF(p)."""
    ctx.check(x)
    total, y = x, x
    for _ in range(ctx.k - 1):
        y = ctx.pow(y, ctx.p)
        total = ctx.add(total, y)
    assert all(c == 0 for c in total[1:]), "trace must lie in the prime field"
    return total[0]
