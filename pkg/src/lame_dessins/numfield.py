"""Exact arithmetic in ``Q[X]/(T)`` for small number fields.

Elements are tuples of ``Fraction`` coordinates in the power basis of a root of
``T``.  Integral bases and prime decompositions are delegated to sympy; norms,
inverses and valuations of elements are computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import mpmath
from mpmath import mp

from .mpnum import GUARD_BITS, big

Element = tuple[Fraction, ...]


def vp_rational(x: Fraction | int, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def _det(rows: list[list[Fraction]]) -> Fraction:
    a = [list(r) for r in rows]
    n = len(a)
    det = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for i in range(k + 1, n):
            m = a[i][k] / a[k][k]
            if m:
                for j in range(k, n):
                    a[i][j] -= m * a[k][j]
    return det


def _solve(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    n = len(rows)
    a = [list(r) + [b] for r, b in zip(rows, rhs)]
    for k in range(n):
        piv = next(i for i in range(k, n) if a[i][k] != 0)
        a[k], a[piv] = a[piv], a[k]
        for i in range(n):
            if i != k and a[i][k] != 0:
                m = a[i][k] / a[k][k]
                for j in range(k, n + 1):
                    a[i][j] -= m * a[k][j]
    return [a[i][n] / a[i][i] for i in range(n)]


@dataclass(frozen=True)
class NumberField:
    """``Q(theta)`` with ``theta`` the root of ``T`` (ascending integer coefficients) near ``root``."""

    T: tuple[int, ...]
    root: mpmath.mpc

    @property
    def degree(self) -> int:
        return len(self.T) - 1

    @cached_property
    def _monic(self) -> list[Fraction]:
        lc = Fraction(self.T[-1])
        return [Fraction(c) / lc for c in self.T]

    def element(self, coords) -> Element:
        c = [Fraction(x) for x in coords] + [Fraction(0)] * self.degree
        return tuple(c[:self.degree])

    def one(self) -> Element:
        return self.element([1])

    def add(self, a: Element, b: Element) -> Element:
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a: Element, b: Element) -> Element:
        return tuple(x - y for x, y in zip(a, b))

    def scale(self, a: Element, c) -> Element:
        c = Fraction(c)
        return tuple(c * x for x in a)

    def mul(self, a: Element, b: Element) -> Element:
        d = self.degree
        prod = [Fraction(0)] * (2 * d - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        t = self._monic
        for k in range(2 * d - 2, d - 1, -1):
            c = prod[k]
            if c:
                for i in range(d + 1):
                    prod[k - d + i] -= c * t[i]
        return tuple(prod[:d])

    def power(self, a: Element, n: int) -> Element:
        if n < 0:
            return self.power(self.inverse(a), -n)
        out, base = self.one(), a
        while n:
            if n & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            n >>= 1
        return out

    def multiplication_matrix(self, a: Element) -> list[list[Fraction]]:
        """Columns are ``a * theta^k`` in the power basis."""
        d = self.degree
        cols = []
        basis = self.one()
        for _ in range(d):
            cols.append(self.mul(a, basis))
            basis = self.mul(basis, self.element([0, 1]))
        return [[cols[j][i] for j in range(d)] for i in range(d)]

    def norm(self, a: Element) -> Fraction:
        return _det(self.multiplication_matrix(a))

    def trace(self, a: Element) -> Fraction:
        m = self.multiplication_matrix(a)
        return sum(m[i][i] for i in range(self.degree))

    def inverse(self, a: Element) -> Element:
        if all(x == 0 for x in a):
            raise ZeroDivisionError("inverse of zero in a number field")
        return tuple(_solve(self.multiplication_matrix(a), list(self.one())))

    def div(self, a: Element, b: Element) -> Element:
        return self.mul(a, self.inverse(b))

    def embed(self, a: Element, bits: int) -> mpmath.mpc:
        with mp.workprec(bits + GUARD_BITS):
            r = big(self.root)
            acc = mpmath.mpc(0)
            for c in reversed(a):
                acc = acc * r + mpmath.mpf(c.numerator) / c.denominator
            return acc

    # --- sympy-backed invariants -------------------------------------------------

    def _integral_generator_poly(self):
        """Monic integer polynomial of ``lc(T) * theta`` (same field, integral generator)."""
        import sympy

        x = sympy.Symbol("x")
        d, lc = self.degree, self.T[-1]
        coeffs = [self.T[k] * lc ** (d - 1 - k) for k in range(d)] + [1]
        return sympy.Poly(sum(c * x ** k for k, c in enumerate(coeffs)), x, domain=sympy.ZZ)

    @cached_property
    def discriminant(self) -> int:
        if self.degree == 1:
            return 1
        from sympy.polys.numberfields.basis import round_two

        _, dK = round_two(self._integral_generator_poly())
        return int(dK)

    def prime_decomposition(self, p: int) -> list[tuple[int, int]]:
        """``[(e, f), ...]`` for the primes of the field above ``p``."""
        if self.degree == 1:
            return [(1, 1)]
        from sympy.polys.numberfields.primes import prime_decomp

        return [(int(P.e), int(P.f)) for P in prime_decomp(p, T=self._integral_generator_poly())]


def squarefree_part(n: int) -> int:
    """Square class representative of a nonzero integer."""
    from sympy import factorint

    sign = -1 if n < 0 else 1
    out = 1
    for q, e in factorint(abs(n)).items():
        if e % 2:
            out *= q
    return sign * out


def discriminant_factorization(n: int) -> dict[int, int]:
    from sympy import factorint

    return {int(k): int(v) for k, v in factorint(n).items()}


def lcm_denominator(values) -> int:
    return math.lcm(*[Fraction(v).denominator for v in values]) if values else 1
