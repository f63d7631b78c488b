import math
import random
from fractions import Fraction

import mpmath
import pytest
import sympy
from hypothesis import given, strategies as st
from mpmath import mp, mpc, mpf

from lame_dessins.errors import InsufficientPrecision
from lame_dessins.mpnum import (
    Poly, complex_from_str, complex_to_str, express_in_basis, height_budget, integer_relation,
    lll_reduce, poly_resultant_discriminant, poly_roots, recognize_algebraic, required_bits,
    resultant,
)

X = sympy.Symbol("x")


def _sympy_poly(coeffs):
    return sum(int(c) * X ** k for k, c in enumerate(coeffs))


def test_poly_arithmetic_matches_sympy():
    a, b = [3, -1, 0, 2], [1, 4, -2]
    prod = sympy.Poly(_sympy_poly(a) * _sympy_poly(b), X).all_coeffs()[::-1]
    assert [int(c.real) for c in (Poly(a) * Poly(b)).coeffs] == [int(c) for c in prod]
    q, r = (Poly(a) * Poly(b) + Poly([5])).divmod(Poly(b))
    assert all(abs(c) < 1e-20 for c in (q - Poly(a)).coeffs)
    assert abs(r[0] - 5) < 1e-20 and r.degree == 0


def test_roots_with_multiplicity():
    with mp.workprec(200):
        p = Poly.from_roots([1, 1, 2j, -3])
        roots = poly_roots(p, 160)
    mults = sorted(roots, key=lambda rm: rm[1])
    assert [m for _, m in mults] == [1, 1, 2]
    assert abs(mults[-1][0] - 1) < mpf(10) ** -30


def test_roots_against_numpy_random():
    import numpy as np

    rng = random.Random(4)
    for _ in range(10):
        coeffs = [rng.randint(-9, 9) for _ in range(6)] + [rng.randint(1, 9)]
        ours = [complex(r) for r, m in poly_roots(Poly(coeffs), 128) for _ in range(m)]
        ref = list(np.roots(coeffs[::-1]))
        assert len(ours) == len(ref)
        for a in ours:
            assert min(abs(a - b) for b in ref) < 1e-8


def test_resultant_and_discriminant_vs_sympy():
    a, b = [2, -3, 0, 1], [-1, 5, 1]
    ref = sympy.resultant(_sympy_poly(a), _sympy_poly(b), X)
    assert abs(resultant(Poly(a), Poly(b)) - int(ref)) < 1e-15
    f = [-4, -7, 0, 4]
    disc = sympy.discriminant(_sympy_poly(f), X)
    assert abs(poly_resultant_discriminant(Poly(f)) - int(disc)) < 1e-12 * abs(int(disc))


def test_lll_finds_planted_short_vector():
    basis = [[1, 0, 0, 10 ** 6], [0, 1, 0, 2 * 10 ** 6 + 1], [0, 0, 1, 3 * 10 ** 6 - 1]]
    red = lll_reduce(basis)
    # the lattice contains (2, -1, 0, -1); the first reduced vector is at most that long
    assert sum(c * c for c in red[0]) <= 6
    # the first three coordinates are the coefficients in the old basis: unimodular change
    assert abs(sympy.Matrix([r[:3] for r in red]).det()) == 1
    for r in red:
        assert r[3] == sum(c * b[3] for c, b in zip(r[:3], basis))


def test_integer_relation_for_sqrt2():
    with mp.workprec(200):
        v = mpmath.sqrt(2)
        rel = integer_relation([1, v, v ** 2], 180)
    assert sorted(map(abs, rel)) == [0, 1, 2]


def test_recognize_quadratic_and_rational():
    with mp.workprec(300):
        a = recognize_algebraic((1 + mpmath.sqrt(21)) / 2, 2, 30, 280)
        assert a.min_poly == (-5, -1, 1)
        r = recognize_algebraic(mpf(-22) / 7, 2, 30, 280)
        assert r.as_fraction() == Fraction(-22, 7)


def test_recognize_rejects_transcendental():
    with mp.workprec(300):
        assert recognize_algebraic(mp.pi, 3, 25, 280) is None


def test_precondition_enforced():
    with pytest.raises(InsufficientPrecision):
        recognize_algebraic(mpf(2), 3, 100, 256)
    assert required_bits(3, height_budget(3, 512)) <= 512


def test_express_in_basis():
    with mp.workprec(300):
        s = mpmath.sqrt(7)
        r = express_in_basis(mpf(3) / 5 - 2 * s, [1, s], 40, 280)
    assert r == [Fraction(3, 5), Fraction(-2)]


# ---------------------------------------------------------------------------
# property suites
# ---------------------------------------------------------------------------


def check_roundtrip(seed: int, bits: int = 256):
    rng = random.Random(seed)
    with mp.workprec(bits + 24):
        z = mpc(mpf(rng.uniform(-1, 1)) * mpf(10) ** rng.randint(-30, 30),
                mpf(rng.uniform(-1, 1)) * mpf(10) ** rng.randint(-30, 30))
        z = z * (1 + mpf(2) ** -200 * rng.random())
        back = complex_from_str(complex_to_str(z, bits), bits)
        err = abs(back - z) / abs(z)
    return err < mpf(2) ** (-(bits - 20))


def check_recognition(seed: int, bits: int = 512):
    """A random algebraic number of degree <= 3 and small height is recovered exactly."""
    rng = random.Random(seed)
    while True:
        deg = rng.randint(1, 3)
        coeffs = [rng.randint(-50, 50) for _ in range(deg)] + [rng.randint(1, 20)]
        fac = sympy.factor_list(_sympy_poly(coeffs), X)[1]
        if len(fac) == 1 and fac[0][1] == 1 and sympy.degree(fac[0][0], X) == deg:
            break
    with mp.workprec(bits + 24):
        roots = [r for r, _ in poly_roots(Poly(coeffs), bits)]
        x = roots[rng.randrange(len(roots))]
        a = recognize_algebraic(x, 3, 24, bits)
    g = math.gcd(*coeffs)
    expect = tuple(c // g for c in coeffs)
    return a is not None and a.min_poly == expect


@given(st.integers(min_value=0, max_value=10 ** 6))
def test_property_string_roundtrip(seed):
    assert check_roundtrip(seed)


@given(st.integers(min_value=0, max_value=10 ** 6))
def test_property_recognition(seed):
    assert check_recognition(seed)
