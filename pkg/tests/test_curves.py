from fractions import Fraction

import mpmath
import pytest
import sympy
from mpmath import mp, mpc, mpf

from lame_dessins.curves import (
    branch_points, division_polynomial_orders, doubled_point, model_at_precision,
    orbit_polynomial, order_of_double, point_order, recognize_j, reduction_report,
    torsion_order,
)
from lame_dessins.errors import TorsionUncertain
from lame_dessins.numfield import NumberField, squarefree_part, vp_rational
from lame_dessins.trees import JClass

from .conftest import pipeline

X = sympy.Symbol("x")


def test_degree_three_model_is_exact():
    m = pipeline(3).models["[1,1,1]"]
    tol = mpf(2) ** -200
    assert abs(m.g2) < tol and abs(m.g3 - 4) < tol and abs(m.B) < tol
    assert abs(m.y - 2j) < tol
    assert m.j_class == JClass.J_ZERO
    assert torsion_order(m) == 3
    assert m.point_residual() < tol


def test_branch_points_of_degree_three():
    bd = branch_points(pipeline(3).solutions[0])
    with mp.workprec(280):
        cubes = [complex(p ** 3) for p in bd.S[1:]]
    assert bd.S[0] == 0
    assert all(abs(c - 1) < 1e-60 for c in cubes)


def test_scaling_leaves_invariants_fixed():
    m = pipeline(7).models["[1,2,4]"]
    with mp.workprec(280):
        u = mpc("0.7", "-1.3")
        s = m.scaled(u)
        for k in ("j", "j1", "j2", "j3"):
            assert abs(s.invariants()[k] - m.invariants()[k]) < mpf(2) ** -180 * max(1, abs(m.invariants()[k]))
        assert s.point_residual() < mpf(2) ** -180 * max(1, abs(s.y) ** 2)


@pytest.mark.parametrize("label,order", [("[1,1,5]", 7), ("[1,3,3]", 7), ("[1,2,4]", 14),
                                         ("[1,4,2]", 14), ("[2,2,3]", 14)])
def test_torsion_orders_degree_seven(label, order):
    m = pipeline(7).models[label]
    assert torsion_order(m) == order
    assert order_of_double(m) == 7
    zeros = division_polynomial_orders(m, m.B, m.y, order)
    assert order in zeros
    assert all(order % k == 0 for k in zeros)


def test_double_point_on_curve():
    m = pipeline(7).models["[1,1,5]"]
    x2, y2 = doubled_point(m)
    assert m.curve_residual(x2, y2) < mpf(2) ** -150 * max(1, abs(y2) ** 2)


def test_non_torsion_point_is_reported():
    m = pipeline(7).models["[1,1,5]"]
    with mp.workprec(280):
        x = mpc("0.3", "0.1")
        y = mpmath.sqrt(4 * x ** 3 - m.g2 * x - m.g3)
    with pytest.raises(TorsionUncertain):
        point_order(m, x, y, kmax=40)


def test_field_of_moduli_signature_zero(p7):
    fd = p7.field_of("[1,1,5]")
    assert fd.degree == 2
    assert fd.square_class == 21
    assert squarefree_part(fd.discriminant) == 21


def test_field_of_moduli_signature_two(p7):
    fd = p7.field_of("[1,2,4]")
    assert fd.degree == 3
    assert fd.discriminant % 49 == 0
    assert fd.field.prime_decomposition(7) == [(3, 1)]


def test_orbit_sizes(p7):
    sizes = sorted(len(o.trees) for o in p7.orbits.orbits)
    assert sizes == [2, 3]


@pytest.mark.parametrize("labels,bits", [(("[1,1,5]", "[1,3,3]"), 256),
                                         (("[1,2,4]", "[1,4,2]", "[2,2,3]"), 1024)])
def test_orbit_product_agrees_with_lattice_reduction(p7, labels, bits):
    """prod (X - j_i) over the orbit is an independent route to the minimal polynomial."""
    js = [model_at_precision(p7.models[k], bits).j for k in labels]
    direct = orbit_polynomial(js, bits)
    assert direct is not None
    via_lll = recognize_j(p7.models[labels[0]], len(labels))
    assert direct == via_lll.min_poly


@pytest.mark.parametrize("label,v_mod6,good", [("[1,1,5]", 3, False), ("[1,3,3]", 3, False),
                                               ("[1,2,4]", 0, True), ("[1,4,2]", 0, True),
                                               ("[2,2,3]", 0, True)])
def test_reduction_at_seven(p7, label, v_mod6, good):
    rep = reduction_report(p7.models[label], 7, p7.field_of(label))
    assert rep.v_delta_mod6 == v_mod6
    assert rep.good_reduction is good
    assert rep.criterion_agrees and rep.theorem_divisibility_holds
    assert rep.predicted_v_delta_mod6 == v_mod6


# ---------------------------------------------------------------------------
# number fields
# ---------------------------------------------------------------------------


def test_number_field_norm_and_inverse_vs_sympy():
    T = (-2, -1, 0, 1)                    # x^3 - x - 2
    with mp.workprec(200):
        root = mpc(mpmath.findroot(lambda t: t ** 3 - t - 2, 1.5))
        K = NumberField(T, root)
        a = K.element([Fraction(1, 2), 3, -1])
        assert abs(K.embed(a, 128) - (mpf(1) / 2 + 3 * root - root ** 2)) < mpf(10) ** -30
    expect = sympy.resultant(X ** 3 - X - 2, sympy.Rational(1, 2) + 3 * X - X ** 2, X)
    assert K.norm(a) == Fraction(str(expect))
    assert K.mul(a, K.inverse(a)) == K.one()


def test_number_field_discriminant_vs_sympy():
    K = NumberField((-5, -1, 1), mpc(0))
    assert K.discriminant == 21
    K3 = NumberField((-2, -1, 0, 1), mpc(0))
    from sympy.polys.numberfields.basis import round_two
    assert K3.discriminant == int(round_two(sympy.Poly(X ** 3 - X - 2, X))[1])


def test_valuation():
    assert vp_rational(Fraction(98, 3), 7) == 2
    assert vp_rational(Fraction(3, 343), 7) == -3
    with pytest.raises(ValueError):
        vp_rational(0, 7)
