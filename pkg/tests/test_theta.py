import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st
from mpmath import mp, mpc, mpf

from lame_dessins.errors import AGMFailure, PoleProximity
from lame_dessins.theta import (
    eta1_from_theta, lattice_from_model, scan_torsion, theta_closed_form, theta_eval, wp,
    wp_prime, zeta,
)

from .conftest import pipeline


def test_square_and_hexagonal_lattices():
    with mp.workprec(280):
        L = lattice_from_model(4, 0, 256)
        assert abs(L.tau - 1j) < mpf(2) ** -200
        H = lattice_from_model(0, 4, 256)
        assert abs(H.tau - mpc(0.5, mpmath.sqrt(3) / 2)) < mpf(2) ** -200


def test_same_curve_at_double_precision():
    with mp.workprec(540):
        L = lattice_from_model(0, 4, 512)
        assert abs(L.legendre_residual()) < mpf(2) ** -256


def test_singular_cubic_rejected():
    with pytest.raises(AGMFailure):
        lattice_from_model(3, 1, 128)


def test_laurent_expansion_near_origin():
    with mp.workprec(280):
        g2, g3 = mpc(1.3, -0.4), mpc(-0.7, 2.1)
        L = lattice_from_model(g2, g3, 256)
        z = mpc(0.01, 0.004)
        wp_series = 1 / z ** 2 + g2 * z ** 2 / 20 + g3 * z ** 4 / 28 + g2 ** 2 * z ** 6 / 1200
        zeta_series = 1 / z - g2 * z ** 3 / 60 - g3 * z ** 5 / 140 - g2 ** 2 * z ** 7 / 8400
        assert abs(wp(L, z) - wp_series) < mpf(10) ** -13
        assert abs(zeta(L, z) - zeta_series) < mpf(10) ** -15


def test_eta_two_routes_agree():
    with mp.workprec(280):
        L = lattice_from_model(mpc(2.5, 1), mpc(-1, 0.5), 256)
        assert abs(eta1_from_theta(L) - L.eta1) < mpf(2) ** -200


def test_theta_closed_form_matches_zeta_route():
    with mp.workprec(280):
        L = lattice_from_model(mpc(1, 2), mpc(3, -1), 256)
        for a, b in [(mpf("0.1"), mpf("0.3")), (mpf(2) / 7, mpf(3) / 7), (mpf("0.77"), mpf("0.05"))]:
            assert abs(theta_eval(L, a, b).theta_value - theta_closed_form(L, a, b)) < mpf(2) ** -200


def test_pole_proximity():
    with mp.workprec(280):
        L = lattice_from_model(1, 1, 256)
        with pytest.raises(PoleProximity):
            theta_eval(L, 1, 0)


def test_theta_odd_and_half_periods():
    with mp.workprec(280):
        L = lattice_from_model(mpc(1, 2), mpc(3, -1), 256)
        # theta vanishes at the three half periods
        for a, b in [(0.5, 0), (0, 0.5), (0.5, 0.5)]:
            assert abs(theta_eval(L, mpf(a), mpf(b)).theta_value) < mpf(2) ** -200
        v = theta_eval(L, mpf("0.2"), mpf("0.35")).theta_value
        w = theta_eval(L, mpf("0.8"), mpf("0.65")).theta_value
        assert abs(v + w) < mpf(2) ** -200


def test_generic_curve_has_no_torsion_zeros():
    with mp.workprec(280):
        L = lattice_from_model(mpc(1, 2), mpc(3, -1), 256)
    assert scan_torsion(L, 5) == []


# ---------------------------------------------------------------------------
# property suites
# ---------------------------------------------------------------------------


def check_legendre_and_quasiperiodicity(seed: int, bits: int = 192) -> bool:
    """Legendre relation and zeta(z + w_i) - zeta(z) = eta_i to 2^(-bits/2)."""
    rng = random.Random(seed)
    with mp.workprec(bits + 24):
        while True:
            g2 = mpc(rng.uniform(-5, 5), rng.uniform(-5, 5))
            g3 = mpc(rng.uniform(-5, 5), rng.uniform(-5, 5))
            if abs(g2 ** 3 - 27 * g3 ** 2) > 0.5:
                break
        L = lattice_from_model(g2, g3, bits)
        tol = mpf(2) ** (-bits // 2)
        scale = max(1, abs(L.eta1), abs(L.eta2))
        ok = abs(L.legendre_residual()) < tol
        z = L.point(mpf(rng.uniform(0.05, 0.95)), mpf(rng.uniform(0.05, 0.95)))
        zz = zeta(L, z)
        ok &= abs(zeta(L, z + L.omega1) - zz - L.eta1) < tol * scale
        ok &= abs(zeta(L, z + L.omega2) - zz - L.eta2) < tol * scale
        p, dp = wp(L, z), wp_prime(L, z)
        ok &= abs(dp ** 2 - 4 * p ** 3 + g2 * p + g3) < tol * max(1, abs(dp) ** 2)
    return bool(ok)


@given(st.integers(min_value=0, max_value=10 ** 6))
def test_property_legendre_and_quasiperiodicity(seed):
    assert check_legendre_and_quasiperiodicity(seed)


# ---------------------------------------------------------------------------
# marked points of the degree 3 and 7 models
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("N", [3, 7])
def test_theta_vanishes_at_marked_points(N):
    from lame_dessins.curves import lattice, marked_point_coordinates

    for label, m in pipeline(N).models.items():
        L = lattice(m)
        a, b = marked_point_coordinates(m)
        ev = theta_eval(L, a, b)
        assert abs(ev.theta_value) < mpf(2) ** -100, label
        assert ev.vanishes
        hits = scan_torsion(L, N)
        k = 2 * N
        cell = (Fraction(round(float(a) * k) % k, k), Fraction(round(float(b) * k) % k, k))
        assert cell in hits, label
