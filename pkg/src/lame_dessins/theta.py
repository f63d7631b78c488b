"""Periods, quasi-periods and Weierstrass functions of ``y^2 = 4x^3 - g2 x - g3``.

Full-period conventions throughout: ``zeta(z + w_k) = zeta(z) + eta_k`` and, with
``Im(w2/w1) > 0``, the Legendre relation reads ``eta1 w2 - eta2 w1 = 2 pi i``.
Everything is evaluated through the odd Jacobi theta function

    theta1(v) = 2 sum_n (-1)^n q^{(n+1/2)^2} sin((2n+1) v),   q = exp(i pi tau)

with the common factor ``q^{1/4}`` dropped, which leaves logarithmic derivatives
unchanged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mp, mpc, mpf

from .errors import AGMFailure, PoleProximity
from .mpnum import GUARD_BITS, Poly, big, poly_roots


@dataclass(frozen=True)
class LatticeData:
    omega1: mpc
    omega2: mpc
    eta1: mpc
    eta2: mpc
    tau: mpc
    g2: mpc
    g3: mpc
    bits: int

    def coordinates(self, z) -> tuple[mpf, mpf]:
        """Real ``(alpha, beta)`` with ``z = alpha*omega1 + beta*omega2``."""
        with mp.workprec(self.bits + GUARD_BITS):
            w = big(z) / self.omega1
            beta = w.imag / self.tau.imag
            alpha = w.real - beta * self.tau.real
            return alpha, beta

    def point(self, alpha, beta) -> mpc:
        with mp.workprec(self.bits + GUARD_BITS):
            return big(alpha) * self.omega1 + big(beta) * self.omega2

    def legendre_residual(self) -> mpf:
        with mp.workprec(self.bits + GUARD_BITS):
            return abs(self.eta1 * self.omega2 - self.eta2 * self.omega1 - 2j * mp.pi)


@dataclass(frozen=True)
class ThetaEvaluation:
    P_coords: tuple
    theta_value: mpc
    tolerance_exponent: int

    @property
    def vanishes(self) -> bool:
        return self.theta_value == 0 or mpmath.log(abs(self.theta_value), 2) < -self.tolerance_exponent


# ---------------------------------------------------------------------------
# series
# ---------------------------------------------------------------------------


def agm(a, b, prec: int, maxiter: int = 200):
    """Arithmetic-geometric mean with the optimal square-root choice at every step."""
    eps = mpf(2) ** (16 - prec)  # a few ulps: the last steps stall on rounding
    for _ in range(maxiter):
        if abs(a - b) <= eps * abs(a):
            return a
        a1 = (a + b) / 2
        b1 = mpmath.sqrt(a * b)
        if abs(a1 - b1) > abs(a1 + b1):
            b1 = -b1
        a, b = a1, b1
        if a == 0:
            break
    raise AGMFailure("AGM did not converge (degenerate root differences?)")


def _lambert(q, k: int, prec: int):
    """sum_{n>=1} n^k q^n / (1 - q^n)."""
    eps = mpf(2) ** (-prec)
    acc = mpc(0)
    qn = q
    n = 1
    while True:
        term = mpf(n) ** k * qn / (1 - qn)
        acc += term
        if abs(term) < eps * max(1, abs(acc)):
            return acc
        n += 1
        qn *= q
        if n > 100000:
            raise AGMFailure("Eisenstein series did not converge; tau too close to the real axis")


def eisenstein(tau, prec: int):
    """(E2, E4, E6) at ``tau`` (Im tau > 0)."""
    q = mpmath.expj(2 * mp.pi * tau)
    e2 = 1 - 24 * _lambert(q, 1, prec)
    e4 = 1 + 240 * _lambert(q, 3, prec)
    e6 = 1 - 504 * _lambert(q, 5, prec)
    return e2, e4, e6


def theta1_derivatives(v, q, prec: int):
    """``[th, th', th'', th''']`` of theta1 at ``v`` (without the q^{1/4} factor)."""
    eps = mpf(2) ** (-prec)
    out = [mpc(0)] * 4
    growth = abs(mpmath.im(v))
    n = 0
    while True:
        k = 2 * n + 1
        c = (-1) ** n * q ** (n * (n + 1))
        s, co = mpmath.sin(k * v), mpmath.cos(k * v)
        terms = (c * s, c * k * co, -c * k * k * s, -c * k ** 3 * co)
        out = [a + t for a, t in zip(out, terms)]
        bound = abs(c) * mpmath.exp(k * growth) * k ** 3
        if n > 1 and bound < eps * max(mpf(1), abs(out[0]) + abs(out[1])):
            break
        n += 1
        if n > 10000:
            raise AGMFailure("theta series did not converge")
    return [2 * x for x in out]


# ---------------------------------------------------------------------------
# lattice
# ---------------------------------------------------------------------------


def _reduce_basis(w1, w2):
    """Move ``tau = w2/w1`` into the standard fundamental domain (basis change in SL2(Z))."""
    if (w2 / w1).imag < 0:
        w2 = -w2
    for _ in range(1000):
        tau = w2 / w1
        n = int(mpmath.nint(tau.real))
        if n:
            w2 = w2 - n * w1
            tau = w2 / w1
        if abs(tau) < 1 - mpf(2) ** (-mp.prec // 2):
            w1, w2 = w2, -w1
            continue
        return w1, w2
    raise AGMFailure("lattice reduction did not terminate")


def _invariants_from_basis(w1, w2, prec):
    tau = w2 / w1
    e2, e4, e6 = eisenstein(tau, prec)
    c = 2 * mp.pi / w1
    return c ** 4 * e4 / 12, c ** 6 * e6 / 216, e2


def lattice_from_model(g2, g3, bits: int) -> LatticeData:
    """Period lattice of ``4x^3 - g2 x - g3`` with quasi-periods, certified.

    Periods come from complex AGM on the root differences; every candidate basis
    is checked by recomputing ``g2, g3`` from Eisenstein series.  ``eta1`` comes
    from ``E2``, ``eta2`` from the Legendre relation, and the result is checked
    against the differential equation of the Weierstrass function.
    """
    prec = bits + GUARD_BITS
    with mp.workprec(prec):
        g2, g3 = big(g2), big(g3)
        delta = g2 ** 3 - 27 * g3 ** 2
        scale = max(abs(g2) ** 3, abs(g3) ** 2, mpf(2) ** (-bits))
        if abs(delta) < mpf(2) ** (-bits // 2) * scale:
            raise AGMFailure("discriminant vanishes to working precision")
        roots = [r for r, m in poly_roots(Poly([-g3, -g2, 0, 4]), bits) for _ in range(m)]
        if len(roots) != 3:
            raise AGMFailure("could not separate the roots of the cubic")
        tol = mpf(2) ** (-(bits * 3) // 4)
        gscale = max(abs(g2), abs(g3) ** (mpf(2) / 3), mpf(2) ** (-bits // 4))
        best = None
        for e1, e2, e3 in itertools.permutations(roots):
            a = mpmath.sqrt(e1 - e3)
            for b in (mpmath.sqrt(e1 - e2), -mpmath.sqrt(e1 - e2)):
                try:
                    w1 = mp.pi / agm(a, b, prec)
                except AGMFailure:
                    continue
                for b2 in (mpmath.sqrt(e2 - e3), -mpmath.sqrt(e2 - e3)):
                    try:
                        w2 = 1j * mp.pi / agm(a, b2, prec)
                    except AGMFailure:
                        continue
                    if abs((w2 / w1).imag) < mpf(2) ** (-bits // 4):
                        continue
                    r1, r2 = _reduce_basis(w1, w2)
                    G2, G3, _ = _invariants_from_basis(r1, r2, prec)
                    err = max(abs(G2 - g2) / gscale, abs(G3 - g3) / gscale ** mpf(1.5))
                    if best is None or err < best[0]:
                        best = (err, r1, r2)
                    if err < tol:
                        break
                if best and best[0] < tol:
                    break
            if best and best[0] < tol:
                break
        if best is None or best[0] >= tol:
            raise AGMFailure("no AGM period pair reproduces (g2, g3)")
        _, w1, w2 = best
        tau = w2 / w1
        e2 = eisenstein(tau, prec)[0]
        eta1 = mp.pi ** 2 * e2 / (3 * w1)
        eta2 = (eta1 * w2 - 2j * mp.pi) / w1
        L = LatticeData(w1, w2, eta1, eta2, tau, g2, g3, bits)
        # the additive constant -eta1/w1 in wp is pinned down by the ODE
        z = L.point(mpf("0.3141592653"), mpf("0.2718281828"))
        p, dp = wp(L, z), wp_prime(L, z)
        ode = abs(dp ** 2 - (4 * p ** 3 - g2 * p - g3)) / max(abs(dp) ** 2, gscale ** 3, mpf(1))
        if ode > mpf(2) ** (-bits // 2):
            raise AGMFailure("Weierstrass ODE check failed for the computed quasi-periods")
        return L


def eta1_from_theta(L: LatticeData) -> mpc:
    """Alternative ``eta1 = -pi^2 theta1'''(0) / (3 w1 theta1'(0))``."""
    with mp.workprec(L.bits + GUARD_BITS):
        q = mpmath.expj(mp.pi * L.tau)
        d = theta1_derivatives(mpc(0), q, L.bits + GUARD_BITS)
        return -mp.pi ** 2 * d[3] / (3 * L.omega1 * d[1])


# ---------------------------------------------------------------------------
# Weierstrass functions
# ---------------------------------------------------------------------------


def _reduced(L: LatticeData, z):
    alpha, beta = L.coordinates(z)
    m, n = int(mpmath.nint(alpha)), int(mpmath.nint(beta))
    return z - m * L.omega1 - n * L.omega2, m, n


def _log_derivs(L: LatticeData, z0):
    prec = L.bits + GUARD_BITS
    q = mpmath.expj(mp.pi * L.tau)
    v = mp.pi * z0 / L.omega1
    th = theta1_derivatives(v, q, prec)
    if th[0] == 0:
        raise PoleProximity("z is a lattice point")
    return [t / th[0] for t in th]


def zeta(L: LatticeData, z) -> mpc:
    with mp.workprec(L.bits + GUARD_BITS):
        z = big(z)
        z0, m, n = _reduced(L, z)
        r = _log_derivs(L, z0)
        return L.eta1 * z0 / L.omega1 + (mp.pi / L.omega1) * r[1] + m * L.eta1 + n * L.eta2


def wp(L: LatticeData, z) -> mpc:
    with mp.workprec(L.bits + GUARD_BITS):
        z0, _, _ = _reduced(L, big(z))
        r = _log_derivs(L, z0)
        c = mp.pi / L.omega1
        return -L.eta1 / L.omega1 - c ** 2 * (r[2] - r[1] ** 2)


def wp_prime(L: LatticeData, z) -> mpc:
    with mp.workprec(L.bits + GUARD_BITS):
        z0, _, _ = _reduced(L, big(z))
        r = _log_derivs(L, z0)
        c = mp.pi / L.omega1
        return -c ** 3 * (r[3] - 3 * r[2] * r[1] + 2 * r[1] ** 3)


def theta_eval(L: LatticeData, alpha, beta) -> ThetaEvaluation:
    """``theta(z) = zeta(z) - alpha*eta1 - beta*eta2`` at ``z = alpha*w1 + beta*w2``."""
    with mp.workprec(L.bits + GUARD_BITS):
        a, b = mpf(alpha), mpf(beta)
        da, db = a - mpmath.nint(a), b - mpmath.nint(b)
        if abs(da * L.omega1 + db * L.omega2) < mpf(2) ** (-L.bits // 8) * abs(L.omega1):
            raise PoleProximity(f"({alpha}, {beta}) is within 2^-{L.bits // 8} of the lattice")
        z = a * L.omega1 + b * L.omega2
        val = zeta(L, z) - a * L.eta1 - b * L.eta2
        return ThetaEvaluation((alpha, beta), val, L.bits // 2)


def theta_closed_form(L: LatticeData, alpha, beta) -> mpc:
    """Same quantity as :func:`theta_eval` written as ``(pi/w1) (theta1'/theta1 (v) + 2 i beta)``."""
    with mp.workprec(L.bits + GUARD_BITS):
        a, b = mpf(alpha), mpf(beta)
        v = mp.pi * (a + b * L.tau)
        q = mpmath.expj(mp.pi * L.tau)
        th = theta1_derivatives(v, q, L.bits + GUARD_BITS)
        return (mp.pi / L.omega1) * (th[1] / th[0] + 2j * b)


def scan_torsion(L: LatticeData, N: int, bits: int | None = None) -> list[tuple[Fraction, Fraction]]:
    """Points of ``(1/2N) Z^2`` outside E[2] where theta vanishes.

    A grid point counts when ``|theta * w1| < 2^(-bits/3)`` both at the lattice's
    precision and again with the lattice recomputed at twice the precision.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    bits = bits or L.bits
    M = 2 * N
    fine = None
    hits = []
    with mp.workprec(L.bits + GUARD_BITS):
        thr = mpf(2) ** (-bits / 3)
        for a in range(M):
            for b in range(M):
                if a % N == 0 and b % N == 0:
                    continue
                alpha, beta = Fraction(a, M), Fraction(b, M)
                val = theta_eval(L, mpf(a) / M, mpf(b) / M).theta_value
                if abs(val * L.omega1) >= thr:
                    continue
                if fine is None:
                    fine = lattice_from_model(L.g2, L.g3, 2 * L.bits)
                    fine = _align(fine, L)
                with mp.workprec(fine.bits + GUARD_BITS):
                    val2 = theta_eval(fine, mpf(a) / M, mpf(b) / M).theta_value
                    if abs(val2 * fine.omega1) < thr:
                        hits.append((alpha, beta))
    found = set(hits)
    # theta is odd, so the zero set is closed under negation
    for alpha, beta in list(found):
        found.add(((-alpha) % 1, (-beta) % 1))
    return sorted(found)


def _align(fine: LatticeData, coarse: LatticeData) -> LatticeData:
    """Express the finer lattice in the same basis as ``coarse`` (they may differ by SL2(Z))."""
    with mp.workprec(fine.bits + GUARD_BITS):
        mat = []
        for w in (coarse.omega1, coarse.omega2):
            a, b = fine.coordinates(w)
            mat.append((int(mpmath.nint(a)), int(mpmath.nint(b))))
        (a, b), (c, d) = mat
        w1 = a * fine.omega1 + b * fine.omega2
        w2 = c * fine.omega1 + d * fine.omega2
        e1 = a * fine.eta1 + b * fine.eta2
        e2 = c * fine.eta1 + d * fine.eta2
        return LatticeData(w1, w2, e1, e2, w2 / w1, fine.g2, fine.g3, fine.bits)
