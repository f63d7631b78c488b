"""Numerical monodromy of the Lamé operator ``D^2 + (f'/2f) D - (2x + B)/f``.

Solutions are continued along polygonal loops by Taylor series, with every step
at most half the distance to the nearest singular point.  Loop matrices act on
columns ``(y, y')`` of initial data at the basepoint; following loop ``a`` then
loop ``b`` gives ``M_b M_a``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import mpmath
from mpmath import mp, mpc, mpf

from .errors import GroupBlowup, OrderMismatch, StepSizeUnderflow, VerificationFailed
from .mpnum import GUARD_BITS, Poly, big, complex_to_str, poly_roots

log = logging.getLogger(__name__)

CIRCLE_VERTICES = 16


@dataclass(frozen=True)
class LameODE:
    g2: mpc
    g3: mpc
    B: mpc
    bits: int

    @classmethod
    def from_model(cls, m, bits: int | None = None) -> "LameODE":
        return cls(m.g2, m.g3, m.B, bits or m.bits)

    @property
    def f(self) -> Poly:
        return Poly([-self.g3, -self.g2, 0, 4])

    @property
    def singular_points(self) -> list[mpc]:
        with mp.workprec(self.bits + GUARD_BITS):
            return [r for r, m in poly_roots(self.f, self.bits) for _ in range(m)]

    def apply(self, y, x) -> mpc:
        """``L1`` applied to a polynomial ``y`` (``Poly``) at ``x``; used in tests."""
        f = self.f
        return f(x) * y.derivative(2)(x) + f.derivative()(x) / 2 * y.derivative()(x) - (2 * x + self.B) * y(x)


@dataclass(frozen=True)
class Loop:
    kind: str                   # "star", "big" or "trivial"
    target: int | None          # index of the encircled singular point for star loops
    vertices: tuple             # closed polygon, first == last == basepoint

    def reversed(self) -> "Loop":
        return Loop(self.kind, self.target, tuple(reversed(self.vertices)))

    def describe(self, bits: int) -> dict:
        return {"kind": self.kind, "target": self.target, "vertex_count": len(self.vertices)}


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def _shift(poly: Poly, x0) -> list[mpc]:
    """Coefficients of ``poly(x0 + t)`` in ``t``."""
    out = []
    p = poly
    fact = 1
    for k in range(poly.degree + 1):
        out.append(p(x0) / fact)
        p = p.derivative()
        fact *= k + 1
    return out


def _transition(ode: LameODE, x0, h, prec: int):
    """2x2 matrix taking ``(y, y')`` at ``x0`` to ``(y, y')`` at ``x0 + h``."""
    a = _shift(ode.f, x0)                       # f(x0 + t)
    b = [c / 2 for c in _shift(ode.f.derivative(), x0)]
    c0, c1 = 2 * x0 + ode.B, mpf(2)
    if a[0] == 0:
        raise StepSizeUnderflow("Taylor step started on a singular point")
    eps = mpf(2) ** (-prec)
    cols = []
    for init in ((mpc(1), mpc(0)), (mpc(0), mpc(1))):
        y = [init[0], init[1]]
        val, der = y[0] + y[1] * h, y[1]
        hp = mpc(1)                             # h^(n+1) after the update below
        small = 0
        n = 0
        while True:
            # coefficient of t^n in f y'' + (f'/2) y' - (2x+B) y
            acc = mpc(0)
            for i in range(1, 4):
                k = n - i + 2
                if 2 <= k < len(y):
                    acc += a[i] * k * (k - 1) * y[k]
            for i in range(0, 3):
                k = n - i + 1
                if 1 <= k < len(y):
                    acc += b[i] * k * y[k]
            acc -= c0 * y[n]
            if n >= 1:
                acc -= c1 * y[n - 1]
            yn2 = -acc / (a[0] * (n + 2) * (n + 1))
            y.append(yn2)
            hp = hp * h
            term = yn2 * hp * h
            dterm = (n + 2) * yn2 * hp
            val += term
            der += dterm
            scale = max(abs(val), abs(der), mpf(1))
            if abs(term) + abs(dterm) < eps * scale:
                small += 1
                if small >= 3:
                    break
            else:
                small = 0
            n += 1
            if n > 20 * prec:
                raise StepSizeUnderflow("Taylor series did not converge within the step")
        cols.append((val, der))
    return mpmath.matrix([[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]])


def _march(ode: LameODE, sing, start, end, Y, prec: int, min_radius):
    x = start
    while True:
        remaining = end - x
        if abs(remaining) == 0:
            return Y
        rho = min(abs(x - e) for e in sing)
        if rho < min_radius:
            raise StepSizeUnderflow(f"path passes within {mpmath.nstr(rho, 3)} of a singular point")
        step = rho / 2
        if abs(remaining) <= step:
            h = remaining
        else:
            h = remaining / abs(remaining) * step
        Y = _transition(ode, x, h, prec) * Y
        x = x + h
        if abs(end - x) < mpf(2) ** (-prec) * max(1, abs(end)):
            return Y


def integrate_loop(ode: LameODE, loop: Loop, bits: int | None = None, certify: bool = True):
    """Monodromy matrix of ``loop``; with ``certify`` the reversed loop must undo it.

    Returns ``(M, residual)`` where ``residual`` is ``|M_rev M - I|`` (0 if not certified).
    """
    bits = bits or ode.bits
    prec = bits + GUARD_BITS
    with mp.workprec(prec):
        sing = ode.singular_points
        gap = min(abs(a - b) for i, a in enumerate(sing) for b in sing[:i])
        min_radius = gap * mpf(2) ** (-8)
        verts = [big(v) for v in loop.vertices]

        def run(vs):
            Y = mpmath.eye(2)
            for a, b in zip(vs, vs[1:]):
                Y = _march(ode, sing, a, b, Y, prec, min_radius)
            return Y

        M = run(verts)
        if not certify:
            return M, mpf(0)
        R = run(list(reversed(verts)))
        resid = mpmath.mnorm(R * M - mpmath.eye(2), 1)
        if resid > mpf(2) ** (-bits // 2):
            raise VerificationFailed("loop_reversal", f"|M_rev M - I| = {mpmath.nstr(resid, 3)}")
        return M, resid


# ---------------------------------------------------------------------------
# loops
# ---------------------------------------------------------------------------


def _segment_clearance(a, b, pts):
    """Smallest distance from the segment ``[a, b]`` to ``pts``."""
    d = b - a
    out = mpf("inf")
    for p in pts:
        t = ((p - a) * mpmath.conj(d)).real / abs(d) ** 2 if d != 0 else 0
        t = min(max(t, 0), 1)
        out = min(out, abs(a + t * d - p))
    return out


def choose_basepoint(sing, angle_steps: int = 64):
    """Far basepoint, on the positive real axis unless a star segment would graze another singular point."""
    R = 3 * max(abs(e) for e in sing) + 1
    gap = min(abs(a - b) for i, a in enumerate(sing) for b in sing[:i])
    need = gap / 4
    best = None
    for k in range(angle_steps):
        # 0, +d, -d, +2d, ... so the real axis is tried first
        ang = (k + 1) // 2 * (1 if k % 2 else -1) * 2 * mp.pi / angle_steps / 2
        b = R * mpmath.expj(ang)
        clear = min(_segment_clearance(b, e, [o for o in sing if o is not e]) for e in sing)
        if clear >= need:
            return b
        if best is None or clear > best[0]:
            best = (clear, b)
    return best[1]


def _circle(center, r, start_angle, n=CIRCLE_VERTICES):
    return [center + r * mpmath.expj(start_angle + 2 * mp.pi * k / n) for k in range(n + 1)]


def star_loops(ode: LameODE, basepoint=None) -> tuple[mpc, list[Loop]]:
    """Counterclockwise star loops around the finite singular points, sorted by argument."""
    with mp.workprec(ode.bits + GUARD_BITS):
        sing = ode.singular_points
        b = big(basepoint) if basepoint is not None else choose_basepoint(sing)
        gap = min(abs(a - c) for i, a in enumerate(sing) for c in sing[:i])
        order = sorted(range(3), key=lambda k: mpmath.arg((sing[k] - b) / -b))
        loops = []
        for k in order:
            e = sing[k]
            r = gap / 3
            ang = mpmath.arg(b - e)
            ring = _circle(e, r, ang)
            loops.append(Loop("star", k, tuple([b] + ring + [b])))
        return b, loops


def big_loop(ode: LameODE, basepoint) -> Loop:
    """Counterclockwise loop from ``basepoint`` enclosing all finite singular points."""
    with mp.workprec(ode.bits + GUARD_BITS):
        sing = ode.singular_points
        b = big(basepoint)
        centre = sum(sing) / 3
        R = max(abs(e - centre) for e in sing)
        r = (R + abs(b - centre)) / 2
        if r <= R * mpf("1.2"):
            raise ValueError("basepoint too close to the singular points for a big loop")
        ang = mpmath.arg(b - centre)
        ring = _circle(centre, r, ang, n=32)
        return Loop("big", None, tuple([b] + ring + [b]))


def trivial_loop(ode: LameODE, basepoint) -> Loop:
    """A small closed triangle near the basepoint enclosing nothing."""
    with mp.workprec(ode.bits + GUARD_BITS):
        b = big(basepoint)
        d = abs(b) / 10
        return Loop("trivial", None, (b, b + d, b + d * mpmath.expj(mp.pi / 3), b))


# ---------------------------------------------------------------------------
# groups
# ---------------------------------------------------------------------------


def projective_distance(A, B) -> mpf:
    """``min_c |A - c B| / |A|`` in the Frobenius norm."""
    a = [A[i, j] for i in range(2) for j in range(2)]
    b = [B[i, j] for i in range(2) for j in range(2)]
    bb = sum(abs(x) ** 2 for x in b)
    c = sum(mpmath.conj(y) * x for x, y in zip(a, b)) / bb
    num = mpmath.sqrt(sum(abs(x - c * y) ** 2 for x, y in zip(a, b)))
    return num / mpmath.sqrt(sum(abs(x) ** 2 for x in a))


def linear_distance(A, B) -> mpf:
    return mpmath.mnorm(A - B, "F") / max(mpf(1), mpmath.mnorm(A, "F"))


def _normalize(A):
    """Scale to determinant 1 (a projective representative)."""
    d = mpmath.det(A)
    return A / mpmath.sqrt(d)


def generate_group(gens, distance, threshold, limit: int):
    """Breadth-first closure of ``gens`` under multiplication, deduplicated by ``distance``."""
    elems = [mpmath.eye(2)]
    frontier = [mpmath.eye(2)]
    while frontier:
        nxt = []
        for g in frontier:
            for s in gens:
                h = s * g
                if any(distance(h, e) < threshold for e in elems):
                    continue
                elems.append(h)
                nxt.append(h)
                if len(elems) > limit:
                    raise GroupBlowup(f"more than {limit} elements generated")
        frontier = nxt
    return elems


def element_order(A, distance, threshold, limit: int) -> int | None:
    P = A
    I = mpmath.eye(2)
    for k in range(1, limit + 1):
        if distance(P, I) < threshold:
            return k
        P = A * P
    return None


def separation(elems, distance) -> mpf:
    best = mpf("inf")
    for i in range(len(elems)):
        for k in range(i):
            best = min(best, distance(elems[i], elems[k]))
    return best


@dataclass
class MonodromyCertificate:
    basepoint: mpc
    loops: list
    matrices: list
    projective_group_order: int
    linear_group_order: int
    residual_exponent: int
    dihedral: bool
    separation_log2: float
    threshold_log2: float
    generator_product_orders: list
    contains_minus_identity: bool
    infinity_relation_residual: mpf = field(default=mpf(0))
    bits: int = 0

    @property
    def separation_margin_log2(self) -> float:
        """How far (log2) the closest pair of distinct elements sits above the dedup threshold."""
        return self.separation_log2 - self.threshold_log2

    def to_json(self) -> dict:
        b = self.bits
        return {
            "basepoint": complex_to_str(self.basepoint, b),
            "loops": self.loops,
            "matrices": [[[complex_to_str(M[i, j], b) for j in range(2)] for i in range(2)]
                         for M in self.matrices],
            "projective_group_order": self.projective_group_order,
            "linear_group_order": self.linear_group_order,
            "dihedral": self.dihedral,
            "residual_exponent": self.residual_exponent,
            "separation_log2": round(self.separation_log2, 1),
            "threshold_log2": round(self.threshold_log2, 1),
            "separation_margin_log2": round(self.separation_margin_log2, 1),
            "generator_product_orders": self.generator_product_orders,
            "contains_minus_identity": self.contains_minus_identity,
            "infinity_relation_residual_log2": _log2(self.infinity_relation_residual),
            "precision_bits": b,
        }


def _log2(x) -> float | None:
    return None if x == 0 else round(float(mpmath.log(x, 2)), 1)


def loop_matrices(ode: LameODE, basepoint=None, bits: int | None = None):
    """Basepoint, star loops, their matrices and the worst reversal residual."""
    bits = bits or ode.bits
    b, loops = star_loops(ode, basepoint)
    mats, worst = [], mpf(0)
    for lp in loops:
        M, r = integrate_loop(ode, lp, bits)
        mats.append(M)
        worst = max(worst, r)
    return b, loops, mats, worst


def certify_dihedral(ode: LameODE, N: int, bits: int | None = None, basepoint=None,
                     check_infinity: bool = True) -> MonodromyCertificate:
    """Projective and linear monodromy groups generated by the three star loops."""
    bits = bits or ode.bits
    with mp.workprec(bits + GUARD_BITS):
        b, loops, mats, worst = loop_matrices(ode, basepoint, bits)
        threshold = mpf(2) ** (-bits / 4)
        limit = 8 * N
        proj = generate_group(mats, projective_distance, threshold, limit)
        lin = generate_group(mats, linear_distance, threshold, 2 * limit)
        sep = min(separation(proj, projective_distance), separation(lin, linear_distance))
        for k, M in enumerate(mats):
            if projective_distance(M * M, mpmath.eye(2)) > threshold:
                raise VerificationFailed("local_involution", f"loop {k} does not square to a scalar")
        prods = []
        for i in range(3):
            for k in range(i + 1, 3):
                prods.append(element_order(mats[i] * mats[k], projective_distance, threshold, limit))
        order = len(proj)
        dihedral = (order == 2 * N and all(o is not None and N % o == 0 for o in prods)
                    and N in prods)
        minus = any(linear_distance(e, -mpmath.eye(2)) < threshold for e in lin)
        inf_res = mpf(0)
        if check_infinity:
            # the three star loops in order compose to the loop around all of them
            Mb, _ = integrate_loop(ode, big_loop(ode, b), bits, certify=False)
            prod = mats[2] * mats[1] * mats[0]
            inf_res = linear_distance(prod, Mb)
        cert = MonodromyCertificate(
            basepoint=b,
            loops=[lp.describe(bits) for lp in loops],
            matrices=mats,
            projective_group_order=order,
            linear_group_order=len(lin),
            residual_exponent=int(-math.floor(float(mpmath.log(worst, 2)))) if worst > 0 else bits,
            dihedral=dihedral,
            separation_log2=float(mpmath.log(sep, 2)) if sep < mpf("inf") else math.inf,
            threshold_log2=float(mpmath.log(threshold, 2)),
            generator_product_orders=prods,
            contains_minus_identity=minus,
            infinity_relation_residual=inf_res,
            bits=bits,
        )
        if order != 2 * N:
            raise OrderMismatch(f"projective monodromy has order {order}, expected {2 * N}")
        return cert
