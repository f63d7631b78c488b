"""From a Shabat polynomial to the pair (E, P) and its arithmetic.

The four branch points of the tree (centre and the three ends) are sent by
``x -> 1/x`` to ``infinity, y1, y2, y3``; the double cover ``Y^2 = prod (X - y_i)``
is shifted to ``y^2 = 4x^3 - g2 x - g3`` and the marked point ``P`` is the image
of ``X = 0``.  The centre becomes the origin of the group law.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import mpmath
from mpmath import mp, mpc, mpf

from . import theta as th
from .belyi import BelyiSolution
from .errors import (DegenerateBranchLocus, FieldTooLarge, InsufficientPrecision,
                     MultiplePrimesAbove, NotApplicable, RecognitionFailed, SingularCurve,
                     TorsionUncertain)
from .mpnum import (GUARD_BITS, AlgebraicNumber, Poly, big, complex_to_str, express_in_basis,
                    height_budget, poly_roots, recognize_algebraic)
from .numfield import (NumberField, discriminant_factorization, squarefree_part, vp_rational)
from .trees import JClass, PredictionRecord, Tree, enumerate_trees, predict

log = logging.getLogger(__name__)

INVARIANT_NAMES = ("j", "j1", "j2", "j3")
MAX_RECOGNITION_BITS = 2048


@dataclass(frozen=True)
class BranchData:
    S: tuple
    source: BelyiSolution | None
    bits: int


def branch_points(sol: BelyiSolution) -> BranchData:
    """Centre ``0`` plus the roots of ``q`` (black ends) and ``f`` (white ends)."""
    bits = sol.precision_bits
    with mp.workprec(bits + GUARD_BITS):
        pts = [mpc(0)]
        for poly in (sol.q, sol.f):
            if poly.degree:
                for r, m in poly_roots(poly, bits):
                    pts.extend([r] * m)
        if len(pts) != 4:
            raise DegenerateBranchLocus(f"expected 4 branch points, found {len(pts)}")
        scale = max(abs(p) for p in pts)
        tol = scale * mpf(2) ** (-bits // 4)
        for i in range(4):
            for k in range(i):
                if abs(pts[i] - pts[k]) < tol:
                    raise DegenerateBranchLocus("two branch points coincide")
        return BranchData(tuple(pts), sol, bits)


@dataclass(frozen=True)
class EllipticModel:
    """``y^2 = 4x^3 - g2 x - g3`` with marked point ``P = (B, y)``."""

    g2: mpc
    g3: mpc
    B: mpc
    y: mpc
    bits: int
    P_sign: int = 1
    tree: Tree | None = None
    source: BelyiSolution | None = field(default=None, compare=False, repr=False)
    recognized: dict | None = field(default=None, compare=False)

    def _w(self):
        return mp.workprec(self.bits + GUARD_BITS)

    @property
    def Delta(self) -> mpc:
        with self._w():
            return self.g2 ** 3 - 27 * self.g3 ** 2

    @property
    def j(self) -> mpc:
        with self._w():
            return 1728 * self.g2 ** 3 / self.Delta

    @property
    def j1(self) -> mpc:
        with self._w():
            return self.B ** 4 * self.g2 / self.Delta

    @property
    def j2(self) -> mpc:
        with self._w():
            return self.B ** 2 * self.g2 ** 2 / self.Delta

    @property
    def j3(self) -> mpc:
        with self._w():
            return self.B ** 3 * self.g3 / self.Delta

    def invariants(self) -> dict[str, mpc]:
        return {"j": self.j, "j1": self.j1, "j2": self.j2, "j3": self.j3}

    @property
    def signature(self) -> int | None:
        return self.tree.signature if self.tree else None

    @property
    def j_class(self) -> JClass:
        with self._w():
            tol = mpf(2) ** (-self.bits // 2) * 1728
            if abs(self.j) < tol:
                return JClass.J_ZERO
            if abs(self.j - 1728) < tol:
                return JClass.J_1728
        return JClass.GENERIC

    def curve_residual(self, x, y) -> mpf:
        with self._w():
            return abs(y ** 2 - (4 * x ** 3 - self.g2 * x - self.g3))

    def point_residual(self) -> mpf:
        return self.curve_residual(self.B, self.y)

    def scaled(self, u) -> "EllipticModel":
        """The equivalent model ``(u^2 g2, u^3 g3, u B)``; ``y`` picks up ``u^(3/2)``."""
        with self._w():
            u = big(u)
            return replace(self, g2=u ** 2 * self.g2, g3=u ** 3 * self.g3, B=u * self.B,
                           y=self.y * mpmath.sqrt(u) ** 3, recognized=None)

    def to_json(self) -> dict:
        b = self.bits
        out = {
            "tree": self.tree.label() if self.tree else None,
            "precision_bits": b,
            "g2": complex_to_str(self.g2, b),
            "g3": complex_to_str(self.g3, b),
            "B": complex_to_str(self.B, b),
            "P_y": complex_to_str(self.y, b),
            "P_sign": self.P_sign,
            "Delta": complex_to_str(self.Delta, b),
        }
        out.update({k: complex_to_str(v, b) for k, v in self.invariants().items()})
        if self.recognized:
            out["recognized"] = {k: v.to_json() for k, v in self.recognized.items()}
        return out


def build_pair(bd: BranchData) -> EllipticModel:
    bits = bd.bits
    with mp.workprec(bits + GUARD_BITS):
        if bd.S[0] != 0:
            raise ValueError("the first branch point must be the centre 0")
        ys = [1 / x for x in bd.S[1:]]
        m = sum(ys) / 3
        e = [t - m for t in ys]
        g2 = -4 * (e[0] * e[1] + e[1] * e[2] + e[2] * e[0])
        g3 = 4 * e[0] * e[1] * e[2]
        delta = g2 ** 3 - 27 * g3 ** 2
        scale = max(abs(g2) ** 3, abs(g3) ** 2)
        if scale == 0 or abs(delta) < mpf(2) ** (-bits // 2) * scale:
            raise SingularCurve("discriminant vanishes to working precision")
        B = -m
        # Y^2 = f1(0) = -y1 y2 y3 at X = 0, and y = 2Y
        y = 2 * mpmath.sqrt(-ys[0] * ys[1] * ys[2])
        sign = 1
        tiny = mpf(2) ** (-bits // 2) * max(mpf(1), abs(y))
        if y.imag < -tiny or (abs(y.imag) <= tiny and y.real < 0):
            y, sign = -y, -1
        tree = bd.source.decoded_tree if bd.source is not None else None
        return EllipticModel(g2, g3, B, y, bits, sign, tree, bd.source)


def model_from_solution(sol: BelyiSolution) -> EllipticModel:
    return build_pair(branch_points(sol))


def model_at_precision(m: EllipticModel, bits: int) -> EllipticModel:
    """Rebuild ``m`` from its Belyi solution at a higher precision."""
    if bits <= m.bits:
        return m
    if m.source is None:
        raise InsufficientPrecision("model has no source solution to refine")
    return model_from_solution(m.source.refine(bits))


# ---------------------------------------------------------------------------
# torsion
# ---------------------------------------------------------------------------


@lru_cache(maxsize=128)
def _lattice(g2, g3, bits):
    return th.lattice_from_model(g2, g3, bits)


def lattice(m: EllipticModel) -> th.LatticeData:
    return _lattice(m.g2, m.g3, m.bits)


def elliptic_log(m: EllipticModel, x, y, L: th.LatticeData | None = None) -> mpc:
    """``z`` with ``(wp(z), wp'(z)) = (x, y)``."""
    L = L or lattice(m)
    with mp.workprec(m.bits + GUARD_BITS):
        x, y = big(x), big(y)
        best = None
        n = 12
        for a in range(n):
            for b in range(n):
                if a == 0 and b == 0:
                    continue
                z = L.point(mpf(a) / n, mpf(b) / n)
                d = abs(th.wp(L, z) - x)
                if best is None or d < best[0]:
                    best = (d, z)
        z = best[1]
        tol = mpf(2) ** (-(m.bits - 16)) * max(mpf(1), abs(x))
        for _ in range(200):
            dz = (th.wp(L, z) - x) / th.wp_prime(L, z)
            z -= dz
            if abs(dz) < tol * abs(L.omega1):
                break
        dp = th.wp_prime(L, z)
        if abs(dp - y) > abs(dp + y):
            z = -z
        return z


def _psi_values(x, Y, a, b, kmax: int) -> dict[int, mpc]:
    """Division polynomial values ``psi_k(x, Y)`` on ``Y^2 = x^3 + a x + b``."""
    psi = {0: mpc(0), 1: mpc(1), 2: 2 * Y,
           3: 3 * x ** 4 + 6 * a * x ** 2 + 12 * b * x - a ** 2,
           4: 4 * Y * (x ** 6 + 5 * a * x ** 4 + 20 * b * x ** 3 - 5 * a ** 2 * x ** 2
                       - 4 * a * b * x - 8 * b ** 2 - a ** 3)}
    for k in range(5, kmax + 1):
        mm = k // 2
        if k % 2:
            psi[k] = psi[mm + 2] * psi[mm] ** 3 - psi[mm - 1] * psi[mm + 1] ** 3
        else:
            psi[k] = (psi[mm] / (2 * Y)) * (psi[mm + 2] * psi[mm - 1] ** 2
                                             - psi[mm - 2] * psi[mm + 1] ** 2)
    return psi


def division_polynomial_orders(m: EllipticModel, x, y, kmax: int) -> list[int]:
    """All ``2 <= k <= kmax`` with ``psi_k(P)`` vanishing (relative to its natural scale)."""
    with mp.workprec(m.bits + GUARD_BITS):
        x, Y = big(x), big(y) / 2
        a, b = -m.g2 / 4, -m.g3 / 4
        r = max(abs(x), abs(a) ** mpf(0.5), abs(b) ** (mpf(1) / 3), abs(Y) ** (mpf(2) / 3),
                mpf(2) ** (-m.bits // 8))
        if Y == 0:
            return list(range(2, kmax + 1, 2))
        psi = _psi_values(x, Y, a, b, kmax)
        tol = mpf(2) ** (-m.bits // 4)
        return [k for k in range(2, kmax + 1) if abs(psi[k]) < tol * r ** (mpf(k * k - 1) / 2)]


def _near_integer(v, tol) -> bool:
    return abs(v - mpmath.nint(v)) < tol


def point_order(m: EllipticModel, x, y, kmax: int = 128) -> int:
    """Order of ``(x, y)``, by elliptic logarithm, confirmed with division polynomials."""
    L = lattice(m)
    with mp.workprec(m.bits + GUARD_BITS):
        z = elliptic_log(m, x, y, L)
        alpha, beta = L.coordinates(z)
        tol = mpf(2) ** (-m.bits // 4)
        k_log = next((k for k in range(1, kmax + 1)
                      if _near_integer(k * alpha, tol) and _near_integer(k * beta, tol)), None)
    if k_log is None:
        raise TorsionUncertain(f"no order <= {kmax} from the elliptic logarithm")
    zeros = set(division_polynomial_orders(m, x, y, k_log))
    if k_log > 1 and k_log not in zeros:
        raise TorsionUncertain(f"psi_{k_log} does not vanish at the point")
    bad = [d for d in range(2, k_log) if k_log % d == 0 and d in zeros]
    if bad:
        raise TorsionUncertain(f"psi_{bad[0]} vanishes although the logarithm gives order {k_log}")
    return k_log


def torsion_order(m: EllipticModel, kmax: int = 128) -> int:
    return point_order(m, m.B, m.y, kmax)


def doubled_point(m: EllipticModel) -> tuple[mpc, mpc]:
    with mp.workprec(m.bits + GUARD_BITS):
        x, y = m.B, m.y
        lam = (12 * x ** 2 - m.g2) / (2 * y)
        x2 = lam ** 2 / 4 - 2 * x
        y2 = -(y + lam * (x2 - x))
        return x2, y2


def order_of_double(m: EllipticModel, kmax: int = 128) -> int:
    x2, y2 = doubled_point(m)
    return point_order(m, x2, y2, kmax)


def marked_point_coordinates(m: EllipticModel) -> tuple[mpf, mpf]:
    """``(alpha, beta)`` of the marked point in the basis of :func:`lattice`, reduced mod 1."""
    L = lattice(m)
    with mp.workprec(m.bits + GUARD_BITS):
        a, b = L.coordinates(elliptic_log(m, m.B, m.y, L))
        return a - mpmath.floor(a), b - mpmath.floor(b)


# ---------------------------------------------------------------------------
# recognition and the field of moduli
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldDescription:
    degree: int
    primitive_element: tuple            # rational (c1, c2, c3) in xi = j + c1 j1 + c2 j2 + c3 j3
    xi: AlgebraicNumber
    invariants: dict                    # name -> AlgebraicNumber
    coordinates: dict                   # name -> tuple of Fractions in the basis 1, xi, xi^2, ...
    field: NumberField
    bits: int

    @property
    def discriminant(self) -> int:
        return self.field.discriminant

    @property
    def square_class(self) -> int | None:
        return squarefree_part(self.discriminant) if self.degree == 2 else None

    def element(self, name: str):
        return self.field.element(self.coordinates[name])

    def to_json(self) -> dict:
        out = {
            "degree": self.degree,
            "primitive_element": [str(c) for c in self.primitive_element],
            "xi_min_poly": [str(c) for c in self.xi.min_poly],
            "discriminant": str(self.discriminant),
            "discriminant_factorization": {str(k): v for k, v in
                                           discriminant_factorization(self.discriminant).items()},
            "invariants": {k: v.to_json() for k, v in self.invariants.items()},
            "precision_bits": self.bits,
        }
        if self.square_class is not None:
            out["square_class"] = str(self.square_class)
        return out


def recognize_invariant(value, max_degree: int, bits: int) -> AlgebraicNumber | None:
    return recognize_algebraic(value, max_degree, height_budget(max_degree, bits), bits)


def field_of_moduli(m: EllipticModel, max_degree: int, bits: int | None = None,
                    rng_seed: int = 0) -> FieldDescription:
    """Minimal polynomials of ``j, j1, j2, j3`` and of a primitive element of their field."""
    bits = bits or m.bits
    m = model_at_precision(m, bits)
    bits = m.bits
    inv = m.invariants()
    recognized = {}
    with mp.workprec(bits + GUARD_BITS):
        for name in INVARIANT_NAMES:
            a = recognize_invariant(inv[name], max_degree, bits)
            if a is None:
                raise RecognitionFailed(f"{name} not recognized at {bits} bits (degree <= {max_degree})")
            recognized[name] = a
        rng = random.Random(rng_seed)
        lower = max(a.degree for a in recognized.values())
        degrees, chosen = [], None
        for _attempt in range(8):
            c = tuple(Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.choice([1, 2, 3])) for _ in range(3))
            val = inv["j"] + sum(mpf(ci.numerator) / ci.denominator * inv[n]
                                 for ci, n in zip(c, INVARIANT_NAMES[1:]))
            cand = recognize_invariant(val, max_degree, bits)
            if cand is None:
                continue
            if chosen is None or cand.degree > chosen[0].degree:
                chosen = (cand, c)
            degrees.append(cand.degree)
            if len(degrees) >= 2 and degrees[-1] == degrees[-2] >= lower:
                break
        else:
            raise RecognitionFailed(f"primitive element degree did not stabilize: {degrees}")
        xi, coeffs = chosen
        d = xi.degree
        powers = [xi.root_approx ** k for k in range(d)]
        coords = {}
        for name in INVARIANT_NAMES:
            if d == 1:
                coords[name] = (recognized[name].as_fraction(),)
                continue
            r = express_in_basis(inv[name], powers, height_budget(d, bits) * 2, bits)
            if r is None:
                raise RecognitionFailed(f"{name} not expressible in Q(xi) at {bits} bits")
            coords[name] = tuple(r)
        K = NumberField(xi.min_poly, xi.root_approx)
        return FieldDescription(d, coeffs, xi, recognized, coords, K, bits)


def recognize_with_escalation(m: EllipticModel, max_degree: int,
                              cap: int = MAX_RECOGNITION_BITS, rng_seed: int = 0) -> FieldDescription:
    """:func:`field_of_moduli` at the model's precision, then 2x, 4x, ... up to ``cap`` bits."""
    bits = m.bits
    last = None
    while True:
        try:
            return field_of_moduli(m, max_degree, bits, rng_seed)
        except (RecognitionFailed, InsufficientPrecision) as exc:
            last = exc
            log.info("recognition failed at %d bits: %s", bits, exc)
        if bits >= cap:
            raise RecognitionFailed(f"gave up at {bits} bits: {last}")
        bits = min(cap, 2 * bits)


def recognize_j(m: EllipticModel, max_degree: int, cap: int = MAX_RECOGNITION_BITS) -> AlgebraicNumber:
    bits = m.bits
    while True:
        mm = model_at_precision(m, bits)
        try:
            a = recognize_invariant(mm.j, max_degree, bits)
        except InsufficientPrecision:
            a = None
        if a is not None:
            return a
        if bits >= cap:
            raise RecognitionFailed(f"j not recognized up to {cap} bits")
        bits = min(cap, 2 * bits)


def orbit_polynomial(values, bits: int, max_denominator_bits: int | None = None) -> tuple[int, ...] | None:
    """Integer polynomial ``c * prod (X - v)`` when its coefficients are visibly rational.

    An independent route to minimal polynomials when a whole Galois orbit is known
    numerically.  Returns ``None`` if the coefficients are not real rationals to
    the working precision.
    """
    with mp.workprec(bits + GUARD_BITS):
        P = Poly([1])
        for v in values:
            P = P * Poly([-big(v), 1])
        tol = mpf(2) ** (-bits // 2)
        limit = 2 ** (max_denominator_bits or bits // 4)
        fracs = []
        for c in P.coeffs:
            if abs(c.imag) > tol * max(1, abs(c)):
                return None
            fr = Fraction(mpmath.nstr(c.real, int(bits * 0.3), min_fixed=-mp.inf, max_fixed=mp.inf)
                          ).limit_denominator(limit)
            if abs(big(fr) - c.real) > tol * max(1, abs(c)):
                return None
            fracs.append(fr)
        den = math.lcm(*[f.denominator for f in fracs])
        ints = [int(f * den) for f in fracs]
        g = 0
        for x in ints:
            g = math.gcd(g, x)
        return tuple(x // g for x in ints)


# ---------------------------------------------------------------------------
# Galois orbits
# ---------------------------------------------------------------------------


@dataclass
class Orbit:
    trees: list
    j_min_poly: tuple | None
    moduli: FieldDescription | None = None
    ramification: dict = field(default_factory=dict)

    @property
    def known(self) -> bool:
        return self.j_min_poly is not None

    def to_json(self) -> dict:
        return {
            "trees": [t.label() for t in self.trees],
            "j_min_poly": [str(c) for c in self.j_min_poly] if self.j_min_poly else None,
            "field": self.moduli.to_json() if self.moduli else None,
            "ramification": self.ramification,
        }


@dataclass
class OrbitReport:
    N: int
    orbits: list

    def total_trees(self) -> int:
        return sum(len(o.trees) for o in self.orbits)

    def to_json(self) -> dict:
        return {"N": self.N, "orbits": [o.to_json() for o in self.orbits]}


def galois_orbits(models: list[EllipticModel], N: int | None = None,
                  with_fields: bool = True) -> OrbitReport:
    """Group models by the minimal polynomial of ``j`` and describe each orbit."""
    prim = [m for m in models if m.tree is None or m.tree.is_primitive]
    if N is None:
        N = prim[0].tree.degree if prim and prim[0].tree else 0
    by_sig: dict = {}
    for t in enumerate_trees(N) if N >= 3 else []:
        by_sig[t.signature] = by_sig.get(t.signature, 0) + 1
    groups: dict = {}
    unknown = []
    for m in prim:
        max_deg = by_sig.get(m.signature, len(prim)) if m.tree else len(prim)
        try:
            a = recognize_j(m, max_deg)
        except RecognitionFailed:
            unknown.append(m)
            continue
        groups.setdefault((m.signature, a.min_poly), []).append(m)
    orbits = []
    for (sig, mp_j), ms in sorted(groups.items(), key=lambda kv: (kv[0][0], min(m.tree for m in kv[1]))):
        ms = sorted(ms, key=lambda m: m.tree)
        # models sharing an irreducible polynomial of degree d form one orbit only if there are d of them
        if len(ms) != len(mp_j) - 1:
            log.warning("orbit of %s has %d models for a degree-%d polynomial", ms[0].tree, len(ms), len(mp_j) - 1)
        orb = Orbit([m.tree for m in ms], mp_j)
        if with_fields:
            try:
                orb.moduli = recognize_with_escalation(ms[0], by_sig.get(sig, len(ms)))
            except RecognitionFailed as exc:
                log.warning("field of moduli for %s: %s", ms[0].tree, exc)
        if orb.moduli is not None and sig is not None:
            orb.ramification = ramification_note(orb.moduli, N, sig)
        orbits.append(orb)
    for m in unknown:
        orbits.append(Orbit([m.tree], None))
    return OrbitReport(N, orbits)


def ramification_note(fd: FieldDescription, p: int, s: int) -> dict:
    """Observed ramification above ``p`` against the divisibility bound ``e | e_P``."""
    try:
        pred = predict(p, s)
    except (NotApplicable, ValueError):
        return {}
    primes = fd.field.prime_decomposition(p)
    return {
        "p": p,
        "predicted_e": pred.e,
        "primes_above": [{"e": e, "f": f} for e, f in primes],
        "divisibility_holds": all(e % pred.e == 0 for e, _ in primes),
    }


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------


@dataclass
class ReductionReport:
    p: int
    tree: Tree | None
    field_degree: int
    e_p: int
    f_p: int
    v_delta: int
    good_reduction: bool
    prediction: PredictionRecord
    predicted_v_delta_mod6: int | None
    theorem_divisibility_holds: bool
    criterion_agrees: bool
    model_normalization: str

    @property
    def v_delta_mod6(self) -> int:
        return self.v_delta % 6

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "tree": self.tree.label() if self.tree else None,
            "field_degree": self.field_degree,
            "e_p": self.e_p, "f_p": self.f_p,
            "v_delta": self.v_delta, "v_delta_mod6": self.v_delta_mod6,
            "good_reduction": self.good_reduction,
            "predicted_v_delta_mod6": self.predicted_v_delta_mod6,
            "ramification_divisibility_holds": self.theorem_divisibility_holds,
            "good_reduction_criterion_agrees": self.criterion_agrees,
            "model_normalization": self.model_normalization,
            "prediction": self.prediction.to_json(),
        }


def normalized_model(fd: FieldDescription):
    """Exact ``(G2, G3, label)`` over the field of moduli, equivalent to the numeric model."""
    K = fd.field
    j, j1, j2, j3 = (fd.element(n) for n in INVARIANT_NAMES)
    zero = K.element([])
    if j1 != zero:
        G2 = K.div(j2, j1)
        G3 = K.div(K.mul(j3, j2), K.mul(j1, j1))
        return G2, G3, "B=1"
    if j3 != zero:
        # g2 = 0, B != 0: Delta = -27 g3^2 and j3 = -B^3/(27 g3)
        return zero, K.scale(K.inverse(j3), Fraction(-1, 27)), "B=1"
    if j == zero:
        return zero, K.one(), "j=0 reference"
    if j == K.element([1728]):
        return K.one(), zero, "j=1728 reference"
    c = K.div(K.scale(j, 27), K.sub(j, K.element([1728])))
    return c, c, "generic reference"


def reduction_report(m: EllipticModel, p: int, fd: FieldDescription | None = None) -> ReductionReport:
    """Exact valuation of the discriminant of a model over the field of moduli at ``p``."""
    if fd is None:
        n_sig = sum(1 for t in enumerate_trees(m.tree.degree) if t.signature == m.signature)
        fd = recognize_with_escalation(m, n_sig)
    if fd.degree > 3:
        raise FieldTooLarge(f"field of degree {fd.degree} (exact arithmetic limited to 3)")
    primes = fd.field.prime_decomposition(p)
    if len(primes) != 1:
        raise MultiplePrimesAbove(f"{len(primes)} primes above {p}")
    e_p, f_p = primes[0]
    K = fd.field
    G2, G3, label = normalized_model(fd)
    delta = K.sub(K.power(G2, 3), K.scale(K.power(G3, 2), 27))
    # numeric sanity check against the floating model
    with mp.workprec(fd.bits + GUARD_BITS):
        # the model may carry fewer bits than the recognition used
        check = mpf(2) ** (-min(fd.bits, m.bits) // 4)
        num = m.Delta / m.B ** 6 if label == "B=1" else None
        if num is not None:
            ex = K.embed(delta, fd.bits)
            if abs(ex - num) > check * max(1, abs(num)):
                # the recognized field element may be a Galois conjugate of this model's value
                conj_ok = False
                for r, _ in poly_roots(Poly(K.T), fd.bits):
                    alt = NumberField(K.T, r).embed(delta, fd.bits)
                    if abs(alt - num) < check * max(1, abs(num)):
                        conj_ok = True
                if not conj_ok:
                    raise RecognitionFailed("exact discriminant does not match the numeric model")
    norm = K.norm(delta)
    vn = vp_rational(norm, p)
    if vn % f_p:
        raise RecognitionFailed("norm valuation not divisible by the residue degree")
    v = vn // f_p
    s = m.signature
    pred = predict(p, s, m.j_class)
    pred_v = None
    if (12 * e_p) % (p + 1 - s) == 0:
        pred_v = (12 * e_p // (p + 1 - s)) % 6
    good = v % 6 == 0
    return ReductionReport(
        p=p, tree=m.tree, field_degree=fd.degree, e_p=e_p, f_p=f_p, v_delta=v,
        good_reduction=good, prediction=pred, predicted_v_delta_mod6=pred_v,
        theorem_divisibility_holds=(e_p % pred.e == 0),
        criterion_agrees=(good == pred.good_reduction_predicted(e_p)),
        model_normalization=label,
    )
