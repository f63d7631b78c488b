"""Multiprecision numerics: dense polynomials, root finding, integer relations.

Complex numbers are ``mpmath.mpc`` values.  mpmath keeps the working precision
in a context rather than on each value, so every public function here takes an
explicit ``precision_bits`` and evaluates inside ``mpmath.workprec``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
from mpmath import mp, mpc, mpf

from .errors import InsufficientPrecision, NonConvergence

BigComplex = mpc

GUARD_BITS = 24
MIN_PRECISION = 64


def big(x) -> mpc:
    """Coerce ints, floats, complex, strings or mpmath numbers to ``mpc``."""
    if isinstance(x, mpc):
        return x
    if isinstance(x, Fraction):
        return mpc(mpf(x.numerator) / x.denominator)
    if isinstance(x, str):
        return mpc(mpmath.mpmathify(x))
    return mpc(x)


def cnorm(x) -> mpf:
    """Max-norm of a complex number (cheaper than ``abs`` and good enough for scaling)."""
    x = big(x)
    return max(abs(x.real), abs(x.imag))


def log2_abs(x) -> float:
    x = abs(big(x))
    if x == 0:
        return -math.inf
    return float(mpmath.log(x, 2))


class Poly:
    """Dense univariate polynomial with ``mpc`` coefficients in ascending order.

    Exact zero leading coefficients are trimmed, so ``degree == len(coeffs) - 1``
    and the zero polynomial has degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [big(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def from_roots(cls, roots: Iterable, leading=1) -> "Poly":
        out = cls([leading])
        for r in roots:
            out = out * cls([-big(r), 1])
        return out

    @classmethod
    def monomial(cls, k: int, c=1) -> "Poly":
        return cls([0] * k + [c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> mpc:
        return self.coeffs[-1] if self.coeffs else mpc(0)

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, k):
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return mpc(0)

    def __repr__(self):
        return f"Poly({[mpmath.nstr(c, 8) for c in self.coeffs]})"

    def __call__(self, x):
        acc = mpc(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __neg__(self):
        return Poly([-c for c in self.coeffs])

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly([self[k] + other[k] for k in range(n)])

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = big(other)
            return Poly([a * c for a in self.coeffs])
        if not self.coeffs or not other.coeffs:
            return Poly()
        out = [mpc(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly([1])
        for _ in range(k):
            out = out * self
        return out

    def derivative(self, order: int = 1) -> "Poly":
        cs = list(self.coeffs)
        for _ in range(order):
            cs = [k * cs[k] for k in range(1, len(cs))]
        return Poly(cs)

    def monic(self) -> "Poly":
        lc = self.leading
        return Poly([c / lc for c in self.coeffs])

    def conjugate(self) -> "Poly":
        return Poly([mpmath.conj(c) for c in self.coeffs])

    def divmod(self, other: "Poly"):
        """Long division; ``other`` must have nonzero leading coefficient."""
        rem = list(self.coeffs)
        dq = other.degree
        if dq < 0:
            raise ZeroDivisionError("division by the zero polynomial")
        if len(rem) - 1 < dq:
            return Poly(), Poly(rem)
        quot = [mpc(0)] * (len(rem) - dq)
        lc = other.leading
        for k in range(len(rem) - 1, dq - 1, -1):
            c = rem[k] / lc
            quot[k - dq] = c
            for i, b in enumerate(other.coeffs):
                rem[k - dq + i] -= c * b
        return Poly(quot), Poly(rem[:dq])

    def norm(self) -> mpf:
        """Max-norm of the coefficient vector."""
        return max((abs(c) for c in self.coeffs), default=mpf(0))

    def truncated(self, n: int) -> "Poly":
        return Poly(self.coeffs[:n])


def _as_poly(x) -> Poly:
    return x if isinstance(x, Poly) else Poly([x])


def coefficient_distance(p: Poly, q: Poly) -> mpf:
    """Relative max-norm distance between two coefficient vectors."""
    n = max(len(p), len(q))
    diff = max((abs(p[k] - q[k]) for k in range(n)), default=mpf(0))
    scale = max(p.norm(), q.norm(), mpf(1))
    return diff / scale


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------


def _root_radius(p: Poly) -> mpf:
    """Fujiwara-type upper bound on the modulus of the roots of ``p``."""
    n = p.degree
    lc = abs(p.leading)
    best = mpf(0)
    for k in range(n):
        c = abs(p[k]) / lc
        if c == 0:
            continue
        e = n - k
        if k == 0:
            c = c / 2
        best = max(best, c ** (mpf(1) / e))
    return 2 * best if best > 0 else mpf(1)


def _aberth(p: Poly, dp: Poly, z: list, tol: mpf, maxiter: int, stall_below: mpf):
    """Gauss-Seidel Aberth-Ehrlich iteration in place.  Returns the last max correction."""
    n = len(z)
    last = mpf("inf")
    stalled = 0
    for _ in range(maxiter):
        worst = mpf(0)
        for k in range(n):
            zk = z[k]
            pk = p(zk)
            if pk == 0:
                continue
            dpk = dp(zk)
            s = mpc(0)
            for j in range(n):
                if j != k:
                    d = zk - z[j]
                    if d == 0:
                        d = mpc(tol, tol)
                    s += 1 / d
            if dpk == 0:
                w = pk / (-pk * s) if s != 0 else mpc(tol)
            else:
                ratio = pk / dpk
                w = ratio / (1 - ratio * s)
            z[k] = zk - w
            worst = max(worst, cnorm(w) / max(mpf(1), cnorm(z[k])))
        if worst < tol:
            return worst
        # linear convergence towards multiple roots stagnates at roughly eps^(1/m)
        if worst < stall_below and worst > last / 2:
            stalled += 1
            if stalled > 8:
                return worst
        else:
            stalled = 0
        last = worst
    return last


def _cluster(z: Sequence[mpc], radius: mpf):
    """Single-linkage clustering of approximations within ``radius``."""
    n = len(z)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= radius:
                parent[find(i)] = find(j)
    groups: dict[int, list] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(z[i])
    return list(groups.values())


def _polish(p: Poly, x: mpc, m: int, tol: mpf, maxiter: int = 200) -> mpc:
    """Newton on the (m-1)-th derivative, where an m-fold root of ``p`` is simple."""
    q = p.derivative(m - 1)
    dq = q.derivative()
    for _ in range(maxiter):
        d = dq(x)
        if d == 0:
            return x
        step = q(x) / d
        x = x - step
        if cnorm(step) <= tol * max(mpf(1), cnorm(x)):
            break
    return x


def poly_roots(p: Poly, precision_bits: int, *, rng: random.Random | None = None,
               max_restarts: int = 8) -> list[tuple[mpc, int]]:
    """Roots of ``p`` with multiplicities.

    Aberth iteration runs first; approximations closer than ``2**(-P/4)`` (relative
    to the root scale) are merged into one multiple root which is then polished by
    Newton's method on the appropriate derivative.  The factorisation is checked by
    expanding it again; a failed check triggers a restart from perturbed initial
    points.
    """
    if p.degree < 1:
        raise ValueError("poly_roots needs a polynomial of degree >= 1")
    rng = rng or random.Random(0x5EED)
    with mp.workprec(precision_bits + GUARD_BITS):
        p = Poly(p.coeffs)
        q = p.monic()
        n = q.degree
        if n == 1:
            return [(-q[0], 1)]
        dq = q.derivative()
        center = -q[n - 1] / n
        radius = _root_radius(q)
        scale = max(mpf(1), radius)
        tol = mpf(2) ** (-(precision_bits // 4 + 16))
        cluster_radius = scale * mpf(2) ** (-(precision_bits // 4))
        fine = mpf(2) ** (-(precision_bits + GUARD_BITS // 2))
        for attempt in range(max_restarts + 1):
            phase = rng.random() * 2 * math.pi
            rad = radius * (1 + 0.1 * rng.random()) if attempt else radius
            z = [center + rad * mpmath.expj(phase + 2 * math.pi * k / n + 0.4 / n)
                 for k in range(n)]
            _aberth(q, dq, z, tol, maxiter=60 + 6 * precision_bits,
                    stall_below=mpf(2) ** (-(precision_bits // 8)))
            groups = _cluster(z, cluster_radius)
            roots = []
            for grp in groups:
                m = len(grp)
                x0 = sum(grp) / m
                roots.append((_polish(q, x0, m, fine), m))
            recon = Poly.from_roots([r for r, m in roots for _ in range(m)])
            if coefficient_distance(recon, q) < mpf(2) ** (-(precision_bits // 2)):
                roots.sort(key=lambda rm: (float(rm[0].real), float(rm[0].imag)))
                return roots
        raise NonConvergence(f"Aberth iteration failed after {max_restarts} restarts")


def resultant(p: Poly, q: Poly) -> mpc:
    """Resultant via the Sylvester determinant."""
    m, n = p.degree, q.degree
    if m < 0 or n < 0:
        return mpc(0)
    if m == 0:
        return p[0] ** n
    if n == 0:
        return q[0] ** m
    size = m + n
    S = mpmath.matrix(size, size)
    for r in range(n):
        for k in range(m + 1):
            S[r, r + k] = p[m - k]
    for r in range(m):
        for k in range(n + 1):
            S[n + r, r + k] = q[n - k]
    return mpmath.det(S)


def poly_resultant_discriminant(p: Poly, precision_bits: int | None = None) -> mpc:
    """disc(p) = (-1)^(n(n-1)/2) / lc(p) * Res(p, p')."""
    if p.degree < 2:
        raise ValueError("discriminant needs degree >= 2")
    bits = precision_bits or mp.prec
    with mp.workprec(bits + GUARD_BITS):
        n = p.degree
        sign = -1 if (n * (n - 1) // 2) % 2 else 1
        return sign * resultant(p, p.derivative()) / p.leading


# ---------------------------------------------------------------------------
# integer relations
# ---------------------------------------------------------------------------


def lll_reduce(basis: Sequence[Sequence[int]], delta: Fraction = Fraction(99, 100)) -> list[list[int]]:
    """Integral LLL (all arithmetic in exact integers).

    Rows of ``basis`` must be linearly independent.  Returns a reduced basis.
    """
    b = [list(map(int, row)) for row in basis]
    n = len(b)
    if n == 0:
        return b

    def dot(u, v):
        return sum(x * y for x, y in zip(u, v))

    dn, dd = delta.numerator, delta.denominator
    d = [0] * (n + 1)          # d[i+1] = Gram determinant of the first i+1 vectors
    lam = [[0] * n for _ in range(n)]
    d[0] = 1
    d[1] = dot(b[0], b[0])
    if d[1] == 0:
        raise ValueError("zero vector in LLL basis")
    k, kmax = 1, 0

    def redi(k, l):
        if 2 * abs(lam[k][l]) > d[l + 1]:
            q = (2 * lam[k][l] + d[l + 1]) // (2 * d[l + 1])
            b[k] = [x - q * y for x, y in zip(b[k], b[l])]
            lam[k][l] -= q * d[l + 1]
            for i in range(l):
                lam[k][i] -= q * lam[l][i]

    def swapi(k):
        b[k], b[k - 1] = b[k - 1], b[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        B = (d[k - 1] * d[k + 1] + lm * lm) // d[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - lm * t) // d[k]
            lam[i][k - 1] = (B * t + lm * lam[i][k]) // d[k + 1]
        d[k] = B

    while k < n:
        if k > kmax:
            kmax = k
            for j in range(k + 1):
                u = dot(b[k], b[j])
                for i in range(j):
                    u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
                if j < k:
                    lam[k][j] = u
                else:
                    if u == 0:
                        raise ValueError("LLL input vectors are linearly dependent")
                    d[k + 1] = u
        redi(k, k - 1)
        if dd * d[k + 1] * d[k - 1] < dn * d[k] * d[k] - dd * lam[k][k - 1] ** 2:
            swapi(k)
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                redi(k, l)
            k += 1
    return b


def integer_relation(values: Sequence, scale_bits: int) -> list[int]:
    """Short integer vector ``a`` with ``sum a_i values_i ~ 0``.

    Uses LLL on the rows ``e_i | round(2^scale_bits * (Re v_i, Im v_i))``.  The caller
    judges the candidate; this just returns the first reduced vector.
    """
    C = mpf(2) ** scale_bits
    rows = []
    n = len(values)
    for i, v in enumerate(values):
        v = big(v)
        row = [0] * n
        row[i] = 1
        row.append(int(mpmath.nint(C * v.real)))
        row.append(int(mpmath.nint(C * v.imag)))
        rows.append(row)
    reduced = lll_reduce(rows)
    return reduced[0][:n]


@dataclass(frozen=True)
class AlgebraicNumber:
    """An algebraic number given by its integer minimal polynomial and a numeric root."""

    min_poly: tuple[int, ...]        # ascending coefficients, content 1, positive leading coefficient
    root_approx: mpc
    height_bound: int                 # log2 of the largest coefficient, rounded up
    certified_bits: int

    @property
    def degree(self) -> int:
        return len(self.min_poly) - 1

    def is_rational(self) -> bool:
        return self.degree == 1

    def as_fraction(self) -> Fraction:
        if self.degree != 1:
            raise ValueError("not a rational number")
        a0, a1 = self.min_poly
        return Fraction(-a0, a1)

    def conjugates(self, precision_bits: int) -> list[mpc]:
        if self.degree == 1:
            return [big(self.as_fraction())]
        return [r for r, _ in poly_roots(Poly(self.min_poly), precision_bits)]

    def to_json(self) -> dict:
        return {
            "min_poly": [str(c) for c in self.min_poly],
            "root": complex_to_str(self.root_approx, self.certified_bits),
            "certified_bits": self.certified_bits,
        }


def _content_free(coeffs: Sequence[int]) -> tuple[int, ...]:
    g = 0
    for c in coeffs:
        g = math.gcd(g, int(c))
    cs = [int(c) // g for c in coeffs] if g else list(coeffs)
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    if cs[-1] < 0:
        cs = [-c for c in cs]
    return tuple(cs)


def _irreducible_factor_at(coeffs: Sequence[int], x: mpc) -> tuple[int, ...]:
    """Irreducible factor over Z of ``coeffs`` that vanishes at ``x`` (closest to zero)."""
    import sympy

    X = sympy.Symbol("x")
    expr = sum(int(c) * X**k for k, c in enumerate(coeffs))
    _, factors = sympy.factor_list(expr, X)
    best, best_val = None, None
    for fac, _mult in factors:
        fc = sympy.Poly(fac, X).all_coeffs()[::-1]
        val = abs(Poly([int(c) for c in fc])(x)) / max(abs(int(c)) for c in fc)
        if best_val is None or val < best_val:
            best, best_val = fc, val
    return _content_free([int(c) for c in best])


RECOGNITION_MARGIN = 64


def required_bits(degree: int, height_log2: int) -> int:
    return 2 * (degree + 1) * height_log2 + RECOGNITION_MARGIN


def height_budget(degree: int, bits: int) -> int:
    """Largest height (log2) that :func:`recognize_algebraic` accepts at ``bits``."""
    return max(1, (bits - RECOGNITION_MARGIN) // (2 * (degree + 1)))


def recognize_algebraic(x, max_degree: int, max_height_log2: int,
                        precision_bits: int | None = None) -> AlgebraicNumber | None:
    """Find the minimal polynomial of ``x`` among polynomials of bounded degree and height.

    ``x`` must be known to ``precision_bits`` (default: current mpmath precision),
    which has to be at least ``required_bits(max_degree, max_height_log2)``: twice
    the bit size of a height-bounded relation plus a margin, so that a relation
    found by LLL is far from what rounding noise could produce.  Returns ``None``
    when no relation is found within the bounds.
    """
    bits = precision_bits or mp.prec
    if bits < required_bits(max_degree, max_height_log2):
        raise InsufficientPrecision(
            f"{bits} bits < {required_bits(max_degree, max_height_log2)} required for "
            f"degree {max_degree}, height 2^{max_height_log2}")
    x = big(x)
    if x == 0:
        return AlgebraicNumber((0, 1), mpc(0), 0, bits)
    with mp.workprec(bits + GUARD_BITS):
        size = max(mpf(1), abs(x))
        for deg in range(1, max_degree + 1):
            lost = int(math.ceil(deg * float(mpmath.log(size, 2))))
            cert = bits - 8 - lost
            if cert < required_bits(deg, max_height_log2) - RECOGNITION_MARGIN:
                break
            powers = [x ** k for k in range(deg + 1)]
            cand = integer_relation(powers, cert)
            if cand[-1] == 0 or all(c == 0 for c in cand):
                continue
            if max(abs(c) for c in cand).bit_length() > max_height_log2:
                continue
            cand = _content_free(cand)
            P = Poly(cand)
            cnorm_p = max(abs(c) for c in cand)
            if abs(P(x)) >= mpf(2) ** (-cert // 2) * cnorm_p * size ** deg:
                continue
            mp_coeffs = _irreducible_factor_at(cand, x)
            M = Poly(mp_coeffs)
            if M.degree >= 2:
                root_bits = min(bits, 256)
                radius = size * mpf(2) ** (-root_bits // 4)
                near = [r for r, m in poly_roots(M, root_bits) if abs(r - x) < radius]
                if len(near) != 1:
                    continue
            height = max(abs(c) for c in mp_coeffs).bit_length()
            return AlgebraicNumber(mp_coeffs, x, height, cert)
    return None


def express_in_basis(value, basis: Sequence, max_height_log2: int,
                     precision_bits: int | None = None) -> list[Fraction] | None:
    """Rational coordinates ``r`` with ``value = sum r_k basis_k``, via an integer relation."""
    bits = precision_bits or mp.prec
    with mp.workprec(bits + GUARD_BITS):
        vals = [big(value)] + [big(b) for b in basis]
        size = max(mpf(1), *[abs(v) for v in vals])
        cert = bits - 8 - int(math.ceil(float(mpmath.log(size, 2))))
        rel = integer_relation(vals, cert)
        if rel[0] == 0:
            return None
        if max(abs(c) for c in rel).bit_length() > max_height_log2:
            return None
        resid = sum(c * v for c, v in zip(rel, vals))
        if abs(resid) > mpf(2) ** (-cert // 2) * max(abs(c) for c in rel) * size:
            return None
        return [Fraction(-c, rel[0]) for c in rel[1:]]


# ---------------------------------------------------------------------------
# serialisation helpers
# ---------------------------------------------------------------------------


def digits_for_bits(bits: int) -> int:
    return int(bits * math.log10(2)) + 1


def complex_to_str(z, bits: int) -> list[str]:
    """``[re, im]`` decimal strings, rounded a few digits below the working precision."""
    z = big(z)
    dig = max(15, digits_for_bits(bits) - 4)
    return [mpmath.nstr(z.real, dig, min_fixed=1, max_fixed=0, strip_zeros=True),
            mpmath.nstr(z.imag, dig, min_fixed=1, max_fixed=0, strip_zeros=True)]


def complex_from_str(pair: Sequence[str], bits: int) -> mpc:
    with mp.workprec(bits + GUARD_BITS):
        return mpc(mpf(pair[0]), mpf(pair[1]))
