"""Shabat polynomials of three-branch trees.

A tree ``[a, b, c]`` of degree ``N`` and signature ``s`` is realised by

    beta(x) = x^3 q(x) g(x)^2 = 1 + f(x) h(x)^2

with monic ``q, g, f, h`` of degrees ``s, (N-3-s)/2, 3-s, (N-3+s)/2``.  The
coefficients are found by multistart Newton in double precision, polished in
multiprecision and then decoded back to a tree by lifting the segment (0, 1).
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field, replace

import mpmath
import numpy as np
from mpmath import mp, mpc, mpf

from . import _kernels
from .errors import DecodeAmbiguous, Incomplete, ShapeError, VerificationFailed
from .mpnum import GUARD_BITS, Poly, big, complex_from_str, complex_to_str, poly_roots
from .trees import Tree, all_trees, enumerate_trees

log = logging.getLogger(__name__)

SOLVER_VERSION = "1"


@dataclass(frozen=True)
class SystemShape:
    """Degrees of the factors and bookkeeping for one signature class."""

    N: int
    s: int
    deg_q: int
    deg_g: int
    deg_f: int
    deg_h: int
    primitive_target: bool = True

    @property
    def n_unknowns(self) -> int:
        return self.deg_q + self.deg_g + self.deg_f + self.deg_h

    @property
    def n_equations(self) -> int:
        return self.N

    @property
    def degrees(self) -> tuple[int, int, int, int]:
        return (self.deg_q, self.deg_g, self.deg_f, self.deg_h)

    @property
    def rescaling_order(self) -> int:
        """x -> lambda x with lambda^N = 1 maps solutions to solutions."""
        return self.N

    def weights(self) -> list[int]:
        """Exponent of lambda picked up by each unknown under the rescaling."""
        out = []
        for d in self.degrees:
            out.extend(k - d for k in range(d))
        return out


def system_shape(N: int, s: int) -> SystemShape:
    if N < 3 or not 0 <= s <= 3:
        raise ShapeError(f"no three-branch tree with N={N}, s={s}")
    if (N - 3 - s) % 2:
        raise ShapeError(f"N={N} and signature {s} violate N = 3 + s (mod 2)")
    dg = (N - 3 - s) // 2
    dh = (N - 3 + s) // 2
    if dg < 0:
        raise ShapeError(f"signature {s} impossible in degree {N}")
    return SystemShape(N, s, s, dg, 3 - s, dh)


def build_system(t: Tree) -> SystemShape:
    """Shape of the polynomial system whose solutions include the Shabat polynomial of ``t``."""
    shape = system_shape(t.degree, t.signature)
    return replace(shape, primitive_target=t.is_primitive)


@dataclass(frozen=True)
class SolveConfig:
    precision_bits: int = 256
    max_restarts: int = 64
    newton_max_iters: int = 60
    newton_tolerance_exponent: int = 120
    rng_seed: int = 0
    batch_size: int = 1024
    use_numba: bool | None = None

    def __post_init__(self):
        if self.precision_bits < 128:
            raise ValueError("precision_bits must be at least 128")
        if self.newton_tolerance_exponent > self.precision_bits // 2:
            raise ValueError("newton_tolerance_exponent must not exceed precision_bits/2")


# ---------------------------------------------------------------------------
# multiprecision system
# ---------------------------------------------------------------------------


def _split(u, shape: SystemShape) -> tuple[Poly, Poly, Poly, Poly]:
    polys, i = [], 0
    for d in shape.degrees:
        polys.append(Poly(list(u[i:i + d]) + [1]))
        i += d
    return tuple(polys)


def _mp_system(u, shape: SystemShape):
    q, g, f, h = _split(u, shape)
    N = shape.N
    gg, hh = g * g, h * h
    lhs = Poly.monomial(3) * q * gg
    R = lhs - f * hh - 1
    res = [R[k] for k in range(N)]
    J = mpmath.matrix(N, shape.n_unknowns)
    col = 0
    blocks = (
        (shape.deg_q, Poly.monomial(3) * gg),
        (shape.deg_g, Poly.monomial(3) * q * g * 2),
        (shape.deg_f, -hh),
        (shape.deg_h, -(f * h * 2)),
    )
    for d, base in blocks:
        for k in range(d):
            for i, c in enumerate(base.coeffs):
                if k + i < N:
                    J[k + i, col] = c
            col += 1
    return res, J


def polish(u0, shape: SystemShape, precision_bits: int, max_iters: int = 40):
    """Newton refinement at ``precision_bits``.  Returns ``(u, residual_max_norm)``."""
    with mp.workprec(precision_bits + GUARD_BITS):
        u = [big(complex(x)) if not isinstance(x, mpc) else x for x in u0]
        target = mpf(2) ** (-(precision_bits - 8))
        res = None
        for _ in range(max_iters):
            R, J = _mp_system(u, shape)
            res = max(abs(r) for r in R)
            if res < target:
                break
            try:
                d = mpmath.lu_solve(J, mpmath.matrix(R))
            except ZeroDivisionError:
                break
            u = [u[k] - d[k] for k in range(len(u))]
        R, _ = _mp_system(u, shape)
        res = max(abs(r) for r in R)
        return u, res


def residual_norm(u, shape: SystemShape, precision_bits: int) -> mpf:
    with mp.workprec(precision_bits + GUARD_BITS):
        R, _ = _mp_system([big(x) for x in u], shape)
        return max(abs(r) for r in R)


# ---------------------------------------------------------------------------
# solutions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BelyiSolution:
    N: int
    s: int
    q: Poly
    g: Poly
    f: Poly
    h: Poly
    precision_bits: int
    decoded_tree: Tree | None = None
    residual_norm: mpf = field(default=mpf(0), compare=False)

    @property
    def shape(self) -> SystemShape:
        return system_shape(self.N, self.s)

    @property
    def beta(self) -> Poly:
        return Poly.monomial(3) * self.q * self.g * self.g

    @property
    def beta_minus_one(self) -> Poly:
        return self.f * self.h * self.h

    def unknowns(self) -> list[mpc]:
        out = []
        for p in (self.q, self.g, self.f, self.h):
            out.extend(p.coeffs[:-1])
        return out

    @property
    def is_primitive(self) -> bool:
        return self.decoded_tree is not None and self.decoded_tree.is_primitive

    @classmethod
    def from_unknowns(cls, u, shape: SystemShape, precision_bits: int, *,
                      decoded_tree: Tree | None = None, residual=None) -> "BelyiSolution":
        q, g, f, h = _split(u, shape)
        if residual is None:
            residual = residual_norm(u, shape, precision_bits)
        return cls(shape.N, shape.s, q, g, f, h, precision_bits, decoded_tree, residual)

    def rescaled(self, lam) -> "BelyiSolution":
        """Image under x -> lam x (``lam**N`` must be 1 for the result to be monic)."""
        with mp.workprec(self.precision_bits + GUARD_BITS):
            lam = big(lam)
            u = [c * lam ** w for c, w in zip(self.unknowns(), self.shape.weights())]
            return BelyiSolution.from_unknowns(u, self.shape, self.precision_bits,
                                               decoded_tree=self.decoded_tree)

    def conjugate(self) -> "BelyiSolution":
        tree = self.decoded_tree.conjugate() if self.decoded_tree else None
        with mp.workprec(self.precision_bits + GUARD_BITS):
            u = [mpmath.conj(c) for c in self.unknowns()]
        return BelyiSolution.from_unknowns(u, self.shape, self.precision_bits,
                                           decoded_tree=tree, residual=self.residual_norm)

    def refine(self, precision_bits: int) -> "BelyiSolution":
        """Re-polish the coefficients at a higher precision."""
        if precision_bits <= self.precision_bits:
            return self
        u, res = polish(self.unknowns(), self.shape, precision_bits)
        return BelyiSolution.from_unknowns(u, self.shape, precision_bits,
                                           decoded_tree=self.decoded_tree, residual=res)

    def residual_exponent(self) -> int:
        """``-log2`` of the residual, capped a little below the working precision."""
        cap = self.precision_bits - 32
        if self.residual_norm == 0:
            return cap
        return min(cap, int(-math.floor(float(mpmath.log(self.residual_norm, 2)))))

    def to_json(self) -> dict:
        bits = self.precision_bits
        return {
            "N": self.N,
            "signature": self.s,
            "tree": self.decoded_tree.label() if self.decoded_tree else None,
            "primitive": self.is_primitive,
            "precision_bits": bits,
            "residual_exponent": self.residual_exponent(),
            "coefficients": {
                name: [complex_to_str(c, bits) for c in poly.coeffs]
                for name, poly in zip("qgfh", (self.q, self.g, self.f, self.h))
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "BelyiSolution":
        bits = int(data["precision_bits"])
        shape = system_shape(int(data["N"]), int(data["signature"]))
        polys = [Poly([complex_from_str(c, bits) for c in data["coefficients"][k]]) for k in "qgfh"]
        u = []
        for p in polys:
            u.extend(p.coeffs[:-1])
        tree = Tree.parse(data["tree"]) if data.get("tree") else None
        return cls.from_unknowns(u, shape, bits, decoded_tree=tree)


def _rescaling_roots(N: int):
    return [cmath.exp(2j * math.pi * k / N) for k in range(N)]


def _float_orbit(u: np.ndarray, shape: SystemShape) -> np.ndarray:
    w = np.asarray(shape.weights())
    lams = np.asarray(_rescaling_roots(shape.N))
    return u[None, :] * lams[:, None] ** w[None, :]


def _canonical_index(orbit: np.ndarray) -> int:
    """Pick a deterministic representative: smallest imaginary part, then largest real part."""
    scale = max(1.0, float(np.max(np.abs(orbit))))
    imag = np.max(np.abs(orbit.imag), axis=1) / scale if orbit.shape[1] else np.zeros(len(orbit))
    best = float(np.min(imag))
    ties = np.nonzero(imag <= best + 1e-9)[0]
    if len(ties) == 1:
        return int(ties[0])
    keys = [tuple(np.round(orbit[i].real / scale, 6)) for i in ties]
    return int(ties[max(range(len(ties)), key=lambda j: keys[j])])


def canonical_representative(sol: BelyiSolution) -> BelyiSolution:
    """Representative of the rescaling class chosen by :func:`_canonical_index`."""
    u = np.array([complex(c) for c in sol.unknowns()], dtype=np.complex128)
    orbit = _float_orbit(u, sol.shape)
    k = _canonical_index(orbit)
    if k == 0:
        return sol
    with mp.workprec(sol.precision_bits + GUARD_BITS):
        lam = mpmath.expj(2 * mpmath.pi * k / sol.N)
    out = sol.rescaled(lam)
    return replace(out, residual_norm=residual_norm(out.unknowns(), out.shape, out.precision_bits))


def rescaling_distance(a: BelyiSolution, b: BelyiSolution) -> mpf:
    """min over lambda^N = 1 of the relative coefficient distance between ``a`` and ``b``."""
    if (a.N, a.s) != (b.N, b.s):
        return mpf("inf")
    bits = min(a.precision_bits, b.precision_bits)
    with mp.workprec(bits + GUARD_BITS):
        ua, ub = a.unknowns(), b.unknowns()
        scale = max([mpf(1)] + [abs(c) for c in ua + ub])
        best = mpf("inf")
        for k in range(a.N):
            lam = mpmath.expj(2 * mpmath.pi * k / a.N)
            d = max((abs(x * lam ** w - y) for x, y, w in zip(ua, ub, a.shape.weights())),
                    default=mpf(0))
            best = min(best, d / scale)
        return best


# ---------------------------------------------------------------------------
# decoding by path lifting
# ---------------------------------------------------------------------------


def _horner(coeffs, x):
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass
class _Vertex:
    colour: str
    pos: complex
    valency: int
    edges: list = field(default_factory=list)   # (angle at this vertex or None, neighbour id)


def _vertices(sol: BelyiSolution, bits: int):
    black = [("b", 0j, 3)]
    white = []
    for poly, mult, dest in ((sol.q, 1, black), (sol.g, 2, black), (sol.f, 1, white), (sol.h, 2, white)):
        if poly.degree >= 1:
            for r, m in poly_roots(poly, bits):
                if m != 1:
                    raise DecodeAmbiguous("factor polynomial has a repeated root")
                dest.append((dest is black and "b" or "w", complex(r), mult))
    return black, white


def _lift(beta, dbeta, x, tau, tau_end=1 - 1e-6, max_steps=20000):
    """Continue beta(x(t)) = t from (x, tau) up to ``tau_end``."""
    abs_beta = [abs(c) for c in beta]
    dt = tau / 2
    steps = 0
    while tau < tau_end:
        steps += 1
        if steps > max_steps:
            raise DecodeAmbiguous("path lifting did not terminate")
        dt = min(dt, 0.5 * tau, 0.5 * (1 - tau), 0.02)
        t_new = min(tau + dt, tau_end)
        d = _horner(dbeta, x)
        if d == 0:
            raise DecodeAmbiguous("path lifting hit a critical point")
        pred = x + (t_new - tau) / d
        y = pred
        ok = False
        for _ in range(4):
            dy = _horner(dbeta, y)
            corr = (_horner(beta, y) - t_new) / dy
            y -= corr
            # floating-point noise floor of beta near y, mapped back to x
            noise = 1e-15 * abs(_horner(abs_beta, abs(y))) / abs(dy)
            if abs(corr) <= 1e-9 * abs(pred - x) + 16 * noise:
                ok = True
                break
        # a corrector that moves far from the predictor may have jumped sheets
        if ok and abs(y - pred) <= 0.25 * abs(pred - x) + 16 * noise:
            x, tau = y, t_new
            dt *= 1.5
        else:
            dt /= 2
            if dt < 1e-15:
                if 1 - tau < 1e-4:
                    # rounding noise near a multiple white vertex; close enough to classify
                    return x
                raise DecodeAmbiguous("path lifting step size underflow")
    return x


def lift_edges(sol: BelyiSolution, bits: int | None = None):
    """Lift (0, 1) from every black vertex; returns (black, white, edges).

    ``edges`` holds ``(black_index, angle, white_index)`` where ``angle`` is the
    argument of the edge's initial direction at the black vertex.
    """
    bits = bits or min(sol.precision_bits, 192)
    with mp.workprec(sol.precision_bits + GUARD_BITS):
        beta_mp = sol.beta
        beta = [complex(c) for c in beta_mp.coeffs]
        dbeta = [complex(c) for c in beta_mp.derivative().coeffs]
        black, white = _vertices(sol, bits)
        local = []
        for _, v, k in black:
            c = beta_mp.derivative(k)(big(v)) / math.factorial(k)
            local.append(complex(c))
    positions = [v for _, v, _ in black] + [w for _, w, _ in white]
    wpos = np.array([w for _, w, _ in white])
    edges = []
    for bi, (_, v, k) in enumerate(black):
        sep = min(abs(v - p) for p in positions if p is not v and abs(v - p) > 0)
        c = local[bi]
        r0 = 1e-3 * sep
        tau0 = abs(c) * r0 ** k
        base = (tau0 / c) ** (1.0 / k)
        for m in range(k):
            x0 = v + base * cmath.exp(2j * math.pi * m / k)
            for _ in range(8):
                x0 -= (_horner(beta, x0) - tau0) / _horner(dbeta, x0)
            angle = math.atan2((x0 - v).imag, (x0 - v).real)
            x1 = _lift(beta, dbeta, x0, tau0)
            dist = np.abs(wpos - x1)
            wi = int(np.argmin(dist))
            others = [abs(wpos[wi] - w) for j, w in enumerate(wpos) if j != wi]
            if others and dist[wi] > 0.25 * min(others):
                raise DecodeAmbiguous(f"lifted path from black vertex {bi} ends between white vertices")
            edges.append((bi, angle, wi))
    return black, white, edges


def decode_tree(sol: BelyiSolution) -> Tree:
    """Read the plane tree of ``sol`` off the lifted edges, branches counterclockwise."""
    black, white, edges = lift_edges(sol)
    if len(edges) != sol.N:
        raise DecodeAmbiguous(f"expected {sol.N} edges, lifted {len(edges)}")
    wdeg = [0] * len(white)
    adj: dict[tuple, list] = {}
    for bi, angle, wi in edges:
        wdeg[wi] += 1
        adj.setdefault(("b", bi), []).append((angle, ("w", wi)))
        adj.setdefault(("w", wi), []).append((None, ("b", bi)))
    for wi, (_, _, k) in enumerate(white):
        if wdeg[wi] != k:
            raise DecodeAmbiguous(f"white vertex {wi} has {wdeg[wi]} edges, expected {k}")
    centre = ("b", 0)
    lengths = []
    for _, first in sorted(adj[centre], key=lambda e: e[0]):
        prev, cur, n = centre, first, 1
        seen = {centre}
        while True:
            seen.add(cur)
            nbrs = [nb for _, nb in adj[cur] if nb != prev]
            if not nbrs:
                break
            if len(nbrs) > 1 or nbrs[0] in seen:
                raise DecodeAmbiguous("lifted graph is not a three-branch tree")
            prev, cur, n = cur, nbrs[0], n + 1
        lengths.append(n)
    if len(lengths) != 3 or sum(lengths) != sol.N:
        raise DecodeAmbiguous(f"branch lengths {lengths} inconsistent with degree {sol.N}")
    return Tree.canonical(*lengths)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def verify_solution(sol: BelyiSolution, tolerance_exponent: int | None = None) -> dict:
    """Independent checks of a solution; raises :class:`VerificationFailed` on the first failure."""
    bits = sol.precision_bits
    tol_exp = tolerance_exponent if tolerance_exponent is not None else bits // 2 - 8
    with mp.workprec(2 * bits + GUARD_BITS):
        tol = mpf(2) ** (-tol_exp)
        res = residual_norm(sol.unknowns(), sol.shape, 2 * bits)
        if not res < tol:
            raise VerificationFailed("residual", f"|x^3 q g^2 - f h^2 - 1| = {mpmath.nstr(res, 5)}")
        beta = sol.beta
        if abs(beta.leading - 1) > tol or abs(sol.beta_minus_one.leading - 1) > tol:
            raise VerificationFailed("leading_coefficients")
        dbeta = beta.derivative()
        scale = max(mpf(1), beta.norm())
        crit_vals = []
        for r, m in poly_roots(dbeta, bits):
            v = beta(r)
            gap = min(abs(v), abs(v - 1))
            crit_vals.append(v)
            if gap > tol * scale:
                raise VerificationFailed("critical_values",
                                         f"beta({mpmath.nstr(r, 8)}) = {mpmath.nstr(v, 8)}")
        structure = Poly.monomial(2) * sol.g * sol.h
        quot, rem = dbeta.divmod(structure)
        if rem.norm() > tol * scale or quot.degree != 0 or abs(quot[0] - sol.N) > tol * sol.N:
            raise VerificationFailed("derivative_structure", "beta' != N x^2 g h")
    return {
        "residual_log2": float(mpmath.log(res, 2)) if res > 0 else -math.inf,
        "critical_values": sorted({0 if abs(v) < abs(v - 1) else 1 for v in crit_vals}),
        "derivative_factor": "N x^2 g h",
        "passed": True,
    }


# ---------------------------------------------------------------------------
# multistart driver
# ---------------------------------------------------------------------------


def _signatures(N: int) -> list[int]:
    out = []
    for s in range(4):
        try:
            system_shape(N, s)
        except ShapeError:
            continue
        out.append(s)
    return out


def _random_starts(rng: np.random.Generator, n: int, batch: int) -> np.ndarray:
    radius = 2.0 * np.sqrt(rng.random((batch, n)))
    return radius * np.exp(2j * np.pi * rng.random((batch, n)))


def _monic_coeffs(roots) -> np.ndarray:
    c = np.array([1.0 + 0j])
    for z in roots:
        c = np.convolve(c, [-z, 1.0])
    return c[:-1]


def _tree_starts(t: Tree, rng: np.random.Generator) -> np.ndarray:
    """Starting points drawn from a straight-line drawing of ``t``.

    Vertices sit on three rays at angles 0, 2pi/3, 4pi/3 (counterclockwise in
    branch order), at radius ``spacing * k**alpha`` for the k-th vertex, with a
    little jitter.  Colours alternate from the black centre.
    """
    rows = []
    for spacing in np.linspace(0.2, 1.2, 12):
        for alpha in (0.5, 0.65, 0.8, 1.0):
            roots = {"q": [], "g": [], "f": [], "h": []}
            for j, length in enumerate(t.branches):
                ray = cmath.exp(2j * math.pi * j / 3)
                for k in range(1, length + 1):
                    z = spacing * k ** alpha * ray
                    z += 0.05 * spacing * complex(*rng.normal(size=2))
                    leaf = k == length
                    if k % 2:
                        roots["f" if leaf else "h"].append(z)
                    else:
                        roots["q" if leaf else "g"].append(z)
            rows.append(np.concatenate([_monic_coeffs(roots[k]) for k in "qgfh"]))
    return np.array(rows, dtype=np.complex128)


def solve_all(N: int, cfg: SolveConfig | None = None) -> list[BelyiSolution]:
    """Every rescaling class of Shabat polynomials of degree ``N``, decoded to trees.

    Each round runs Newton from ``cfg.batch_size`` random coefficient vectors in
    the radius-2 disk plus starts shaped like each still-missing tree.

    Non-primitive trees met along the way are kept (their ``decoded_tree`` says so)
    but completeness only asks for the primitive ones.

    Raises :class:`Incomplete` (carrying the partial list) if some primitive tree is
    still missing after ``cfg.max_restarts`` rounds of random starts.
    """
    cfg = cfg or SolveConfig()
    if N < 3:
        raise ValueError("N must be at least 3")
    targets = set(enumerate_trees(N))
    every = set(all_trees(N))
    rng = np.random.default_rng(cfg.rng_seed)
    found: dict[Tree, BelyiSolution] = {}
    seen_float: dict[int, list[np.ndarray]] = {}
    diag = {"starts": 0, "converged": 0, "nonconvergence": 0, "polish_failures": 0,
            "decode_failures": 0, "duplicates": 0, "conflicting_classes": 0, "rounds": 0, "precision_escalations": 0}
    tol = 2.0 ** -cfg.newton_tolerance_exponent
    for _round in range(cfg.max_restarts):
        diag["rounds"] += 1
        for s in _signatures(N):
            wanted = {t for t in every if t.signature == s}
            if wanted <= set(found):
                continue
            shape = system_shape(N, s)
            n = shape.n_unknowns
            if n == 0:
                starts = np.zeros((1, 0), dtype=np.complex128)
            else:
                starts = [_random_starts(rng, n, cfg.batch_size)]
                starts += [_tree_starts(t, rng) for t in sorted(wanted - set(found))]
                starts = np.concatenate(starts)
            diag["starts"] += len(starts)
            U, done, _ = _kernels.newton_batch(starts, N, *shape.degrees,
                                               maxiter=cfg.newton_max_iters,
                                               use_numba=cfg.use_numba)
            diag["converged"] += int(done.sum())
            diag["nonconvergence"] += int((~done).sum())
            pool = seen_float.setdefault(s, [])
            for u in U[done]:
                orbit = _float_orbit(u, shape)
                if any(np.min(np.max(np.abs(orbit - v[None, :]), axis=1)) < 1e-6 for v in pool):
                    continue
                pool.append(u)
                sol = _certify_candidate(u, shape, cfg, tol, diag)
                if sol is None:
                    continue
                tree = sol.decoded_tree
                if tree in found:
                    threshold = mpf(2) ** (-(cfg.precision_bits // 8))
                    if rescaling_distance(sol, found[tree]) < threshold:
                        diag["duplicates"] += 1
                    else:
                        # two numerically distinct classes decoding to one tree
                        diag["conflicting_classes"] += 1
                        log.warning("N=%d: second solution class decodes to %s", N, tree)
                    continue
                if not tree.is_primitive:
                    log.info("N=%d: decoded non-primitive tree %s", N, tree)
                found[tree] = sol
                log.info("N=%d: decoded %s (residual 2^-%d)", N, tree, sol.residual_exponent())
        if targets <= set(found):
            break
    sols = [found[t] for t in sorted(found)]
    missing = sorted(targets - set(found))
    if missing:
        raise Incomplete(f"missing trees {[str(t) for t in missing]}", sols, missing, diag)
    solve_all.last_diagnostics = diag
    return sols


solve_all.last_diagnostics = {}


def _certify_candidate(u, shape: SystemShape, cfg: SolveConfig, tol: float, diag: dict):
    bits = cfg.precision_bits
    while True:
        mpu, res = polish(list(u), shape, bits)
        if res < mpf(2) ** -cfg.newton_tolerance_exponent:
            break
        if bits >= 8 * cfg.precision_bits:
            diag["polish_failures"] += 1
            return None
        bits *= 2
        diag["precision_escalations"] += 1
    sol = BelyiSolution.from_unknowns(mpu, shape, bits, residual=res)
    sol = canonical_representative(sol)
    try:
        tree = decode_tree(sol)
    except DecodeAmbiguous as exc:
        log.warning("decode failed: %s", exc)
        diag["decode_failures"] += 1
        return None
    return replace(sol, decoded_tree=tree)
