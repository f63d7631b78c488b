"""Three-branch plane trees ``[a, b, c]`` and the closed-form predictions attached to them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from sympy import isprime

from .errors import NotApplicable


@dataclass(frozen=True, order=True)
class Tree:
    """Tree with a black centre of valency 3 and branches of ``a, b, c`` edges.

    Branch lengths are read counterclockwise around the centre, so ``[a, b, c]``
    equals its cyclic rotations but not, in general, ``[a, c, b]``.
    """

    a: int
    b: int
    c: int

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 1:
            raise ValueError(f"branch lengths must be positive: {self.branches}")

    @classmethod
    def canonical(cls, a: int, b: int, c: int) -> "Tree":
        return cls(*min((a, b, c), (b, c, a), (c, a, b)))

    @property
    def branches(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    @property
    def degree(self) -> int:
        return self.a + self.b + self.c

    @property
    def is_canonical(self) -> bool:
        return self == Tree.canonical(*self.branches)

    @property
    def signature(self) -> int:
        # a branch of even length ends on a black leaf (colours alternate from the black centre)
        return sum(1 for x in self.branches if x % 2 == 0)

    @property
    def order(self) -> int:
        return self.degree // math.gcd(self.a, self.b, self.c)

    @property
    def is_primitive(self) -> bool:
        return self.order == self.degree

    @property
    def is_real(self) -> bool:
        return self.a == self.b or self.b == self.c or self.a == self.c

    def conjugate(self) -> "Tree":
        """Mirror image, i.e. the tree of the complex-conjugate Belyi map."""
        return Tree.canonical(self.a, self.c, self.b)

    def label(self) -> str:
        return f"[{self.a},{self.b},{self.c}]"

    def __str__(self):
        return self.label()

    @classmethod
    def parse(cls, text: str) -> "Tree":
        parts = [int(t) for t in text.strip().strip("[]").split(",")]
        if len(parts) != 3:
            raise ValueError(f"cannot parse tree {text!r}")
        return cls.canonical(*parts)


@dataclass(frozen=True)
class TreeInvariants:
    degree: int
    signature: int
    order: int
    is_real: bool
    conjugate: Tree


def all_trees(N: int) -> list[Tree]:
    """Every canonical tree of degree ``N``, primitive or not."""
    if N < 3:
        return []
    seen = set()
    for a in range(1, N - 1):
        for b in range(1, N - a):
            seen.add(Tree.canonical(a, b, N - a - b))
    return sorted(seen)


@lru_cache(maxsize=None)
def _enumerate(N: int) -> tuple[Tree, ...]:
    return tuple(t for t in all_trees(N) if t.is_primitive)


def enumerate_trees(N: int) -> list[Tree]:
    """Canonical primitive trees of degree ``N``, sorted lexicographically."""
    if N < 3:
        raise ValueError("trees [a,b,c] have degree at least 3")
    return list(_enumerate(N))


def tree_invariants(t: Tree) -> TreeInvariants:
    if not t.is_canonical:
        raise ValueError(f"{t} is not in canonical form")
    return TreeInvariants(t.degree, t.signature, t.order, t.is_real, t.conjugate())


def _check_prime(p: int):
    if p <= 3 or not isprime(p):
        raise NotApplicable(f"expected a prime p > 3, got {p}")


def count_classes(p: int) -> tuple[int, int, int]:
    """Closed-form census (total, signature 0, signature 2) for prime degree ``p > 3``."""
    _check_prime(p)
    total = (p - 1) * (p - 2) // 6
    sig0 = (p * p - 1) // 24
    sig2 = (p - 1) * (p - 3) // 8
    assert total == sig0 + sig2
    return total, sig0, sig2


class JClass(str, Enum):
    GENERIC = "generic"
    J_ZERO = "j_zero"
    J_1728 = "j_1728"


@dataclass(frozen=True)
class PredictionRecord:
    p: int
    s: int
    e: int
    supersingular: bool
    torsion_order: int
    full_monodromy_order: int
    good_reduction_modulus: int
    n: int

    def good_reduction_predicted(self, e_p: int) -> bool:
        """Whether good reduction is predicted at a prime of ramification index ``e_p``."""
        return e_p % self.good_reduction_modulus == 0

    def to_json(self) -> dict:
        return {
            "p": self.p, "signature": self.s, "e": self.e,
            "supersingular": self.supersingular,
            "torsion_order": self.torsion_order,
            "full_monodromy_order": self.full_monodromy_order,
            "good_reduction_modulus": self.good_reduction_modulus,
            "automorphism_factor": self.n,
        }


def ramification_bound(p: int, s: int) -> int:
    """Divisor ``e`` of the ramification index above ``p`` for signature ``s``."""
    num = p + 1 - s
    return num // math.gcd(num, 4 * (3 - s))


def predict(p: int, s: int, j_class: JClass | str = JClass.GENERIC) -> PredictionRecord:
    _check_prime(p)
    if s not in (0, 2):
        raise ValueError(f"signature must be 0 or 2 for prime degree, got {s}")
    j_class = JClass(j_class)
    n = {JClass.J_ZERO: 3, JClass.J_1728: 2}.get(j_class, 1)
    torsion = p if s == 0 else 2 * p
    num = p + 1 - s
    m = 2 * n
    # m need not divide p+1-s when j is 0 or 1728: reduce to the numerator of the fraction
    modulus = num // math.gcd(num, m)
    return PredictionRecord(
        p=p, s=s, e=ramification_bound(p, s), supersingular=(s == 0),
        torsion_order=torsion, full_monodromy_order=2 * torsion,
        good_reduction_modulus=modulus, n=n,
    )


def unramified_good_reduction_bound(N: int, p: int) -> bool:
    """Primes above ``p > N`` are unramified in the field of moduli and give good reduction."""
    return p > N


# p mod 12 residues, signature, and the closed form of e as (numerator offset, denominator)
RAMIFICATION_TABLE = (
    ((1, 9), 0, (1, 2)),
    ((1, 5, 9), 2, (-1, 4)),
    ((3, 7), 0, (1, 4)),
    ((3, 7, 11), 2, (-1, 2)),
    ((5,), 0, (1, 6)),
    ((11,), 0, (1, 12)),
)


def table_entry(p: int, s: int) -> int:
    """Value of ``e`` read off the residue-class table (independent of :func:`ramification_bound`)."""
    for residues, sig, (off, den) in RAMIFICATION_TABLE:
        if sig == s and p % 12 in residues:
            return (p + off) // den
    raise KeyError((p, s))


def table_row_label(residues, s, off, den) -> str:
    sign = "+" if off > 0 else "-"
    return f"p mod 12 in {{{','.join(map(str, residues))}}}, s={s}: e=(p{sign}1)/{den}"


def qualifying_primes(residues, count: int = 3, start: int = 5) -> list[int]:
    out = []
    p = start
    while len(out) < count:
        if isprime(p) and p % 12 in residues:
            out.append(p)
        p += 1
    return out
