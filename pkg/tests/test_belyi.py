import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from mpmath import mp, mpf

from lame_dessins import belyi
from lame_dessins.belyi import (
    BelyiSolution, SolveConfig, decode_tree, rescaling_distance, solve_all, system_shape,
    verify_solution,
)
from lame_dessins.errors import Incomplete, ShapeError, VerificationFailed
from lame_dessins.mpnum import Poly, recognize_algebraic
from lame_dessins.trees import Tree, enumerate_trees

from .conftest import pipeline


def test_shape_degrees():
    sh = system_shape(7, 2)
    assert sh.degrees == (2, 1, 1, 3)
    assert sh.n_unknowns == 7
    with pytest.raises(ShapeError):
        system_shape(7, 1)


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(precision_bits=32)


def test_degree_three_is_cube():
    (sol,) = pipeline(3).solutions
    assert sol.decoded_tree == Tree(1, 1, 1)
    with mp.workprec(280):
        coeffs = sol.beta.coeffs
        exact = [recognize_algebraic(c.real, 1, 20, 256) for c in coeffs]
    assert [a.as_fraction() for a in exact] == [0, 0, 0, 1]
    assert all(abs(c.imag) < mpf(2) ** -200 for c in coeffs)


@pytest.mark.parametrize("N", [3, 5, 7])
def test_census_complete_and_verified(N):
    sols = pipeline(N).solutions
    assert sorted(s.decoded_tree for s in sols if s.is_primitive) == enumerate_trees(N)
    for s in sols:
        assert s.residual_norm < mpf(2) ** -100
        rep = verify_solution(s)
        assert rep["passed"] and rep["derivative_factor"] == "N x^2 g h"
        assert set(rep["critical_values"]) <= {0, 1}


def test_degree_seven_real_trees_have_real_coefficients():
    for s in pipeline(7).solutions:
        imag = max(abs(c.imag) for c in s.unknowns())
        assert (imag < mpf(2) ** -150) == s.decoded_tree.is_real


def test_degree_six_finds_non_primitive_tree():
    sols = solve_all(6)
    labels = {s.decoded_tree.label(): s.is_primitive for s in sols}
    assert labels == {"[1,1,4]": True, "[1,2,3]": True, "[1,3,2]": True, "[2,2,2]": False}


def test_json_roundtrip():
    s = pipeline(7).solutions[1]
    back = BelyiSolution.from_json(s.to_json())
    assert back.decoded_tree == s.decoded_tree
    assert rescaling_distance(s, back) < mpf(2) ** -200


def test_verification_rejects_perturbed_solution():
    s = pipeline(5).solutions[0]
    with mp.workprec(300):
        u = s.unknowns()
        u[0] += mpf(2) ** -60
        bad = BelyiSolution.from_unknowns(u, s.shape, s.precision_bits, decoded_tree=s.decoded_tree)
    with pytest.raises(VerificationFailed) as exc:
        verify_solution(bad)
    assert exc.value.check == "residual"


def test_incomplete_reports_missing(monkeypatch):
    monkeypatch.setattr(belyi, "_tree_starts", lambda t, rng: np.zeros((0, system_shape(11, t.signature).n_unknowns)))
    with pytest.raises(Incomplete) as exc:
        solve_all(11, SolveConfig(max_restarts=1, batch_size=2))
    assert exc.value.missing


# ---------------------------------------------------------------------------
# property suites
# ---------------------------------------------------------------------------


def check_belyi_invariance(seed: int) -> bool:
    """Rescaling by an N-th root of unity keeps the tree; conjugation conjugates it."""
    rng = random.Random(seed)
    N = rng.choice([3, 5, 7])
    sols = pipeline(N).solutions
    s = sols[rng.randrange(len(sols))]
    k = rng.randrange(N)
    with mp.workprec(s.precision_bits + 24):
        r = s.rescaled(mpmath.expj(2 * mp.pi * k / N))
        ok = r.residual_norm < mpf(2) ** -100 if r.residual_norm is not None else True
        ok &= belyi.residual_norm(r.unknowns(), r.shape, r.precision_bits) < mpf(2) ** -100
        ok &= rescaling_distance(s, r) < mpf(2) ** -150
    ok &= decode_tree(r) == s.decoded_tree
    c = s.conjugate()
    with mp.workprec(s.precision_bits + 24):
        ok &= belyi.residual_norm(c.unknowns(), c.shape, c.precision_bits) < mpf(2) ** -100
    ok &= decode_tree(c) == s.decoded_tree.conjugate()
    return bool(ok)


@given(st.integers(min_value=0, max_value=10 ** 6))
def test_property_belyi_invariance(seed):
    assert check_belyi_invariance(seed)
