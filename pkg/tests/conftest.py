from __future__ import annotations

from functools import cached_property

import pytest
from hypothesis import settings

settings.register_profile("seeded", derandomize=True, deadline=None, max_examples=50,
                          print_blob=True)
settings.load_profile("seeded")


class Pipeline:
    """Lazily computed results for one degree, shared by every test module."""

    def __init__(self, N: int):
        self.N = N

    @cached_property
    def solutions(self):
        from lame_dessins.belyi import solve_all

        return solve_all(self.N)

    @cached_property
    def models(self):
        from lame_dessins.curves import model_from_solution

        return {s.decoded_tree.label(): model_from_solution(s)
                for s in self.solutions if s.is_primitive}

    @cached_property
    def orbits(self):
        from lame_dessins.curves import galois_orbits

        return galois_orbits(list(self.models.values()), self.N)

    def field_of(self, label):
        for o in self.orbits.orbits:
            if any(t.label() == label for t in o.trees):
                return o.moduli
        raise KeyError(label)

    @cached_property
    def certificates(self):
        from lame_dessins.monodromy import LameODE, certify_dihedral

        return {k: certify_dihedral(LameODE.from_model(m), self.N) for k, m in self.models.items()}


_PIPELINES: dict[int, Pipeline] = {}


def pipeline(N: int) -> Pipeline:
    if N not in _PIPELINES:
        _PIPELINES[N] = Pipeline(N)
    return _PIPELINES[N]


@pytest.fixture(scope="session")
def p7():
    return pipeline(7)


@pytest.fixture(scope="session")
def p3():
    return pipeline(3)


@pytest.fixture(scope="session")
def p5():
    return pipeline(5)


# acceptance criteria report one line each at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
