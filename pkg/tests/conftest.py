import numpy as np
import pytest
from hypothesis import settings

from barlift.control import GainSet
from barlift.model import Params

settings.register_profile("barlift", max_examples=60, deadline=None)
settings.load_profile("barlift")


@pytest.fixture
def p():
    return Params()


@pytest.fixture
def gains():
    return GainSet()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, n=None):
    v = rng.normal(size=(3,) if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_tangent(rng, q, scale=1.0):
    w = scale * rng.normal(size=3)
    return w - np.dot(w, q) * q


def random_rotation(rng):
    Q, R = np.linalg.qr(rng.normal(size=(3, 3)))
    Q = Q * np.sign(np.diag(R))
    return Q if np.linalg.det(Q) > 0 else -Q


def random_full_state(rng, p):
    from barlift.model import FullState
    q_r = random_unit(rng)
    q = random_unit(rng, 2)
    return FullState(rng.normal(size=3), rng.normal(size=3), q_r, random_tangent(rng, q_r),
                     q, np.array([random_tangent(rng, q[i]) for i in range(2)]),
                     p.L_c + 0.05 * rng.normal(size=2) * p.epsilon, rng.normal(size=2) * 0.1,
                     np.stack([random_rotation(rng), random_rotation(rng)]), rng.normal(size=(2, 3)))


def random_reduced_state(rng, scale=1.0):
    from barlift.model import ReducedState
    q_r = random_unit(rng)
    q = random_unit(rng, 2)
    return ReducedState(scale * rng.normal(size=3), scale * rng.normal(size=3), q_r,
                        random_tangent(rng, q_r, scale), q,
                        np.array([random_tangent(rng, q[i], scale) for i in range(2)]))


# one summary line per acceptance criterion, echoed at the end of the session
CRITERIA_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
