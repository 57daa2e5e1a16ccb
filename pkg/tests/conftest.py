import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qactivate.qstate import make_density, make_pure

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

SEEDS = dict(min_value=0, max_value=2**32 - 1)


def bell_vector(d=2):
    v = np.zeros(d * d, dtype=complex)
    v[[j * d + j for j in range(d)]] = 1 / np.sqrt(d)
    return v


@pytest.fixture
def bell():
    return make_pure(bell_vector(), (2, 2)).density()


@pytest.fixture
def mix2():
    plus = np.array([1, 1]) / np.sqrt(2)
    pp = np.kron(plus, plus)
    zz = np.zeros(4)
    zz[0] = 1
    return make_density(0.5 * (np.outer(zz, zz) + np.outer(pp, pp)), (2, 2))


def werner(p, d=2):
    v = bell_vector(d)
    return make_density((1 - p) * np.eye(d * d) / d**2 + p * np.outer(v, v.conj()), (d, d))
