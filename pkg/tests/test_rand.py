import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qactivate.errors import BadDimension
from qactivate.qstate import make_density, mutual_information, partial_trace, von_neumann_entropy
from qactivate.protocol import negativity
from qactivate.rand import (
    EnsembleSpec,
    RngStream,
    default_m,
    haar_pure_state,
    haar_unitary,
    random_classical,
    random_lowrank_thm3,
    random_separable_thm2,
)

from conftest import SEEDS


def revalidate(rho):
    return make_density(np.array(rho.data), rho.dims)


# ---------------------------------------------------------------- streams


def test_stream_determinism():
    a = RngStream(7, 3).generator().standard_normal(5)
    b = RngStream(7, 3).generator().standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_streams_distinct():
    a = RngStream(7, 3).generator().standard_normal(5)
    b = RngStream(7, 4).generator().standard_normal(5)
    c = RngStream(8, 3).generator().standard_normal(5)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)


def test_stream_frozen_draws():
    # regression fixture: Philox output is platform independent
    assert RngStream(0, 0).generator().integers(0, 2**32, size=3).tolist() == [149215387, 49592932, 2628306354]
    assert RngStream(12345, 6).generator().standard_normal() == -1.0584326821036325


def test_child_streams_distinct():
    s = RngStream(5, 1)
    assert s.child(0) != s.child(1)
    assert s.child(0) == RngStream(5, 1).child(0)


# ---------------------------------------------------------------- default_m


@pytest.mark.parametrize("d, m", [(2, 1), (4, 16), (3, 7), (8, 81)])
def test_default_m(d, m):
    assert default_m(d) == m


def test_default_m_bad():
    with pytest.raises(BadDimension):
        default_m(1)


# ---------------------------------------------------------------- Haar


def test_haar_d1_phase():
    u = haar_unitary(1, RngStream(1).generator())
    assert u.shape == (1, 1) and abs(abs(u[0, 0]) - 1) < 1e-12


@given(st.integers(**SEEDS), st.integers(1, 6))
def test_haar_unitary(seed, d):
    u = haar_unitary(d, RngStream(seed).generator())
    assert np.abs(u @ u.conj().T - np.eye(d)).max() < 1e-10


def _moments(sampler, d, n, seed, v=None):
    g = RngStream(seed).generator()
    u00 = np.empty(n)
    tr = np.empty(n)
    for k in range(n):
        u = sampler(d, g)
        if v is not None:
            u = v @ u
        u00[k] = abs(u[0, 0]) ** 2
        tr[k] = abs(np.trace(u)) ** 2
    return u00, tr


def test_haar_u00_d2():
    u00, _ = _moments(haar_unitary, 2, 20000, 11)
    assert abs(u00.mean() - 0.5) < 0.02


def test_haar_trace_d3():
    _, tr = _moments(haar_unitary, 3, 20000, 12)
    assert abs(tr.mean() - 1.0) < 0.05


def test_haar_left_invariance():
    v = haar_unitary(3, RngStream(99).generator())
    _, a = _moments(haar_unitary, 3, 20000, 13)
    _, b = _moments(haar_unitary, 3, 20000, 14, v=v)
    se = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    assert abs(a.mean() - b.mean()) < 3 * se


@given(st.integers(**SEEDS), st.sampled_from([(2,), (2, 2), (3, 2, 2)]))
def test_haar_pure_state_norm(seed, dims):
    psi = haar_pure_state(dims, RngStream(seed).generator())
    assert abs(np.linalg.norm(psi.amplitudes) - 1) < 1e-12
    assert psi.dims == tuple(dims)


def test_haar_pure_state_moment():
    g = RngStream(21).generator()
    vals = [abs(haar_pure_state((4,), g).amplitudes[0]) ** 2 for _ in range(20000)]
    assert abs(np.mean(vals) - 0.25) < 0.02


def test_haar_pure_state_streams_differ():
    a = haar_pure_state((2, 2), RngStream(1, 0))
    b = haar_pure_state((2, 2), RngStream(1, 1))
    assert not np.allclose(a.amplitudes, b.amplitudes)


# ---------------------------------------------------------------- random separable ensemble


@given(st.integers(**SEEDS), st.integers(2, 4), st.integers(1, 5))
def test_separable_ensemble(seed, d, m):
    sigma = random_separable_thm2(d, m, RngStream(seed).generator())
    revalidate(sigma)
    assert sigma.dims == (d, d)
    assert von_neumann_entropy(sigma) <= math.log2(d) + math.log2(m) + 1e-9
    np.testing.assert_allclose(partial_trace(sigma, [0]).data, np.eye(d) / d, atol=1e-10)
    assert negativity(sigma) < 1e-9
    assert np.linalg.matrix_rank(sigma.data, tol=1e-10) <= d * m


def test_separable_ensemble_bad():
    with pytest.raises(BadDimension):
        random_separable_thm2(1, 1, RngStream(0))
    with pytest.raises(BadDimension):
        random_separable_thm2(2, 0, RngStream(0))


# ---------------------------------------------------------------- random low-rank ensemble


@given(st.integers(**SEEDS), st.integers(2, 4), st.integers(1, 6))
def test_lowrank_ensemble(seed, d, m):
    rho = random_lowrank_thm3(d, m, RngStream(seed).generator())
    revalidate(rho)
    lam = np.linalg.eigvalsh(rho.data)
    assert (lam > 1e-10).sum() <= m
    assert von_neumann_entropy(rho) <= math.log2(m) + 1e-9


def test_lowrank_m1_pure():
    rho = random_lowrank_thm3(3, 1, RngStream(4))
    assert von_neumann_entropy(rho) == pytest.approx(0, abs=1e-9)


def test_lowrank_d2_m2_entropy():
    g = RngStream(8).generator()
    assert all(von_neumann_entropy(random_lowrank_thm3(2, 2, g)) <= 1 + 1e-9 for _ in range(100))


def test_lowrank_bad():
    with pytest.raises(BadDimension):
        random_lowrank_thm3(2, 0, RngStream(0))


# ---------------------------------------------------------------- ensembles


def test_ensemble_spec_defaults():
    spec = EnsembleSpec("separable_thm2", 4)
    assert spec.m == 16 and spec.samples == 1


@pytest.mark.parametrize("kwargs", [dict(kind="bogus", d=2), dict(kind="lowrank_thm3", d=1), dict(kind="lowrank_thm3", d=2, m=0), dict(kind="lowrank_thm3", d=2, samples=0)])
def test_ensemble_spec_invalid(kwargs):
    with pytest.raises(ValueError):
        EnsembleSpec(**kwargs)


@pytest.mark.parametrize("kind", ["separable_thm2", "lowrank_thm3"])
def test_ensemble_determinism(kind):
    a = EnsembleSpec(kind, 3, 2, samples=3, seed=5)
    b = EnsembleSpec(kind, 3, 2, samples=3, seed=5)
    for i in range(3):
        np.testing.assert_array_equal(a.sample(i).data, b.sample(i).data)
    assert not np.array_equal(a.sample(0).data, a.sample(1).data)


@given(st.integers(**SEEDS), st.sampled_from([(2, 2), (2, 3), (3, 3)]))
def test_random_classical(seed, dims):
    rho, p, us = random_classical(dims, RngStream(seed).generator())
    revalidate(rho)
    u = us[0]
    for v in us[1:]:
        u = np.kron(u, v)
    np.testing.assert_allclose(u @ rho.data @ u.conj().T, np.diag(p), atol=1e-12)
    assert mutual_information(rho) >= 0
