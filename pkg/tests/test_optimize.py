import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qactivate.errors import LengthMismatch, NotTwoQubits, OptimizerBudgetExhausted
from qactivate.optimize import (
    OptimizerConfig,
    decode,
    grid_certify_two_qubits,
    hermitian_generators,
    minimize,
    qubit_axis_unitaries,
)
from qactivate.qstate import ProductBasis, dephase, make_density, von_neumann_entropy
from qactivate.quantumness import CoherenceSum, EntropyGain
from qactivate.rand import RngStream, haar_unitary, random_classical, random_density

from conftest import SEEDS

FAST = OptimizerConfig(restarts=6)

# Reference value of the REQ of (|00><00| + |++><++|)/2 from the two-qubit
# grid oracle at the default resolution; frozen as a regression fixture.
MIX2_REQ_GRID = 0.3904739489265787


def plain(objective):
    """Strip the fast paths so the generic code is exercised."""
    return lambda basis: objective(basis)


# ---------------------------------------------------------------- config


@pytest.mark.parametrize(
    "kwargs",
    [dict(restarts=0), dict(max_evals_per_restart=0), dict(objective_tol=0.0), dict(initial_step=-1.0), dict(workers=0)],
)
def test_config_invariants(kwargs):
    with pytest.raises(ValueError):
        OptimizerConfig(**kwargs)


def test_config_defaults():
    cfg = OptimizerConfig()
    assert (cfg.restarts, cfg.max_evals_per_restart, cfg.objective_tol, cfg.initial_step) == (20, 5000, 1e-8, 0.3)


# ---------------------------------------------------------------- generators / decode


@pytest.mark.parametrize("d", [2, 3, 4])
def test_generators_orthonormal(d):
    g = hermitian_generators(d)
    assert g.shape == (d * d, d, d)
    np.testing.assert_allclose(g, np.conj(np.swapaxes(g, 1, 2)))
    gram = np.einsum("aij,bji->ab", g, g)
    np.testing.assert_allclose(gram, np.eye(d * d), atol=1e-12)


def test_generators_qubit_paulis():
    g = hermitian_generators(2) * math.sqrt(2)
    np.testing.assert_allclose(g[2], [[0, -1j], [1j, 0]])


def test_decode_zero_identity():
    b = decode(np.zeros(13), (2, 3))
    for u, d in zip(b.locals, (2, 3)):
        np.testing.assert_allclose(u, np.eye(d), atol=1e-15)


def test_decode_length():
    with pytest.raises(LengthMismatch):
        decode(np.zeros(5), (2,))


def test_decode_y_rotation_is_hadamard_like():
    params = np.zeros(4)
    params[2] = math.pi / 4 * math.sqrt(2)  # H = (pi/4) Y
    b = decode(params, (2,))
    plus = np.array([1, 1]) / math.sqrt(2)
    out = dephase(make_density(np.outer(plus, plus)), b)
    assert von_neumann_entropy(out) == pytest.approx(0, abs=1e-12)


@given(st.lists(st.floats(-10, 10), min_size=13, max_size=13))
def test_decode_unitary(params):
    b = decode(params, (3, 2))
    for u in b.locals:
        assert np.abs(u @ u.conj().T - np.eye(len(u))).max() < 1e-10


# ---------------------------------------------------------------- minimize


def test_classical_eigenbasis_start_is_optimal():
    rho, _, us = random_classical((2, 3), RngStream(1).generator())
    start = ProductBasis(tuple(us))
    res = minimize(EntropyGain(rho), rho.dims, FAST, starts=[start])
    assert res.value < 1e-10
    assert res.report.best_restart == 0


def test_bell_req(bell):
    res = minimize(EntropyGain(bell), (2, 2), OptimizerConfig(restarts=8))
    assert res.value == pytest.approx(1.0, abs=1e-4)
    assert res.report.converged


@given(st.integers(**SEEDS))
def test_never_worse_than_identity_start(seed):
    rho = random_density((2, 2), RngStream(seed).generator())
    obj = EntropyGain(rho)
    ident = ProductBasis.identity((2, 2))
    res = minimize(obj, (2, 2), OptimizerConfig(restarts=1, max_evals_per_restart=200), starts=[ident])
    assert res.value <= obj(ident) + 1e-12


def test_reproducible_across_workers(mix2):
    cfg = OptimizerConfig(restarts=6, seed=42)
    a = minimize(EntropyGain(mix2), (2, 2), cfg)
    b = minimize(EntropyGain(mix2), (2, 2), OptimizerConfig(restarts=6, seed=42, workers=4))
    assert a.value == b.value
    assert a.report.best_restart == b.report.best_restart
    for x, y in zip(a.basis.locals, b.basis.locals):
        np.testing.assert_array_equal(x, y)


def test_generic_callable_matches_fast_path(mix2):
    cfg = OptimizerConfig(restarts=2, seed=3, max_evals_per_restart=300)
    a = minimize(EntropyGain(mix2), (2, 2), cfg)
    b = minimize(plain(EntropyGain(mix2)), (2, 2), cfg)
    assert a.value == pytest.approx(b.value, abs=1e-12)


def test_budget_exhaustion(mix2):
    cfg = OptimizerConfig(restarts=2, max_evals_per_restart=10)
    res = minimize(EntropyGain(mix2), (2, 2), cfg)
    assert not res.report.converged
    with pytest.raises(OptimizerBudgetExhausted) as info:
        minimize(EntropyGain(mix2), (2, 2), cfg, strict=True)
    assert info.value.result.value == res.value


def test_restart_count_and_values(mix2):
    res = minimize(EntropyGain(mix2), (2, 2), OptimizerConfig(restarts=3, max_evals_per_restart=50))
    assert res.report.restarts == 3 and len(res.report.restart_values) == 3
    assert res.value == min(res.report.restart_values)


# ---------------------------------------------------------------- grid oracle


def test_axis_unitaries():
    u = qubit_axis_unitaries(np.array([0.3, 1.2]), np.array([2.0, 5.0]))
    for x in u:
        np.testing.assert_allclose(x @ x.conj().T, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(qubit_axis_unitaries(0.0, 0.0), np.eye(2))


def test_grid_rejects_non_qubits():
    with pytest.raises(NotTwoQubits):
        grid_certify_two_qubits(lambda b: 0.0, dims=(2, 3))


def test_grid_bell(bell):
    _, v = grid_certify_two_qubits(EntropyGain(bell))
    assert v == pytest.approx(1.0, abs=2e-3)


def test_grid_classical_diag():
    rho = make_density(np.diag([0.4, 0.3, 0.2, 0.1]), (2, 2))
    basis, v = grid_certify_two_qubits(EntropyGain(rho))
    assert v < 1e-12
    assert abs(v - EntropyGain(rho)(basis)) < 1e-12


def test_grid_mix2_fixture(mix2):
    _, v = grid_certify_two_qubits(EntropyGain(mix2))
    assert v == pytest.approx(MIX2_REQ_GRID, abs=1e-12)


@pytest.mark.parametrize("objective", [EntropyGain, CoherenceSum])
def test_grid_fast_path_matches_generic(objective, mix2):
    obj = objective(mix2)
    b1, v1 = grid_certify_two_qubits(obj, resolution=30.0, refine_resolution=15.0)
    b2, v2 = grid_certify_two_qubits(plain(obj), resolution=30.0, refine_resolution=15.0)
    assert v1 == pytest.approx(v2, abs=1e-10)
    assert obj(b1) == pytest.approx(v1, abs=1e-10)


@pytest.mark.slow
def test_optimizer_matches_grid():
    g = RngStream(2024).generator()
    for _ in range(25):
        rho = random_density((2, 2), g)
        obj = EntropyGain(rho)
        _, gv = grid_certify_two_qubits(obj)
        mv = minimize(obj, (2, 2), FAST).value
        assert abs(mv - gv) <= 2e-3


# ---------------------------------------------------------------- decode redundancy


@given(st.integers(**SEEDS), st.sampled_from([EntropyGain, CoherenceSum]))
def test_phase_and_relabel_invariance(seed, objective):
    g = RngStream(seed).generator()
    rho = random_density((2, 3), g)
    basis = ProductBasis((haar_unitary(2, g), haar_unitary(3, g)))
    obj = objective(rho)
    phases = [np.diag(np.exp(1j * g.uniform(0, 2 * np.pi, d))) for d in (2, 3)]
    perms = [np.eye(d)[g.permutation(d)] for d in (2, 3)]
    twisted = ProductBasis(tuple(p @ ph @ u for p, ph, u in zip(perms, phases, basis.locals)))
    assert obj(twisted) == pytest.approx(obj(basis), abs=1e-10)
