"""Activation protocol: local rotations, then qudit CNOTs onto |0> ancillas.

Output subsystem order is grouped: system qudits ``A_1..A_n`` first, then
ancillas ``A'_1..A'_n``, so the system:ancilla cut is the contiguous split
``(range(n), range(n, 2n))``. The gate-level simulation builds the CNOT
layer in the interleaved order ``A_1 A'_1 A_2 A'_2 ...`` and converts with
:func:`interleaved_to_grouped`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import BadDimension, DimMismatch, NonUniformDims
from .qstate import (
    DensityMatrix,
    ProductBasis,
    _check_basis,
    _freeze,
    _resolve_cut,
    dephase,
    in_basis,
    partial_transpose,
    shannon_entropy,
    trace_norm,
    von_neumann_entropy,
)


@dataclass(frozen=True, eq=False)
class ActivationOutcome:
    final_state: DensityMatrix
    adversary: ProductBasis
    dephased_input: DensityMatrix
    e_distillable: float
    negativity_value: float


def qudit_cnot(d: int) -> np.ndarray:
    """C|j>|j'> = |j>|j' + j mod d>; control is the first factor."""
    if d < 2:
        raise BadDimension(f"qudit dimension must be >= 2, got {d}")
    c = np.zeros((d * d, d * d))
    for j in range(d):
        for jp in range(d):
            c[j * d + (jp + j) % d, j * d + jp] = 1.0
    return c


def _uniform_dims(rho: DensityMatrix) -> int:
    if len(set(rho.dims)) != 1:
        raise NonUniformDims(f"protocol needs qudits of a common dimension, got dims {rho.dims}")
    return rho.dims[0]


def interleaved_to_grouped(n: int, d: int) -> np.ndarray:
    """Permutation matrix P with P |a1 a'1 ... an a'n> = |a1..an a'1..a'n>."""
    dims = (d,) * (2 * n)
    size = d ** (2 * n)
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    idx = np.arange(size).reshape(dims).transpose(order).ravel()
    p = np.zeros((size, size))
    p[np.arange(size), idx] = 1.0
    return p


def simulate_gates(rho: DensityMatrix, adversary: ProductBasis) -> DensityMatrix:
    """Explicit V (rho (x) |0..0><0..0|) V^dagger, gate by gate.

    Cost grows as d^(4n); meant as a cross-check for small systems.
    """
    d = _uniform_dims(rho)
    _check_basis(rho.dims, adversary)
    n = rho.n
    zero = np.zeros((d ** n, d ** n))
    zero[0, 0] = 1.0
    initial = np.kron(rho.data, zero)  # grouped order
    u_sys = np.kron(adversary.unitary(), np.eye(d ** n))
    p = interleaved_to_grouped(n, d)
    c_layer = p @ reduce(np.kron, [qudit_cnot(d)] * n) @ p.T
    v = c_layer @ u_sys
    out = v @ initial @ v.conj().T
    return DensityMatrix(_freeze(out), rho.dims + rho.dims)


def maximally_correlated_form(rho: DensityMatrix, basis: ProductBasis) -> DensityMatrix:
    """sum_{k,l} rho^B_{kl} |k><l| (x) |k><l| built from matrix elements directly."""
    _uniform_dims(rho)
    rb = in_basis(rho, basis)
    dim = rho.dim
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    idx = np.arange(dim) * (dim + 1)
    out[np.ix_(idx, idx)] = rb
    return DensityMatrix(_freeze(out), rho.dims + rho.dims)


def distillable_entanglement_mc(rho: DensityMatrix, basis: ProductBasis) -> float:
    """S(rho^B) - S(rho): distillable entanglement of the protocol output."""
    _check_basis(rho.dims, basis)
    u = basis.unitary()
    p = np.real(np.einsum("ki,ij,kj->k", u, rho.data, u.conj()))
    return max(float(shannon_entropy(p)) - von_neumann_entropy(rho), 0.0)


def negativity(rho: DensityMatrix, cut=None) -> float:
    """(||rho^{T_X}||_1 - 1) / 2 across ``cut = (X, Y)``."""
    x, _ = _resolve_cut(cut, rho.n)
    return max((trace_norm(partial_transpose(rho, x).data) - 1) / 2, 0.0)


def coherence_sum(m: np.ndarray) -> float:
    """Sum of absolute off-diagonal entries."""
    a = np.abs(m)
    return float(a.sum() - np.trace(a))


def negativity_mc_closed_form(rho: DensityMatrix, basis: ProductBasis) -> float:
    """Half the off-diagonal l1 mass of rho in basis B (negativity of the output)."""
    return coherence_sum(in_basis(rho, basis)) / 2


def run_activation(rho: DensityMatrix, adversary: ProductBasis) -> ActivationOutcome:
    """Run the protocol; the final state comes from the maximally correlated form."""
    _uniform_dims(rho)
    if tuple(adversary.dims) != rho.dims:
        raise DimMismatch(f"adversary dims {adversary.dims} do not match state dims {rho.dims}")
    final = maximally_correlated_form(rho, adversary)
    return ActivationOutcome(
        final_state=final,
        adversary=adversary,
        dephased_input=dephase(rho, adversary),
        e_distillable=distillable_entanglement_mc(rho, adversary),
        negativity_value=negativity_mc_closed_form(rho, adversary),
    )


def output_cut(n: int) -> tuple[range, range]:
    """System:ancilla cut of an n-qudit protocol output."""
    return range(n), range(n, 2 * n)


def is_maximally_correlated(state: DensityMatrix, atol: float = 1e-10) -> bool:
    """True when <k,k'|state|l,l'> vanishes unless k = k' and l = l'."""
    dim = int(round(math.sqrt(state.dim)))
    t = state.data.reshape(dim, dim, dim, dim)
    mask = np.zeros((dim, dim, dim, dim), dtype=bool)
    diag = np.arange(dim)
    mask[diag[:, None], diag[:, None], diag[None, :], diag[None, :]] = True
    return bool(np.abs(t[~mask]).max(initial=0.0) <= atol)
