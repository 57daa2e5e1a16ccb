"""Quantumness measures induced by the activation protocol.

``req`` minimizes the dephasing entropy gain S(rho^B) - S(rho) over product
bases (equivalently the distillable entanglement of the protocol output);
``negativity_of_quantumness`` minimizes half the off-diagonal l1 mass of
rho^B (the output negativity). Optimizer results are upper bounds on the
true minimum; only grid-certified two-qubit values are tagged ``exact``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DimMismatch, NotClassical, NotTwoQubits
from .optimize import (
    OptimizerConfig,
    OptimizerReport,
    grid_certify_two_qubits,
    minimize,
)
from .protocol import _uniform_dims, coherence_sum
from .qstate import (
    DensityMatrix,
    ProductBasis,
    PureState,
    _reduce,
    _resolve_cut,
    dephase,
    in_basis,
    relative_entropy,
    shannon_entropy,
    von_neumann_entropy,
)

BoundKind = Literal["exact", "upper_bound"]


@dataclass
class QuantumnessEstimate:
    value: float
    best_basis: ProductBasis
    bound_kind: BoundKind
    optimizer_report: OptimizerReport
    measure: str = "req"

    def as_dict(self) -> dict:
        return {
            "measure": self.measure,
            "value": self.value,
            "bound_kind": self.bound_kind,
            "best_basis": [_matrix_to_pairs(u) for u in self.best_basis.locals],
            "diagnostics": self.optimizer_report.as_dict(),
        }


@dataclass
class ClassicalityVerdict:
    is_classical: bool
    certificate: ProductBasis | None
    method: Literal["spectral_certificate", "threshold_on_Q"]
    residual: float

    def as_dict(self) -> dict:
        return {
            "is_classical": self.is_classical,
            "method": self.method,
            "residual": self.residual,
            "certificate": None
            if self.certificate is None
            else [_matrix_to_pairs(u) for u in self.certificate.locals],
        }


def _matrix_to_pairs(u: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in u]


# ------------------------------------------------------------------ objectives


def _xlog2x(p: np.ndarray) -> np.ndarray:
    p = np.maximum(p, 1e-300)
    return p * np.log2(p)


class EntropyGain:
    """B -> S(rho^B) - S(rho)."""

    name = "req"

    def __init__(self, rho: DensityMatrix):
        self.rho = rho
        self.dims = rho.dims
        self.s_rho = von_neumann_entropy(rho)

    def evaluate(self, u: np.ndarray) -> float:
        p = np.real(np.sum((u @ self.rho.data) * u.conj(), axis=1))
        return float(shannon_entropy(p)) - self.s_rho

    def __call__(self, basis: ProductBasis) -> float:
        return self.evaluate(basis.unitary())

    def grid_values(self, ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
        """Objective for every pair (ua[a], ub[b]) of qubit unitaries."""
        r = self.rho.data
        k = r.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
        a = ua[:, 0, :]
        b = ub[:, 0, :]
        pa = (a[:, :, None] * a.conj()[:, None, :]).reshape(-1, 4)
        pb = (b[:, :, None] * b.conj()[:, None, :]).reshape(-1, 4)
        rho_a = _reduce(r, (2, 2), [0]).reshape(4)
        rho_b = _reduce(r, (2, 2), [1]).reshape(4)
        ma = np.real(pa @ rho_a)[:, None]
        mb = np.real(pb @ rho_b)[None, :]
        p00 = np.real(pa @ k @ pb.T)
        h = _xlog2x(p00)
        h += _xlog2x(ma - p00)
        h += _xlog2x(mb - p00)
        h += _xlog2x(1 - ma - mb + p00)
        return -h - self.s_rho


class CoherenceSum:
    """B -> (sum_{i != j} |rho^B_ij|) / 2."""

    name = "qneg"

    def __init__(self, rho: DensityMatrix):
        self.rho = rho
        self.dims = rho.dims

    def evaluate(self, u: np.ndarray) -> float:
        return coherence_sum(u @ self.rho.data @ u.conj().T) / 2

    def __call__(self, basis: ProductBasis) -> float:
        return self.evaluate(basis.unitary())

    def grid_values(self, ua: np.ndarray, ub: np.ndarray, chunk: int = 32) -> np.ndarray:
        r = self.rho.data.reshape(2, 2, 2, 2)
        w = np.einsum("bjy,blz->bjlyz", ub, ub.conj()).reshape(-1, 4)
        out = np.empty((len(ua), len(ub)))
        for lo in range(0, len(ua), chunk):
            u = ua[lo:lo + chunk]
            t = np.einsum("aix,xyzw,akz->aikyw", u, r, u.conj()).reshape(-1, 4)
            m = np.abs(t @ w.T).reshape(len(u), 2, 2, len(ub), 2, 2)
            total = m.sum(axis=(1, 2, 4, 5))
            diag = np.einsum("aiibjj->ab", m)
            out[lo:lo + chunk] = (total - diag) / 2
        return out


def marginal_eigenbasis(rho: DensityMatrix) -> ProductBasis:
    """Product of the eigenbases of the single-subsystem marginals."""
    locs = []
    for i in range(rho.n):
        _, v = np.linalg.eigh(_reduce(rho.data, rho.dims, [i]))
        locs.append(v.conj().T)
    return ProductBasis(tuple(locs))


def _estimate(objective, rho: DensityMatrix, cfg, grid: bool, starts) -> QuantumnessEstimate:
    if grid:
        if rho.dims != (2, 2):
            raise NotTwoQubits(f"grid certification needs two qubits, got dims {rho.dims}")
        basis, value = grid_certify_two_qubits(objective)
        report = OptimizerReport(restarts=0, evaluations=0, converged=True, best_restart=-1, method="grid")
        return QuantumnessEstimate(max(value, 0.0), basis, "exact", report, objective.name)
    if starts is None:
        starts = [marginal_eigenbasis(rho)]
    res = minimize(objective, rho.dims, cfg, starts=starts)
    return QuantumnessEstimate(max(res.value, 0.0), res.basis, "upper_bound", res.report, objective.name)


def req(
    rho: DensityMatrix,
    cfg: OptimizerConfig | None = None,
    grid: bool = False,
    starts: list[ProductBasis] | None = None,
) -> QuantumnessEstimate:
    """Relative entropy of quantumness, min_B S(rho^B) - S(rho), in bits.

    Restart 0 starts from the marginal eigenbasis, which guarantees the
    estimate never exceeds the mutual information for bipartite states.
    ``grid=True`` switches to the exhaustive two-qubit oracle.
    """
    return _estimate(EntropyGain(rho), rho, cfg, grid, starts)


def negativity_of_quantumness(
    rho: DensityMatrix,
    cfg: OptimizerConfig | None = None,
    grid: bool = False,
    starts: list[ProductBasis] | None = None,
) -> QuantumnessEstimate:
    return _estimate(CoherenceSum(rho), rho, cfg, grid, starts)


def entanglement_potential(
    rho: DensityMatrix,
    monotone: Literal["distillable_mc", "negativity"],
    cfg: OptimizerConfig | None = None,
    grid: bool = False,
) -> QuantumnessEstimate:
    """Minimum over adversary bases of an entanglement monotone on the output.

    Both supported monotones have closed forms on the maximally correlated
    output, so this reduces to :func:`req` or :func:`negativity_of_quantumness`.
    """
    _uniform_dims(rho)
    if monotone == "distillable_mc":
        return req(rho, cfg, grid)
    if monotone == "negativity":
        return negativity_of_quantumness(rho, cfg, grid)
    raise ValueError(f"unknown monotone {monotone!r}")


def req_closest_classical_gap(
    rho: DensityMatrix,
    sigma: DensityMatrix,
    certificate: ProductBasis | None = None,
    tol: float = 1e-6,
    cfg: OptimizerConfig | None = None,
) -> float:
    """S(rho || sigma) for a classical sigma; an upper bound on req(rho).

    ``certificate`` (a basis in which sigma is diagonal) skips the
    classicality search.
    """
    if rho.dims != sigma.dims:
        raise DimMismatch(f"dims differ: {rho.dims} vs {sigma.dims}")
    if certificate is not None:
        dev = np.abs(dephase(sigma, certificate).data - sigma.data).max()
        if dev > 1e-8:
            raise NotClassical(f"sigma is not diagonal in the given basis: deviation {dev:.3e}")
    else:
        verdict = is_classical(sigma, tol, cfg)
        if not verdict.is_classical:
            raise NotClassical(f"sigma failed classicality check ({verdict.method}, residual {verdict.residual:.3e})")
    return relative_entropy(rho, sigma)


# ------------------------------------------------------------------ classicality

_SPEC_GAP = 1e-8
_SCHMIDT_TOL = 1e-8
_GRAM_TOL = 1e-8


def _product_factors(v: np.ndarray, dims) -> list[np.ndarray] | None:
    factors = []
    rest = v
    for d in dims[:-1]:
        u, s, vh = np.linalg.svd(rest.reshape(d, -1), full_matrices=False)
        if len(s) > 1 and s[1:].max() > _SCHMIDT_TOL:
            return None
        factors.append(u[:, 0])
        rest = s[0] * vh[0]
    factors.append(rest / np.linalg.norm(rest))
    return factors


def _local_basis(vectors: list[np.ndarray], d: int) -> np.ndarray | None:
    reps: list[np.ndarray] = []
    for f in vectors:
        if not any(abs(np.vdot(r, f)) > 1 - _GRAM_TOL for r in reps):
            reps.append(f)
    if len(reps) > d:
        return None
    m = np.array(reps).T  # columns
    if np.abs(m.conj().T @ m - np.eye(len(reps))).max() > _GRAM_TOL:
        return None
    if len(reps) < d:
        q, _ = np.linalg.qr(np.hstack([m, np.eye(d)]))
        m = np.hstack([m, q[:, len(reps):d]])
    w, _, vh = np.linalg.svd(m)
    return (w @ vh).conj().T  # rows are bras


def _spectral_certificate(rho: DensityMatrix) -> ProductBasis | None:
    lam, vecs = np.linalg.eigh(rho.data)
    if np.diff(lam).min(initial=np.inf) <= _SPEC_GAP:
        return None
    per_sub: list[list[np.ndarray]] = [[] for _ in rho.dims]
    for k in range(rho.dim):
        fs = _product_factors(vecs[:, k], rho.dims)
        if fs is None:
            return None
        for i, f in enumerate(fs):
            per_sub[i].append(f)
    locs = []
    for i, d in enumerate(rho.dims):
        u = _local_basis(per_sub[i], d)
        if u is None:
            return None
        locs.append(u)
    return ProductBasis(tuple(locs))


def is_classical(rho: DensityMatrix, tol: float = 1e-6, cfg: OptimizerConfig | None = None) -> ClassicalityVerdict:
    """Decide strict classicality.

    Nondegenerate spectrum: every eigenvector must factor into local
    vectors that form orthonormal sets per subsystem; the assembled basis is
    returned as a certificate. Degenerate spectrum (or a failed
    factorization): threshold ``req(rho) < tol``, no certificate.
    """
    cert = _spectral_certificate(rho)
    if cert is not None:
        off = in_basis(rho, cert)
        residual = float(np.abs(off - np.diag(np.diag(off))).max())
        dev = np.abs(dephase(rho, cert).data - rho.data).max()
        if dev <= 1e-8:
            return ClassicalityVerdict(True, cert, "spectral_certificate", residual)
    est = req(rho, cfg)
    return ClassicalityVerdict(est.value < tol, None, "threshold_on_Q", est.value)


def entropy_of_entanglement(psi: PureState, cut=None) -> float:
    """S(Tr_Y |psi><psi|) from the Schmidt coefficients across ``cut``."""
    x, y = _resolve_cut(cut, len(psi.dims))
    t = psi.amplitudes.reshape(psi.dims).transpose(x + y)
    dx = math.prod(psi.dims[i] for i in x)
    s = np.linalg.svd(t.reshape(dx, -1), compute_uv=False)
    return max(float(shannon_entropy(s ** 2)), 0.0)
