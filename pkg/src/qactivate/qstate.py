"""Finite-dimensional quantum states: construction, reduction, entropies.

Conventions:
    * Subsystems are ordered; the joint space uses the row-major Kronecker
      layout, so index ``(k_1, ..., k_n)`` maps to
      ``np.ravel_multi_index(k, dims)``.
    * All logarithms are base 2; entropies are in bits.
    * A :class:`ProductBasis` stores one unitary per subsystem. Row ``k`` of
      local unitary ``U_i`` is the bra of basis vector ``k``, i.e. the basis
      kets are the columns of ``U_i^dagger``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import (
    BadCut,
    BadSubsystemIndex,
    DimMismatch,
    NotHermitian,
    NotNormalized,
    NotPSD,
    NotUnitary,
    StateFormatError,
    TraceNotOne,
)

ATOL = 1e-10
# weight of rho outside supp(sigma) that makes S(rho||sigma) infinite
SUPPORT_LEAK_TOL = 1e-8


def _as_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise DimMismatch("dims must be nonempty")
    if any(d < 2 for d in dims):
        raise DimMismatch(f"every subsystem dimension must be >= 2, got {dims}")
    return dims


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density operator with its subsystem dimensions.

    Build instances through :func:`make_density`; the constructor itself
    does not validate.
    """

    data: np.ndarray
    dims: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return len(self.dims)

    def __repr__(self) -> str:
        return f"DensityMatrix(dims={self.dims})"


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def density(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix(_freeze(np.outer(v, v.conj())), self.dims)


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Hermitian matrix tagged with subsystem dimensions, not necessarily PSD."""

    data: np.ndarray
    dims: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class ProductBasis:
    """One local unitary per subsystem; see the module docstring for the convention."""

    locals: tuple[np.ndarray, ...]

    def __post_init__(self):
        frozen = []
        for i, u in enumerate(self.locals):
            u = np.asarray(u, dtype=complex)
            if u.ndim != 2 or u.shape[0] != u.shape[1]:
                raise NotUnitary(f"local {i} is not square: shape {u.shape}")
            dev = np.abs(u @ u.conj().T - np.eye(u.shape[0])).max()
            if dev > ATOL:
                raise NotUnitary(f"local {i} is not unitary: max |UU^dagger - 1| = {dev:.3e}")
            frozen.append(_freeze(u))
        object.__setattr__(self, "locals", tuple(frozen))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(u.shape[0] for u in self.locals)

    @classmethod
    def identity(cls, dims: Sequence[int]) -> ProductBasis:
        return cls(tuple(np.eye(d, dtype=complex) for d in dims))

    def unitary(self) -> np.ndarray:
        """Full ``U = U_1 (x) ... (x) U_n``; row k is the bra of product vector k."""
        return reduce(np.kron, self.locals)

    def kets(self, i: int) -> np.ndarray:
        """Basis kets of subsystem ``i`` as columns."""
        return self.locals[i].conj().T


def make_density(data, dims: Sequence[int] | None = None) -> DensityMatrix:
    """Validate ``data`` as a density matrix over ``dims`` and wrap it.

    ``dims`` defaults to a single subsystem of full dimension.
    Raises NotHermitian, NotPSD, TraceNotOne or DimMismatch, each with the
    measured deviation in the message.
    """
    m = np.asarray(data, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatch(f"matrix must be square, got shape {m.shape}")
    dims = _as_dims(dims if dims is not None else (m.shape[0],))
    if math.prod(dims) != m.shape[0]:
        raise DimMismatch(f"product of dims {dims} = {math.prod(dims)} != matrix dimension {m.shape[0]}")
    herm = np.abs(m - m.conj().T).max()
    if herm > ATOL:
        raise NotHermitian(f"Hermitian invariant violated: max |rho - rho^dagger| = {herm:.3e}")
    tr = np.trace(m)
    if abs(tr - 1) > ATOL:
        raise TraceNotOne(f"trace-one invariant violated: |Tr rho - 1| = {abs(tr - 1):.3e}")
    lam_min = np.linalg.eigvalsh((m + m.conj().T) / 2)[0]
    if lam_min < -ATOL:
        raise NotPSD(f"positivity invariant violated: minimum eigenvalue {lam_min:.3e}")
    return DensityMatrix(_freeze(m), dims)


def make_pure(amplitudes, dims: Sequence[int] | None = None) -> PureState:
    v = np.asarray(amplitudes, dtype=complex).ravel()
    dims = _as_dims(dims if dims is not None else (v.size,))
    if math.prod(dims) != v.size:
        raise DimMismatch(f"product of dims {dims} != vector length {v.size}")
    dev = abs(np.linalg.norm(v) - 1)
    if dev > ATOL:
        raise NotNormalized(f"norm invariant violated: | ||psi|| - 1 | = {dev:.3e}")
    return PureState(_freeze(v), dims)


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    return DensityMatrix(_freeze(np.kron(a.data, b.data)), a.dims + b.dims)


def _check_indices(idx, n: int) -> list[int]:
    idx = [int(i) for i in idx]
    if any(i < 0 or i >= n for i in idx) or len(set(idx)) != len(idx):
        raise BadSubsystemIndex(f"subsystem indices {idx} invalid for {n} subsystems")
    return idx


def _reduce(m: np.ndarray, dims: tuple[int, ...], keep: list[int]) -> np.ndarray:
    n = len(dims)
    traced = [i for i in range(n) if i not in keep]
    keep_sorted = sorted(keep)
    dk = math.prod(dims[i] for i in keep_sorted)
    dt = math.prod(dims[i] for i in traced)
    t = m.reshape(dims + dims)
    perm = keep_sorted + traced
    t = t.transpose(perm + [n + i for i in perm]).reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on ``keep``; kept subsystems stay in their original order."""
    keep = _check_indices(keep, rho.n)
    if not keep:
        raise BadSubsystemIndex("keep must be nonempty")
    out = _reduce(rho.data, rho.dims, keep)
    return DensityMatrix(_freeze(out), tuple(rho.dims[i] for i in sorted(keep)))


def partial_transpose(rho: DensityMatrix | HermitianOperator, transposed: Sequence[int]) -> HermitianOperator:
    idx = _check_indices(transposed, len(rho.dims))
    n = len(rho.dims)
    axes = list(range(2 * n))
    for i in idx:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    t = rho.data.reshape(rho.dims + rho.dims).transpose(axes)
    return HermitianOperator(_freeze(t.reshape(rho.data.shape)), rho.dims)


def clipped_spectrum(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a density matrix with round-off negativity removed."""
    lam = np.linalg.eigvalsh(m)
    lam = np.where((lam < 0) & (lam >= -ATOL), 0.0, lam)
    return np.clip(lam, 0.0, 1.0)


def shannon_entropy(p, axis: int = -1) -> np.ndarray:
    """Entropy in bits of probability vectors along ``axis``, with 0 log 0 = 0."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=axis)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    s = float(shannon_entropy(clipped_spectrum(rho.data)))
    return max(s, 0.0)


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """S(rho || sigma) in bits, or ``inf`` when supp(rho) is not inside supp(sigma)."""
    if rho.dims != sigma.dims:
        raise DimMismatch(f"dims differ: {rho.dims} vs {sigma.dims}")
    lam, vecs = np.linalg.eigh(sigma.data)
    # diagonal of rho in sigma's eigenbasis
    w = np.real(np.einsum("ik,ij,jk->k", vecs.conj(), rho.data, vecs))
    null = lam <= ATOL
    if w[null].sum() > SUPPORT_LEAK_TOL:
        return math.inf
    cross = float(np.sum(w[~null] * np.log2(lam[~null])))
    return max(-von_neumann_entropy(rho) - cross, 0.0)


def _resolve_cut(cut, n: int) -> tuple[list[int], list[int]]:
    if cut is None:
        if n % 2:
            raise BadCut(f"no default cut for {n} subsystems; pass cut=(X, Y)")
        cut = (range(n // 2), range(n // 2, n))
    try:
        x, y = cut
        x, y = [int(i) for i in x], [int(i) for i in y]
    except (TypeError, ValueError) as exc:
        raise BadCut(f"cut must be a pair of index sequences, got {cut!r}") from exc
    if not x or not y or sorted(x + y) != list(range(n)):
        raise BadCut(f"cut {x}:{y} is not a bipartition of {n} subsystems")
    return x, y


def mutual_information(rho: DensityMatrix, cut=None) -> float:
    """I(X:Y) = S(X) + S(Y) - S(XY). ``cut`` defaults to first half : second half."""
    x, y = _resolve_cut(cut, rho.n)
    i = (
        von_neumann_entropy(partial_trace(rho, x))
        + von_neumann_entropy(partial_trace(rho, y))
        - von_neumann_entropy(rho)
    )
    return max(i, 0.0)


def _check_basis(rho_dims, basis: ProductBasis):
    if tuple(basis.dims) != tuple(rho_dims):
        raise DimMismatch(f"basis dims {basis.dims} do not match state dims {tuple(rho_dims)}")


def in_basis(rho: DensityMatrix, basis: ProductBasis) -> np.ndarray:
    """Matrix elements <B(k)| rho |B(l)>."""
    _check_basis(rho.dims, basis)
    u = basis.unitary()
    return u @ rho.data @ u.conj().T


def dephase(rho: DensityMatrix, basis: ProductBasis) -> DensityMatrix:
    """Remove all coherences of ``rho`` in the product basis."""
    _check_basis(rho.dims, basis)
    u = basis.unitary()
    p = np.real(np.einsum("ki,ij,kj->k", u, rho.data, u.conj()))
    out = (u.conj().T * p) @ u
    return DensityMatrix(_freeze(out), rho.dims)


def trace_norm(x) -> float:
    return float(np.linalg.svd(np.asarray(x, dtype=complex), compute_uv=False).sum())


# ---------------------------------------------------------------- JSON I/O


def _fmt(x: float) -> str:
    # 17 significant digits, always with an exponent so -0.0 survives parsing
    return f"{x:.16e}"


def state_to_json(rho: DensityMatrix) -> str:
    """Canonical JSON: fixed field order, 17-significant-digit floats."""
    rows = []
    for row in rho.data:
        rows.append("[" + ", ".join(f"[{_fmt(z.real)}, {_fmt(z.imag)}]" for z in row) + "]")
    dims = ", ".join(str(d) for d in rho.dims)
    return '{"dims": [' + dims + '], "matrix": [\n  ' + ",\n  ".join(rows) + "\n]}\n"


def state_from_json(text: str) -> DensityMatrix:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StateFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "dims" not in doc or "matrix" not in doc:
        raise StateFormatError('state document needs keys "dims" and "matrix"')
    dims = doc["dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in dims):
        raise StateFormatError('"dims" must be a list of integers')
    mat = doc["matrix"]
    try:
        arr = np.array(mat, dtype=float)
    except (TypeError, ValueError) as exc:
        raise StateFormatError(f'"matrix" is not a rectangular array of [re, im] pairs: {exc}') from exc
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise StateFormatError(f'"matrix" must have shape (D, D, 2), got {arr.shape}')
    return make_density(arr[..., 0] + 1j * arr[..., 1], dims)


def load_state(path) -> DensityMatrix:
    with open(path, encoding="utf-8") as fh:
        return state_from_json(fh.read())
