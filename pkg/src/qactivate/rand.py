"""Haar-measure samplers and the random separable / low-rank ensembles.

Randomness comes from counter-based Philox streams keyed by
``(seed, stream_id)``; Gaussians use numpy's ziggurat ``standard_normal``,
which is a fixed, table-driven transform of the integer stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import BadDimension
from .qstate import DensityMatrix, PureState, _freeze

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.seed & _U64, self.stream_id & _U64]))

    def child(self, index: int) -> RngStream:
        """Independent stream derived from this one and ``index``."""
        key = np.random.SeedSequence([self.seed & _U64, self.stream_id & _U64, index]).generate_state(1, np.uint64)
        return RngStream(int(key[0]), 0)


@dataclass(frozen=True)
class EnsembleSpec:
    kind: Literal["separable_thm2", "lowrank_thm3"]
    d: int
    m: int | None = None
    samples: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("separable_thm2", "lowrank_thm3"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.d < 2:
            raise BadDimension(f"d must be >= 2, got {self.d}")
        if self.m is None:
            object.__setattr__(self, "m", default_m(self.d))
        if self.m < 1 or self.samples < 1:
            raise ValueError("m and samples must be >= 1")

    def sample(self, index: int) -> DensityMatrix:
        rng = RngStream(self.seed, index).generator()
        if self.kind == "separable_thm2":
            return random_separable_thm2(self.d, self.m, rng)
        return random_lowrank_thm3(self.d, self.m, rng)


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def default_m(d: int) -> int:
    """ceil((log2 d)^4)."""
    if d < 2:
        raise BadDimension(f"d must be >= 2, got {d}")
    return math.ceil(math.log2(d) ** 4)


def ginibre(d: int, rng, size: tuple[int, ...] = ()) -> np.ndarray:
    g = _gen(rng)
    shape = size + (d, d)
    return (g.standard_normal(shape) + 1j * g.standard_normal(shape)) / math.sqrt(2)


def haar_unitary(d: int, rng) -> np.ndarray:
    """Haar-distributed d x d unitary (Ginibre + QR with R-diagonal phase fix)."""
    q, r = np.linalg.qr(ginibre(d, rng))
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def haar_unitary_uncorrected(d: int, rng) -> np.ndarray:
    """Plain Q factor of a Ginibre matrix. Not Haar; kept as a negative control."""
    q, _ = np.linalg.qr(ginibre(d, rng))
    return q


def haar_pure_state(dims: Sequence[int], rng) -> PureState:
    dims = tuple(int(x) for x in dims)
    dim = math.prod(dims)
    if dim < 2:
        raise BadDimension("total dimension must be >= 2")
    g = _gen(rng)
    v = g.standard_normal(dim) + 1j * g.standard_normal(dim)
    return PureState(_freeze(v / np.linalg.norm(v)), dims)


def random_separable_thm2(d: int, m: int, rng) -> DensityMatrix:
    """(1/dm) sum_{i,j} |i><i| (x) U_j |i><i| U_j^dagger with Haar U_j.

    Block-diagonal in the A index; block i is the average over j of the
    projector onto column i of U_j.
    """
    if d < 2 or m < 1:
        raise BadDimension(f"need d >= 2 and m >= 1, got d={d}, m={m}")
    g = _gen(rng)
    us = [haar_unitary(d, g) for _ in range(m)]
    out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        block = sum(np.outer(u[:, i], u[:, i].conj()) for u in us) / (d * m)
        out[i * d:(i + 1) * d, i * d:(i + 1) * d] = block
    return DensityMatrix(_freeze(out), (d, d))


def random_lowrank_thm3(d: int, m: int, rng) -> DensityMatrix:
    """Tr_C |psi><psi| for Haar-random |psi> on d (x) d (x) m."""
    if d < 2 or m < 1:
        raise BadDimension(f"need d >= 2 and m >= 1, got d={d}, m={m}")
    g = _gen(rng)
    v = g.standard_normal(d * d * m) + 1j * g.standard_normal(d * d * m)
    v /= np.linalg.norm(v)
    psi = v.reshape(d * d, m)
    return DensityMatrix(_freeze(psi @ psi.conj().T), (d, d))


def random_separable_mixture(dims: Sequence[int], terms: int, rng) -> DensityMatrix:
    """sum_k p_k |a_k><a_k| (x) |b_k><b_k| ... with Haar local pure states.

    Generic separable states, nonclassical with probability one once
    ``terms >= 2``; weights are uniform on the simplex.
    """
    g = _gen(rng)
    dims = tuple(int(x) for x in dims)
    p = g.dirichlet(np.ones(terms))
    out = 0
    for k in range(terms):
        vec = np.ones(1, dtype=complex)
        for d in dims:
            vec = np.kron(vec, haar_pure_state((d,), g).amplitudes)
        out = out + p[k] * np.outer(vec, vec.conj())
    return DensityMatrix(_freeze(out), dims)


def random_density(dims: Sequence[int], rng, rank: int | None = None) -> DensityMatrix:
    """Induced-measure random state: partial trace of a Haar pure state."""
    dims = tuple(int(x) for x in dims)
    dim = math.prod(dims)
    rank = rank or dim
    g = _gen(rng)
    a = g.standard_normal((dim, rank)) + 1j * g.standard_normal((dim, rank))
    rho = a @ a.conj().T
    return DensityMatrix(_freeze(rho / np.trace(rho).real), dims)


def random_classical(dims: Sequence[int], rng) -> tuple[DensityMatrix, "np.ndarray", list[np.ndarray]]:
    """Random strictly classical state: random spectrum in a Haar product basis.

    Returns the state, the probabilities and the local unitaries whose rows
    are the bras of the eigenbasis.
    """
    dims = tuple(int(x) for x in dims)
    g = _gen(rng)
    p = g.dirichlet(np.ones(math.prod(dims)))
    us = [haar_unitary(d, g) for d in dims]
    u = us[0]
    for v in us[1:]:
        u = np.kron(u, v)
    rho = (u.conj().T * p) @ u
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(_freeze(rho), dims), p, us
