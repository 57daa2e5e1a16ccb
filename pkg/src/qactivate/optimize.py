"""Minimization over product bases (products of local unitary groups).

Two engines:

* :func:`minimize` -- multi-start coordinate (compass) direct search on the
  generator coefficients of ``U_i = exp(i H(params_i)) @ anchor_i``.
* :func:`grid_certify_two_qubits` -- exhaustive scan over pairs of qubit
  measurement axes, used as the arbiter for two-qubit objectives.

Objectives are either plain callables ``ProductBasis -> float`` or objects
that additionally expose ``evaluate(u)`` on the full product unitary (fast
path) and ``grid_values(ua, ub)`` on batches of qubit unitaries.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import LengthMismatch, NotTwoQubits, OptimizerBudgetExhausted
from .qstate import ATOL, ProductBasis, _freeze
from .rand import RngStream, haar_unitary


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for :func:`minimize`.

    Restarts should grow with the number of parameters (sum of d_i^2); 20 is
    plenty for two qubits or qutrits, larger systems benefit from more.
    ``min_step`` is the step size below which a restart counts as converged.
    """

    restarts: int = 20
    max_evals_per_restart: int = 5000
    objective_tol: float = 1e-8
    seed: int = 0
    initial_step: float = 0.3
    min_step: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1 or self.max_evals_per_restart < 1 or self.workers < 1:
            raise ValueError("restarts, max_evals_per_restart and workers must be >= 1")
        if self.objective_tol <= 0 or self.initial_step <= 0 or self.min_step <= 0:
            raise ValueError("tolerances and steps must be > 0")


@dataclass
class OptimizerReport:
    restarts: int
    evaluations: int
    converged: bool
    best_restart: int
    method: str = "direct_search"
    restart_values: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "restarts": self.restarts,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "best_restart": self.best_restart,
        }


class MinimizeResult(NamedTuple):
    basis: ProductBasis
    value: float
    report: OptimizerReport


# ------------------------------------------------------------ parameterization


@lru_cache(maxsize=None)
def hermitian_generators(d: int) -> np.ndarray:
    """Hilbert-Schmidt orthonormal basis of d x d Hermitian matrices, shape (d*d, d, d).

    Order: identity/sqrt(d), then for each j < k the symmetric and
    antisymmetric off-diagonal pairs, then the traceless diagonal ones.
    For d = 2 this is (1, X, Y, Z) / sqrt(2).
    """
    gens = [np.eye(d, dtype=complex) / math.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1 / math.sqrt(2)
            a = np.zeros((d, d), dtype=complex)
            a[j, k] = -1j / math.sqrt(2)
            a[k, j] = 1j / math.sqrt(2)
            gens += [s, a]
    for l in range(1, d):
        g = np.zeros((d, d), dtype=complex)
        g[np.arange(l), np.arange(l)] = 1
        g[l, l] = -l
        gens.append(g / math.sqrt(l * (l + 1)))
    out = np.array(gens)
    out.setflags(write=False)
    return out


def _expi(params: np.ndarray, d: int) -> np.ndarray:
    """exp(i H) for H = sum_a params[a] G_a, via eigendecomposition."""
    h = np.tensordot(params, hermitian_generators(d), axes=1)
    lam, v = np.linalg.eigh(h)
    return (v * np.exp(1j * lam)) @ v.conj().T


def _offsets(dims: Sequence[int]) -> list[int]:
    return [0] + list(np.cumsum([d * d for d in dims]))


def decode(params, dims: Sequence[int], anchor: ProductBasis | None = None) -> ProductBasis:
    """Map generator coefficients to a product basis.

    ``U_i = exp(i H(params_i))``, right-multiplied by ``anchor.locals[i]``
    when an anchor is given.
    """
    params = np.asarray(params, dtype=float)
    dims = [int(d) for d in dims]
    off = _offsets(dims)
    if params.shape != (off[-1],):
        raise LengthMismatch(f"expected {off[-1]} parameters for dims {dims}, got {params.shape}")
    locs = []
    for i, d in enumerate(dims):
        u = _expi(params[off[i]:off[i + 1]], d)
        if anchor is not None:
            u = u @ anchor.locals[i]
        locs.append(u)
    return ProductBasis(tuple(locs))


def _unchecked_basis(locs) -> ProductBasis:
    b = object.__new__(ProductBasis)
    object.__setattr__(b, "locals", tuple(_freeze(u) for u in locs))
    return b


def _evaluator(objective) -> Callable[[list[np.ndarray]], float]:
    if hasattr(objective, "evaluate"):
        return lambda locs: float(objective.evaluate(reduce(np.kron, locs)))
    return lambda locs: float(objective(_unchecked_basis(locs)))


# ------------------------------------------------------------ direct search


@dataclass
class _RestartResult:
    value: float
    locals: list[np.ndarray]
    evaluations: int
    converged: bool


def _run_restart(fn, dims, cfg: OptimizerConfig, restart: int, start: ProductBasis | None) -> _RestartResult:
    rng = RngStream(cfg.seed, restart).generator()
    if start is not None:
        anchors = [np.array(u) for u in start.locals]
    else:
        anchors = [haar_unitary(d, rng) for d in dims]
    off = _offsets(dims)
    owner = [i for i, d in enumerate(dims) for _ in range(d * d)]
    params = np.zeros(off[-1])
    locs = list(anchors)
    best = fn(locs)
    evals = 1
    step = cfg.initial_step
    budget = cfg.max_evals_per_restart
    converged = best <= 0.0
    while not converged and evals < budget:
        sweep_start = best
        for c in range(off[-1]):
            i = owner[c]
            for sign in (1.0, -1.0):
                trial = params[off[i]:off[i + 1]].copy()
                trial[c - off[i]] += sign * step
                u = _expi(trial, dims[i]) @ anchors[i]
                cand = locs[:i] + [u] + locs[i + 1:]
                v = fn(cand)
                evals += 1
                if v < best:
                    best, locs = v, cand
                    params[off[i]:off[i + 1]] = trial
                    break
                if evals >= budget:
                    break
            if evals >= budget or best <= 0.0:
                break
        if best <= 0.0:
            converged = True
        elif sweep_start - best < cfg.objective_tol:
            step /= 2
            if step < cfg.min_step:
                converged = True
    return _RestartResult(best, locs, evals, converged)


def minimize(
    objective,
    dims: Sequence[int],
    cfg: OptimizerConfig | None = None,
    starts: Sequence[ProductBasis] = (),
    strict: bool = False,
) -> MinimizeResult:
    """Multi-start coordinate direct search over product bases.

    Restart ``r < len(starts)`` is anchored at ``starts[r]``; the others at a
    Haar-random product basis drawn from stream ``(cfg.seed, r)``. Each
    restart perturbs one generator coefficient at a time by +-step and
    halves the step whenever a full sweep improves by less than
    ``objective_tol``. The winner is the lowest value, ties broken by the
    lower restart index, so the result does not depend on ``cfg.workers``.

    With ``strict=True`` an :class:`OptimizerBudgetExhausted` carrying the
    result is raised when the winning restart ran out of evaluations.
    """
    cfg = cfg or OptimizerConfig()
    dims = [int(d) for d in dims]
    fn = _evaluator(objective)
    n = max(cfg.restarts, len(starts))

    def job(r):
        return _run_restart(fn, dims, cfg, r, starts[r] if r < len(starts) else None)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(job, range(n)))
    else:
        results = [job(r) for r in range(n)]

    best_r = min(range(n), key=lambda r: (results[r].value, r))
    win = results[best_r]
    report = OptimizerReport(
        restarts=n,
        evaluations=sum(r.evaluations for r in results),
        converged=win.converged,
        best_restart=best_r,
        restart_values=[r.value for r in results],
    )
    basis = ProductBasis(tuple(_reunitarize(u) for u in win.locals))
    out = MinimizeResult(basis, win.value, report)
    if strict and not win.converged:
        raise OptimizerBudgetExhausted(
            f"budget of {cfg.max_evals_per_restart} evaluations per restart exhausted; "
            f"best value {win.value:.6g}",
            out,
        )
    return out


def _reunitarize(u: np.ndarray) -> np.ndarray:
    # polar projection; removes drift from long products of exponentials
    if np.abs(u @ u.conj().T - np.eye(len(u))).max() <= ATOL / 10:
        return u
    w, _, vh = np.linalg.svd(u)
    return w @ vh


# ------------------------------------------------------------ two-qubit grid


def qubit_axis_unitaries(theta, phi) -> np.ndarray:
    """Local unitaries whose rows are the bras of the +-n eigenvectors of n.sigma.

    ``n = (sin t cos p, sin t sin p, cos t)``; broadcasts over the inputs and
    returns shape ``(..., 2, 2)``.
    """
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    e = np.exp(1j * phi)
    u = np.empty(theta.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = c
    u[..., 0, 1] = s * e.conj()
    u[..., 1, 0] = -s * e
    u[..., 1, 1] = c
    return u


def _axis_grid(theta_deg, phi_deg) -> tuple[np.ndarray, np.ndarray]:
    t, p = np.meshgrid(np.radians(theta_deg), np.radians(phi_deg), indexing="ij")
    return t.ravel(), p.ravel()


def _grid_values(objective, ua: np.ndarray, ub: np.ndarray) -> np.ndarray:
    if hasattr(objective, "grid_values"):
        return objective.grid_values(ua, ub)
    out = np.empty((len(ua), len(ub)))
    for a in range(len(ua)):
        for b in range(len(ub)):
            out[a, b] = objective(_unchecked_basis([ua[a], ub[b]]))
    return out


def _scan(objective, ta, pa, tb, pb, chunk: int = 256):
    ua = qubit_axis_unitaries(ta, pa)
    ub = qubit_axis_unitaries(tb, pb)
    best = (math.inf, 0, 0)
    for lo in range(0, len(ua), chunk):
        vals = _grid_values(objective, ua[lo:lo + chunk], ub)
        k = int(np.argmin(vals))
        a, b = divmod(k, vals.shape[1])
        if vals[a, b] < best[0]:
            best = (float(vals[a, b]), lo + a, b)
    v, a, b = best
    return v, (ta[a], pa[a]), (tb[b], pb[b])


def grid_certify_two_qubits(
    objective,
    resolution: float = 3.0,
    refine_resolution: float = 0.3,
    dims: Sequence[int] = (2, 2),
) -> tuple[ProductBasis, float]:
    """Exhaustive scan over product measurement bases of two qubits.

    A qubit basis is fixed by its Bloch axis up to sign, so each side ranges
    over the half sphere theta in [0, 90] deg, phi in [0, 360) deg. The best
    cell of the coarse scan is refined once on a ``refine_resolution`` grid
    spanning +-``resolution`` in all four angles.
    """
    if tuple(dims) != (2, 2):
        raise NotTwoQubits(f"grid certification needs exactly two qubits, got dims {tuple(dims)}")
    thetas = np.arange(0.0, 90.0 + 1e-9, resolution)
    phis = np.arange(0.0, 360.0 - 1e-9, resolution)
    t, p = _axis_grid(thetas, phis)
    v, (ta, pa), (tb, pb) = _scan(objective, t, p, t, p)

    span = np.arange(-resolution, resolution + 1e-9, refine_resolution)
    ta_r, pa_r = _axis_grid(np.degrees(ta) + span, np.degrees(pa) + span)
    tb_r, pb_r = _axis_grid(np.degrees(tb) + span, np.degrees(pb) + span)
    v2, (ta2, pa2), (tb2, pb2) = _scan(objective, ta_r, pa_r, tb_r, pb_r)
    if v2 < v:
        v, ta, pa, tb, pb = v2, ta2, pa2, tb2, pb2
    basis = ProductBasis((qubit_axis_unitaries(ta, pa), qubit_axis_unitaries(tb, pb)))
    return basis, v
