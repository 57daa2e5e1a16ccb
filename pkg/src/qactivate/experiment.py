"""Seeded sweeps over the random separable / low-rank ensembles.

Every row depends only on ``(spec, cfg, sample_index)``: the state comes
from stream ``(spec.seed, sample_index)`` and the optimizer seed is derived
from ``(cfg.seed, sample_index)``, so any job count yields the same rows.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .optimize import OptimizerConfig
from .qstate import mutual_information, shannon_entropy, von_neumann_entropy
from .quantumness import negativity_of_quantumness, req
from .rand import EnsembleSpec, RngStream

CSV_HEADER = [
    "kind",
    "d",
    "m",
    "sample_index",
    "seed",
    "S_rho",
    "S_dephased_best",
    "Q_estimate",
    "bound_kind",
    "mutual_information",
    "negativity_Q_estimate",
    "wall_time_s",
]

MAX_TOTAL_DIM = 4096


class ExperimentInvariantError(RuntimeError):
    pass


@dataclass
class ExperimentRow:
    kind: str
    d: int
    m: int
    sample_index: int
    seed: int
    S_rho: float
    S_dephased_best: float
    Q_estimate: float
    bound_kind: str
    mutual_information: float
    negativity_Q_estimate: float
    wall_time_s: float
    converged: bool = True

    def check(self):
        gap = abs(self.Q_estimate - (self.S_dephased_best - self.S_rho))
        if gap > 1e-9:
            raise ExperimentInvariantError(
                f"sample {self.sample_index}: Q_estimate differs from S_dephased_best - S_rho by {gap:.3e}"
            )
        if self.Q_estimate > self.mutual_information + 1e-6:
            raise ExperimentInvariantError(
                f"sample {self.sample_index}: Q_estimate {self.Q_estimate:.9f} exceeds "
                f"mutual information {self.mutual_information:.9f}"
            )


def m_cap(d: int) -> int:
    return MAX_TOTAL_DIM // (d * d)


def sample_config(cfg: OptimizerConfig, index: int) -> OptimizerConfig:
    return dataclasses.replace(cfg, seed=RngStream(cfg.seed, index).child(0).seed)


def compute_row(spec: EnsembleSpec, cfg: OptimizerConfig, index: int, grid: bool = False) -> ExperimentRow:
    t0 = time.perf_counter()
    rho = spec.sample(index)
    scfg = sample_config(cfg, index)
    use_grid = grid and rho.dims == (2, 2)
    est = req(rho, scfg, grid=use_grid)
    u = est.best_basis.unitary()
    p = np.real(np.sum((u @ rho.data) * u.conj(), axis=1))
    s_rho = von_neumann_entropy(rho)
    s_deph = float(shannon_entropy(p))
    qn = negativity_of_quantumness(rho, scfg, grid=use_grid)
    row = ExperimentRow(
        kind=spec.kind,
        d=spec.d,
        m=spec.m,
        sample_index=index,
        seed=spec.seed,
        S_rho=s_rho,
        S_dephased_best=s_deph,
        Q_estimate=s_deph - s_rho,
        bound_kind=est.bound_kind,
        mutual_information=mutual_information(rho),
        negativity_Q_estimate=qn.value,
        wall_time_s=time.perf_counter() - t0,
        converged=est.optimizer_report.converged and qn.optimizer_report.converged,
    )
    row.check()
    return row


def _row_job(args):
    return compute_row(*args)


def run_experiment(spec: EnsembleSpec, cfg: OptimizerConfig, grid: bool = False, jobs: int = 1) -> list[ExperimentRow]:
    if spec.m > m_cap(spec.d):
        raise ValueError(f"m={spec.m} exceeds the cap 4096/d^2 = {m_cap(spec.d)} for d={spec.d}")
    tasks = [(spec, cfg, i, grid) for i in range(spec.samples)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_row_job, tasks))
    else:
        rows = [_row_job(t) for t in tasks]
    return sorted(rows, key=lambda r: r.sample_index)


def rows_to_csv(rows: list[ExperimentRow], record_timing: bool = False) -> str:
    """CSV text; ``wall_time_s`` is left empty unless ``record_timing``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([
            r.kind, r.d, r.m, r.sample_index, r.seed,
            repr(r.S_rho), repr(r.S_dephased_best), repr(r.Q_estimate), r.bound_kind,
            repr(r.mutual_information), repr(r.negativity_Q_estimate),
            repr(r.wall_time_s) if record_timing else "",
        ])
    return buf.getvalue()


def atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def make_manifest(command: str, argv: list[str], config: dict, seed: int, input_digests: dict | None = None, **extra) -> dict:
    return {
        "command": command,
        "argv": list(argv),
        "config": config,
        "seed": seed,
        "version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "input_digests": input_digests or {},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        **extra,
    }


def write_manifest(path: str, manifest: dict):
    atomic_write(path, json.dumps(manifest, indent=2) + "\n")
