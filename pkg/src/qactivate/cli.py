"""Command-line front end.

Exit codes: 0 success, 1 internal invariant violation, 2 invalid input,
3 optimizer budget exhausted (result still written), 4 resource cap.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

import numpy as np

from . import __version__
from .errors import QActivateError
from .experiment import (
    ExperimentInvariantError,
    atomic_write,
    file_digest,
    m_cap,
    make_manifest,
    rows_to_csv,
    run_experiment,
    write_manifest,
)
from .optimize import OptimizerConfig
from .protocol import (
    _uniform_dims,
    distillable_entanglement_mc,
    negativity,
    negativity_mc_closed_form,
    output_cut,
    run_activation,
)
from .qstate import (
    ProductBasis,
    clipped_spectrum,
    load_state,
    make_density,
    mutual_information,
    state_to_json,
)
from .quantumness import _matrix_to_pairs, entanglement_potential, is_classical, negativity_of_quantumness, req
from .rand import EnsembleSpec, RngStream, default_m, haar_unitary, random_lowrank_thm3, random_separable_thm2

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_BUDGET, EXIT_CAP = 0, 1, 2, 3, 4
FULL_MATRIX_LIMIT = 4096


class CapExceeded(Exception):
    pass


def _emit(text: str, out: str | None):
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj) + "\n"


def _config(args) -> OptimizerConfig:
    return OptimizerConfig(
        restarts=args.restarts,
        max_evals_per_restart=args.max_evals,
        objective_tol=args.tol,
        seed=args.seed,
        workers=args.workers,
    )


def _parse_cut(text: str | None):
    if text is None:
        return None
    try:
        x, y = text.split(":")
        return [int(i) for i in x.split(",")], [int(i) for i in y.split(",")]
    except ValueError as exc:
        raise QActivateError(f"cut must look like '0,1:2', got {text!r}") from exc


# ------------------------------------------------------------------ make-state


def _bell_vector(d: int) -> np.ndarray:
    v = np.zeros(d * d)
    v[np.arange(d) * (d + 1)] = 1 / math.sqrt(d)
    return v


def build_state(kind: str):
    """State zoo: bell, plus, maxent:d, classical:p1,p2,..., werner:p[:d], mix2, thm2:d:m:seed, thm3:d:m:seed."""
    name, _, rest = kind.partition(":")
    parts = rest.split(":") if rest else []
    try:
        if name == "bell":
            v = _bell_vector(2)
            return make_density(np.outer(v, v), [2, 2])
        if name == "plus":
            v = np.array([1.0, 1.0]) / math.sqrt(2)
            return make_density(np.outer(v, v), [2])
        if name == "maxent":
            d = int(parts[0])
            v = _bell_vector(d)
            return make_density(np.outer(v, v), [d, d])
        if name == "classical":
            p = np.array([float(x) for x in rest.split(",")])
            d = int(round(math.sqrt(len(p))))
            dims = [d, d] if d * d == len(p) and d >= 2 else [len(p)]
            if (p < 0).any():
                raise QActivateError(f"spectrum has negative entries: {p.tolist()}")
            return make_density(np.diag(p), dims)
        if name == "werner":
            p = float(parts[0])
            d = int(parts[1]) if len(parts) > 1 else 2
            if not 0 <= p <= 1:
                raise QActivateError(f"werner weight must lie in [0, 1], got {p}")
            v = _bell_vector(d)
            return make_density((1 - p) * np.eye(d * d) / d**2 + p * np.outer(v, v), [d, d])
        if name == "mix2":
            plus = np.array([1.0, 1.0]) / math.sqrt(2)
            pp = np.kron(plus, plus)
            return make_density(0.5 * (np.diag([1.0, 0, 0, 0]) + np.outer(pp, pp)), [2, 2])
        if name in ("thm2", "thm3"):
            d, m, seed = (int(x) for x in parts)
            if d < 2 or m < 1:
                raise QActivateError(f"need d >= 2 and m >= 1, got d={d}, m={m}")
            gen = RngStream(seed, 0).generator()
            rho = random_separable_thm2(d, m, gen) if name == "thm2" else random_lowrank_thm3(d, m, gen)
            return make_density(rho.data, rho.dims)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, QActivateError):
            raise
        raise QActivateError(f"bad parameters in state kind {kind!r}: {exc}") from exc
    raise QActivateError(f"unknown state kind {kind!r}")


def cmd_make_state(args) -> int:
    _emit(state_to_json(build_state(args.kind)), args.out)
    return EXIT_OK


# ------------------------------------------------------------------ measure


def cmd_measure(args) -> int:
    rho = load_state(args.state)
    cut = _parse_cut(args.cut)
    code = EXIT_OK
    if args.measure in ("req", "qneg"):
        fn = req if args.measure == "req" else negativity_of_quantumness
        est = fn(rho, _config(args), grid=args.grid)
        result = est.as_dict()
        if not est.optimizer_report.converged:
            code = EXIT_BUDGET
    else:
        value = mutual_information(rho, cut) if args.measure == "mutual_info" else negativity(rho, cut)
        result = {"measure": args.measure, "value": value, "bound_kind": "exact", "best_basis": None,
                  "diagnostics": {"method": "closed_form"}}
    if args.format == "csv":
        _emit(f"measure,value,bound_kind\n{result['measure']},{result['value']!r},{result['bound_kind']}\n", args.out)
    else:
        _emit(_dump(result), args.out)
    return code


# ------------------------------------------------------------------ activate


def _load_adversary(path: str, dims) -> ProductBasis:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    mats = doc["locals"] if isinstance(doc, dict) else doc
    locs = [np.array(m, dtype=float) for m in mats]
    basis = ProductBasis(tuple(m[..., 0] + 1j * m[..., 1] for m in locs))
    if tuple(basis.dims) != tuple(dims):
        raise QActivateError(f"adversary dims {basis.dims} do not match state dims {tuple(dims)}")
    return basis


def cmd_activate(args) -> int:
    rho = load_state(args.state)
    if args.n is not None and args.n != rho.n:
        raise QActivateError(f"--n {args.n} does not match the state's {rho.n} subsystems")
    if args.d is not None and any(x != args.d for x in rho.dims):
        raise QActivateError(f"--d {args.d} does not match state dims {rho.dims}")
    code = EXIT_OK
    extra = {}
    adv = args.adversary
    _uniform_dims(rho)  # fail before any optimization
    if adv == "identity":
        basis = ProductBasis.identity(rho.dims)
    elif adv.startswith("haar:"):
        gen = RngStream(int(adv[5:]), 0).generator()
        basis = ProductBasis(tuple(haar_unitary(d, gen) for d in rho.dims))
    elif adv.startswith("file:"):
        basis = _load_adversary(adv[5:], rho.dims)
    elif adv == "worst":
        est = entanglement_potential(rho, args.monotone, _config(args), grid=args.grid)
        basis = est.best_basis
        extra["worst_case"] = est.as_dict()
        if not est.optimizer_report.converged:
            code = EXIT_BUDGET
    else:
        raise QActivateError(f"unknown adversary {adv!r}")
    result = {
        "dims": list(rho.dims + rho.dims),
        "cut": [list(c) for c in output_cut(rho.n)],
        "adversary": [_matrix_to_pairs(u) for u in basis.locals],
    }
    if rho.dim ** 2 <= FULL_MATRIX_LIMIT:
        outcome = run_activation(rho, basis)
        result["e_distillable"] = outcome.e_distillable
        result["negativity"] = outcome.negativity_value
        result["final_state"] = json.loads(state_to_json(outcome.final_state))
    else:
        # the output is an isometric image of rho: its spectrum is rho's padded with zeros
        result["e_distillable"] = distillable_entanglement_mc(rho, basis)
        result["negativity"] = negativity_mc_closed_form(rho, basis)
        spec = clipped_spectrum(rho.data)
        result["final_state_digest"] = {
            "dims": list(rho.dims + rho.dims),
            "spectrum": sorted((float(x) for x in spec if x > 1e-12), reverse=True),
        }
    result.update(extra)
    _emit(_dump(result), args.out)
    return code


# ------------------------------------------------------------------ classify


def cmd_classify(args) -> int:
    rho = load_state(args.state)
    verdict = is_classical(rho, args.tol_classical, _config(args))
    _emit(_dump(verdict.as_dict()), args.out)
    return EXIT_OK


# ------------------------------------------------------------------ experiment


def cmd_experiment(args) -> int:
    if args.d < 2:
        raise QActivateError(f"d must be >= 2, got {args.d}")
    cap = m_cap(args.d)
    if cap < 1:
        raise CapExceeded(f"d={args.d} exceeds the total-dimension cap (d^2 <= 4096)")
    m = args.m if args.m is not None else min(default_m(args.d), cap)
    if m > cap:
        raise CapExceeded(f"m={m} exceeds the cap 4096/d^2 = {cap} for d={args.d}")
    spec = EnsembleSpec(args.kind, args.d, m, args.samples, args.seed)
    cfg = _config(args)
    rows = run_experiment(spec, cfg, grid=args.grid, jobs=args.jobs)
    out = args.out or f"experiment_{args.kind}_d{args.d}_m{m}_seed{args.seed}.csv"
    atomic_write(out, rows_to_csv(rows, record_timing=args.record_timing))
    manifest = make_manifest(
        "experiment",
        args.argv,
        {
            "ensemble": dataclasses.asdict(spec),
            "optimizer": dataclasses.asdict(cfg),
            "grid": args.grid,
            "record_timing": args.record_timing,
        },
        args.seed,
        wall_time_s=[r.wall_time_s for r in rows],
        unconverged_samples=[r.sample_index for r in rows if not r.converged],
        csv_sha256=file_digest(out),
    )
    write_manifest(out + ".manifest.json", manifest)
    print(f"wrote {len(rows)} rows to {out}", file=sys.stderr)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _optimizer_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("optimizer")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--restarts", type=int, default=OptimizerConfig.restarts)
    g.add_argument("--max-evals", type=int, default=OptimizerConfig.max_evals_per_restart)
    g.add_argument("--tol", type=float, default=OptimizerConfig.objective_tol)
    g.add_argument("--workers", type=int, default=1, help="threads for optimizer restarts")
    g.add_argument("--grid", action="store_true", help="force exhaustive two-qubit certification")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qactivate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-state", help="write a named state as JSON")
    p.add_argument("kind", help="bell | plus | maxent:d | classical:p1,p2,.. | werner:p[:d] | mix2 | thm2:d:m:seed | thm3:d:m:seed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_make_state)

    p = sub.add_parser("measure", help="compute a quantumness or correlation measure")
    p.add_argument("state")
    p.add_argument("measure", choices=["req", "qneg", "mutual_info", "negativity"])
    p.add_argument("--cut", help="bipartition like '0:1' (default: first half vs second half)")
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    _optimizer_flags(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("activate", help="run the activation protocol")
    p.add_argument("state")
    p.add_argument("--adversary", default="identity", help="identity | file:PATH | haar:SEED | worst")
    p.add_argument("--monotone", choices=["distillable_mc", "negativity"], default="distillable_mc")
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json"], default="json")
    _optimizer_flags(p)
    p.set_defaults(func=cmd_activate)

    p = sub.add_parser("classify", help="decide strict classicality")
    p.add_argument("state")
    p.add_argument("--tol-classical", type=float, default=1e-6)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json"], default="json")
    _optimizer_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("experiment", help="sweep a random ensemble and write CSV + manifest")
    p.add_argument("--kind", choices=["separable_thm2", "lowrank_thm3"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1, help="worker processes over samples")
    p.add_argument("--record-timing", action="store_true", help="fill wall_time_s (breaks byte-identical reruns)")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv"], default="csv")
    _optimizer_flags(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"error: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ExperimentInvariantError as exc:
        print(f"error: aborted, report invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
