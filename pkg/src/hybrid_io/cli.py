"""Command line entry point: ``hybrid-io <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .experiments.config import ConfigError, expand_sweep, load_config, parse_config
from .experiments.runner import WORKERS_ENV, collect_summaries, run_experiment
from .hamiltonian import end_to_end_time_cost, measured_beta, solve_effective_interface
from .interface import classify
from .linalg import is_unitary


class MatrixFormatError(ValueError):
    pass


def parse_complex(token: str) -> complex:
    """Parse ``a+bi``, ``a-bi``, ``a``, ``bi`` or ``-i``; ``j`` is accepted for ``i``."""
    try:
        return complex(token.strip().replace("i", "j"))
    except ValueError:
        raise MatrixFormatError(f"cannot parse complex entry {token!r}") from None


def read_matrix(path: str | Path) -> np.ndarray:
    """Four lines of four whitespace-separated complex entries; ``#`` starts a comment."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([parse_complex(tok) for tok in line.split()])
    if len(rows) != 4 or any(len(r) != 4 for r in rows):
        raise MatrixFormatError("matrix file must have 4 rows of 4 entries")
    return np.array(rows, dtype=complex)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _fmt_complex(z: complex) -> str:
    return f"{z.real:+.12g}{z.imag:+.12g}i"


def _analysis_doc(u: np.ndarray) -> tuple[dict, bool]:
    v = classify(u)
    doc: dict = {
        "in_u_star": v.in_u_star,
        "exploitable": v.exploitable,
        "failure_reason": v.failure_reason.value if v.failure_reason else None,
    }
    ok = True
    a = v.analysis
    if a is not None:
        inv = {
            "alpha2_plus_beta2": abs(a.alpha**2 + a.beta**2 - 1) <= 1e-10,
            "gamma2_plus_omega2": abs(abs(a.gamma) ** 2 + a.omega**2 - 1) <= 1e-10,
            "psi0_orthogonal_psi1": a.psi1 is None or abs(np.vdot(a.psi0, a.psi1)) <= 1e-10,
        }
        ok = all(inv.values())
        doc.update(
            {
                "basis_s": [[_fmt_complex(z) for z in row] for row in a.basis.basis_s],
                "basis_i": [[_fmt_complex(z) for z in row] for row in a.basis.basis_i],
                "alpha": a.alpha,
                "beta": a.beta,
                "gamma": _fmt_complex(a.gamma),
                "omega": a.omega,
                "overlap_psi0_phi": abs(a.overlap_psi0_phi),
                "invariants": inv,
            }
        )
    return doc, ok


def cmd_analyze(args) -> int:
    u = read_matrix(args.matrix_file)
    if not is_unitary(u):
        print("error: matrix is not unitary within 1e-10", file=sys.stderr)
        return 2
    doc, ok = _analysis_doc(u)
    print(json.dumps(doc, indent=2, default=_json_default))
    return 0 if ok else 1


def _run_configs(configs, workers) -> int:
    all_ok = True
    for cfg in configs:
        res = run_experiment(cfg, workers)
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {cfg.kind} [{res.config_hash}] {len(res.records)} records -> {cfg.output}")
        for name, n in res.summary["failures"].items():
            if n:
                print(f"  {name}: {n} failing records")
        all_ok &= res.passed
    return 0 if all_ok else 1


def cmd_run(args) -> int:
    cfg = load_config(args.config_file)
    if cfg.sweep:
        print("error: config has a sweep block; use the sweep subcommand", file=sys.stderr)
        return 2
    return _run_configs([cfg], args.workers)


def cmd_sweep(args) -> int:
    cfg = load_config(args.config_file)
    if not cfg.sweep:
        print("error: config has no sweep block", file=sys.stderr)
        return 2
    return _run_configs(expand_sweep(cfg), args.workers)


def cmd_verify_composition_bound(args) -> int:
    cfg = parse_config(
        {
            "kind": "lemma1",
            "seed": args.seed,
            "output": args.output,
            "params": {"samples": args.samples, "dim_e": args.dim_e, "sample_budget": args.budget},
        }
    )
    return _run_configs([cfg], args.workers)


def cmd_solve_effective(args) -> int:
    sol = solve_effective_interface(args.r, args.g)
    beta = measured_beta(sol)
    verdict = classify(sol.u_eff())
    doc = {
        "r": sol.r,
        "g": sol.g,
        "omega_bar": sol.omega_bar,
        "theta_star": sol.theta_star,
        "tau_star": sol.tau_star,
        "T_star": sol.T_star,
        "s_star": sol.s_star,
        "predicted_beta": sol.predicted_beta,
        "measured_beta": beta,
        "exploitable": verdict.exploitable,
    }
    checks = {
        "exploitable": verdict.exploitable,
        "tan_theta": abs(math.tan(sol.theta_star) + sol.omega_bar / sol.g) <= 1e-9,
        "measured_beta_matches_prediction": abs(beta - sol.predicted_beta) <= 1e-8,
    }
    if args.xi_eps is not None:
        doc["n_star"] = sol.n_star_for(args.xi_eps)
        doc["n_star_measured_beta"] = sol.n_star_for(args.xi_eps, beta) if beta < 1 else None
        doc["time_cost"] = end_to_end_time_cost(sol, args.xi_eps, args.delta_t)
        doc["time_cost_measured_beta"] = (
            end_to_end_time_cost(sol, args.xi_eps, args.delta_t, beta) if beta < 1 else None
        )
    doc["checks"] = checks
    print(json.dumps(doc, indent=2, default=_json_default))
    return 0 if all(checks.values()) else 1


def cmd_report(args) -> int:
    found = collect_summaries(args.results_dir)
    if not found:
        print(f"error: no summary.json under {args.results_dir}", file=sys.stderr)
        return 2
    ok = True
    for path, s in found:
        status = "PASS" if s.get("passed") else "FAIL"
        print(f"{status} {s['kind']:<15} [{s['config_hash']}] records={s['records']} {path.parent}")
        for name, n in s.get("failures", {}).items():
            if n:
                print(f"  {name}: {n} failing records")
        for row in s.get("exponents", []):
            if row["violated"]:
                print(
                    f"  {row['regime']} n={row['n']}: min measured exponent "
                    f"{row['min_measured_exponent']:.4f} < bound {row['bound_exponent']:.4f}"
                )
        ok &= bool(s.get("passed"))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybrid-io", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="classify a 4x4 interface unitary from a matrix file")
    a.add_argument("matrix_file")
    a.set_defaults(func=cmd_analyze)

    workers_help = f"worker processes (default: ${WORKERS_ENV} or 1)"
    r = sub.add_parser("run", help="run one experiment config")
    r.add_argument("config_file")
    r.add_argument("--workers", type=int, default=None, help=workers_help)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run the cartesian product of a config's sweep block")
    s.add_argument("config_file")
    s.add_argument("--workers", type=int, default=None, help=workers_help)
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify-lemma1", help="check the composition bound on random channels")
    v.add_argument("--samples", type=int, default=100)
    v.add_argument("--dim-e", type=int, default=2)
    v.add_argument("--budget", type=int, default=16, help="random starts per minimization")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--output", default="results/lemma1")
    v.add_argument("--workers", type=int, default=None, help=workers_help)
    v.set_defaults(func=cmd_verify_composition_bound)

    e = sub.add_parser("solve-effective", help="switching parameters for the XX pair")
    e.add_argument("--r", type=float, required=True)
    e.add_argument("--g", type=float, required=True)
    e.add_argument("--xi-eps", type=float, default=None)
    e.add_argument("--delta-t", type=float, default=0.0)
    e.set_defaults(func=cmd_solve_effective)

    rp = sub.add_parser("report", help="summarize results written by run or sweep")
    rp.add_argument("results_dir")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, MatrixFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
