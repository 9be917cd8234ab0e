"""Command-line driver: config-described solves, kernel sets, check suites,
and grid-refinement studies, with CSV/JSON reports.

Exit status: 0 when everything ran and passed, 1 when a check failed, 2 for
configuration or usage errors (the diagnostic names the offending key).
Outputs are deterministic for a fixed config: floats are printed with %.17g,
JSON keys are sorted, and the only randomness (energy perturbations) is seeded
from the config.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .domain import Domain, DomainError
from .kernel import duality_kernel, kernel_csv_rows, kernel_set, kernel_summary
from .measure import MeasureError, total_variation
from .operator import SolverError, assemble_from_values, solve_truncated_limit
from .potential import PotentialError, sample
from .trace import (
    green_identity_residual,
    normal_derivative,
    trace_csv_rows,
    trace_l1_norm,
)
from .verify import (
    VerifyReport,
    comparison_check,
    energy_check,
    hopf_certificate,
    hopf_check,
    inequality_suite,
    representation_check,
    report_csv_rows,
    suite_exit_status,
)

FLOAT_FMT = "%.17g"


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return FLOAT_FMT % float(value)
    return value


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("schema=1\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(c) for c in row])


def _json_default(obj):
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _solution_rows(domain: Domain, values: np.ndarray):
    for i in range(domain.n_interior):
        coords = tuple(domain.interior_points[i])
        yield (i, *coords, domain.distances[i], domain.volumes[i], values[i])


def _solution_header(domain: Domain):
    coords = ("x",) if domain.dim == 1 else ("x", "y")
    return ("node", *coords, "distance", "volume", "value")


def run_solve(cfg: RunConfig, out_dir: str, formats) -> int:
    domain = cfg.build_domain()
    potential = cfg.build_potential()
    measure = cfg.build_measure(domain)
    u, diag = solve_truncated_limit(
        domain, potential, measure, cfg.build_schedule(),
        method=cfg.solver_method, solver_tol=cfg.solver_tol,
    )
    tr = normal_derivative(domain, u, order=cfg.trace_order)
    v_final = np.minimum(sample(potential, domain), diag.final_level)
    flux_residual = green_identity_residual(
        domain, u, potential, measure, lambda pts: np.ones(pts.shape[0]),
        order=cfg.trace_order, operator=assemble_from_values(domain, v_final),
    )
    if "csv" in formats:
        _write_csv(os.path.join(out_dir, "solution.csv"),
                   _solution_header(domain), _solution_rows(domain, u.values))
        _write_csv(os.path.join(out_dir, "trace.csv"),
                   ("boundary", "coord", "value", "surface_weight"),
                   trace_csv_rows(tr))
    if "json" in formats:
        _write_json(os.path.join(out_dir, "solve.json"), {
            "config": cfg.echo(),
            "total_variation": total_variation(measure, domain),
            "trace_l1": trace_l1_norm(tr),
            "flux_residual": flux_residual,
            "schedule": {
                "levels": list(diag.levels),
                "l1_distances": list(diag.l1_distances),
                "monotone": diag.monotone,
                "converged": diag.converged,
                "final_level": diag.final_level,
                "saturated": diag.saturated,
            },
        })
    return 0


def run_kernel(cfg: RunConfig, out_dir: str, formats) -> int:
    domain = cfg.build_domain()
    potential = cfg.build_potential()
    kset = kernel_set(
        domain, potential, cfg.sample_indices(domain), cfg.build_schedule(),
        solver_tol=cfg.solver_tol, method=cfg.solver_method,
    )
    if "csv" in formats:
        _write_csv(os.path.join(out_dir, "kernels.csv"),
                   ("boundary", "node", "value"), kernel_csv_rows(kset))
    if "json" in formats:
        summary = kernel_summary(kset)
        summary["config"] = cfg.echo()
        _write_json(os.path.join(out_dir, "kernels.json"), summary)
    return 0


def _run_check(name: str, cfg: RunConfig, domain: Domain) -> VerifyReport:
    potential = cfg.build_potential()
    schedule = cfg.build_schedule()
    kwargs = {"solver_tol": cfg.solver_tol, "method": cfg.solver_method}
    if name == "representation":
        return representation_check(
            domain, potential, cfg.build_measure(domain),
            cfg.sample_indices(domain), schedule, **kwargs,
        )
    if name == "inequalities":
        return inequality_suite(domain, potential, cfg.build_measure(domain), schedule, **kwargs)
    if name == "hopf":
        return hopf_check(
            domain, potential, cfg.build_measure(domain), schedule,
            refinements=cfg.hopf_refinements, **kwargs,
        )
    if name == "hopf_certificate":
        return hopf_certificate(
            domain, potential, refinements=cfg.certificate_refinements, **kwargs
        )
    if name == "comparison":
        idx = cfg.sample_indices(domain)
        a = int(idx[0]) if idx is not None else 0
        v = duality_kernel(domain, potential, a, schedule, solver_tol=cfg.solver_tol,
                           method=cfg.solver_method)
        return comparison_check(
            domain, potential, v, alpha=cfg.comparison_alpha,
            epsilon=cfg.comparison_epsilon, schedule=schedule, **kwargs,
        )
    if name == "energy":
        return energy_check(
            domain, potential, cfg.build_measure(domain), seed=cfg.seed, **kwargs
        )
    raise ConfigError(f"config key 'checks': unknown check {name!r}")


def run_verify(cfg: RunConfig, out_dir: str, formats) -> int:
    domain = cfg.build_domain()
    reports = [_run_check(name, cfg, domain) for name in cfg.checks]
    if "csv" in formats:
        for report in reports:
            _write_csv(os.path.join(out_dir, f"{report.check}.csv"),
                       ("case", "left", "right", "residual", "tolerance", "passed"),
                       report_csv_rows(report))
    if "json" in formats:
        _write_json(os.path.join(out_dir, "report.json"), {
            "config": cfg.echo(),
            "passed": all(r.passed for r in reports),
            "checks": [r.to_dict() for r in reports],
        })
    return suite_exit_status(reports)


def _study_residual(report: VerifyReport) -> float:
    residuals = [c.residual for c in report.cases]
    return max(residuals) if residuals else 0.0


def _study_level(report: VerifyReport) -> float:
    if "final_level" in report.details:
        return float(report.details["final_level"])
    if report.table:
        return float(report.table[-1].level)
    return 0.0


def run_study(cfg: RunConfig, out_dir: str, formats, levels: int | None) -> int:
    if len(cfg.checks) != 1:
        raise ConfigError("config key 'checks': a study runs exactly one check")
    n_levels = levels if levels is not None else cfg.study_levels
    if n_levels < 2:
        raise ConfigError("config key 'study.levels': levels must refine (need >= 2)")
    name = cfg.checks[0]
    domains = [cfg.build_domain()]
    for _ in range(n_levels - 1):
        domains.append(domains[-1].refine())
    if not all(b.h < a.h for a, b in zip(domains, domains[1:])):
        raise ConfigError("config key 'study.levels': levels must refine")

    rows = []
    reports = []
    for d in domains:
        report = _run_check(name, cfg, d)
        reports.append(report)
        rows.append((d.h, _study_level(report), _study_residual(report)))

    orders = []
    for (_, _, r0), (_, _, r1) in zip(rows, rows[1:]):
        if r1 > 0.0 and r0 > 0.0:
            orders.append(float(np.log2(r0 / r1)))
        else:
            orders.append(float("inf"))
    floor = 10.0 * cfg.solver_tol
    at_floor = all(r <= floor for _, _, r in rows)
    if at_floor:
        observed = float("inf")  # residuals sit at the solver floor; no h-dependence
    elif rows[-1][2] > 0.0:
        observed = float(np.log2(rows[0][2] / rows[-1][2]) / (len(rows) - 1))
    else:
        observed = float("inf")

    if "csv" in formats:
        _write_csv(os.path.join(out_dir, "study.csv"), ("h", "k", "residual"), rows)
    if "json" in formats:
        _write_json(os.path.join(out_dir, "study.json"), {
            "config": cfg.echo(),
            "check": name,
            "rows": [{"h": h, "k": k, "residual": r} for h, k, r in rows],
            "pairwise_orders": orders,
            "observed_order": observed,
            "at_solver_floor": at_floor,
            "passed": all(r.passed for r in reports),
        })
    return suite_exit_status(reports)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stlab",
        description="Grid laboratory for Dirichlet problems with measure data "
                    "and singular absorption: solves, boundary-flux kernels, "
                    "and theorem-level check suites.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("solve", "solve the configured problem; write solution and trace"),
        ("kernel", "compute duality kernels for the sampled boundary nodes"),
        ("verify", "run the configured checks; exit 0 iff all pass"),
        ("study", "repeat one check across grid refinements"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the run config")
        p.add_argument("--out", default=None, help="output directory (default: config 'out')")
        p.add_argument("--format", default=None,
                       help="comma list of output formats: csv,json")
        if name == "study":
            p.add_argument("--levels", type=int, default=None,
                           help="number of refinement levels (default: config 'study.levels')")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out_dir = args.out if args.out is not None else cfg.out_dir
        if args.format is not None:
            formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
            for f in formats:
                if f not in ("csv", "json"):
                    raise ConfigError(f"--format: unknown format {f!r}")
        else:
            formats = cfg.formats
        os.makedirs(out_dir, exist_ok=True)
        if args.command == "solve":
            return run_solve(cfg, out_dir, formats)
        if args.command == "kernel":
            return run_kernel(cfg, out_dir, formats)
        if args.command == "verify":
            return run_verify(cfg, out_dir, formats)
        return run_study(cfg, out_dir, formats, args.levels)
    except (ConfigError, DomainError, MeasureError, PotentialError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
