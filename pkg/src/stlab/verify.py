"""Theorem-level checks: representation identity, inequality suite, boundary
positivity (Hopf) in both the positive and the obstructed regime, the
certificate construction for boundary positivity, and the comparison bound.

Every check returns a VerifyReport: named cases with left/right values,
residuals and pass flags, an optional refinement table, and for the boundary
positivity checks a verdict string ("positive", "obstruction",
"no_solution_expected", "inconclusive").  A report passes iff every case's
residual is within its tolerance; verdicts classify, they do not fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import Domain
from .fields import Field
from .kernel import (
    kernel_set,
    positivity_set,
    resolve_samples,
    schedule_kernel_run,
    trace_sources,
)
from .measure import (
    Measure,
    density_measure,
    is_nonnegative,
    load_vector,
    split_signed,
    table_density,
    total_variation,
    uniform_density,
)
from .operator import (
    DEFAULT_TOL,
    ScheduleSolver,
    assemble,
    energy,
    solve_truncated_limit,
)
from .potential import Potential, TruncationSchedule, sample, weighted_l1, zero_potential
from .trace import normal_derivative, trace_l1_norm

SLACK_RATE = 5.0  # discretization slack factor (1 + SLACK_RATE * h) on the estimates


@dataclass(frozen=True)
class CheckCase:
    name: str
    left: float
    right: float
    residual: float
    tolerance: float
    passed: bool
    inputs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RefinementRow:
    h: float
    level: float
    residual: float


@dataclass(frozen=True)
class VerifyReport:
    check: str
    cases: tuple
    table: tuple = ()
    verdict: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "passed": bool(self.passed),
            "verdict": self.verdict,
            "cases": [
                {
                    "name": c.name,
                    "left": c.left,
                    "right": c.right,
                    "residual": c.residual,
                    "tolerance": c.tolerance,
                    "passed": bool(c.passed),
                    "inputs": c.inputs,
                }
                for c in self.cases
            ],
            "table": [
                {"h": r.h, "level": r.level, "residual": r.residual} for r in self.table
            ],
            "details": self.details,
        }


def _case(name: str, residual: float, tolerance: float, left: float = 0.0,
          right: float = 0.0, **inputs) -> CheckCase:
    residual = float(residual)
    return CheckCase(
        name=name,
        left=float(left),
        right=float(right),
        residual=residual,
        tolerance=float(tolerance),
        passed=bool(residual <= tolerance),
        inputs=inputs,
    )


def _bound_case(name: str, value: float, bound: float, **inputs) -> CheckCase:
    """Case asserting value <= bound; residual is the (clipped) excess."""
    return _case(name, max(float(value) - float(bound), 0.0), 0.0,
                 left=value, right=bound, **inputs)


def _final_operator(solver: ScheduleSolver, diag) -> "object":
    """Operator of the last level the schedule actually solved."""
    levels = solver.schedule.levels()
    j = levels.index(diag.final_level)
    op = solver.operator_at(j)
    while op is None and j > 0:  # saturated level: the previous operator is identical
        j -= 1
        op = solver.operator_at(j)
    return op


def representation_check(
    domain: Domain,
    potential: Potential,
    measure: Measure,
    samples=None,
    schedule: TruncationSchedule | None = None,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> VerifyReport:
    """Trace of the solve versus kernel pairing, one case per sampled boundary node.

    Both sides are evaluated with the same truncation level, so for measures
    without atoms the identity is algebraic and the tolerance is
    10 * solver_tol * max(1, total variation).  Measures with atoms are the
    continuum branch: the residual is recorded per grid (tolerance infinite
    here) and is expected to shrink under refinement, which refinement studies
    assert.
    """
    idx = resolve_samples(domain, samples)
    rhs = trace_sources(domain, idx)
    if potential.is_bounded():
        op = assemble(domain, potential)
        kernels = op.solve_load(rhs, method=method, tol=solver_tol)
        final_level = float(potential.bound)
    else:
        solver = ScheduleSolver(domain, potential, schedule, solver_tol, method)
        mats, diag = schedule_kernel_run(solver, rhs, stop_early=True)
        kernels = mats[-1]
        op = _final_operator(solver, diag)
        final_level = diag.final_level
    u = Field(domain, op.solve_load(load_vector(measure, domain), method=method, tol=solver_tol))
    tr = normal_derivative(domain, u).values
    paired = kernels.T @ load_vector(measure, domain)

    atomic = bool(measure.atoms)
    tv = total_variation(measure, domain)
    tol = float("inf") if atomic else 10.0 * solver_tol * max(1.0, tv)
    cases = []
    for col, a in enumerate(idx):
        left = float(tr[a])
        right = float(paired[col])
        cases.append(_case(
            f"boundary_node_{int(a)}",
            abs(left - right),
            tol,
            left=left,
            right=right,
            boundary_index=int(a),
        ))
    worst = max((c.residual for c in cases), default=0.0)
    return VerifyReport(
        check="representation",
        cases=tuple(cases),
        table=(RefinementRow(h=domain.h, level=final_level, residual=worst),),
        details={
            "branch": "continuum" if atomic else "grid_density",
            "final_level": final_level,
            "total_variation": tv,
            "max_residual": worst,
        },
    )


def inequality_suite(
    domain: Domain,
    potential: Potential,
    measure: Measure,
    schedule: TruncationSchedule | None = None,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> VerifyReport:
    """Mass-controlled estimate suite with discretization slack (1 + 5h).

    Asserts: absorbed mass <= total variation; boundary-trace L1 norm
    <= 2 * total variation; the double integral of kernel pairings against the
    variation measure over the boundary <= 2 * total variation; and the kernel
    comparison 0 <= P_a <= K_a nodewise over all boundary nodes.
    """
    tv = total_variation(measure, domain)
    if not np.isfinite(tv):
        raise ValueError("inequality suite needs a finite measure")
    slack = 1.0 + SLACK_RATE * domain.h
    u, diag = solve_truncated_limit(
        domain, potential, measure, schedule, method=method, solver_tol=solver_tol
    )
    v_final = np.minimum(sample(potential, domain), diag.final_level)
    absorbed = float(np.sum(v_final * np.abs(u.values) * domain.system_weights))
    tr = normal_derivative(domain, u)
    kset = kernel_set(domain, potential, None, schedule, with_reference=True,
                      solver_tol=solver_tol, method=method)
    pos, neg = split_signed(measure, domain)
    pair_abs = kset.pair_measure(pos) + kset.pair_measure(neg)
    fatou = float(np.sum(domain.surface_weights * pair_abs))
    upper_excess = float(np.max(kset.kernels - kset.reference))
    lower_excess = float(np.max(-kset.kernels))

    cases = (
        _bound_case("absorption_l1", absorbed, tv * slack, total_variation=tv),
        _bound_case("trace_l1", trace_l1_norm(tr), 2.0 * tv * slack, total_variation=tv),
        _bound_case("fatou_boundary", fatou, 2.0 * tv * slack, total_variation=tv),
        _case("kernel_upper", max(upper_excess, 0.0), 1e-8,
              left=upper_excess, right=1e-8),
        _case("kernel_lower", max(lower_excess, 0.0), 1e-8,
              left=lower_excess, right=1e-8),
    )
    return VerifyReport(
        check="inequalities",
        cases=cases,
        details={
            "total_variation": tv,
            "slack": slack,
            "final_level": diag.final_level,
            "monotone": diag.monotone,
        },
    )


def _trace_extrema(domain: Domain, u: Field) -> tuple[float, float]:
    """Min and max of the boundary trace, corners excluded on the rectangle."""
    tr = normal_derivative(domain, u).values
    keep = ~domain.corner_mask
    vals = tr[keep]
    return float(np.min(vals)), float(np.max(vals))


def _trace_levels(domain: Domain, potential: Potential, measure: Measure,
                  schedule, solver_tol: float, method: str):
    """Per-level (level, trace min, trace max) rows plus schedule diagnostics."""
    solver = ScheduleSolver(domain, potential, schedule, solver_tol, method)
    load = load_vector(measure, domain)
    tv = total_variation(measure, domain)
    u, diag = solver.limit(load, stop_tol=1e-8 * max(tv, 1.0), check_monotone=True)
    # replay the cached operators to record the per-level trace extrema
    rows = []
    for j, level in enumerate(diag.levels):
        op = solver.operator_at(j)
        if op is None:  # saturated level: identical discrete problem
            rows.append((float(level), rows[-1][1], rows[-1][2]))
            continue
        uj = Field(domain, op.solve_load(load, method=method, tol=solver_tol))
        lo, hi = _trace_extrema(domain, uj)
        rows.append((float(level), lo, hi))
    return Field(domain, u), diag, rows


def hopf_check(
    domain: Domain,
    potential: Potential,
    measure: Measure,
    schedule: TruncationSchedule | None = None,
    refinements: int = 1,
    positive_floor: float = 1e-12,
    positivity_threshold: float = 1e-10,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> VerifyReport:
    """Boundary positivity of the schedule-limit trace for nonnegative data.

    Verdicts: "positive" when the minimum trace stays above the floor and
    varies by less than 20% across the last two grids; "obstruction" when the
    maximum trace decreases strictly through the whole schedule without the
    schedule converging (mass crushed by the singularity); otherwise
    "inconclusive".  When every atom of the measure sits outside the computed
    positivity set and there is no density part, the verdict is
    "no_solution_expected" and no classification is attempted.
    """
    if measure.is_zero():
        raise ValueError("boundary positivity needs a nonzero measure")
    if not is_nonnegative(measure, domain):
        raise ValueError("boundary positivity is stated for nonnegative measures")

    mask = positivity_set(
        domain, potential, schedule,
        threshold=positivity_threshold, solver_tol=solver_tol, method=method,
    )
    if measure.density is None and measure.atoms:
        outside = []
        for loc, _ in measure.atoms:
            nodes, weights = domain.interp_weights(np.asarray(loc))
            outside.append(not np.any(mask[nodes[weights > 0.0]]))
        if all(outside):
            return VerifyReport(
                check="hopf",
                cases=(),
                verdict="no_solution_expected",
                details={"positivity_fraction": float(np.mean(mask))},
            )

    grids = [domain]
    for _ in range(max(refinements, 0)):
        grids.append(grids[-1].refine())

    per_grid = []
    table = []
    cases = []
    for g in grids:
        u, diag, rows = _trace_levels(g, potential, measure, schedule, solver_tol, method)
        lo, hi = _trace_extrema(g, u)
        per_grid.append({
            "h": g.h,
            "resolution": dict(g.resolution),
            "levels": [r[0] for r in rows],
            "trace_min": [r[1] for r in rows],
            "trace_max": [r[2] for r in rows],
            "limit_min": lo,
            "limit_max": hi,
            "converged": diag.converged,
        })
        table.append(RefinementRow(h=g.h, level=diag.final_level, residual=lo))
        cases.append(_case(
            f"trace_nonnegative_h_{g.h:.6g}", max(-lo, 0.0), solver_tol * 100.0,
            left=lo, right=0.0,
        ))

    verdict = "inconclusive"
    last = per_grid[-1]
    if len(per_grid) >= 2:
        a, b = per_grid[-2]["limit_min"], per_grid[-1]["limit_min"]
        stable = abs(a - b) <= 0.2 * max(abs(a), abs(b), positive_floor)
        if a > positive_floor and b > positive_floor and stable and last["converged"]:
            verdict = "positive"
    elif last["limit_min"] > positive_floor and last["converged"]:
        verdict = "positive"
    if verdict == "inconclusive":
        maxes = last["trace_max"]
        decreasing = len(maxes) >= 2 and all(
            later < earlier for earlier, later in zip(maxes, maxes[1:])
        )
        if decreasing and not last["converged"]:
            verdict = "obstruction"

    return VerifyReport(
        check="hopf",
        cases=tuple(cases),
        table=tuple(table),
        verdict=verdict,
        details={
            "grids": per_grid,
            "positivity_fraction": float(np.mean(mask)),
        },
    )


def hopf_certificate(
    domain: Domain,
    potential: Potential,
    refinements: int = 2,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> VerifyReport:
    """Certificate for boundary positivity: the unit-source zero-potential
    profile must pair integrably with the potential and have strictly positive
    trace.

    The pairing integral is evaluated on a ladder of refined grids; the
    certificate requires the ladder to look convergent (final/previous value
    ratio below 1.5 AND the increments decaying) and the minimum trace of the
    profile to be positive.  The distance-weighted L1 norm of the potential is
    reported alongside as the classical sufficient condition.
    """
    from .potential import ladder_diverges

    source = density_measure(uniform_density(1.0))
    grids = [domain]
    for _ in range(max(refinements, 1)):
        grids.append(grids[-1].refine())
    history = []
    theta = None
    for g in grids:
        theta = Field(g, assemble(g, zero_potential()).solve_load(
            load_vector(source, g), method=method, tol=solver_tol))
        history.append(float(np.sum(sample(potential, g) * theta.values * g.volumes)))
    divergent = ladder_diverges(history)
    ratios = [b / a if abs(a) > 0.0 else 1.0 for a, b in zip(history, history[1:])]
    lo, _ = _trace_extrema(grids[-1], theta)
    certified = (not divergent) and lo > 0.0

    wl1 = weighted_l1(potential, domain)
    # hard invariants: the profile's trace is positive by the maximum
    # principle, and the distance-weighted norm is a sufficient condition,
    # so its convergence forces certification
    cases = (
        _case("trace_positive", max(-lo, 0.0) if lo <= 0.0 else 0.0, 0.0,
              left=lo, right=0.0),
        _case("sufficient_condition_consistent",
              1.0 if (not wl1.divergent and not certified) else 0.0, 0.0,
              left=float(not wl1.divergent), right=float(certified)),
    )
    return VerifyReport(
        check="hopf_certificate",
        cases=cases,
        verdict="certified" if certified else "rejected",
        details={
            "pairing_history": history,
            "pairing_ratios": ratios,
            "divergent": bool(divergent),
            "trace_min": lo,
            "weighted_l1": float(wl1) if not wl1.divergent else None,
            "weighted_l1_divergent": bool(wl1.divergent),
        },
    )


def comparison_check(
    domain: Domain,
    potential: Potential,
    v,
    alpha: float = 0.5,
    epsilon: float | None = None,
    schedule: TruncationSchedule | None = None,
    tol: float = 1e-8,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> VerifyReport:
    """Lower comparison bound: a nonnegative field dominates the solution whose
    source is the concave clipped power of the field itself, for small enough
    coefficient.

    The source shape min(v, 1)^alpha is solved once; scaling the coefficient
    scales the solution linearly, so the largest admissible coefficient is
    located by a bracketed 20-step bisection on that one solve.  The reported
    pass case asserts the bound at the requested coefficient (default: half
    the located threshold).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if epsilon is not None and epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    vv = v.values if isinstance(v, Field) else np.asarray(v, dtype=float)
    if vv.shape != (domain.n_interior,):
        raise ValueError("comparison field does not match the domain")
    if float(np.min(vv)) < -1e-9:
        raise ValueError("comparison field must be nonnegative")
    shape = np.minimum(np.maximum(vv, 0.0), 1.0) ** alpha

    zeta, _ = solve_truncated_limit(
        domain, potential, density_measure(table_density(shape)),
        schedule, method=method, solver_tol=solver_tol,
    )
    zs = zeta.values
    peak = float(np.max(zs))

    def feasible(eps: float) -> bool:
        return bool(np.all(eps * zs <= vv + tol))

    if peak <= solver_tol:
        threshold = float("inf")
    else:
        hi = 1.0
        while feasible(hi) and hi < 2.0 ** 60:
            hi *= 2.0
        lo = 0.0
        for _ in range(20):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        threshold = lo

    eps_used = epsilon if epsilon is not None else (
        0.5 * threshold if np.isfinite(threshold) else 1.0
    )
    excess = float(np.max(eps_used * zs - vv))
    cases = (
        _case("domination", max(excess, 0.0), tol, left=excess, right=tol,
              epsilon=eps_used, alpha=alpha),
        _case("threshold_positive", 0.0 if threshold > 0.0 else 1.0, 0.0,
              left=threshold, right=0.0),
    )
    return VerifyReport(
        check="comparison",
        cases=cases,
        details={
            "threshold": threshold,
            "epsilon": eps_used,
            "alpha": alpha,
            "solution_peak": peak,
        },
    )


def energy_check(
    domain: Domain,
    potential: Potential,
    source: Measure,
    n_perturbations: int = 100,
    seed: int = 0,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> VerifyReport:
    """The solve minimizes the quadratic energy: random perturbations only
    increase it.  Density sources only."""
    op = assemble(domain, potential)
    load = load_vector(source, domain)
    u = op.solve_load(load, method=method, tol=solver_tol)
    base = energy(domain, potential, source, u)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_perturbations):
        w = rng.standard_normal(domain.n_interior)
        w *= 0.1 / max(float(np.max(np.abs(w))), 1e-300)
        worst = min(worst, energy(domain, potential, source, u + w) - base)
    cases = (
        _case("minimum", max(-worst, 0.0), 1e-12 * max(abs(base), 1.0),
              left=base, right=base + worst),
    )
    return VerifyReport(
        check="energy",
        cases=cases,
        details={"energy": float(base), "worst_perturbation_gain": float(worst)},
    )


def report_csv_rows(report: VerifyReport):
    """Tabular rows (case, left, right, residual, tolerance, passed)."""
    for c in report.cases:
        yield c.name, c.left, c.right, c.residual, c.tolerance, int(c.passed)


def suite_exit_status(reports) -> int:
    return 0 if all(r.passed for r in reports) else 1
