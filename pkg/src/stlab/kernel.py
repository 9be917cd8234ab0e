"""Duality kernels: boundary representation densities from adjoint solves.

The kernel of a boundary node a is the interior field whose volume-weighted
pairing with any density f equals the inward-normal trace at a of the solution
driven by f.  The assembled system is symmetric, so the kernel comes from one
plain solve against the trace-extraction vector of a, and the pairing identity
is algebraically exact up to solver tolerance.  With zero potential the
kernels are discrete harmonic measure densities (the Poisson kernel on the
disk); with absorption they can only shrink, never grow, by inverse
monotonicity of the M-matrix system.

Singular potentials go through the truncation schedule: the kernels decrease
nodewise with the level, and the run stops when the decrease falls below
1e-8 times the first-level peak, or when truncation stops changing the
sampled potential (the levels have passed its grid maximum).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Domain, DomainError
from .fields import Field
from .measure import Measure, density_measure, load_vector, uniform_density
from .operator import (
    DEFAULT_TOL,
    DiscreteOperator,
    ScheduleSolver,
    TruncationDiagnostics,
    assemble,
    solve_truncated_limit,
)
from .potential import Potential, TruncationSchedule, zero_potential
from .trace import trace_matrix

DEGENERACY_FACTOR = 1e-10
KERNEL_STOP_FACTOR = 1e-8
MONOTONE_TOL = 1e-9


def resolve_samples(domain: Domain, samples=None) -> np.ndarray:
    """Normalize a boundary sample selection to an index array (None = all)."""
    if samples is None:
        return np.arange(domain.n_boundary)
    idx = np.atleast_1d(np.asarray(samples, dtype=int))
    if idx.ndim != 1 or idx.size == 0:
        raise DomainError("boundary samples must be a nonempty list of indices")
    if np.any(idx < 0) or np.any(idx >= domain.n_boundary):
        raise DomainError("boundary sample index out of range")
    return idx


def trace_sources(domain: Domain, samples=None) -> np.ndarray:
    """Adjoint right-hand sides: column per sampled boundary node, holding the
    trace-extraction vector (the node's row of the first-order trace matrix)."""
    idx = resolve_samples(domain, samples)
    return trace_matrix(domain, order=1)[idx].T.toarray()


@dataclass(frozen=True)
class KernelSet:
    """Duality kernels for a set of boundary nodes, one column per node.

    ``reference`` holds the zero-potential kernels on the same samples when
    requested; the degeneracy flag marks kernels whose L1 norm fell below
    1e-10 times the reference norm (absorption killed the boundary node).
    """

    domain: Domain
    samples: np.ndarray
    kernels: np.ndarray
    potential_label: str
    reference: np.ndarray | None
    degenerate: np.ndarray

    def index_of(self, a: int) -> int:
        hits = np.nonzero(self.samples == a)[0]
        if hits.size == 0:
            raise DomainError(f"boundary node {a} is not in this kernel set")
        return int(hits[0])

    def kernel(self, a: int) -> Field:
        return Field(self.domain, self.kernels[:, self.index_of(a)].copy())

    def reference_kernel(self, a: int) -> Field:
        if self.reference is None:
            raise ValueError("kernel set was built without the zero-potential reference")
        return Field(self.domain, self.reference[:, self.index_of(a)].copy())

    def l1_norms(self) -> np.ndarray:
        return np.abs(self.kernels).T @ self.domain.volumes

    def pair_measure(self, measure: Measure) -> np.ndarray:
        """Pairing of every kernel with a measure: densities by volume
        quadrature, atoms by multilinear interpolation of the kernel."""
        return self.kernels.T @ load_vector(measure, self.domain)

    def pair_density_values(self, values) -> np.ndarray:
        f = np.asarray(values, dtype=float)
        return self.kernels.T @ (f * self.domain.volumes)


def schedule_kernel_run(
    solver: ScheduleSolver,
    rhs: np.ndarray,
    stop_early: bool = True,
) -> tuple[list[np.ndarray], TruncationDiagnostics]:
    """Solve the adjoint system at each schedule level; one matrix per level run.

    Saturated levels (truncation no longer changes the sampled potential) reuse
    the previous solution: the discrete problem is identical, so recomputing
    could only add factorization noise.  The solver caches the per-level
    operators, so callers can retrieve the one matching any reported level.
    """
    levels = solver.schedule.levels()
    vol = solver.domain.volumes
    mats: list[np.ndarray] = []
    run, dists = [], []
    scale = None
    monotone = True
    saturated = False
    converged = False
    for j, level in enumerate(levels):
        op = solver.operator_at(j)
        if op is None:
            saturated = True
            converged = True
            if stop_early:
                break
            mats.append(mats[-1])
            run.append(level)
            dists.append(0.0)
            continue
        P = op.solve_load(rhs, method=solver.method, tol=solver.solver_tol)
        if scale is None:
            scale = max(float(np.max(np.abs(P))), 1e-300)
        if mats:
            prev = mats[-1]
            if np.any(P > prev + MONOTONE_TOL):
                monotone = False
            drop = float(np.max(np.abs(P - prev)))
            dists.append(float(np.max(np.abs(P - prev).T @ vol)))
            if drop < KERNEL_STOP_FACTOR * scale:
                converged = True
                mats.append(P)
                run.append(level)
                if stop_early:
                    break
                continue
        mats.append(P)
        run.append(level)
    return mats, TruncationDiagnostics(
        levels=tuple(run),
        l1_distances=tuple(dists),
        monotone=monotone,
        converged=converged,
        final_level=run[-1],
        saturated=saturated,
    )


def kernel_schedule(
    domain: Domain,
    potential: Potential,
    samples=None,
    schedule: TruncationSchedule | None = None,
    stop_early: bool = True,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> tuple[list[np.ndarray], TruncationDiagnostics]:
    """Batched truncation run: list of (n_interior, n_samples) kernel arrays,
    one per schedule level actually solved, plus diagnostics."""
    rhs = trace_sources(domain, samples)
    solver = ScheduleSolver(domain, potential, schedule, solver_tol, method)
    return schedule_kernel_run(solver, rhs, stop_early)


def kernel_set(
    domain: Domain,
    potential: Potential,
    samples=None,
    schedule: TruncationSchedule | None = None,
    with_reference: bool = True,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> KernelSet:
    """Duality kernels for the sampled boundary nodes (all nodes by default)."""
    idx = resolve_samples(domain, samples)
    rhs = trace_sources(domain, idx)
    if potential.is_bounded():
        op = assemble(domain, potential)
        P = op.solve_load(rhs, method=method, tol=solver_tol)
    else:
        solver = ScheduleSolver(domain, potential, schedule, solver_tol, method)
        mats, _ = schedule_kernel_run(solver, rhs, stop_early=True)
        P = mats[-1]
    if potential.family == "zero":
        ref = P
    elif with_reference:
        ref_op = assemble(domain, zero_potential())
        ref = ref_op.solve_load(rhs, method=method, tol=solver_tol)
    else:
        ref = None
    l1 = np.abs(P).T @ domain.volumes
    if ref is not None:
        ref_l1 = np.abs(ref).T @ domain.volumes
        degenerate = l1 < DEGENERACY_FACTOR * np.maximum(ref_l1, 1e-300)
    else:
        degenerate = l1 < DEGENERACY_FACTOR * max(float(l1.max()), 1e-300)
    return KernelSet(
        domain=domain,
        samples=idx,
        kernels=P,
        potential_label=potential.label,
        reference=ref,
        degenerate=degenerate,
    )


def duality_kernel(
    domain: Domain,
    potential: Potential,
    a: int,
    schedule: TruncationSchedule | None = None,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> Field:
    """Kernel of one boundary node; schedule limit when the potential is unbounded."""
    kset = kernel_set(domain, potential, [a], schedule, with_reference=False,
                      solver_tol=solver_tol, method=method)
    return Field(domain, kset.kernels[:, 0])


def harmonic_kernel(domain: Domain, a: int, solver_tol: float = DEFAULT_TOL, method: str = "auto") -> Field:
    """Zero-potential kernel: the discrete harmonic measure density of node a."""
    return duality_kernel(domain, zero_potential(), a, solver_tol=solver_tol, method=method)


def truncation_kernels(
    domain: Domain,
    potential: Potential,
    a: int,
    schedule: TruncationSchedule | None = None,
    stop_early: bool = True,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> list[Field]:
    """Kernels of node a along the truncation schedule, nodewise non-increasing;
    the last entry is the schedule limit returned by duality_kernel."""
    rhs = trace_sources(domain, [a])
    solver = ScheduleSolver(domain, potential, schedule, solver_tol, method)
    mats, _ = schedule_kernel_run(solver, rhs, stop_early)
    return [Field(domain, m[:, 0].copy()) for m in mats]


def positivity_set(
    domain: Domain,
    potential: Potential,
    schedule: TruncationSchedule | None = None,
    threshold: float = 1e-10,
    solver_tol: float = DEFAULT_TOL,
    method: str = "auto",
) -> np.ndarray:
    """Mask of nodes where the unit-density schedule limit stays positive.

    Nodes below ``threshold`` times the peak value are treated as crushed by
    the potential (the strong maximum principle failed there).
    """
    source = density_measure(uniform_density(1.0))
    u, _ = solve_truncated_limit(
        domain, potential, source, schedule, method=method, solver_tol=solver_tol
    )
    peak = float(np.max(u.values))
    if peak <= 0.0:
        return np.zeros(domain.n_interior, dtype=bool)
    return u.values > threshold * peak


def subsolution_defect(kset: KernelSet, operator: DiscreteOperator) -> float:
    """Largest value of (-laplace_h + V) P_a over nodes away from the boundary
    layer, where the kernels are discrete subsolutions (the adjoint source
    lives on the boundary-adjacent nodes, which are excluded)."""
    domain = kset.domain
    resid = (operator.system @ kset.kernels) / domain.system_weights[:, None]
    mask = np.ones(domain.n_interior, dtype=bool)
    mask[domain.first_neighbor] = False
    if not np.any(mask):
        return 0.0
    return float(np.max(resid[mask, :]))


def kernel_csv_rows(kset: KernelSet):
    """Rows (boundary index, interior node index, kernel value)."""
    for col, a in enumerate(kset.samples):
        for i in range(kset.domain.n_interior):
            yield int(a), i, kset.kernels[i, col]


def kernel_summary(kset: KernelSet) -> dict:
    """JSON-ready summary: per-node min, max, L1 norm, degeneracy flag."""
    l1 = kset.l1_norms()
    return {
        "domain": kset.domain.kind,
        "resolution": dict(kset.domain.resolution),
        "potential": kset.potential_label,
        "n_samples": int(kset.samples.size),
        "with_reference": kset.reference is not None,
        "kernels": [
            {
                "boundary_index": int(a),
                "min": float(kset.kernels[:, col].min()),
                "max": float(kset.kernels[:, col].max()),
                "l1_norm": float(l1[col]),
                "degenerate": bool(kset.degenerate[col]),
            }
            for col, a in enumerate(kset.samples)
        ],
    }
