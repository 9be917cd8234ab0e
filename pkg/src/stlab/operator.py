"""Assembly and solution of the Dirichlet problem -laplace(u) + V u = mu.

The system is kept in integrated (flux) form ``K u = load``: K sums the face
difference coefficients of the grid plus ``diag(V * system_weights)``, and the
load vector holds cell integrals of the measure.  On the interval and the
square K is ``h^dim`` times the standard 3/5-point stencil matrix (which is
what ``DiscreteOperator.matrix`` exposes there); on the disk K itself is the
symmetric flux-form polar operator.  Either way K is symmetric positive
definite, the discrete maximum principle holds, and the adjoint solve used by
duality kernels is a plain solve with K.

Solves default to a cached sparse LU factorization (one factorization serves
every right-hand side, which kernel sets rely on); conjugate gradients with a
Jacobi preconditioner is available as ``method="cg"``.  Both paths enforce the
relative-residual postcondition.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import zip_longest

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain import Domain
from .fields import Field
from .measure import Measure, is_nonnegative, load_vector, split_signed, total_variation
from .potential import Potential, PotentialError, TruncationSchedule, sample, truncate

DEFAULT_TOL = 1e-10
DIRECT_LIMIT = 200_000


class SolverError(RuntimeError):
    pass


def _stiffness(domain: Domain) -> sp.csc_matrix:
    """Symmetric face-difference form of the Laplacian with Dirichlet closure."""
    if domain._stiffness is not None:
        return domain._stiffness
    p = domain.faces[:, 0]
    q = domain.faces[:, 1]
    c = domain.face_coefs
    bi = domain.bface_interior
    bc = domain.bface_coefs
    rows = np.concatenate([p, q, p, q, bi])
    cols = np.concatenate([p, q, q, p, bi])
    data = np.concatenate([c, c, -c, -c, bc])
    ni = domain.n_interior
    K = sp.coo_matrix((data, (rows, cols)), shape=(ni, ni)).tocsc()
    domain._stiffness = K
    return K


class DiscreteOperator:
    """Assembled symmetric positive-definite operator for one potential sample."""

    def __init__(self, domain: Domain, v_values: np.ndarray, label: str = ""):
        v_values = np.asarray(v_values, dtype=float)
        if v_values.shape != (domain.n_interior,):
            raise PotentialError("potential sample does not match the domain")
        if np.any(v_values < 0.0) or not np.all(np.isfinite(v_values)):
            raise PotentialError("potential sample must be finite and nonnegative")
        self.domain = domain
        self.v_values = v_values
        self.label = label
        self.system = (_stiffness(domain) + sp.diags(v_values * domain.system_weights)).tocsc()
        self._lu = None

    @property
    def matrix(self) -> sp.csc_matrix:
        """Spec-facing symmetric matrix: the pointwise stencil on interval and
        rectangle (diag 2/h^2 resp. 4/h^2 for V=0), the flux form on the disk."""
        if self.domain.kind == "disk":
            return self.system
        return self.system / (self.domain.h ** self.domain.dim)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Pointwise application (-laplace_h + V) u."""
        return (self.system @ np.asarray(u, dtype=float)) / self.domain.system_weights

    def solve_load(
        self,
        load: np.ndarray,
        method: str = "auto",
        tol: float = DEFAULT_TOL,
        max_iter: int | None = None,
    ) -> np.ndarray:
        """Solve K u = load for one or many (columns) integrated right-hand sides."""
        load = np.asarray(load, dtype=float)
        if method == "auto":
            method = "direct" if self.domain.n_interior <= DIRECT_LIMIT else "cg"
        if method == "direct":
            if self._lu is None:
                self._lu = spla.splu(self.system)
            u = self._lu.solve(load)
        elif method == "cg":
            u = self._solve_cg(load, tol, max_iter)
        else:
            raise SolverError(f"unknown solver method {method!r}")
        self._check_residual(u, load, tol)
        return u

    def _solve_cg(self, load: np.ndarray, tol: float, max_iter: int | None) -> np.ndarray:
        precond = sp.diags(1.0 / self.system.diagonal())
        max_iter = max_iter or 10 * self.domain.n_interior
        cols = load.reshape(load.shape[0], -1)
        out = np.empty_like(cols)
        for j in range(cols.shape[1]):
            x, info = spla.cg(self.system, cols[:, j], rtol=tol, atol=0.0, maxiter=max_iter, M=precond)
            if info != 0:
                r = np.linalg.norm(self.system @ x - cols[:, j]) / max(np.linalg.norm(cols[:, j]), 1e-300)
                raise SolverError(
                    f"conjugate gradients did not converge in {max_iter} iterations "
                    f"(relative residual {r:.3e})"
                )
            out[:, j] = x
        return out.reshape(load.shape)

    def _check_residual(self, u: np.ndarray, load: np.ndarray, tol: float) -> None:
        res = self.system @ u - load
        num = np.linalg.norm(res, axis=0)
        den = np.maximum(np.linalg.norm(load, axis=0), 1e-300)
        worst = float(np.max(num / den)) if num.size else 0.0
        if not np.all(np.isfinite(u)) or worst > 100.0 * tol:
            raise SolverError(f"linear solve failed the residual check (relative residual {worst:.3e})")


def assemble(domain: Domain, potential: Potential) -> DiscreteOperator:
    """Assemble the operator for a bounded potential.

    Unbounded potentials must go through a truncation schedule; passing one
    here is an error even though any fixed grid samples it finitely.
    """
    if not potential.is_bounded():
        raise PotentialError(
            f"potential {potential.label!r} is unbounded; truncate it or use a schedule solve"
        )
    return DiscreteOperator(domain, sample(potential, domain), potential.label)


def assemble_from_values(domain: Domain, values: np.ndarray, label: str = "") -> DiscreteOperator:
    return DiscreteOperator(domain, values, label)


@dataclass(frozen=True)
class TruncationDiagnostics:
    levels: tuple  # truncation levels actually solved
    l1_distances: tuple  # L1 distance between consecutive iterates
    monotone: bool | None  # nodewise non-increasing (None if mu is signed)
    converged: bool
    final_level: float
    saturated: bool  # truncation stopped changing the sampled potential


class ScheduleSolver:
    """Shared machinery for truncation-schedule limits: one operator per level,
    factorizations reused across right-hand sides and repeated solves."""

    def __init__(
        self,
        domain: Domain,
        potential: Potential,
        schedule: TruncationSchedule | None = None,
        solver_tol: float = DEFAULT_TOL,
        method: str = "auto",
    ):
        self.domain = domain
        self.potential = potential
        self.schedule = schedule or TruncationSchedule()
        self.solver_tol = solver_tol
        self.method = method
        self._full = sample(potential, domain)
        self._ops: dict[int, DiscreteOperator | None] = {}

    def operator_at(self, j: int) -> DiscreteOperator | None:
        """Operator for level j, or None when truncation equals level j-1 (saturated)."""
        if j not in self._ops:
            level = self.schedule.levels()[j]
            vals = np.minimum(self._full, level)
            if j > 0:
                prev_level = self.schedule.levels()[j - 1]
                if np.array_equal(vals, np.minimum(self._full, prev_level)):
                    self._ops[j] = None
                    return None
            self._ops[j] = DiscreteOperator(self.domain, vals, f"min({self.potential.label},{level:g})")
        return self._ops[j]

    def limit(self, load: np.ndarray, stop_tol: float, check_monotone: bool) -> tuple[np.ndarray, TruncationDiagnostics]:
        """Run the schedule until the L1 distance between iterates drops below stop_tol."""
        levels = self.schedule.levels()
        prev = None
        run_levels, dists = [], []
        monotone = True if check_monotone else None
        saturated = False
        converged = False
        vol = self.domain.volumes
        for j, level in enumerate(levels):
            op = self.operator_at(j)
            if op is None:
                saturated = True
                converged = True
                dists.append(0.0)
                run_levels.append(level)
                break
            u = op.solve_load(load, method=self.method, tol=self.solver_tol)
            run_levels.append(level)
            if prev is not None:
                dist = float(np.sum(np.abs(u - prev) * vol)) if u.ndim == 1 else float(
                    np.max(np.sum(np.abs(u - prev) * vol[:, None], axis=0))
                )
                dists.append(dist)
                if check_monotone and np.any(u > prev + 1e-9):
                    monotone = False
                if dist < stop_tol:
                    prev = u
                    converged = True
                    break
            prev = u
        return prev, TruncationDiagnostics(
            levels=tuple(run_levels),
            l1_distances=tuple(dists),
            monotone=monotone,
            converged=converged,
            final_level=run_levels[-1],
            saturated=saturated,
        )


def solve_dirichlet(
    domain: Domain,
    potential: Potential,
    measure: Measure,
    operator: DiscreteOperator | None = None,
    method: str = "auto",
    tol: float = DEFAULT_TOL,
) -> Field:
    """Single bounded-potential solve; see solve_truncated_limit for singular V."""
    op = operator if operator is not None else assemble(domain, potential)
    load = load_vector(measure, domain)
    u = op.solve_load(load, method=method, tol=tol)
    return Field(domain, u)


def solve_truncated_limit(
    domain: Domain,
    potential: Potential,
    measure: Measure,
    schedule: TruncationSchedule | None = None,
    stop_tol: float | None = None,
    method: str = "auto",
    solver_tol: float = DEFAULT_TOL,
) -> tuple[Field, TruncationDiagnostics]:
    """Monotone truncation limit: solve with min(V, k) along the schedule.

    Signed measures are split and the two nonnegative parts solved separately,
    so the monotonicity diagnostic stays meaningful.  Early stop when the L1
    distance between consecutive iterates falls below ``stop_tol`` (default
    1e-8 times the measure's total variation).
    """
    if stop_tol is None:
        tv = total_variation(measure, domain)
        if not np.isfinite(tv):
            raise ValueError("measure has infinite total variation")
        stop_tol = 1e-8 * max(tv, 1.0)
    solver = ScheduleSolver(domain, potential, schedule, solver_tol, method)
    if is_nonnegative(measure, domain):
        load = load_vector(measure, domain)
        u, diag = solver.limit(load, stop_tol, check_monotone=True)
        return Field(domain, u), diag
    pos, neg = split_signed(measure, domain)
    u_pos, d_pos = solver.limit(load_vector(pos, domain), stop_tol, check_monotone=True)
    u_neg, d_neg = solver.limit(load_vector(neg, domain), stop_tol, check_monotone=True)
    diag = TruncationDiagnostics(
        levels=d_pos.levels if len(d_pos.levels) >= len(d_neg.levels) else d_neg.levels,
        l1_distances=tuple(
            max(a, b) for a, b in zip_longest(d_pos.l1_distances, d_neg.l1_distances, fillvalue=0.0)
        ),
        monotone=None,
        converged=d_pos.converged and d_neg.converged,
        final_level=max(d_pos.final_level, d_neg.final_level),
        saturated=d_pos.saturated and d_neg.saturated,
    )
    return Field(domain, u_pos - u_neg), diag


def energy(domain: Domain, potential: Potential, source: Measure, z) -> float:
    """Dirichlet energy 0.5 * (grad + absorption) - source term of a trial field.

    The gradient term uses the stencil-matched edge quadrature and the V-term
    the matching node quadrature, so the minimizer of this functional is
    exactly the assembled solve.  The source must be a pure density.
    """
    if source.atoms:
        raise ValueError("energy is defined for density sources only")
    zv = z.values if isinstance(z, Field) else np.asarray(z, dtype=float)
    op = assemble(domain, potential)
    load = load_vector(source, domain)
    return float(0.5 * zv @ (op.system @ zv) - load @ zv)
