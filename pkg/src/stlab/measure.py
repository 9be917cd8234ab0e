"""Finite signed measures on a grid: atom lists plus an optional density.

Atoms and densities are carried as given and never cancel against each other;
the total variation of ``2*dirac(a) - 3*dirac(a)`` is 5.  Densities declare an
``integrable`` tag so that total variation can reject non-finite measures
deterministically instead of probing refinements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .domain import Domain, DomainError
from .fields import Field


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class Density:
    """Pointwise density rule with an integrability tag.

    ``family`` selects the evaluation: uniform (value), power_distance
    (scale / d^alpha), table (explicit node values), callable (rule(points)),
    sum (pair of densities).
    """

    family: str
    params: dict = field(default_factory=dict)
    integrable: bool = True
    label: str = ""

    def evaluate(self, domain: Domain) -> np.ndarray:
        if self.family == "uniform":
            return np.full(domain.n_interior, float(self.params["value"]))
        if self.family == "power_distance":
            alpha = float(self.params["alpha"])
            scale = float(self.params.get("scale", 1.0))
            return scale * domain.distances ** (-alpha)
        if self.family == "table":
            vals = np.asarray(self.params["values"], dtype=float)
            if vals.shape != (domain.n_interior,):
                raise MeasureError(
                    f"table density has {vals.shape[0]} values, domain has {domain.n_interior} nodes"
                )
            return vals.copy()
        if self.family == "callable":
            return np.asarray(self.params["rule"](domain.interior_points), dtype=float)
        if self.family == "sum":
            a, b = self.params["parts"]
            return a.evaluate(domain) + b.evaluate(domain)
        raise MeasureError(f"unknown density family {self.family!r}")


def uniform_density(value: float = 1.0) -> Density:
    return Density("uniform", {"value": float(value)}, integrable=True, label=f"uniform({value})")


def power_distance_density(alpha: float, scale: float = 1.0) -> Density:
    # 1/d^alpha is integrable against dx over these domains exactly when alpha < 1
    return Density(
        "power_distance",
        {"alpha": float(alpha), "scale": float(scale)},
        integrable=alpha < 1.0,
        label=f"dist^-{alpha}",
    )


def table_density(values, integrable: bool = True) -> Density:
    return Density("table", {"values": np.asarray(values, dtype=float)}, integrable, "table")


def callable_density(rule, integrable: bool = True, label: str = "callable") -> Density:
    return Density("callable", {"rule": rule}, integrable, label)


@dataclass(frozen=True)
class Measure:
    """atoms: tuple of ((coords...), weight); density: optional Density."""

    atoms: tuple = ()
    density: Density | None = None

    def __post_init__(self):
        norm = []
        for loc, w in self.atoms:
            loc = tuple(float(c) for c in np.atleast_1d(loc))
            norm.append((loc, float(w)))
        object.__setattr__(self, "atoms", tuple(norm))

    def __add__(self, other: "Measure") -> "Measure":
        if self.density is None:
            dens = other.density
        elif other.density is None:
            dens = self.density
        else:
            both = self.density.integrable and other.density.integrable
            dens = Density("sum", {"parts": (self.density, other.density)}, both, "sum")
        return Measure(self.atoms + other.atoms, dens)

    def is_zero(self) -> bool:
        return not self.atoms and self.density is None


def dirac(location, weight: float = 1.0) -> Measure:
    return Measure(atoms=((tuple(np.atleast_1d(np.asarray(location, dtype=float))), float(weight)),))


def density_measure(density: Density) -> Measure:
    return Measure(atoms=(), density=density)


def atom_locations(measure: Measure) -> np.ndarray:
    return np.array([loc for loc, _ in measure.atoms], dtype=float)


def _check_atoms_inside(measure: Measure, domain: Domain) -> None:
    for loc, _ in measure.atoms:
        if not bool(domain.contains(np.array(loc))[0]):
            raise MeasureError(f"atom at {loc} is not strictly inside the {domain.kind}")


def total_variation(measure: Measure, domain: Domain | None = None) -> float:
    """Sum of absolute atom weights plus the grid quadrature of |density|.

    Densities tagged non-integrable report an infinite total variation.
    """
    tv = sum(abs(w) for _, w in measure.atoms)
    if measure.density is not None:
        if not measure.density.integrable:
            return math.inf
        if domain is None:
            raise MeasureError("total variation of a density needs a domain for quadrature")
        vals = measure.density.evaluate(domain)
        tv += float(np.sum(np.abs(vals) * domain.volumes))
    return float(tv)


def is_nonnegative(measure: Measure, domain: Domain | None = None) -> bool:
    if any(w < 0.0 for _, w in measure.atoms):
        return False
    if measure.density is not None:
        if domain is None:
            raise MeasureError("sign check of a density needs a domain")
        if np.any(measure.density.evaluate(domain) < 0.0):
            return False
    return True


def split_signed(measure: Measure, domain: Domain) -> tuple[Measure, Measure]:
    """Split into nonnegative parts (positive, negative) so mu = pos - neg."""
    pos_atoms = tuple((loc, w) for loc, w in measure.atoms if w > 0.0)
    neg_atoms = tuple((loc, -w) for loc, w in measure.atoms if w < 0.0)
    pos_d = neg_d = None
    if measure.density is not None:
        vals = measure.density.evaluate(domain)
        tag = measure.density.integrable
        if np.any(vals > 0.0):
            pos_d = table_density(np.maximum(vals, 0.0), tag)
        if np.any(vals < 0.0):
            neg_d = table_density(np.maximum(-vals, 0.0), tag)
    return Measure(pos_atoms, pos_d), Measure(neg_atoms, neg_d)


def load_vector(measure: Measure, domain: Domain) -> np.ndarray:
    """Integrated right-hand side: cell integrals of the measure per interior node.

    Atoms deposit their multilinear weights (discrete mass is exact); a density
    f contributes f(x_i) * vol_i.
    """
    _check_atoms_inside(measure, domain)
    load = np.zeros(domain.n_interior)
    for loc, w in measure.atoms:
        idx, wts = domain.interp_weights(np.array(loc))
        load[idx] += w * wts
    if measure.density is not None:
        load += measure.density.evaluate(domain) * domain.volumes
    return load


def deposit(measure: Measure, domain: Domain) -> np.ndarray:
    """Pointwise right-hand side values: load divided by cell volumes.

    The discrete integral sum(deposit * volumes) equals the measure's mass
    exactly for atoms and by quadrature for densities.
    """
    return load_vector(measure, domain) / domain.volumes


def _bump(dist2: np.ndarray, radius: float) -> np.ndarray:
    # smooth bump exp(-1/(1-(|z|/radius)^2)) supported in |z| < radius
    t = dist2 / (radius * radius)
    out = np.zeros_like(t)
    inside = t < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside]))
    return out


def mollify(measure: Measure, k: int, domain: Domain) -> Field:
    """Smooth the measure with the radial bump of support radius 1/k.

    The bump is normalized numerically per source location, so the grid
    integral of the result equals the measure's mass exactly.  Requires
    1/k smaller than every atom's boundary distance.
    """
    if k <= 0:
        raise MeasureError("mollification parameter k must be positive")
    radius = 1.0 / k
    for loc, _ in measure.atoms:
        if distance_of(domain, loc) <= radius:
            raise MeasureError(
                f"atom at {loc} is closer to the boundary than the mollifier radius 1/{k}"
            )
    pts = domain.interior_points
    tree = cKDTree(pts)
    out = np.zeros(domain.n_interior)
    for loc, w in measure.atoms:
        loc = np.asarray(loc, dtype=float)
        idx = np.array(tree.query_ball_point(loc, radius), dtype=int)
        if idx.size == 0:
            nearest = int(tree.query(loc)[1])
            out[nearest] += w / domain.volumes[nearest]
            continue
        d2 = np.sum((pts[idx] - loc) ** 2, axis=1)
        vals = _bump(d2, radius)
        mass = float(np.sum(vals * domain.volumes[idx]))
        if mass <= 0.0:
            nearest = int(tree.query(loc)[1])
            out[nearest] += w / domain.volumes[nearest]
            continue
        out[idx] += (w / mass) * vals
    if measure.density is not None:
        f = measure.density.evaluate(domain)
        src = np.nonzero(f != 0.0)[0]
        for j in src:
            idx = np.array(tree.query_ball_point(pts[j], radius), dtype=int)
            if idx.size == 0:
                out[j] += f[j]
                continue
            d2 = np.sum((pts[idx] - pts[j]) ** 2, axis=1)
            vals = _bump(d2, radius)
            mass = float(np.sum(vals * domain.volumes[idx]))
            if mass <= 0.0:
                out[j] += f[j]
                continue
            out[idx] += (f[j] * domain.volumes[j] / mass) * vals
    return Field(domain, out)


def distance_of(domain: Domain, loc) -> float:
    pts = domain.as_points(np.asarray(loc, dtype=float))
    if not bool(domain.contains(pts)[0]):
        raise DomainError(f"point {tuple(pts[0])} is outside the {domain.kind}")
    return float(domain.distance(pts)[0])
