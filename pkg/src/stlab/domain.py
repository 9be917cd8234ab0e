"""Grid domains with boundary geometry: unit interval, unit disk, unit square.

Every grid follows the same conventions.

* Interior nodes carry cell volumes that tile the domain exactly.  Cells
  adjacent to the boundary are extended up to it (1D end cells own 1.5h,
  the outermost disk annulus reaches r=1), so the node quadrature
  ``sum(f * volumes)`` integrates over all of the domain and the volumes
  sum to its exact measure at any resolution.
* Boundary nodes sit exactly on the boundary and carry surface weights
  summing to the exact boundary measure, unit inward normals, and the
  indices of their first and second interior neighbors along the normal,
  together with the spacing.  One-sided trace stencils and adjoint source
  vectors consume exactly this data.
* ``faces``/``bfaces`` list the edge-difference coefficients of the
  stiffness form.  On the interval and the square they match the standard
  3/5-point stencil (uniform coefficients); on the disk they are the exact
  polar flux coefficients (face length over node distance).  Either way the
  assembled operator is symmetric and the coefficient of a boundary face
  equals surface weight / normal spacing, which is what makes the discrete
  flux balance exact.
* The disk grid is polar with an ordinary unknown at the center, coupled to
  the innermost ring through the faces of the small center cell.

``system_weights`` is the node quadrature matched to the stencil (uniform
h^dim on interval/square, the cell volumes on the disk).  The assembled
system is ``K u = load`` in integrated form; see ``stlab.operator``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    pass


@dataclass
class Domain:
    kind: str
    dim: int
    h: float
    resolution: dict
    interior_points: np.ndarray
    volumes: np.ndarray
    distances: np.ndarray
    boundary_points: np.ndarray
    surface_weights: np.ndarray
    inward_normals: np.ndarray
    boundary_coords: np.ndarray
    corner_mask: np.ndarray
    first_neighbor: np.ndarray
    second_neighbor: np.ndarray
    normal_spacing: np.ndarray
    faces: np.ndarray
    face_coefs: np.ndarray
    bface_interior: np.ndarray
    bface_boundary: np.ndarray
    bface_coefs: np.ndarray
    system_weights: np.ndarray
    _stiffness: object = field(default=None, init=False, repr=False)

    @property
    def n_interior(self) -> int:
        return self.interior_points.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary_points.shape[0]

    def measure(self) -> float:
        """Exact measure of the domain (the volumes tile it)."""
        return float(np.sum(self.volumes))

    def boundary_measure(self) -> float:
        return float(np.sum(self.surface_weights))

    def as_points(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[-1] != self.dim:
            raise DomainError(f"expected points with dim {self.dim}, got shape {pts.shape}")
        return pts

    def contains(self, points) -> np.ndarray:
        pts = self.as_points(points)
        if self.kind == "interval":
            x = pts[:, 0]
            return (x > 0.0) & (x < 1.0)
        if self.kind == "disk":
            return np.hypot(pts[:, 0], pts[:, 1]) < 1.0
        x, y = pts[:, 0], pts[:, 1]
        return (x > 0.0) & (x < 1.0) & (y > 0.0) & (y < 1.0)

    def distance(self, points) -> np.ndarray:
        """Exact distance to the boundary; no sign, valid inside the closure."""
        pts = self.as_points(points)
        if self.kind == "interval":
            x = pts[:, 0]
            return np.minimum(x, 1.0 - x)
        if self.kind == "disk":
            return 1.0 - np.hypot(pts[:, 0], pts[:, 1])
        x, y = pts[:, 0], pts[:, 1]
        return np.minimum(np.minimum(x, 1.0 - x), np.minimum(y, 1.0 - y))

    def interp_weights(self, point) -> tuple[np.ndarray, np.ndarray]:
        """Multilinear deposition weights of an interior point onto interior nodes.

        Weights always sum to one: near the boundary the stencil is clamped
        onto the available interior nodes so that deposited mass is conserved
        exactly.
        """
        pt = self.as_points(point)[0]
        if not bool(self.contains(pt)[0]):
            raise DomainError(f"point {tuple(pt)} is not strictly inside the {self.kind}")
        if self.kind == "interval":
            pairs = _axis_pairs(pt[0] / self.h - 1.0, self.resolution["n"] - 1)
            idx = np.array([i for i, _ in pairs], dtype=int)
            w = np.array([w for _, w in pairs])
        elif self.kind == "rectangle":
            n = self.resolution["n"]
            px = _axis_pairs(pt[0] / self.h - 1.0, n - 1)
            py = _axis_pairs(pt[1] / self.h - 1.0, n - 1)
            idx, w = [], []
            for j, wj in py:
                for i, wi in px:
                    idx.append(j * (n - 1) + i)
                    w.append(wi * wj)
            idx, w = np.array(idx, dtype=int), np.array(w)
        else:
            idx, w = self._disk_interp(pt)
        # merge duplicates produced by clamping
        uniq, inv = np.unique(idx, return_inverse=True)
        merged = np.zeros(len(uniq))
        np.add.at(merged, inv, w)
        return uniq, merged

    def _disk_interp(self, pt) -> tuple[np.ndarray, np.ndarray]:
        nr, ntheta = self.resolution["nr"], self.resolution["ntheta"]
        dr, dtheta = 1.0 / nr, 2.0 * np.pi / ntheta
        r = float(np.hypot(pt[0], pt[1]))
        theta = float(np.arctan2(pt[1], pt[0])) % (2.0 * np.pi)
        tj = theta / dtheta
        j0 = int(np.floor(tj)) % ntheta
        fj = tj - np.floor(tj)
        if r < dr:
            # blend between the center node and the innermost ring
            fr = r / dr
            idx = [0, _disk_index(1, j0, ntheta), _disk_index(1, j0 + 1, ntheta)]
            w = [1.0 - fr, fr * (1.0 - fj), fr * fj]
            return np.array(idx, dtype=int), np.array(w)
        ti = r / dr - 1.0  # ring coordinate, rings are 1..nr-1
        i0 = int(np.floor(ti))
        fi = ti - i0
        if i0 >= nr - 2:  # between the outermost interior ring and the boundary
            i0, fi = nr - 2, 0.0
            ring_pairs = [(nr - 1, 1.0)]
        else:
            ring_pairs = [(i0 + 1, 1.0 - fi), (i0 + 2, fi)]
        idx, w = [], []
        for ring, wr in ring_pairs:
            idx.append(_disk_index(ring, j0, ntheta))
            w.append(wr * (1.0 - fj))
            idx.append(_disk_index(ring, j0 + 1, ntheta))
            w.append(wr * fj)
        return np.array(idx, dtype=int), np.array(w)

    def refine(self, factor: int = 2) -> "Domain":
        if factor < 2:
            raise DomainError("refinement factor must be >= 2")
        if self.kind == "interval":
            return build_interval(self.resolution["n"] * factor)
        if self.kind == "rectangle":
            return build_rectangle(self.resolution["n"] * factor)
        return build_disk(self.resolution["nr"] * factor, self.resolution["ntheta"] * factor)


def _axis_pairs(pos: float, n_nodes: int) -> list[tuple[int, float]]:
    """1D hat weights at node coordinate ``pos`` clamped into [0, n_nodes-1]."""
    i0 = int(np.floor(pos))
    f = pos - i0
    pairs = [(i0, 1.0 - f), (i0 + 1, f)]
    return [(min(max(i, 0), n_nodes - 1), w) for i, w in pairs if w != 0.0]


def _disk_index(ring: int, j: int, ntheta: int) -> int:
    return 1 + (ring - 1) * ntheta + (j % ntheta)


def build_interval(n: int) -> Domain:
    """Uniform grid on (0,1) with n cells: interior nodes at i*h, i=1..n-1."""
    if n < 4:
        raise DomainError(f"interval resolution n={n} too small, need n >= 4")
    h = 1.0 / n
    ni = n - 1
    x = h * np.arange(1, n)
    volumes = np.full(ni, h)
    volumes[0] = volumes[-1] = 1.5 * h  # end cells own the boundary slivers
    pts = x.reshape(-1, 1)
    boundary = np.array([[0.0], [1.0]])
    normals = np.array([[1.0], [-1.0]])
    faces = np.column_stack([np.arange(ni - 1), np.arange(1, ni)])
    face_coefs = np.full(ni - 1, 1.0 / h)
    return Domain(
        kind="interval",
        dim=1,
        h=h,
        resolution={"n": n},
        interior_points=pts,
        volumes=volumes,
        distances=np.minimum(x, 1.0 - x),
        boundary_points=boundary,
        surface_weights=np.array([1.0, 1.0]),
        inward_normals=normals,
        boundary_coords=np.array([0.0, 1.0]),
        corner_mask=np.zeros(2, dtype=bool),
        first_neighbor=np.array([0, ni - 1]),
        second_neighbor=np.array([1, ni - 2]),
        normal_spacing=np.array([h, h]),
        faces=faces,
        face_coefs=face_coefs,
        bface_interior=np.array([0, ni - 1]),
        bface_boundary=np.array([0, 1]),
        bface_coefs=np.array([1.0 / h, 1.0 / h]),
        system_weights=np.full(ni, h),
    )


def build_rectangle(n: int) -> Domain:
    """Tensor grid on the unit square with n cells per side (5-point stencil)."""
    if n < 4:
        raise DomainError(f"rectangle resolution n={n} too small, need n >= 4")
    h = 1.0 / n
    m = n - 1  # interior nodes per axis
    ax = h * np.arange(1, n)
    w1d = np.full(m, h)
    w1d[0] = w1d[-1] = 1.5 * h
    X, Y = np.meshgrid(ax, ax, indexing="xy")  # row-major over y, x fastest
    pts = np.column_stack([X.ravel(), Y.ravel()])
    volumes = np.outer(w1d, w1d).ravel()
    dists = np.minimum(np.minimum(pts[:, 0], 1.0 - pts[:, 0]), np.minimum(pts[:, 1], 1.0 - pts[:, 1]))

    def iid(i: int, j: int) -> int:  # i, j in 1..n-1 (x index, y index)
        return (j - 1) * m + (i - 1)

    # boundary: counterclockwise from (0,0); arc length = index * h
    bpts, normals, corners = [], [], []
    for i in range(n):  # bottom
        bpts.append((i * h, 0.0))
        normals.append((0.0, 1.0))
        corners.append(i == 0)
    for j in range(n):  # right
        bpts.append((1.0, j * h))
        normals.append((-1.0, 0.0))
        corners.append(j == 0)
    for i in range(n):  # top
        bpts.append(((n - i) * h, 1.0))
        normals.append((0.0, -1.0))
        corners.append(i == 0)
    for j in range(n):  # left
        bpts.append((0.0, (n - j) * h))
        normals.append((1.0, 0.0))
        corners.append(j == 0)
    bpts = np.array(bpts)
    normals = np.array(normals, dtype=float)
    corner_mask = np.array(corners, dtype=bool)
    s = 1.0 / np.sqrt(2.0)
    normals[0] = (s, s)
    normals[n] = (-s, s)
    normals[2 * n] = (-s, -s)
    normals[3 * n] = (s, -s)

    first = np.zeros(4 * n, dtype=int)
    second = np.zeros(4 * n, dtype=int)
    spacing = np.full(4 * n, h)
    for b in range(4 * n):
        if corner_mask[b]:
            ci, cj = {0: (1, 1), n: (m, 1), 2 * n: (m, m), 3 * n: (1, m)}[b]
            first[b] = iid(ci, cj)
            di = 1 if ci == 1 else -1
            dj = 1 if cj == 1 else -1
            second[b] = iid(ci + di, cj + dj)
            spacing[b] = np.sqrt(2.0) * h
        elif b < n:  # bottom, x = b*h
            first[b] = iid(b, 1)
            second[b] = iid(b, 2)
        elif b < 2 * n:  # right, y = (b-n)*h
            j = b - n
            first[b] = iid(m, j)
            second[b] = iid(m - 1, j)
        elif b < 3 * n:  # top, x = (n-(b-2n))*h
            i = n - (b - 2 * n)
            first[b] = iid(i, m)
            second[b] = iid(i, m - 1)
        else:  # left, y = (n-(b-3n))*h
            j = n - (b - 3 * n)
            first[b] = iid(1, j)
            second[b] = iid(2, j)
    # stencil-matched faces: uniform coefficient 1 (K = h^2 * five-point stencil)
    fp, fq = [], []
    for j in range(1, n):
        for i in range(1, n - 1):
            fp.append(iid(i, j))
            fq.append(iid(i + 1, j))
    for j in range(1, n - 1):
        for i in range(1, n):
            fp.append(iid(i, j))
            fq.append(iid(i, j + 1))
    faces = np.column_stack([np.array(fp), np.array(fq)])
    face_coefs = np.ones(len(fp))

    bf_int, bf_bnd = [], []
    for i in range(1, n):  # bottom edge nodes b=i at (ih, 0)
        bf_int.append(iid(i, 1))
        bf_bnd.append(i)
    for j in range(1, n):  # right edge nodes b=n+j at (1, jh)
        bf_int.append(iid(m, j))
        bf_bnd.append(n + j)
    for i in range(1, n):  # top nodes at (ih, 1) have boundary index 3n - i
        bf_int.append(iid(i, m))
        bf_bnd.append(3 * n - i)
    for j in range(1, n):  # left nodes at (0, jh) have boundary index 4n - j
        bf_int.append(iid(1, j))
        bf_bnd.append(4 * n - j)
    bface_interior = np.array(bf_int, dtype=int)
    bface_boundary = np.array(bf_bnd, dtype=int)
    bface_coefs = np.ones(len(bf_int))

    return Domain(
        kind="rectangle",
        dim=2,
        h=h,
        resolution={"n": n},
        interior_points=pts,
        volumes=volumes,
        distances=dists,
        boundary_points=bpts,
        surface_weights=np.full(4 * n, h),
        inward_normals=normals,
        boundary_coords=h * np.arange(4 * n),
        corner_mask=corner_mask,
        first_neighbor=first,
        second_neighbor=second,
        normal_spacing=spacing,
        faces=faces,
        face_coefs=face_coefs,
        bface_interior=bface_interior,
        bface_boundary=bface_boundary,
        bface_coefs=bface_coefs,
        system_weights=np.full(m * m, h * h),
    )


def build_disk(nr: int, ntheta: int | None = None) -> Domain:
    """Polar grid on the unit disk: nr radial cells, ntheta angular cells.

    Interior unknowns are the center node plus rings i=1..nr-1 at radii i*dr;
    boundary nodes are the ntheta points on the unit circle.  Cell volumes are
    exact annular-sector areas (the outermost interior cells reach r=1, the
    center cell is the disk of radius dr/2), so they tile the disk exactly.
    """
    if ntheta is None:
        ntheta = 4 * nr
    if nr < 4 or ntheta < 4:
        raise DomainError(f"disk resolution nr={nr}, ntheta={ntheta} too small, need >= 4")
    dr = 1.0 / nr
    dtheta = 2.0 * np.pi / ntheta
    ni = 1 + (nr - 1) * ntheta
    theta = dtheta * np.arange(ntheta)
    ct, st = np.cos(theta), np.sin(theta)

    pts = np.zeros((ni, 2))
    volumes = np.zeros(ni)
    volumes[0] = np.pi * (0.5 * dr) ** 2
    for ring in range(1, nr):
        r = ring * dr
        sl = slice(_disk_index(ring, 0, ntheta), _disk_index(ring, 0, ntheta) + ntheta)
        pts[sl, 0] = r * ct
        pts[sl, 1] = r * st
        if ring < nr - 1:
            volumes[sl] = r * dr * dtheta
        else:
            inner = 1.0 - 1.5 * dr  # outermost interior cell spans [1-1.5dr, 1]
            volumes[sl] = 0.5 * (1.0 - inner * inner) * dtheta
    dists = 1.0 - np.hypot(pts[:, 0], pts[:, 1])
    dists[0] = 1.0

    bpts = np.column_stack([ct, st])
    normals = -bpts

    fp, fq, fc = [], [], []
    for j in range(ntheta):  # center to innermost ring
        fp.append(0)
        fq.append(_disk_index(1, j, ntheta))
        fc.append((0.5 * dr) * dtheta / dr)
    for ring in range(1, nr - 1):  # radial faces between rings
        rf = (ring + 0.5) * dr
        for j in range(ntheta):
            fp.append(_disk_index(ring, j, ntheta))
            fq.append(_disk_index(ring + 1, j, ntheta))
            fc.append(rf * dtheta / dr)
    for ring in range(1, nr):  # angular faces within each ring
        r = ring * dr
        ext = dr if ring < nr - 1 else 1.5 * dr  # radial extent of the cell
        for j in range(ntheta):
            fp.append(_disk_index(ring, j, ntheta))
            fq.append(_disk_index(ring, j + 1, ntheta))
            fc.append(ext / (r * dtheta))
    faces = np.column_stack([np.array(fp), np.array(fq)])
    face_coefs = np.array(fc)

    bface_interior = np.array([_disk_index(nr - 1, j, ntheta) for j in range(ntheta)], dtype=int)
    bface_boundary = np.arange(ntheta)
    bface_coefs = np.full(ntheta, dtheta / dr)  # boundary face: arc 1*dtheta over spacing dr

    return Domain(
        kind="disk",
        dim=2,
        h=dr,
        resolution={"nr": nr, "ntheta": ntheta},
        interior_points=pts,
        volumes=volumes,
        distances=dists,
        boundary_points=bpts,
        surface_weights=np.full(ntheta, dtheta),
        inward_normals=normals,
        boundary_coords=theta,
        corner_mask=np.zeros(ntheta, dtype=bool),
        first_neighbor=bface_interior.copy(),
        second_neighbor=np.array([_disk_index(nr - 2, j, ntheta) for j in range(ntheta)], dtype=int),
        normal_spacing=np.full(ntheta, dr),
        faces=faces,
        face_coefs=face_coefs,
        bface_interior=bface_interior,
        bface_boundary=bface_boundary,
        bface_coefs=bface_coefs,
        system_weights=volumes.copy(),
    )


def build_domain(kind: str, **resolution) -> Domain:
    """Build a grid domain. kinds: interval (n), disk (nr, ntheta), rectangle (n)."""
    if kind == "interval":
        return build_interval(int(resolution["n"]))
    if kind == "disk":
        nr = int(resolution["nr"])
        ntheta = resolution.get("ntheta")
        return build_disk(nr, int(ntheta) if ntheta is not None else None)
    if kind == "rectangle":
        return build_rectangle(int(resolution["n"]))
    raise DomainError(f"unknown domain kind {kind!r}")


def distance_to_boundary(domain: Domain, point) -> float:
    """Exact boundary distance of a single interior point."""
    pts = domain.as_points(point)
    if not bool(domain.contains(pts)[0]):
        raise DomainError(f"point {tuple(pts[0])} is outside the {domain.kind}")
    return float(domain.distance(pts)[0])


def inward_normal(domain: Domain, boundary_index: int) -> np.ndarray:
    if not 0 <= boundary_index < domain.n_boundary:
        raise DomainError(f"index {boundary_index} is not a boundary node")
    return domain.inward_normals[boundary_index].copy()
