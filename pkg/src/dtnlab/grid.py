"""Structured 1D/2D grid domains, outer boundary labels, separators and
periodic identifications.

A domain is the union of active lattice cells.  Vertices touching at least one
active cell belong to the domain; a vertex with fewer than ``2**dim`` active
incident cells lies on the outer boundary and must carry a Dirichlet or
Neumann label unless a periodic identification pairs it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    Disconnected,
    DomainError,
    EmptyInterface,
    FaceAlreadyLabeled,
    SigmaTouchesBoundary,
    SignChangeWithoutSeparator,
    UnlabeledBoundary,
)

OUTSIDE, UNLABELED, DIRICHLET, NEUMANN = -1, 0, 1, 2

# side codes in a Partition
OMEGA1, SIGMA, OMEGA2 = 1, 0, 2

SIDE_NAMES = {"left": (0, 0), "right": (0, 1), "bottom": (1, 0), "top": (1, 1)}


class BC(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @property
    def code(self) -> int:
        return DIRICHLET if self is BC.DIRICHLET else NEUMANN


def as_bc(label) -> Optional[BC]:
    if label is None or isinstance(label, BC):
        return label
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        if label == DIRICHLET:
            return BC.DIRICHLET
        if label == NEUMANN:
            return BC.NEUMANN
    text = str(label).strip().lower()
    if text in ("d", "dirichlet"):
        return BC.DIRICHLET
    if text in ("n", "neumann"):
        return BC.NEUMANN
    if text in ("none", "periodic", "p", ""):
        return None
    raise DomainError(f"unknown boundary label {label!r}")


class UnionFind:
    """Disjoint sets over 0..n-1 with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def roots(self) -> np.ndarray:
        return np.array([self.find(i) for i in range(len(self.parent))], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Immutable grid domain.

    ``labels`` is indexed by flat lattice vertex and holds OUTSIDE, UNLABELED,
    DIRICHLET or NEUMANN.  ``side_bc`` records per-side labels for rectangles
    and intervals (``None`` for mask domains); ``periodic_pairs`` lists
    (Gamma_1 vertex, Gamma_2 vertex) pairs in flat indices.
    """

    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    cells: np.ndarray
    labels: np.ndarray
    side_bc: Optional[tuple[tuple[Optional[BC], Optional[BC]], ...]] = None
    periodic_pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    periodic_axes: tuple[int, ...] = ()

    # -- lattice geometry -------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def cells_per_axis(self) -> tuple[int, ...]:
        return tuple(s - 1 for s in self.shape)

    @property
    def n_lattice(self) -> int:
        return int(np.prod(self.shape))

    @property
    def vertex_mask(self) -> np.ndarray:
        return self.labels.reshape(self.shape) != OUTSIDE

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(c * h for c, h in zip(self.cells_per_axis, self.spacing))

    @property
    def is_periodic(self) -> bool:
        return len(self.periodic_pairs) > 0

    def multi_index(self, flat) -> tuple[np.ndarray, ...]:
        return np.unravel_index(np.asarray(flat), self.shape)

    def coords(self) -> np.ndarray:
        """Physical coordinates of every lattice vertex, shape (n_lattice, dim)."""
        axes = [np.arange(n) * h for n, h in zip(self.shape, self.spacing)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_corners(self) -> np.ndarray:
        """Flat corner indices of active cells, shape (n_cells, 2**dim).

        Corner ``c`` has offset bit ``a`` set when it sits at the high end of
        axis ``a`` (axis 0 is the most significant bit).
        """
        idx = np.argwhere(self.cells)
        corners = []
        for offs in itertools.product((0, 1), repeat=self.dim):
            corners.append(np.ravel_multi_index(tuple((idx + np.array(offs)).T), self.shape))
        return np.stack(corners, axis=1) if len(idx) else np.zeros((0, 2 ** self.dim), dtype=np.int64)

    def edges(self) -> np.ndarray:
        """Unique lattice edges (u < v) belonging to at least one active cell."""
        corners = self.cell_corners()
        pairs = []
        for a, b in _cell_edge_pairs(self.dim):
            pairs.append(np.stack([corners[:, a], corners[:, b]], axis=1))
        if not pairs or not len(corners):
            return np.zeros((0, 2), dtype=np.int64)
        allp = np.concatenate(pairs)
        allp.sort(axis=1)
        return np.unique(allp, axis=0)

    def incident_cells(self) -> np.ndarray:
        count = np.zeros(self.n_lattice, dtype=np.int64)
        corners = self.cell_corners()
        np.add.at(count, corners.ravel(), 1)
        return count

    def boundary_vertices(self) -> np.ndarray:
        """Flat indices of in-domain vertices on the outer boundary of the lattice domain."""
        count = self.incident_cells()
        inside = self.labels != OUTSIDE
        return np.flatnonzero(inside & (count < 2 ** self.dim))

    def dirichlet_mask(self) -> np.ndarray:
        return self.labels == DIRICHLET

    def free_vertices(self) -> np.ndarray:
        """In-domain vertices that are unknowns (not Dirichlet-eliminated)."""
        return np.flatnonzero((self.labels != OUTSIDE) & (self.labels != DIRICHLET))

    def gamma1(self) -> np.ndarray:
        return np.unique(self.periodic_pairs[:, 0]) if self.is_periodic else np.zeros(0, dtype=np.int64)

    def quotient(self) -> np.ndarray:
        """Class representative (smallest member) of each lattice vertex under tau."""
        uf = UnionFind(self.n_lattice)
        for a, b in self.periodic_pairs:
            uf.union(int(a), int(b))
        roots = uf.roots()
        rep = np.full(self.n_lattice, self.n_lattice, dtype=np.int64)
        np.minimum.at(rep, roots, np.arange(self.n_lattice))
        return rep[roots]

    def seam_vertices(self) -> np.ndarray:
        """Lattice vertices touched by the periodic identification (Gamma_1 and Gamma_2)."""
        return np.unique(self.periodic_pairs.ravel()) if self.is_periodic else np.zeros(0, dtype=np.int64)

    def validate(self) -> "GridDomain":
        """Check the labeling, connectivity and periodic invariants; return self."""
        boundary = self.boundary_vertices()
        paired = np.zeros(self.n_lattice, dtype=bool)
        paired[self.seam_vertices()] = True
        missing = boundary[(self.labels[boundary] == UNLABELED) & ~paired[boundary]]
        if len(missing):
            raise UnlabeledBoundary(f"{len(missing)} boundary vertices carry no label and no periodic partner")
        if self.is_periodic:
            g1, g2 = self.periodic_pairs[:, 0], self.periodic_pairs[:, 1]
            if np.any(g1 == g2):
                raise DomainError("periodic map has a fixed point")
            if len(np.unique(self.periodic_pairs, axis=0)) != len(self.periodic_pairs):
                raise DomainError("periodic map lists a pair twice")
            if np.any(self.labels[g1] != self.labels[g2]):
                raise DomainError("periodic partners carry different labels")
        _check_connected(self)
        return self

    def __repr__(self) -> str:
        return (f"GridDomain(shape={self.shape}, spacing={self.spacing}, "
                f"n_vertices={int(self.vertex_mask.sum())}, periodic_axes={self.periodic_axes})")


def _cell_edge_pairs(dim: int) -> list[tuple[int, int]]:
    """Corner index pairs (within a cell) that differ along exactly one axis."""
    pairs = []
    for a in range(2 ** dim):
        for axis in range(dim):
            bit = 1 << (dim - 1 - axis)
            if not a & bit:
                pairs.append((a, a | bit))
    return pairs


def cell_edge_axes(dim: int) -> list[int]:
    axes = []
    for a in range(2 ** dim):
        for axis in range(dim):
            if not a & (1 << (dim - 1 - axis)):
                axes.append(axis)
    return axes


def _check_connected(domain: GridDomain) -> None:
    inside = np.flatnonzero(domain.labels != OUTSIDE)
    if len(inside) == 0:
        raise DomainError("empty domain")
    uf = UnionFind(domain.n_lattice)
    for u, v in domain.edges():
        uf.union(int(u), int(v))
    roots = {uf.find(int(i)) for i in inside}
    if len(roots) > 1:
        raise Disconnected(f"domain has {len(roots)} edge-connected components")


def _domain_from_cells(cells: np.ndarray, spacing: Sequence[float]) -> tuple[np.ndarray, tuple[int, ...]]:
    shape = tuple(s + 1 for s in cells.shape)
    vmask = np.zeros(shape, dtype=bool)
    for offs in itertools.product((0, 1), repeat=cells.ndim):
        sl = tuple(slice(o, o + n) for o, n in zip(offs, cells.shape))
        vmask[sl] |= cells
    labels = np.where(vmask.ravel(), UNLABELED, OUTSIDE).astype(np.int8)
    return labels, shape


# -- constructors ---------------------------------------------------------

def build_interval(n_cells: int, length: float, bc_left, bc_right) -> GridDomain:
    """Interval [0, length] with ``n_cells`` equal cells.

    A ``None`` label leaves the endpoint free for periodic_identification.
    """
    if int(n_cells) != n_cells or n_cells < 2:
        raise DomainError("interval needs n_cells >= 2")
    if not length > 0:
        raise DomainError("interval length must be positive")
    n_cells = int(n_cells)
    left, right = as_bc(bc_left), as_bc(bc_right)
    if (left is None) != (right is None):
        raise FaceAlreadyLabeled("an unlabeled end can only be paired with an unlabeled opposite end")
    cells = np.ones(n_cells, dtype=bool)
    labels, shape = _domain_from_cells(cells, (length / n_cells,))
    if left is not None:
        labels[0] = left.code
        labels[-1] = right.code
    return GridDomain(shape, (length / n_cells,), cells, labels, side_bc=((left, right),))


def build_rectangle(nx: int, ny: int, lx: float, ly: float, bc) -> GridDomain:
    """Full rectangle [0,lx] x [0,ly] with per-side labels.

    ``bc`` is a single label or a mapping with keys left/right/bottom/top.
    Opposite sides may both be ``None`` (to be identified periodically);
    corners take the label of a labeled adjacent side, Dirichlet winning.
    """
    if nx < 2 or ny < 2 or int(nx) != nx or int(ny) != ny:
        raise DomainError("rectangle needs nx, ny >= 2")
    if not (lx > 0 and ly > 0):
        raise DomainError("rectangle side lengths must be positive")
    if isinstance(bc, Mapping):
        unknown = set(bc) - set(SIDE_NAMES)
        if unknown:
            raise DomainError(f"unknown sides {sorted(unknown)}")
        sides = {name: as_bc(bc.get(name)) for name in SIDE_NAMES}
    else:
        lab = as_bc(bc)
        sides = {name: lab for name in SIDE_NAMES}
    side_bc = ((sides["left"], sides["right"]), (sides["bottom"], sides["top"]))
    for lo, hi in side_bc:
        if (lo is None) != (hi is None):
            raise FaceAlreadyLabeled("an unlabeled side can only be paired with an unlabeled opposite side")

    nx, ny = int(nx), int(ny)
    cells = np.ones((nx, ny), dtype=bool)
    spacing = (lx / nx, ly / ny)
    labels, shape = _domain_from_cells(cells, spacing)
    lab2 = labels.reshape(shape)
    # Neumann first, Dirichlet second so that Dirichlet wins at corners
    for code in (NEUMANN, DIRICHLET):
        for name, (axis, end) in SIDE_NAMES.items():
            lab = sides[name]
            if lab is not None and lab.code == code:
                idx = [slice(None), slice(None)]
                idx[axis] = 0 if end == 0 else shape[axis] - 1
                lab2[tuple(idx)] = code
    return GridDomain(shape, spacing, cells, lab2.ravel().copy(), side_bc=side_bc)


def build_mask_domain(mask, h: float, bc) -> GridDomain:
    """Domain from a boolean vertex lattice with uniform spacing and outer label.

    Active cells are those whose corners are all in ``mask``.  Mask vertices
    that touch no active cell are rejected, so a neck must be at least one
    cell wide (with Dirichlet labels it then carries a single interior vertex
    across).
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim not in (1, 2) or min(mask.shape) < 2:
        raise DomainError("mask must be a 1D or 2D lattice with at least 2 vertices per axis")
    if not h > 0:
        raise DomainError("spacing must be positive")
    lab = as_bc(bc)
    if lab is None:
        raise DomainError("mask domains need a Dirichlet or Neumann outer label")
    cells = np.ones(tuple(s - 1 for s in mask.shape), dtype=bool)
    for offs in itertools.product((0, 1), repeat=mask.ndim):
        sl = tuple(slice(o, o + n) for o, n in zip(offs, cells.shape))
        cells &= mask[sl]
    spacing = (float(h),) * mask.ndim
    labels, shape = _domain_from_cells(cells, spacing)
    stray = mask.ravel() & (labels == OUTSIDE)
    if np.any(stray):
        raise Disconnected(f"{int(stray.sum())} mask vertices touch no complete cell")
    domain = GridDomain(shape, spacing, cells, labels)
    labels[domain.boundary_vertices()] = lab.code
    return domain.validate()


def lshape_mask(n: int) -> np.ndarray:
    """Vertex mask of a 2n x 2n cell square minus its upper-right n x n block."""
    mask = np.ones((2 * n + 1, 2 * n + 1), dtype=bool)
    mask[n + 1:, n + 1:] = False
    return mask


def periodic_identification(domain: GridDomain, axis: int) -> GridDomain:
    """Identify the two faces normal to ``axis`` by translation."""
    if domain.side_bc is None:
        raise DomainError("periodic identification needs an interval or rectangle domain")
    if axis not in range(domain.dim):
        raise DomainError(f"axis {axis} out of range")
    if axis in domain.periodic_axes:
        raise DomainError(f"axis {axis} is already periodic")
    lo, hi = domain.side_bc[axis]
    if lo is not None or hi is not None:
        raise FaceAlreadyLabeled(f"faces normal to axis {axis} carry labels {lo}, {hi}")
    grid = np.arange(domain.n_lattice).reshape(domain.shape)
    g1 = np.take(grid, 0, axis=axis).ravel()
    g2 = np.take(grid, domain.shape[axis] - 1, axis=axis).ravel()
    pairs = np.concatenate([domain.periodic_pairs, np.stack([g1, g2], axis=1)])
    return replace(domain, periodic_pairs=pairs, periodic_axes=domain.periodic_axes + (axis,))


def torus(n: int, length: float = 1.0) -> GridDomain:
    rect = build_rectangle(n, n, length, length, None)
    return periodic_identification(periodic_identification(rect, 0), 1)


def circle(n_cells: int, length: float = 1.0) -> GridDomain:
    return periodic_identification(build_interval(n_cells, length, None, None), 0)


# -- partitions -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Partition:
    """Vertex separator: per-lattice-vertex side code and the ordered Sigma set.

    ``side`` holds OMEGA1, SIGMA or OMEGA2 for every in-domain vertex (and -1
    outside).  Dirichlet vertices keep a geometric side but never enter the
    index sets; ``sigma`` lists the free Sigma vertices in increasing order.
    """

    side: np.ndarray
    sigma: np.ndarray

    def index_sets(self, domain: GridDomain) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        free = np.zeros(domain.n_lattice, dtype=bool)
        free[domain.free_vertices()] = True
        i1 = np.flatnonzero(free & (self.side == OMEGA1))
        i2 = np.flatnonzero(free & (self.side == OMEGA2))
        return i1, self.sigma, i2

    def swapped(self) -> "Partition":
        side = self.side.copy()
        side[self.side == OMEGA1] = OMEGA2
        side[self.side == OMEGA2] = OMEGA1
        return Partition(side, self.sigma.copy())

    def check(self, domain: GridDomain) -> "Partition":
        """Raise unless no edge joins a free Omega1 vertex to a free Omega2 vertex."""
        free = np.zeros(domain.n_lattice, dtype=bool)
        free[domain.free_vertices()] = True
        e = domain.edges()
        su, sv = self.side[e[:, 0]], self.side[e[:, 1]]
        bad = free[e[:, 0]] & free[e[:, 1]] & (((su == OMEGA1) & (sv == OMEGA2)) | ((su == OMEGA2) & (sv == OMEGA1)))
        if np.any(bad):
            raise SignChangeWithoutSeparator(f"{int(bad.sum())} edges join Omega1 to Omega2 directly")
        if np.any(domain.labels[self.sigma] == DIRICHLET):
            raise SigmaTouchesBoundary("a Dirichlet vertex was placed in Sigma")
        return self


def partition_by_line(domain: GridDomain, axis: int, index: int, *, flip: bool = False) -> Partition:
    """Split along the lattice line ``coordinate[axis] == index``.

    Omega1 is the smaller-coordinate side (larger with ``flip``).  Line
    vertices with a Dirichlet label stay eliminated and are not part of
    Sigma; Neumann-labeled line vertices are free unknowns and stay in Sigma
    so that the separator property holds.
    """
    if domain.is_periodic:
        raise DomainError("line partitions of periodic domains are not supported")
    if axis not in range(domain.dim):
        raise DomainError(f"axis {axis} out of range")
    if not 0 < index < domain.shape[axis] - 1:
        raise DomainError(f"line index {index} is not strictly inside the grid")
    pos = domain.multi_index(np.arange(domain.n_lattice))[axis]
    inside = domain.labels != OUTSIDE
    side = np.full(domain.n_lattice, -1, dtype=np.int8)
    lo, hi = (OMEGA2, OMEGA1) if flip else (OMEGA1, OMEGA2)
    side[inside & (pos < index)] = lo
    side[inside & (pos > index)] = hi
    side[inside & (pos == index)] = SIGMA
    on_line = np.flatnonzero(inside & (pos == index))
    if len(on_line) == 0:
        raise DomainError("line misses the domain")
    sigma = on_line[domain.labels[on_line] != DIRICHLET]
    if len(sigma) == 0:
        raise EmptyInterface("every vertex on the line is Dirichlet-eliminated")
    return Partition(side, np.sort(sigma)).check(domain)


def partition_by_sign(domain: GridDomain, values, zero_tol: float) -> Partition:
    """Positive vertices form Omega1, negative ones Omega2, near-zero ones Sigma.

    ``values`` covers the lattice (flat or shaped); ``zero_tol`` is absolute.
    Dirichlet vertices are neutral.  Sigma may be empty.
    """
    vals = np.asarray(values, dtype=float).ravel()
    if vals.shape[0] != domain.n_lattice:
        raise DomainError("values must cover every lattice vertex")
    inside = domain.labels != OUTSIDE
    free = inside & (domain.labels != DIRICHLET)
    side = np.full(domain.n_lattice, -1, dtype=np.int8)
    side[inside] = SIGMA
    side[free & (vals > zero_tol)] = OMEGA1
    side[free & (vals < -zero_tol)] = OMEGA2
    sigma = np.flatnonzero(free & (side == SIGMA))
    return Partition(side, sigma).check(domain)
