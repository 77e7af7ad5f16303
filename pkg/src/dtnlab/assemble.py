"""Assembly of the discrete operator -Delta_h + V - lambda and its realizations.

Stiffness and lumped mass are accumulated cell by cell (bilinear elements with
a lumped mass).  For a uniform grid this is the standard (2d+1)-point stencil
with natural one-sided closure at Neumann vertices.  Every matrix is in energy
scaling: entries are stiffness + (V - lambda) * mass, so the Morse index at
shift lambda counts discrete eigenvalues below lambda.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import DomainError
from .grid import (
    DIRICHLET,
    NEUMANN,
    OMEGA1,
    OMEGA2,
    OUTSIDE,
    GridDomain,
    Partition,
    _cell_edge_pairs,
    cell_edge_axes,
)


@dataclass(frozen=True, eq=False)
class Potential:
    """Potential V sampled at vertices, with a declared lower bound ``inf``."""

    kind: str
    value: Union[float, Callable, np.ndarray]
    inf: Optional[float] = None

    @classmethod
    def constant(cls, c: float) -> "Potential":
        return cls("constant", float(c), float(c))

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], np.ndarray], inf: Optional[float] = None) -> "Potential":
        return cls("callable", fn, inf)

    @classmethod
    def from_array(cls, values, inf: Optional[float] = None) -> "Potential":
        arr = np.asarray(values, dtype=float).ravel()
        return cls("array", arr, float(arr.min()) if inf is None else inf)

    def sample(self, domain: GridDomain) -> np.ndarray:
        if self.kind == "constant":
            vals = np.full(domain.n_lattice, self.value)
        elif self.kind == "callable":
            vals = np.asarray(self.value(domain.coords()), dtype=float).ravel()
            if vals.size == 1:
                vals = np.full(domain.n_lattice, float(vals[0]))
        else:
            vals = self.value
        if vals.shape[0] != domain.n_lattice:
            raise DomainError(f"potential has {vals.shape[0]} samples, lattice has {domain.n_lattice}")
        inside = domain.labels != OUTSIDE
        if self.inf is not None and np.any(vals[inside] < self.inf - 1e-12 * max(1.0, abs(self.inf))):
            raise DomainError("potential drops below its declared lower bound")
        return vals

    def lower_bound(self, domain: GridDomain) -> float:
        if self.inf is not None:
            return float(self.inf)
        vals = self.sample(domain)
        return float(vals[domain.labels != OUTSIDE].min())


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """A realization: symmetric matrix plus the lumped mass of each row.

    ``dofs`` maps rows to lattice vertices (class representatives for
    periodic assemblies); ``kind`` and ``shift`` record provenance.
    """

    matrix: np.ndarray
    mass: np.ndarray
    dofs: np.ndarray
    kind: str
    shift: float

    @property
    def order(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class BlockOperator:
    """3x3 block form over (Omega1 free, Sigma, Omega2 free) at shift lambda."""

    i1: np.ndarray
    s: np.ndarray
    i2: np.ndarray
    a1: np.ndarray
    b1: np.ndarray
    d1: np.ndarray
    a2: np.ndarray
    b2: np.ndarray
    d2: np.ndarray
    mass1: np.ndarray  # over i1 then s (side-1 share on s)
    mass2: np.ndarray  # over i2 then s
    shift: float

    def side(self, k: int):
        """(A, B, D) of side ``k``."""
        if k == 1:
            return self.a1, self.b1, self.d1
        if k == 2:
            return self.a2, self.b2, self.d2
        raise ValueError("side must be 1 or 2")

    def global_matrix(self) -> np.ndarray:
        n1, m, n2 = len(self.i1), len(self.s), len(self.i2)
        g = np.zeros((n1 + m + n2, n1 + m + n2))
        g[:n1, :n1] = self.a1
        g[:n1, n1:n1 + m] = self.b1
        g[n1:n1 + m, :n1] = self.b1.T
        g[n1:n1 + m, n1:n1 + m] = self.d1 + self.d2
        g[n1:n1 + m, n1 + m:] = self.b2.T
        g[n1 + m:, n1:n1 + m] = self.b2
        g[n1 + m:, n1 + m:] = self.a2
        return g

    def swapped(self) -> "BlockOperator":
        return BlockOperator(self.i2, self.s, self.i1, self.a2, self.b2, self.d2,
                             self.a1, self.b1, self.d1, self.mass2, self.mass1, self.shift)


# -- element contributions --------------------------------------------------

def _contributions(domain: GridDomain):
    """Edge (u, v, w, cell) and mass (vertex, m, cell) contribution lists."""
    corners = domain.cell_corners()
    ncell = corners.shape[0]
    h = np.asarray(domain.spacing)
    dim = domain.dim
    cell_ids = np.arange(ncell)
    eu, ev, ew, ec = [], [], [], []
    for (a, b), axis in zip(_cell_edge_pairs(dim), cell_edge_axes(dim)):
        # dual-face measure / edge length, halved across the cell
        w = np.prod(np.delete(h, axis)) / 2 ** (dim - 1) / h[axis]
        eu.append(corners[:, a])
        ev.append(corners[:, b])
        ew.append(np.full(ncell, w))
        ec.append(cell_ids)
    q = float(np.prod(h)) / 2 ** dim
    mv = corners.T.ravel()
    mc = np.tile(cell_ids, 2 ** dim)
    mw = np.full(mv.shape[0], q)
    return (np.concatenate(eu), np.concatenate(ev), np.concatenate(ew), np.concatenate(ec),
            mv, mw, mc, corners)


def _accumulate(n, dof_of, eu, ev, ew, mv, mw, vvals, lam):
    """Dense stiffness + (V - lam) * mass over rows given by ``dof_of``."""
    mat = np.zeros((n, n))
    ru, rv = dof_of[eu], dof_of[ev]
    ok = ru >= 0
    np.add.at(mat, (ru[ok], ru[ok]), ew[ok])
    ok = rv >= 0
    np.add.at(mat, (rv[ok], rv[ok]), ew[ok])
    both = (ru >= 0) & (rv >= 0)
    np.add.at(mat, (ru[both], rv[both]), -ew[both])
    np.add.at(mat, (rv[both], ru[both]), -ew[both])
    mass = np.zeros(n)
    rm = dof_of[mv]
    ok = rm >= 0
    np.add.at(mass, rm[ok], mw[ok])
    pot = np.zeros(n)
    np.add.at(pot, rm[ok], (vvals[mv[ok]] - lam) * mw[ok])
    mat[np.diag_indices(n)] += pot
    return mat, mass


def _dof_map(n_lattice: int, dofs: np.ndarray) -> np.ndarray:
    dof_of = np.full(n_lattice, -1, dtype=np.int64)
    dof_of[dofs] = np.arange(len(dofs))
    return dof_of


def assemble_global(domain: GridDomain, V: Potential, lam: float = 0.0) -> SymMatrix:
    """Global realization over the free vertices (Dirichlet vertices eliminated)."""
    if domain.is_periodic:
        raise DomainError("domain carries a periodic map; use assemble_periodic")
    domain.validate()
    vvals = V.sample(domain)
    dofs = domain.free_vertices()
    eu, ev, ew, _, mv, mw, _, _ = _contributions(domain)
    mat, mass = _accumulate(len(dofs), _dof_map(domain.n_lattice, dofs), eu, ev, ew, mv, mw, vvals, lam)
    return SymMatrix(mat, mass, dofs, "G", float(lam))


def _routing(domain: GridDomain, partition: Partition, eu, ev, ec, mv, mc, corners):
    """Fraction of each edge / mass contribution routed to side 1."""
    side = partition.side
    csides = side[corners]
    has1 = np.any(csides == OMEGA1, axis=1)
    has2 = np.any(csides == OMEGA2, axis=1)
    cell_frac = np.where(has1 & ~has2, 1.0, np.where(has2 & ~has1, 0.0, 0.5))

    su, sv = side[eu], side[ev]
    efrac = cell_frac[ec].copy()
    efrac[(su == OMEGA1) | (sv == OMEGA1)] = 1.0
    efrac[(su == OMEGA2) | (sv == OMEGA2)] = 0.0
    sm = side[mv]
    mfrac = cell_frac[mc].copy()
    mfrac[sm == OMEGA1] = 1.0
    mfrac[sm == OMEGA2] = 0.0
    return efrac, mfrac


def assemble_blocks(domain: GridDomain, V: Potential, partition: Partition, lam: float = 0.0) -> BlockOperator:
    """Block form whose Sigma diagonal is split by side into D1 + D2.

    Contributions touching an Omega_i vertex go to side i; Sigma-Sigma
    stiffness and Sigma mass follow the side of their cell, split evenly when
    the cell touches both sides or neither.
    """
    if domain.is_periodic:
        raise DomainError("block assembly of periodic domains is not supported")
    domain.validate()
    partition.check(domain)
    vvals = V.sample(domain)
    i1, s, i2 = partition.index_sets(domain)
    order = np.concatenate([i1, s, i2])
    dof_of = _dof_map(domain.n_lattice, order)
    eu, ev, ew, ec, mv, mw, mc, corners = _contributions(domain)
    efrac, mfrac = _routing(domain, partition, eu, ev, ec, mv, mc, corners)
    n = len(order)
    m1, mass1 = _accumulate(n, dof_of, eu, ev, ew * efrac, mv, mw * mfrac, vvals, lam)
    m2, mass2 = _accumulate(n, dof_of, eu, ev, ew * (1.0 - efrac), mv, mw * (1.0 - mfrac), vvals, lam)
    n1, ns = len(i1), len(s)
    r1 = slice(0, n1)
    rs = slice(n1, n1 + ns)
    r2 = slice(n1 + ns, n)
    if np.any(m2[r1, :]) or np.any(m1[r2, :]):
        raise DomainError("partition leaks contributions across Sigma")
    return BlockOperator(
        i1=i1, s=s, i2=i2,
        a1=m1[r1, r1].copy(), b1=m1[r1, rs].copy(), d1=m1[rs, rs].copy(),
        a2=m2[r2, r2].copy(), b2=m2[r2, rs].copy(), d2=m2[rs, rs].copy(),
        mass1=np.concatenate([mass1[r1], mass1[rs]]),
        mass2=np.concatenate([mass2[r2], mass2[rs]]),
        shift=float(lam),
    )


REALIZATIONS = ("G", "D1", "N1", "D2", "N2", "DN")


def realize(blocks: BlockOperator, which: str) -> SymMatrix:
    """Extract a realization from the block form.

    G is the full block matrix; Di is the Omega_i block with Dirichlet data on
    Sigma; Ni adds the Sigma rows of side i (natural Neumann closure); DN is
    Neumann on side 1 over Omega1 and Sigma (side 2 contributes A2 separately).
    """
    n1, ns = len(blocks.i1), len(blocks.s)
    if which == "G":
        mass = np.concatenate([blocks.mass1[:n1], blocks.mass1[n1:] + blocks.mass2[len(blocks.i2):],
                               blocks.mass2[:len(blocks.i2)]])
        return SymMatrix(blocks.global_matrix(), mass, np.concatenate([blocks.i1, blocks.s, blocks.i2]),
                         "G", blocks.shift)
    if which not in REALIZATIONS:
        raise ValueError(f"unknown realization {which!r}")
    k = 1 if which in ("D1", "N1", "DN") else 2
    a, b, d = blocks.side(k)
    inner = blocks.i1 if k == 1 else blocks.i2
    mass = blocks.mass1 if k == 1 else blocks.mass2
    ni = len(inner)
    if which.startswith("D") and which != "DN":
        return SymMatrix(a.copy(), mass[:ni].copy(), inner, which, blocks.shift)
    mat = np.block([[a, b], [b.T, d]])
    return SymMatrix(mat, mass.copy(), np.concatenate([inner, blocks.s]), which, blocks.shift)


def assemble_periodic(domain: GridDomain, V: Potential, lam: float = 0.0) -> SymMatrix:
    """Quotient assembly: each Gamma_1 vertex is merged with its tau-image."""
    if not domain.is_periodic:
        raise DomainError("domain has no periodic map")
    domain.validate()
    rep = domain.quotient()
    vvals = V.sample(domain)[rep]
    free = domain.free_vertices()
    dofs = np.unique(rep[free])
    dof_of = _dof_map(domain.n_lattice, dofs)[rep]
    dof_of[domain.labels == OUTSIDE] = -1
    dof_of[domain.labels == DIRICHLET] = -1
    eu, ev, ew, _, mv, mw, _, _ = _contributions(domain)
    mat, mass = _accumulate(len(dofs), dof_of, eu, ev, ew, mv, mw, vvals, lam)
    return SymMatrix(mat, mass, dofs, "P", float(lam))


def assemble_unrolled(domain: GridDomain, V: Potential, lam: float = 0.0, *,
                      gamma1: str = "dirichlet", gamma2: str = "dirichlet") -> SymMatrix:
    """Periodic domain assembled without identification.

    Gamma_1 is the set of class representatives on the seam, Gamma_2 the
    remaining seam vertices; each gets a Dirichlet or Neumann condition.
    The potential is the periodic one (sampled at representatives).
    """
    if not domain.is_periodic:
        raise DomainError("domain has no periodic map")
    rep = domain.quotient()
    seam = domain.seam_vertices()
    g1 = np.unique(rep[seam])
    g2 = np.setdiff1d(seam, g1)
    labels = domain.labels.copy()
    for verts, bc in ((g1, gamma1), (g2, gamma2)):
        keep = labels[verts] != DIRICHLET
        labels[verts[keep]] = DIRICHLET if bc == "dirichlet" else NEUMANN
    vvals = V.sample(domain)[rep]
    dofs = np.flatnonzero((labels != OUTSIDE) & (labels != DIRICHLET))
    eu, ev, ew, _, mv, mw, _, _ = _contributions(domain)
    mat, mass = _accumulate(len(dofs), _dof_map(domain.n_lattice, dofs), eu, ev, ew, mv, mw, vvals, lam)
    kind = {"dirichlet": "D", "neumann": "N"}
    return SymMatrix(mat, mass, dofs, "unrolled-" + kind[gamma1] + kind[gamma2], float(lam))


def boundary_measure(domain: GridDomain) -> np.ndarray:
    """Lumped surface measure of each lattice vertex (zero off the boundary).

    In 1D every boundary endpoint carries unit (counting) measure; in 2D a
    boundary edge of length h gives h/2 to each endpoint.
    """
    meas = np.zeros(domain.n_lattice)
    if domain.dim == 1:
        meas[domain.boundary_vertices()] = 1.0
        return meas
    eu, ev, _, _, _, _, _, _ = _contributions(domain)
    axes = np.repeat(cell_edge_axes(domain.dim), domain.cell_corners().shape[0])
    pairs = np.stack([np.minimum(eu, ev), np.maximum(eu, ev)], axis=1)
    uniq, inv, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    first = np.zeros(len(uniq), dtype=np.int64)
    first[inv[::-1]] = np.arange(len(inv))[::-1]
    outer = counts == 1
    lengths = np.asarray(domain.spacing)[axes[first[outer]]]
    np.add.at(meas, uniq[outer, 0], lengths / 2)
    np.add.at(meas, uniq[outer, 1], lengths / 2)
    return meas


def relabel_boundary(domain: GridDomain, label: int) -> GridDomain:
    """Copy of ``domain`` with every outer boundary vertex carrying ``label``."""
    from dataclasses import replace

    labels = domain.labels.copy()
    labels[domain.boundary_vertices()] = label
    return replace(domain, labels=labels, side_bc=None)


def assemble_robin(domain: GridDomain, V: Potential, theta: float, lam: float = 0.0) -> SymMatrix:
    """Robin realization du/dnu = -cot(theta) u on the whole outer boundary.

    Outer labels are overridden: this is the Neumann realization plus
    cot(theta) times the boundary measure on boundary diagonals.
    """
    if not theta > 0:
        raise DomainError("theta must be positive (the Dirichlet endpoint is excluded)")
    if theta > math.pi / 2 + 1e-15:
        raise DomainError("theta must lie in (0, pi/2]")
    neu = relabel_boundary(domain, NEUMANN)
    base = assemble_global(neu, V, lam)
    cot = 0.0 if theta == math.pi / 2 else math.cos(theta) / math.sin(theta)
    mat = base.matrix.copy()
    mat[np.diag_indices(base.order)] += cot * boundary_measure(neu)[base.dofs]
    return SymMatrix(mat, base.mass, base.dofs, f"R({theta:.6g})", float(lam))
