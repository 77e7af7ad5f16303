"""Dirichlet-to-Neumann maps as Schur complements onto an interface.

Trace spaces on the interface are plain coordinate vectors with the dot
product; maps are not mass-normalized.  Every consumer only needs inertias,
which are invariant under the diagonal congruence that would normalize them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .assemble import (
    BlockOperator,
    GridDomain,
    Potential,
    SymMatrix,
    assemble_global,
    assemble_periodic,
    assemble_unrolled,
    boundary_measure,
    relabel_boundary,
)
from .errors import DomainError, EmptyInterface, Singular
from .grid import DIRICHLET, NEUMANN
from .linalg import DEFAULT_ZERO_TOL, schur_complement, spectral_norm

SUM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DtnMap:
    matrix: np.ndarray
    side: str  # "1", "2", "sum", "periodic", "partial"
    shift: float
    dofs: np.ndarray  # lattice vertices of the interface
    scale: float = 0.0  # max|entry| of the block it was condensed from

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def inertia(self, zero_tol: float = DEFAULT_ZERO_TOL) -> linalg.Inertia:
        return linalg.ldlt_inertia(self.matrix, zero_tol, self.scale)


def _absmax(m: np.ndarray) -> float:
    return float(np.abs(m).max(initial=0.0))


def interface_scale(blocks: BlockOperator) -> float:
    """Magnitude of the Sigma diagonal blocks: the floor for zero tests on interface maps."""
    return max(_absmax(blocks.d1), _absmax(blocks.d2))


def dtn_side(blocks: BlockOperator, side: int, zero_tol: float = DEFAULT_ZERO_TOL) -> DtnMap:
    a, b, d = blocks.side(side)
    return DtnMap(schur_complement(a, b, d, zero_tol), str(side), blocks.shift, blocks.s, _absmax(d))


def global_schur(blocks: BlockOperator, zero_tol: float = DEFAULT_ZERO_TOL) -> np.ndarray:
    """Schur complement of the assembled global matrix onto Sigma."""
    g = blocks.global_matrix()
    n1, m = len(blocks.i1), len(blocks.s)
    inner = np.r_[0:n1, n1 + m:g.shape[0]]
    sig = np.r_[n1:n1 + m]
    return schur_complement(g[np.ix_(inner, inner)], g[np.ix_(inner, sig)], g[np.ix_(sig, sig)], zero_tol)


def dtn_sum(blocks: BlockOperator, zero_tol: float = DEFAULT_ZERO_TOL, *, check: bool = True) -> DtnMap:
    """Lambda_1 + Lambda_2, cross-checked against the global Schur complement."""
    lam1 = dtn_side(blocks, 1, zero_tol).matrix
    lam2 = dtn_side(blocks, 2, zero_tol).matrix
    total = lam1 + lam2
    if check:
        ref = global_schur(blocks, zero_tol)
        scale = max(1.0, float(np.abs(blocks.d1 + blocks.d2).max(initial=0.0)))
        err = float(np.abs(total - ref).max(initial=0.0))
        if err > SUM_TOL * scale:
            raise ArithmeticError(f"sum of side maps deviates from global Schur complement by {err:.3e}")
    return DtnMap(total, "sum", blocks.shift, blocks.s, _absmax(blocks.d1 + blocks.d2))


def sum_vs_global_error(blocks: BlockOperator, zero_tol: float = DEFAULT_ZERO_TOL) -> float:
    """Max entrywise gap between Lambda_1 + Lambda_2 and the global Schur complement, relative to max|D|."""
    total = dtn_side(blocks, 1, zero_tol).matrix + dtn_side(blocks, 2, zero_tol).matrix
    ref = global_schur(blocks, zero_tol)
    scale = max(1.0, float(np.abs(blocks.d1 + blocks.d2).max(initial=0.0)))
    return float(np.abs(total - ref).max(initial=0.0)) / scale


def ntd_map(dtn: DtnMap, zero_tol: float = DEFAULT_ZERO_TOL) -> np.ndarray:
    """Neumann-to-Dirichlet map (inverse of the DtN matrix)."""
    if dtn.inertia(zero_tol).n_zero:
        raise Singular("DtN map has a kernel (0 is a Neumann eigenvalue)")
    inv = np.linalg.inv(dtn.matrix)
    return 0.5 * (inv + inv.T)


def _seam_split(domain: GridDomain, op: SymMatrix):
    rep = domain.quotient()
    seam = np.unique(rep[domain.seam_vertices()])
    on_seam = np.isin(op.dofs, seam)
    return np.flatnonzero(~on_seam), np.flatnonzero(on_seam)


def dtn_periodic(domain: GridDomain, V: Potential, lam: float = 0.0,
                 zero_tol: float = DEFAULT_ZERO_TOL) -> DtnMap:
    """Periodic DtN map on the identified boundary classes.

    Interior rows of the quotient operator form the Dirichlet realization; the
    seam classes carry both conormal contributions, so the Schur complement
    onto them is the sum of the Gamma_1 and Gamma_2 conormal derivatives.
    """
    if not domain.is_periodic:
        raise DomainError("domain has no periodic map")
    op = assemble_periodic(domain, V, lam)
    inner, seam = _seam_split(domain, op)
    if len(seam) == 0:
        raise EmptyInterface("no free seam vertices")
    m = op.matrix
    s = schur_complement(m[np.ix_(inner, inner)], m[np.ix_(inner, seam)], m[np.ix_(seam, seam)], zero_tol)
    return DtnMap(s, "periodic", float(lam), op.dofs[seam], _absmax(m[np.ix_(seam, seam)]))


def periodic_dirichlet(domain: GridDomain, V: Potential, lam: float = 0.0) -> SymMatrix:
    """Dirichlet realization L^D: interior rows of the quotient operator."""
    op = assemble_periodic(domain, V, lam)
    inner, _ = _seam_split(domain, op)
    return SymMatrix(op.matrix[np.ix_(inner, inner)].copy(), op.mass[inner], op.dofs[inner], "D", float(lam))


def _gamma1_rows(domain: GridDomain, op: SymMatrix):
    rep = domain.quotient()
    g1 = np.unique(rep[domain.seam_vertices()])
    on = np.isin(op.dofs, g1)
    return np.flatnonzero(~on), np.flatnonzero(on)


def dtn_partial(domain: GridDomain, V: Potential, lam: float = 0.0,
                zero_tol: float = DEFAULT_ZERO_TOL) -> DtnMap:
    """Partial DtN map on Gamma_1 with homogeneous Dirichlet data on Gamma_2."""
    if not domain.is_periodic:
        raise DomainError("domain has no periodic map")
    op = assemble_unrolled(domain, V, lam, gamma1="neumann", gamma2="dirichlet")
    inner, g1 = _gamma1_rows(domain, op)
    if len(g1) == 0:
        raise EmptyInterface("Gamma_1 has no free vertices")
    m = op.matrix
    s = schur_complement(m[np.ix_(inner, inner)], m[np.ix_(inner, g1)], m[np.ix_(g1, g1)], zero_tol)
    return DtnMap(s, "partial", float(lam), op.dofs[g1], _absmax(m[np.ix_(g1, g1)]))


def full_boundary_dtn(domain: GridDomain, V: Potential, lam: float = 0.0,
                      zero_tol: float = DEFAULT_ZERO_TOL):
    """Unrolled (Gamma_1 + Gamma_2) DtN map, block-ordered [Gamma_1, Gamma_2].

    Gamma_2 vertices are ordered to match their tau-partners in Gamma_1.
    Returns the map and the number of Gamma_1 rows.
    """
    op = assemble_unrolled(domain, V, lam, gamma1="neumann", gamma2="neumann")
    rep = domain.quotient()
    seam = domain.seam_vertices()
    pos = {int(v): i for i, v in enumerate(op.dofs)}
    g1 = [v for v in np.unique(rep[seam]) if int(v) in pos]
    g2 = [v for v in seam if rep[v] != v and int(v) in pos]
    if len(domain.periodic_axes) != 1 or len(g1) != len(g2):
        raise DomainError("the unrolled boundary map needs a single periodic axis")
    partner = {int(rep[v]): int(v) for v in g2}
    g2 = [partner[int(v)] for v in g1]
    bidx = np.array([pos[int(v)] for v in g1] + [pos[int(v)] for v in g2])
    inner = np.setdiff1d(np.arange(op.order), bidx)
    m = op.matrix
    s = schur_complement(m[np.ix_(inner, inner)], m[np.ix_(inner, bidx)], m[np.ix_(bidx, bidx)], zero_tol)
    return s, len(g1)


@dataclass(frozen=True, eq=False)
class BoundaryProblem:
    """Single-domain setting: the whole outer boundary is the interface."""

    neumann: SymMatrix
    dirichlet: SymMatrix
    dtn: DtnMap
    measure: np.ndarray  # boundary measure of each interface vertex


def boundary_dtn(domain: GridDomain, V: Potential, lam: float = 0.0,
                 zero_tol: float = DEFAULT_ZERO_TOL) -> BoundaryProblem:
    """Neumann and Dirichlet realizations and the full-boundary DtN map."""
    neu_dom = relabel_boundary(domain, NEUMANN)
    neu = assemble_global(neu_dom, V, lam)
    dirich = assemble_global(relabel_boundary(domain, DIRICHLET), V, lam)
    on_b = np.isin(neu.dofs, neu_dom.boundary_vertices())
    inner, bidx = np.flatnonzero(~on_b), np.flatnonzero(on_b)
    if len(bidx) == 0:
        raise EmptyInterface("domain has no boundary")
    m = neu.matrix
    s = schur_complement(m[np.ix_(inner, inner)], m[np.ix_(inner, bidx)], m[np.ix_(bidx, bidx)], zero_tol)
    dofs = neu.dofs[bidx]
    dtn = DtnMap(s, "boundary", float(lam), dofs, _absmax(m[np.ix_(bidx, bidx)]))
    return BoundaryProblem(neu, dirich, dtn, boundary_measure(domain)[dofs])


def default_c_grid() -> np.ndarray:
    return np.unique(np.concatenate([np.logspace(-3, 3, 64), [1.0]]))


@dataclass(frozen=True)
class Certificate:
    holds: bool
    best_margin: float
    best_c: float


def perturb_certificate(lam1: DtnMap, lam2: DtnMap, c_grid=None,
                        zero_tol: float = DEFAULT_ZERO_TOL) -> Certificate:
    """Search c for ||Lambda_1^{-1} Lambda_2 - c I|| < 1 + c (coordinate 2-norm)."""
    grid = default_c_grid() if c_grid is None else np.asarray(c_grid, dtype=float)
    x = ntd_map(lam1, zero_tol) @ lam2.matrix
    eye = np.eye(x.shape[0])
    best_margin, best_c = math.inf, math.nan
    for c in grid:
        margin = spectral_norm(x - c * eye) - (1.0 + c)
        if margin < best_margin:
            best_margin, best_c = margin, float(c)
    return Certificate(best_margin < 0, float(best_margin), best_c)
