"""Nodal domains, Courant's bound and the DtN formula for nodal deficiency."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .assemble import Potential, SymMatrix, assemble_blocks, assemble_global, realize
from .dtn import dtn_sum
from .errors import DtnLabError, NotSimple
from .grid import OUTSIDE, GridDomain, UnionFind, partition_by_sign
from .linalg import DEFAULT_ZERO_TOL, eigs, ldlt_inertia

GAP_TOL = 1e-6
NODAL_ZERO_TOL = 1e-8


class AllZero(DtnLabError, ValueError):
    """Every value lies below the zero threshold."""


@dataclass(frozen=True, eq=False)
class NodalDomains:
    n_plus: int
    n_minus: int
    labels: np.ndarray  # component id per lattice vertex, -1 on the zero set and outside
    signs: np.ndarray  # sign of each component

    @property
    def total(self) -> int:
        return self.n_plus + self.n_minus


def nodal_domains(domain: GridDomain, values, zero_tol: float = NODAL_ZERO_TOL) -> NodalDomains:
    """Connected same-sign components of ``values`` over the operator's edges.

    A vertex counts as zero when |value| <= zero_tol * max|value|.
    """
    vals = np.asarray(values, dtype=float).ravel()
    if vals.shape[0] != domain.n_lattice:
        raise ValueError("values must cover every lattice vertex")
    inside = domain.labels != OUTSIDE
    peak = float(np.abs(vals[inside]).max(initial=0.0))
    if peak == 0.0:
        raise AllZero("values vanish identically")
    sign = np.where(inside & (np.abs(vals) > zero_tol * peak), np.sign(vals), 0).astype(np.int8)
    uf = UnionFind(domain.n_lattice)
    e = domain.edges()
    same = (sign[e[:, 0]] != 0) & (sign[e[:, 0]] == sign[e[:, 1]])
    for u, v in e[same]:
        uf.union(int(u), int(v))
    if domain.is_periodic:
        rep = domain.quotient()
        for v in np.flatnonzero(rep != np.arange(domain.n_lattice)):
            if sign[v] != 0:
                uf.union(int(v), int(rep[v]))
    roots = uf.roots()
    active = np.flatnonzero(sign != 0)
    uniq, comp = np.unique(roots[active], return_inverse=True)
    labels = np.full(domain.n_lattice, -1, dtype=np.int64)
    labels[active] = comp
    signs = np.zeros(len(uniq), dtype=np.int8)
    signs[comp] = sign[active]
    return NodalDomains(int(np.sum(signs > 0)), int(np.sum(signs < 0)), labels, signs)


def write_labels_csv(path, domain: GridDomain, nd: NodalDomains) -> None:
    """Component ids on the vertex grid (rows along the last axis)."""
    grid = nd.labels.reshape(domain.shape)
    if grid.ndim == 1:
        grid = grid[None, :]
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(grid.reshape(-1, grid.shape[-1]).tolist())


@dataclass
class NodalReport:
    k: int
    lam: float
    simple: bool
    n_plus_domains: int
    n_minus_domains: int
    n_total: int
    deficiency_direct: int
    eps: float = float("nan")
    deficiency_dtn: Optional[int] = None
    agreement: Optional[bool] = None
    mor_global: Optional[int] = None
    mor_dirichlet_plus: Optional[int] = None
    mor_dirichlet_minus: Optional[int] = None


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: np.ndarray
    vectors: np.ndarray  # lattice-indexed eigenfunctions, one per column
    op: SymMatrix


def spectrum(domain: GridDomain, V: Potential) -> Spectrum:
    """Eigenpairs of L in the lumped-mass inner product, ascending."""
    op = assemble_global(domain, V, 0.0)
    root = 1.0 / np.sqrt(op.mass)
    w, y = eigs(op.matrix * root[:, None] * root[None, :], vectors=True)
    phi = np.zeros((domain.n_lattice, len(w)))
    phi[op.dofs] = y * root[:, None]
    return Spectrum(w, phi, op)


def _is_simple(values: np.ndarray, k: int, gap_tol: float) -> bool:
    lam = values[k - 1]
    tol = gap_tol * max(abs(lam), 1.0)
    gaps = []
    if k >= 2:
        gaps.append(lam - values[k - 2])
    if k < len(values):
        gaps.append(values[k] - lam)
    return min(gaps, default=np.inf) > tol


def courant_check(domain: GridDomain, V: Potential, k_max: int, gap_tol: float = GAP_TOL,
                  zero_tol: float = NODAL_ZERO_TOL, spec: Optional[Spectrum] = None) -> list[NodalReport]:
    spec = spec or spectrum(domain, V)
    if k_max > len(spec.values):
        raise ValueError(f"only {len(spec.values)} eigenpairs available")
    out = []
    for k in range(1, k_max + 1):
        nd = nodal_domains(domain, spec.vectors[:, k - 1], zero_tol)
        out.append(NodalReport(k, float(spec.values[k - 1]), _is_simple(spec.values, k, gap_tol),
                               nd.n_plus, nd.n_minus, nd.total, k - nd.total))
    return out


def nodal_deficiency_dtn(domain: GridDomain, V: Potential, k: int, gap_tol: float = GAP_TOL,
                         eps: Optional[float] = None, zero_tol: float = DEFAULT_ZERO_TOL,
                         nodal_tol: float = NODAL_ZERO_TOL, spec: Optional[Spectrum] = None,
                         flip: bool = False) -> NodalReport:
    """Deficiency k - n(phi_k) as the Morse index of Lambda_+(eps) + Lambda_-(eps).

    Positive nodal domains form side 1 and negative ones side 2; ``flip``
    negates phi_k first.
    """
    spec = spec or spectrum(domain, V)
    if not 1 <= k <= len(spec.values):
        raise ValueError("k out of range")
    if not _is_simple(spec.values, k, gap_tol):
        raise NotSimple(f"eigenvalue {k} is not simple at gap tolerance {gap_tol}")
    lam = float(spec.values[k - 1])
    if eps is None:
        eps = 0.5 * (spec.values[k] - lam) if k < len(spec.values) else 1.0
    phi = spec.vectors[:, k - 1] * (-1.0 if flip else 1.0)
    nd = nodal_domains(domain, phi, nodal_tol)
    peak = float(np.abs(phi).max())
    part = partition_by_sign(domain, phi, nodal_tol * peak)
    blocks = assemble_blocks(domain, V, part, lam + eps)
    mor_g = ldlt_inertia(realize(blocks, "G").matrix, zero_tol).n_minus
    mor_p = ldlt_inertia(blocks.a1, zero_tol).n_minus
    mor_m = ldlt_inertia(blocks.a2, zero_tol).n_minus
    if len(blocks.s) == 0:
        # empty nodal set: index 0 by convention
        dtn_index = 0
    else:
        dtn_index = dtn_sum(blocks, zero_tol).inertia(zero_tol).n_minus
    direct = k - nd.total
    agree = dtn_index == direct and mor_g == k and mor_p == nd.n_plus and mor_m == nd.n_minus
    return NodalReport(k, lam, True, nd.n_plus, nd.n_minus, nd.total, direct, float(eps), dtn_index,
                       agree, mor_g, mor_p, mor_m)
