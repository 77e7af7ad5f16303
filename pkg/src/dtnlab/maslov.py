"""Maslov index of the interface boundary-condition path, in matrix form.

Along beta(t) the intersection with the Cauchy data space mu(0) is the
kernel of Lambda_1 + t^2 Lambda_2, so crossings are zero crossings of the
eigenvalue branches of that pencil.  The authoritative index is the
endpoint-inertia formula Mor0(Lambda_1 + Lambda_2) - Mor0(Lambda_1); the
crossing trace is an independent diagnostic.

Crossing signatures are reported in the Maslov orientation: a branch moving
downward through zero (Morse index increasing) counts +1.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .assemble import BlockOperator, GridDomain, Potential, SymMatrix, assemble_robin, realize
from .dtn import boundary_dtn, dtn_side, interface_scale
from .errors import ASingular, Indeterminate
from .linalg import DEFAULT_ZERO_TOL, eig_inertia, eigs, ldlt_inertia

T_GRID = 512
MAX_DEPTH = 7  # 512 * 2**7 = 2**16 intervals
BISECT_TOL = 1e-10


@dataclass(frozen=True)
class Crossing:
    t: float
    kernel_dim: int
    signature: int
    definite: bool = True


@dataclass
class MaslovResult:
    index: int
    method: str
    crossings: list[Crossing] = field(default_factory=list)
    t_grid_size: int = 0
    s_floor: float = math.nan
    lambda_floor: float = math.nan
    trace_index: Optional[int] = None
    endpoint_crossings: list[Crossing] = field(default_factory=list)
    reliable: bool = True
    trace: Optional[tuple[np.ndarray, np.ndarray]] = None

    @property
    def agree(self) -> bool:
        return self.trace_index == self.index


@dataclass(frozen=True)
class Kernel:
    dim: int
    basis: np.ndarray


def _kernel(mat: np.ndarray, zero_tol: float, scale: Optional[float] = None) -> Kernel:
    if mat.shape[0] == 0:
        return Kernel(0, np.zeros((0, 0)))
    w, v = eigs(mat, vectors=True)
    if scale is None:
        scale = float(np.abs(mat).max())
    keep = np.abs(w) <= zero_tol * scale
    return Kernel(int(keep.sum()), v[:, keep])


def crossing_kernel(blocks: BlockOperator, t: float, zero_tol: float = DEFAULT_ZERO_TOL,
                    maps: Optional[tuple[np.ndarray, np.ndarray]] = None) -> Kernel:
    """Kernel of beta(t) against mu(0).

    For t > 0 this is ker(Lambda_1 + t^2 Lambda_2).  At t = 0 the dimension is
    dim ker L^N_1 + dim ker L^D_2, with a basis only for the Lambda_1 part.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if t == 0.0:
        n1 = ldlt_inertia(realize(blocks, "N1").matrix, zero_tol).n_zero
        n2 = ldlt_inertia(blocks.a2, zero_tol).n_zero
        try:
            lam1 = maps[0] if maps is not None else dtn_side(blocks, 1, zero_tol).matrix
            basis = _kernel(lam1, zero_tol, max(float(np.abs(lam1).max(initial=0.0)), _absmax_d(blocks, 1))).basis
        except ASingular:
            basis = np.zeros((len(blocks.s), 0))
        return Kernel(n1 + n2, basis)
    lam1, lam2 = _maps(blocks, zero_tol, maps)
    # tolerance relative to the pencil, not to the (nearly singular) member
    scale = max(float(np.abs(lam1).max(initial=0.0)), float(np.abs(lam2).max(initial=0.0)),
                interface_scale(blocks))
    return _kernel(lam1 + t * t * lam2, zero_tol, scale)


def _absmax_d(blocks: BlockOperator, side: int) -> float:
    return float(np.abs(blocks.d1 if side == 1 else blocks.d2).max(initial=0.0))


def _bisect(branch: Callable[[float], float], a: float, b: float, fa: float) -> float:
    while b - a > BISECT_TOL:
        mid = 0.5 * (a + b)
        fm = branch(mid)
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


def trace_crossings(family: Callable[[float], np.ndarray], derivative: Callable[[float], np.ndarray],
                    n_grid: int = T_GRID, zero_tol: float = DEFAULT_ZERO_TOL):
    """Locate zero crossings of the eigenvalue branches of ``family`` on [0, 1].

    Returns (interior crossings, endpoint crossings, grid t, grid eigenvalues).
    """
    ts = np.linspace(0.0, 1.0, n_grid)
    evs = np.array([eigs(family(t)) for t in ts])
    if evs.shape[1] == 0:
        return [], [], ts, evs
    scale = max(float(np.abs(family(0.0)).max()), float(np.abs(family(1.0)).max()), 1e-300)
    thresh = zero_tol * scale

    def sgn(x):
        return np.where(np.abs(x) <= thresh, 0, np.sign(x))

    raw: list[tuple[float, int]] = []

    def scan(ta, ea, tb, eb, depth):
        near = np.minimum(np.abs(ea), np.abs(eb)) < np.abs(eb - ea)
        if depth < MAX_DEPTH and np.any(near):
            tm = 0.5 * (ta + tb)
            em = eigs(family(tm))
            scan(ta, ea, tm, em, depth + 1)
            scan(tm, em, tb, eb, depth + 1)
            return
        sa, sb = sgn(ea), sgn(eb)
        for j in np.flatnonzero((sa * sb < 0)):
            tstar = _bisect(lambda t, j=j: eigs(family(t))[j], ta, tb, ea[j])
            raw.append((tstar, int(j)))
        # a branch landing exactly on zero at an interior sample point
        landed = np.flatnonzero((sa != 0) & (sb == 0))
        if landed.size and tb < 1.0:
            ahead = sgn(eigs(family(min(1.0, 2 * tb - ta))))
            raw.extend((float(tb), int(j)) for j in landed if ahead[j] == -sa[j])

    for i in range(n_grid - 1):
        scan(ts[i], evs[i], ts[i + 1], evs[i + 1], 0)

    crossings = []
    raw.sort()
    groups: list[list[float]] = []
    for tstar, _ in raw:
        if groups and tstar - groups[-1][-1] <= 1e-8:
            groups[-1].append(tstar)
        else:
            groups.append([tstar])
    for grp in groups:
        tstar = float(np.mean(grp))
        w, v = eigs(family(tstar), vectors=True)
        basis = v[:, np.argsort(np.abs(w))[:len(grp)]]
        form = -(basis.T @ derivative(tstar) @ basis)
        fw = np.linalg.eigvalsh(0.5 * (form + form.T))
        ftol = 1e-12 * max(1.0, float(np.abs(derivative(tstar)).max()))
        definite = bool(np.all(np.abs(fw) > ftol))
        crossings.append(Crossing(tstar, len(grp), int(np.sum(fw > ftol) - np.sum(fw < -ftol)), definite))

    endpoints = []
    for t, ev in ((0.0, evs[0]), (1.0, evs[-1])):
        k = int(np.sum(np.abs(ev) <= thresh))
        if k:
            endpoints.append(Crossing(t, k, 0, False))
    return crossings, endpoints, ts, evs


def _maps(blocks: BlockOperator, zero_tol: float, maps=None):
    if maps is not None:
        return maps
    return dtn_side(blocks, 1, zero_tol).matrix, dtn_side(blocks, 2, zero_tol).matrix


def maslov_beta(blocks: BlockOperator, n_grid: int = T_GRID, zero_tol: float = DEFAULT_ZERO_TOL,
                maps: Optional[tuple[np.ndarray, np.ndarray]] = None) -> MaslovResult:
    """Mas(beta(t); mu(0)) by endpoint inertia, with a crossing trace attached."""
    lam1, lam2 = _maps(blocks, zero_tol, maps)
    floor = interface_scale(blocks)
    index = ldlt_inertia(lam1 + lam2, zero_tol, floor).mor0 - ldlt_inertia(lam1, zero_tol, floor).mor0
    crossings, endpoints, ts, evs = trace_crossings(lambda t: lam1 + t * t * lam2, lambda t: 2.0 * t * lam2,
                                                    n_grid, zero_tol)
    trace_index = sum(c.signature for c in crossings)
    reliable = not endpoints and all(c.definite for c in crossings)
    return MaslovResult(index=index, method="endpoint_formula", crossings=crossings, t_grid_size=n_grid,
                        trace_index=trace_index, endpoint_crossings=endpoints, reliable=reliable,
                        trace=(ts, evs))


def write_trace_csv(path, trace: tuple[np.ndarray, np.ndarray], param: str = "t") -> None:
    ts, evs = trace
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([param] + [f"eigenvalue_{j + 1}" for j in range(evs.shape[1])])
        for t, row in zip(ts, evs):
            writer.writerow([repr(float(t))] + [repr(float(x)) for x in row])


@dataclass
class HomotopyReport:
    bottom: int  # Mas(beta(s,0)) = Mor0(Lambda_1)
    top: int  # Mas(beta(s,1)) = Mor0(Lambda_1 + Lambda_2)
    left: int  # Mas(beta(0,t)) from the crossing trace
    s_floor: float
    floor_ok: bool
    holds: bool
    maslov: MaslovResult


def homotopy_boundary_check(blocks: BlockOperator, n_grid: int = T_GRID,
                            zero_tol: float = DEFAULT_ZERO_TOL,
                            maps: Optional[tuple[np.ndarray, np.ndarray]] = None,
                            mas: Optional[MaslovResult] = None) -> HomotopyReport:
    """Edge indices of the (s, t) rectangle and the null-homotopy identity."""
    lam1, lam2 = _maps(blocks, zero_tol, maps)
    # lambda_min(Lambda_1 + s Lambda_2) is concave in s = t^2, so the
    # minimum over [0, 1] sits at t = 0 or t = 1, both on this grid
    coarse = np.linspace(0.0, 1.0, 33)
    s_floor = min(float(eigs(lam1 + t * t * lam2)[0]) for t in coarse) - 1.0 if len(blocks.s) else -1.0

    def edge(mat):
        if mat.shape[0] == 0:
            return 0
        w = eigs(mat)
        tol = zero_tol * float(np.abs(mat).max())
        return int(np.sum((w >= s_floor) & (w <= tol)))

    bottom, top = edge(lam1), edge(lam1 + lam2)
    if mas is None:
        mas = maslov_beta(blocks, n_grid, zero_tol, (lam1, lam2))
    mas.s_floor = s_floor
    _, evs = mas.trace
    floor_ok = bool(evs.size == 0 or evs.min() > s_floor)
    return HomotopyReport(bottom, top, int(mas.trace_index), s_floor, floor_ok,
                          bottom + mas.trace_index == top, mas)


@dataclass
class LambdaSweep:
    mor_grid: list[int]
    lambdas: np.ndarray
    crossings: list[float]
    count: int
    mor: int
    mor0: int
    one_signed: bool
    slopes_negative: bool
    interval_match: bool
    result: MaslovResult

    @property
    def holds(self) -> bool:
        return (self.one_signed and self.slopes_negative and self.interval_match
                and self.mor_grid[0] == 0 and self.count == self.mor)


def maslov_lambda_sweep(builder: Callable[[float], SymMatrix], lambda_floor: float, n_grid: int = 33,
                        zero_tol: float = DEFAULT_ZERO_TOL) -> LambdaSweep:
    """Count eigenvalue branches of L - lambda crossing zero for lambda in [floor, 0].

    Counts come from inertia slicing on the grid; crossing locations come from
    the mass-normalized eigenvalues at lambda = 0 (an independent route).
    """
    lambdas = np.linspace(lambda_floor, 0.0, n_grid)
    mats = [builder(float(lam)) for lam in lambdas[:-1]]
    at0 = builder(0.0)
    mats.append(at0)
    mor_grid = [ldlt_inertia(m.matrix, zero_tol).n_minus for m in mats[:-1]]
    try:
        end = ldlt_inertia(at0.matrix, zero_tol)
    except Indeterminate:
        end = eig_inertia(at0.matrix, zero_tol)
    mor_grid.append(end.n_minus)
    slopes_negative = True
    for lo, hi in zip(mats[:-1], mats[1:]):
        diff = lo.matrix - hi.matrix
        off = diff - np.diag(np.diag(diff))
        if np.any(off != 0) or np.any(np.diag(diff) <= 0):
            slopes_negative = False
    one_signed = all(b >= a for a, b in zip(mor_grid[:-1], mor_grid[1:]))
    root = 1.0 / np.sqrt(at0.mass)
    mu = eigs(at0.matrix * root[:, None] * root[None, :])
    # mu_j is the discrete eigenvalue lambda_j of L (at shift 0)
    tol = zero_tol * float(np.abs(at0.matrix).max())
    crossings = [float(x) for x in mu if lambda_floor < x < -tol]
    interval_match = True
    for i in range(n_grid - 1):
        lo_l, hi_l = lambdas[i], lambdas[i + 1]
        expect = int(np.sum((mu >= lo_l) & (mu < hi_l))) if i < n_grid - 2 else int(np.sum((mu >= lo_l) & (mu < -tol)))
        if mor_grid[i + 1] - mor_grid[i] != expect:
            interval_match = False
    result = MaslovResult(index=-len(crossings), method="crossing_trace",
                          crossings=[Crossing(x, 1, -1) for x in crossings],
                          t_grid_size=n_grid, lambda_floor=lambda_floor, trace_index=-len(crossings))
    return LambdaSweep(mor_grid, lambdas, crossings, len(crossings), end.n_minus, end.mor0,
                       one_signed, slopes_negative, interval_match, result)


@dataclass
class RobinSweep:
    thetas: np.ndarray
    mor_theta: list[int]
    mor_n: int
    mor_d: int
    mor_dtn: int
    mor0_dtn: int
    kernel_n: int
    kernel_dtn: int
    plateau: int
    threshold: float
    count_window: int
    monotone: bool
    crossing_thetas: list[float]

    @property
    def friedlander_mor(self) -> bool:
        return self.mor_n - self.mor_d == self.mor_dtn

    @property
    def friedlander_mor0(self) -> bool:
        return self.mor_n - self.mor_d == self.mor0_dtn


def default_theta_grid(eps: float = 1e-4, n: int = 64) -> np.ndarray:
    return np.geomspace(eps, math.pi / 2, n)


def robin_sweep(domain: GridDomain, V: Potential, theta_grid: Optional[Sequence[float]] = None,
                lam: float = 0.0, zero_tol: float = DEFAULT_ZERO_TOL) -> RobinSweep:
    """Robin path from Neumann (theta = pi/2) toward Dirichlet (theta -> 0+).

    The whole outer boundary is the interface.  Returns Morse indices along the
    theta grid, the small-theta plateau, the count of generalized DtN
    eigenvalues in (-cot eps, 0], and the Friedlander indices.
    """
    thetas = np.sort(np.asarray(default_theta_grid() if theta_grid is None else theta_grid, dtype=float))
    prob = boundary_dtn(domain, V, lam, zero_tol)
    neu, dirich, lam_map = prob.neumann, prob.dirichlet, prob.dtn.matrix
    r = 1.0 / np.sqrt(prob.measure)
    nu = eigs(lam_map * r[:, None] * r[None, :])

    in_n = ldlt_inertia(neu.matrix, zero_tol)
    in_d = ldlt_inertia(dirich.matrix, zero_tol)
    in_l = prob.dtn.inertia(zero_tol)
    mor_theta = [ldlt_inertia(assemble_robin(domain, V, float(th), lam).matrix, zero_tol).n_minus for th in thetas]
    eps = float(thetas[0])
    cot_eps = math.cos(eps) / math.sin(eps)
    tol = zero_tol * max(float(np.abs(lam_map).max(initial=0.0)), prob.dtn.scale)
    count_window = int(np.sum((nu > -cot_eps) & (nu <= tol)))
    most_negative = float(nu.min()) if nu.size else 0.0
    threshold = math.pi / 2 if most_negative >= 0 else math.atan2(1.0, -most_negative)
    crossing_thetas = sorted(math.atan2(1.0, -x) for x in nu if x < -tol)
    # theta increasing -> cot decreasing -> Morse index can only grow
    monotone = all(b >= a for a, b in zip(mor_theta[:-1], mor_theta[1:]))
    return RobinSweep(thetas, mor_theta, in_n.n_minus, in_d.n_minus, in_l.n_minus, in_l.mor0,
                      in_n.n_zero, in_l.n_zero, mor_theta[0], threshold, count_window, monotone,
                      crossing_thetas)
