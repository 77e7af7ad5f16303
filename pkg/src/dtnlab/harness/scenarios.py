"""Scenario engine: build inputs from a config, run one identity family, report.

Every identity check compares integers computed along separate routes: the
left side from an independently assembled realization, the right side from
the block form, DtN maps and Maslov data.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .. import __version__
from ..assemble import (
    BlockOperator,
    Potential,
    assemble_blocks,
    assemble_global,
    assemble_periodic,
    assemble_unrolled,
    realize,
)
from ..dtn import (
    boundary_dtn,
    dtn_partial,
    dtn_periodic,
    dtn_side,
    dtn_sum,
    full_boundary_dtn,
    interface_scale,
    periodic_dirichlet,
    perturb_certificate,
    sum_vs_global_error,
)
from ..errors import ConfigError, DomainError, Indeterminate, NumericError, SignChangeWithoutSeparator
from ..grid import (
    GridDomain,
    build_interval,
    build_mask_domain,
    build_rectangle,
    circle,
    lshape_mask,
    partition_by_line,
    periodic_identification,
    torus,
)
from ..linalg import Inertia, ldlt_inertia
from ..maslov import (
    homotopy_boundary_check,
    maslov_beta,
    maslov_lambda_sweep,
    robin_sweep,
    trace_crossings,
    write_trace_csv,
)
from ..nodal import courant_check, nodal_deficiency_dtn, nodal_domains, spectrum, write_labels_csv
from .config import ScenarioConfig, compile_expression, dump_config

SUM_TOL = 1e-10
CROSSING_TOL = 1e-3


# -- reports --------------------------------------------------------------------

@dataclass
class Check:
    name: str
    lhs: Any
    rhs: Any
    relation: str = "=="

    @property
    def passed(self) -> bool:
        return self.lhs == self.rhs if self.relation == "==" else self.lhs <= self.rhs

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "relation": self.relation,
                "pass": self.passed}


@dataclass
class Report:
    scenario: str
    config: dict
    indices: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    conventions: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    indeterminate: bool = False
    wall_time: Optional[float] = None

    def inertia(self, name: str, inert: Inertia) -> Inertia:
        self.indices[name] = {"mor": inert.mor, "mor0": inert.mor0, "kernel": inert.n_zero, "order": inert.order}
        return inert

    def check(self, name: str, lhs, rhs, relation: str = "==") -> Check:
        c = Check(name, _plain(lhs), _plain(rhs), relation)
        self.checks.append(c)
        return c

    def convention(self, name: str, lhs: int, rhs: int, note: str) -> None:
        """Record a variant identity that is evaluated but not asserted."""
        self.conventions.append({"name": name, "lhs": int(lhs), "rhs": int(rhs), "holds": int(lhs) == int(rhs),
                                 "note": note})

    @property
    def status(self) -> str:
        if self.indeterminate:
            return "indeterminate"
        return "pass" if all(c.passed for c in self.checks) else "fail"

    def as_dict(self) -> dict:
        out = {
            "scenario": self.scenario,
            "config": self.config,
            "indices": self.indices,
            "checks": [c.as_dict() for c in self.checks],
            "conventions": self.conventions,
            "notes": self.notes,
            "data": _plain(self.data),
            "status": self.status,
            "tool_version": __version__,
        }
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


# -- inputs -----------------------------------------------------------------------

def build_domain(cfg: ScenarioConfig) -> GridDomain:
    spec = cfg.domain
    cells, lengths, bc = spec.cells, spec.lengths, spec.bc
    try:
        if spec.kind == "interval":
            left, right = (bc.get("left"), bc.get("right")) if isinstance(bc, dict) else (bc, bc)
            return build_interval(cells[0], lengths[0], left, right)
        if spec.kind == "rectangle":
            return build_rectangle(cells[0], cells[1], lengths[0], lengths[-1], bc)
        if spec.kind == "lshape":
            return build_mask_domain(lshape_mask(cells[0]), lengths[0] / (2 * cells[0]), bc)
        if spec.kind == "circle":
            return circle(cells[0], lengths[0])
        if spec.kind == "torus":
            return torus(cells[0], lengths[0])
        if spec.kind == "cylinder":
            ends = {"bottom": bc, "top": bc} if isinstance(bc, str) else {k: bc.get(k) for k in ("bottom", "top")}
            rect = build_rectangle(cells[0], cells[-1], lengths[0], lengths[-1], dict(ends, left=None, right=None))
            return periodic_identification(rect, 0)
    except (IndexError, KeyError) as exc:
        raise ConfigError(f"domain spec incomplete for kind {spec.kind!r}") from exc
    raise ConfigError(f"unknown domain kind {spec.kind!r}")


def random_potential(domain: GridDomain, seed: int, vmax: float = 200.0, mirror_axis: Optional[int] = None,
                     perturbation: float = 0.0) -> np.ndarray:
    """Smooth random field plus per-vertex noise, clipped to [-vmax, vmax].

    With ``mirror_axis`` the field is symmetrized across the middle of that
    axis before ``perturbation`` (uniform, absolute) is added.
    """
    rng = np.random.default_rng(seed)
    ext = (np.asarray(domain.shape) - 1) * np.asarray(domain.spacing)
    x = domain.coords() / ext
    fieldv = np.zeros(domain.n_lattice)
    for _ in range(4):
        k = rng.integers(0, 3, size=domain.dim)
        fieldv += rng.normal() * np.cos(2 * np.pi * x @ k + rng.uniform(0, 2 * np.pi))
    fieldv /= max(float(np.abs(fieldv).max()), 1e-12)
    base = rng.uniform(-0.9, 0.1) * vmax
    amp = rng.uniform(0.1, 0.5) * vmax
    noise = rng.uniform(0.0, 0.1) * vmax * rng.uniform(-1.0, 1.0, size=domain.n_lattice)
    v = base + amp * fieldv + noise
    if mirror_axis is not None:
        grid = v.reshape(domain.shape)
        v = (0.5 * (grid + np.flip(grid, axis=mirror_axis))).ravel()
        v = v + perturbation * rng.uniform(-1.0, 1.0, size=domain.n_lattice)
    return np.clip(v, -vmax, vmax)


def build_potential(cfg: ScenarioConfig, domain: GridDomain) -> Potential:
    spec = cfg.potential
    if spec.kind == "constant":
        return Potential.constant(spec.value)
    if spec.kind == "expression":
        if not spec.expression:
            raise ConfigError("expression potential needs 'expression'")
        fn = compile_expression(spec.expression)
        return Potential.from_array(fn(domain.coords()), spec.inf)
    if spec.kind == "file":
        if not spec.file:
            raise ConfigError("file potential needs 'file'")
        try:
            vals = np.loadtxt(spec.file, dtype=float).ravel()
        except OSError as exc:
            raise ConfigError(f"cannot read potential file: {exc}") from exc
        if vals.size != domain.n_lattice:
            raise ConfigError(f"potential file has {vals.size} values, lattice has {domain.n_lattice}")
        return Potential.from_array(vals, spec.inf)
    seed = cfg.numeric.seed if spec.seed is None else spec.seed
    return Potential.from_array(random_potential(domain, seed, spec.vmax, spec.mirror_axis, spec.perturbation))


def build_partition(cfg: ScenarioConfig, domain: GridDomain):
    spec = cfg.partition
    if spec.kind == "none":
        raise ConfigError(f"scenario {cfg.scenario} needs a line partition")
    if spec.axis >= domain.dim:
        raise ConfigError(f"partition axis {spec.axis} out of range")
    index = (domain.shape[spec.axis] - 1) // 2 if spec.index is None else spec.index
    return partition_by_line(domain, spec.axis, index, flip=spec.flip)


@dataclass
class Context:
    """Inputs and cached derived objects shared by the block-form scenarios."""

    cfg: ScenarioConfig
    domain: GridDomain
    V: Potential
    blocks: Optional[BlockOperator] = None
    cache: dict = field(default_factory=dict)

    @classmethod
    def from_config(cls, cfg: ScenarioConfig, *, blocks: bool = True) -> "Context":
        domain = build_domain(cfg)
        V = build_potential(cfg, domain)
        ctx = cls(cfg, domain, V)
        if blocks:
            ctx.blocks = assemble_blocks(domain, V, build_partition(cfg, domain), cfg.numeric.lam)
        return ctx

    @property
    def tol(self) -> float:
        return self.cfg.numeric.zero_tol

    def _get(self, key, fn):
        if key not in self.cache:
            self.cache[key] = fn()
        return self.cache[key]

    def inertia(self, which: str) -> Inertia:
        return self._get(("inertia", which), lambda: ldlt_inertia(realize(self.blocks, which).matrix, self.tol))

    def global_inertia(self) -> Inertia:
        """Mor of L^G from a separate assembly of the undivided domain."""
        return self._get("global", lambda: ldlt_inertia(
            assemble_global(self.domain, self.V, self.cfg.numeric.lam).matrix, self.tol))

    def maps(self):
        return self._get("maps", lambda: (dtn_side(self.blocks, 1, self.tol).matrix,
                                          dtn_side(self.blocks, 2, self.tol).matrix))

    def dtn_inertia(self, which: str) -> Inertia:
        def compute():
            lam1, lam2 = self.maps()
            if which == "sum":
                return dtn_sum(self.blocks, self.tol).inertia(self.tol)
            return ldlt_inertia(lam1 if which == "1" else lam2, self.tol, interface_scale(self.blocks))
        return self._get(("dtn", which), compute)

    def maslov(self):
        return self._get("maslov", lambda: maslov_beta(self.blocks, self.cfg.numeric.t_grid, self.tol, self.maps()))


def _record_blocks(rep: Report, ctx: Context) -> None:
    rep.inertia("L^G", ctx.global_inertia())
    for which in ("D1", "N1", "D2", "N2"):
        rep.inertia(f"L^{which}", ctx.inertia(which))
    rep.inertia("Lambda_1", ctx.dtn_inertia("1"))
    rep.inertia("Lambda_2", ctx.dtn_inertia("2"))
    rep.inertia("Lambda_1+Lambda_2", ctx.dtn_inertia("sum"))
    err = sum_vs_global_error(ctx.blocks, ctx.tol)
    rep.check("dtn_sum_vs_global_schur", err, SUM_TOL, "<=")


def _maslov_data(rep: Report, mas, prefix: str = "maslov") -> None:
    rep.data[prefix] = {
        "index": mas.index,
        "method": mas.method,
        "trace_index": mas.trace_index,
        "crossings": [{"t": c.t, "kernel_dim": c.kernel_dim, "signature": c.signature, "definite": c.definite}
                      for c in mas.crossings],
        "endpoint_crossings": [{"t": c.t, "kernel_dim": c.kernel_dim} for c in mas.endpoint_crossings],
        "t_grid_size": mas.t_grid_size,
        "s_floor": None if math.isnan(mas.s_floor) else mas.s_floor,
        "trace_reliable": mas.reliable,
    }


def _trace_check(rep: Report, mas) -> None:
    if mas.reliable:
        rep.check("crossing_trace_vs_endpoint_formula", mas.trace_index, mas.index)
    else:
        rep.notes.append("crossing trace unreliable (crossing at an endpoint or a degenerate crossing form); "
                         "index taken from the endpoint formula")


def _emit_trace(ctx: Context, rep: Report, name: str, trace, param: str = "t") -> None:
    out = ctx.cfg.output
    if out.traces and out.dir:
        path = Path(out.dir) / f"{ctx.cfg.scenario}_{name}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_trace_csv(path, trace, param)
        rep.data.setdefault("trace_files", []).append(path.name)


# -- scenarios --------------------------------------------------------------------

def run_mormas(ctx: Context, rep: Report) -> None:
    _record_blocks(rep, ctx)
    mas = ctx.maslov()
    _maslov_data(rep, mas)
    g, n1, d2 = ctx.global_inertia(), ctx.inertia("N1"), ctx.inertia("D2")
    rep.check("mormas", g.mor, n1.mor + d2.mor + mas.index)
    _trace_check(rep, mas)
    _emit_trace(ctx, rep, "beta", mas.trace)


def run_dnbracket(ctx: Context, rep: Report) -> None:
    _record_blocks(rep, ctx)
    g = ctx.global_inertia().mor
    d1, d2 = ctx.inertia("D1").mor, ctx.inertia("D2").mor
    n1, n2 = ctx.inertia("N1").mor, ctx.inertia("N2").mor
    lsum = ctx.dtn_inertia("sum")
    rep.check("dnbracket", g, d1 + d2 + lsum.mor)
    rep.convention("dnbracket_mor0", g, d1 + d2 + lsum.mor0,
                   "variant with Mor0(Lambda_1+Lambda_2); differs exactly when the sum map has a kernel")
    rep.check("bracket_lower", d1 + d2, g, "<=")
    rep.check("bracket_upper", g, n1 + n2, "<=")
    rep.check("lower_strict_iff_sum_map_negative", int(g > d1 + d2), int(lsum.mor > 0))
    rep.data["bracket"] = {"lower": d1 + d2, "global": g, "upper": n1 + n2, "strict_lower": g > d1 + d2,
                           "strict_upper": g < n1 + n2}


def run_friedlander(ctx: Context, rep: Report) -> None:
    prob = boundary_dtn(ctx.domain, ctx.V, ctx.cfg.numeric.lam, ctx.tol)
    n = rep.inertia("L^N", ldlt_inertia(prob.neumann.matrix, ctx.tol))
    d = rep.inertia("L^D", ldlt_inertia(prob.dirichlet.matrix, ctx.tol))
    lam = rep.inertia("Lambda", prob.dtn.inertia(ctx.tol))
    rep.check("friedlander", n.mor - d.mor, lam.mor)
    rep.check("kernel_correspondence", n.n_zero, lam.n_zero)
    rep.convention("friedlander_mor0", n.mor - d.mor, lam.mor0,
                   "the stated form with Mor0(Lambda); fails whenever Lambda has a kernel")
    if lam.n_zero:
        rep.notes.append(f"Lambda has a {lam.n_zero}-dimensional kernel: Mor(L^N) - Mor(L^D) = Mor(Lambda) "
                         f"= {lam.mor}, while Mor0(Lambda) = {lam.mor0}")


def run_homotopy(ctx: Context, rep: Report) -> None:
    h = homotopy_boundary_check(ctx.blocks, ctx.cfg.numeric.t_grid, ctx.tol, ctx.maps(), ctx.maslov())
    _maslov_data(rep, h.maslov)
    rep.data["rectangle"] = {"bottom": h.bottom, "left": h.left, "top": h.top, "s_floor": h.s_floor}
    rep.inertia("Lambda_1", ctx.dtn_inertia("1"))
    rep.inertia("Lambda_1+Lambda_2", ctx.dtn_inertia("sum"))
    rep.check("bottom_edge_is_mor0_lambda1", h.bottom, ctx.dtn_inertia("1").mor0)
    rep.check("top_edge_is_mor0_sum", h.top, ctx.dtn_inertia("sum").mor0)
    if h.maslov.reliable:
        rep.check("rectangle", h.bottom + h.left, h.top)
    else:
        rep.notes.append("crossing on an endpoint or degenerate: rectangle identity not evaluable from the trace")
        rep.indeterminate = True
    rep.check("s_floor_below_spectrum", int(h.floor_ok), 1)


def crossing_indicator(theta: float) -> int:
    """Crossing condition pi/4 + n pi <= theta <= pi/2 + n pi as stated."""
    r = theta % math.pi
    return int(math.pi / 4 <= r <= math.pi / 2)


def signed_indicator(theta: float) -> int:
    """Index of the doubled example from the scalar DtN values.

    Lambda_1 = sqrt(C) cot(theta), Lambda_2 = -sqrt(C) tan(theta); a crossing
    sits at t = |cot(theta)| and its sign is that of tan(theta).
    """
    r = theta % math.pi
    if math.pi / 4 < r < math.pi / 2:
        return 1
    if math.pi / 2 < r < 3 * math.pi / 4:
        return -1
    return 0


def doubled_theta(cfg: ScenarioConfig) -> float:
    if cfg.potential.kind != "constant" or cfg.potential.value >= 0:
        raise ConfigError("doubled-1d needs a negative constant potential V = -C")
    if cfg.domain.kind != "interval":
        raise ConfigError("doubled-1d runs on an interval")
    return math.sqrt(-cfg.potential.value) * cfg.domain.lengths[0] / 2


def run_doubled(ctx: Context, rep: Report) -> None:
    theta = doubled_theta(ctx.cfg)
    run_mormas(ctx, rep)
    mas = ctx.maslov()
    rep.data["theta"] = theta
    rep.data["crossing_indicator"] = crossing_indicator(theta)
    rep.data["signed_indicator"] = signed_indicator(theta)
    rep.check("index_equals_crossing_indicator", mas.index, crossing_indicator(theta))
    rep.check("index_equals_signed_indicator", mas.index, signed_indicator(theta))
    if mas.index == 1 and mas.crossings:
        err = min(abs(c.t - 1.0 / math.tan(theta)) for c in mas.crossings)
        rep.check("crossing_at_cot_theta", err, CROSSING_TOL, "<=")
    if signed_indicator(theta) == -1:
        rep.notes.append("theta mod pi lies in (pi/2, 3pi/4): the pencil crosses at t = -cot(theta) with the "
                         "opposite sign, so the index is -1 where the stated condition predicts 0")


def run_perturb(ctx: Context, rep: Report) -> None:
    _record_blocks(rep, ctx)
    lam1 = dtn_side(ctx.blocks, 1, ctx.tol)
    lam2 = dtn_side(ctx.blocks, 2, ctx.tol)
    cert = perturb_certificate(lam1, lam2, ctx.cfg.numeric.c_grid, ctx.tol)
    mas = ctx.maslov()
    _maslov_data(rep, mas)
    rep.data["certificate"] = {"holds": cert.holds, "best_margin": cert.best_margin, "best_c": cert.best_c}
    g, n1, d2 = ctx.global_inertia().mor, ctx.inertia("N1").mor, ctx.inertia("D2").mor
    if cert.holds:
        rep.check("maslov_zero", mas.index, 0)
        rep.check("perturb_identity", g, n1 + d2)
    else:
        rep.notes.append("certificate does not hold; the perturbation statement is not applicable")
    pot = ctx.cfg.potential
    if pot.kind == "random" and pot.mirror_axis is not None and pot.perturbation == 0.0:
        scale = max(1.0, float(np.abs(lam1.matrix).max()))
        rep.check("mirror_maps_equal", float(np.abs(lam1.matrix - lam2.matrix).max()) / scale, 1e-12, "<=")
        rep.check("symmetric_D_plus_N", g, ctx.inertia("D1").mor + ctx.inertia("N2").mor)


def run_nodal(ctx: Context, rep: Report) -> None:
    cfg = ctx.cfg
    spec = spectrum(ctx.domain, ctx.V)
    k_courant = min(cfg.nodal.courant_k_max, len(spec.values))
    rows = []
    for r in courant_check(ctx.domain, ctx.V, k_courant, cfg.numeric.gap_tol, spec=spec):
        rep.check(f"courant_k{r.k}", r.n_total, r.k, "<=")
        rows.append({"k": r.k, "lambda": r.lam, "simple": r.simple, "n_plus": r.n_plus_domains,
                     "n_minus": r.n_minus_domains, "n": r.n_total, "deficiency": r.deficiency_direct})
    rep.data["courant"] = rows
    ks = cfg.nodal.ks or list(range(1, min(cfg.nodal.k_max, len(spec.values) - 1) + 1))
    table = []
    for k in ks:
        courant = rows[k - 1] if k <= len(rows) else None
        if courant is not None and not courant["simple"]:
            rep.notes.append(f"k={k}: eigenvalue not simple, deficiency formula not applicable")
            continue
        try:
            r = nodal_deficiency_dtn(ctx.domain, ctx.V, k, cfg.numeric.gap_tol, cfg.numeric.eps, ctx.tol, spec=spec)
            half = nodal_deficiency_dtn(ctx.domain, ctx.V, k, cfg.numeric.gap_tol, r.eps / 2, ctx.tol, spec=spec,
                                        flip=True)
        except SignChangeWithoutSeparator:
            rep.notes.append(f"k={k}: nodal set is not grid-aligned, skipped")
            continue
        rep.check(f"deficiency_k{k}", r.deficiency_dtn, r.deficiency_direct)
        rep.check(f"global_morse_k{k}", r.mor_global, k)
        rep.check(f"dirichlet_plus_k{k}", r.mor_dirichlet_plus, r.n_plus_domains)
        rep.check(f"dirichlet_minus_k{k}", r.mor_dirichlet_minus, r.n_minus_domains)
        rep.check(f"half_eps_negated_k{k}", half.deficiency_dtn, r.deficiency_dtn)
        table.append({"k": k, "lambda": r.lam, "eps": r.eps, "n_plus": r.n_plus_domains,
                      "n_minus": r.n_minus_domains, "deficiency_direct": r.deficiency_direct,
                      "deficiency_dtn": r.deficiency_dtn, "agreement": r.agreement})
        out = cfg.output
        if out.traces and out.dir:
            path = Path(out.dir) / f"nodal_labels_k{k}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            write_labels_csv(path, ctx.domain, nodal_domains(ctx.domain, spec.vectors[:, k - 1]))
    rep.data["deficiency"] = table


def run_periodic(ctx: Context, rep: Report) -> None:
    d, V, lam, tol = ctx.domain, ctx.V, ctx.cfg.numeric.lam, ctx.tol
    if not d.is_periodic:
        raise ConfigError("periodic scenario needs a circle, torus or cylinder domain")
    p = rep.inertia("L^P", ldlt_inertia(assemble_periodic(d, V, lam).matrix, tol))
    dd = rep.inertia("L^D", ldlt_inertia(periodic_dirichlet(d, V, lam).matrix, tol))
    tau = rep.inertia("Lambda_tau", dtn_periodic(d, V, lam, tol).inertia(tol))
    rep.check("periodic", p.mor, dd.mor + tau.mor)
    rep.convention("periodic_mor0", p.mor, dd.mor + tau.mor0,
                   "variant with Mor0(Lambda_tau); differs exactly when Lambda_tau has a kernel")
    rep.check("periodic_kernel_correspondence", p.n_zero, tau.n_zero)
    dn = rep.inertia("L^DN", ldlt_inertia(assemble_unrolled(d, V, lam, gamma1="neumann",
                                                            gamma2="dirichlet").matrix, tol))
    part = rep.inertia("Lambda_partial", dtn_partial(d, V, lam, tol).inertia(tol))
    rep.check("partial_friedlander", dn.mor, dd.mor + part.mor)
    rep.convention("partial_friedlander_mor0", dn.mor, dd.mor + part.mor0,
                   "variant with Mor0 of the partial map")
    if len(d.periodic_axes) == 1:
        full, n1 = full_boundary_dtn(d, V, lam, tol)
        p11, p12 = full[:n1, :n1], full[:n1, n1:]
        p21, p22 = full[n1:, :n1], full[n1:, n1:]
        cross = p12 + p21
        crossings, endpoints, ts, evs = trace_crossings(lambda t: p11 + t * cross + t * t * p22,
                                                        lambda t: cross + 2 * t * p22,
                                                        ctx.cfg.numeric.t_grid, tol)
        trace_index = sum(c.signature for c in crossings)
        rep.data["family"] = {"trace_index": trace_index,
                              "crossings": [{"t": c.t, "kernel_dim": c.kernel_dim, "signature": c.signature}
                                            for c in crossings]}
        if not endpoints and all(c.definite for c in crossings):
            rep.check("family_trace", trace_index, tau.mor0 - part.mor0)
        else:
            rep.notes.append("partial-to-periodic family has an endpoint or degenerate crossing; trace not checked")
        _emit_trace(ctx, rep, "family", (ts, evs))


def run_robin(ctx: Context, rep: Report) -> None:
    sw = ctx.cfg.sweep
    thetas = np.geomspace(sw.theta_eps, math.pi / 2, sw.theta_points)
    rs = robin_sweep(ctx.domain, ctx.V, thetas, ctx.cfg.numeric.lam, ctx.tol)
    rep.indices["L^N"] = {"mor": rs.mor_n, "kernel": rs.kernel_n}
    rep.indices["L^D"] = {"mor": rs.mor_d}
    rep.indices["Lambda"] = {"mor": rs.mor_dtn, "mor0": rs.mor0_dtn, "kernel": rs.kernel_dtn}
    rep.check("robin_plateau_is_dirichlet", rs.plateau, rs.mor_d)
    rep.check("neumann_endpoint", rs.mor_theta[-1], rs.mor_n)
    rep.check("dtn_window_count_is_mor0", rs.count_window, rs.mor0_dtn)
    rep.check("theta_monotone", int(rs.monotone), 1)
    n_cross = sum(1 for th in rs.crossing_thetas if th > thetas[0])
    rep.check("theta_crossings", rs.mor_theta[-1] - rs.mor_theta[0], n_cross)
    rep.check("friedlander", rs.mor_n - rs.mor_d, rs.mor_dtn)
    rep.convention("friedlander_mor0", rs.mor_n - rs.mor_d, rs.mor0_dtn,
                   "the stated form with Mor0(Lambda)")
    if rs.kernel_dtn:
        rep.notes.append(f"Lambda has a {rs.kernel_dtn}-dimensional kernel (Neumann kernel {rs.kernel_n}); "
                         "the Mor and Mor0 forms of the Friedlander identity differ here")
    rep.data["theta_threshold"] = rs.threshold
    rep.data["crossing_thetas"] = rs.crossing_thetas
    _emit_trace(ctx, rep, "theta", (rs.thetas, np.asarray(rs.mor_theta, dtype=float)[:, None]), "theta")


def run_lambda_sweep(ctx: Context, rep: Report) -> None:
    which = ctx.cfg.sweep.realization
    d, V = ctx.domain, ctx.V
    if which == "G":
        def builder(lam):
            return assemble_global(d, V, lam)
    else:
        part = build_partition(ctx.cfg, d)

        def builder(lam):
            return realize(assemble_blocks(d, V, part, lam), which)
    floor = V.lower_bound(d) - 1.0
    sw = maslov_lambda_sweep(builder, floor, ctx.cfg.sweep.lambda_points, ctx.tol)
    rep.indices[f"L^{which}"] = {"mor": sw.mor, "mor0": sw.mor0}
    rep.data["lambda_floor"] = floor
    rep.data["crossings"] = sw.crossings
    rep.data["mor_grid"] = sw.mor_grid
    rep.check("floor_positive_definite", sw.mor_grid[0], 0)
    rep.check("crossing_count_is_mor", sw.count, sw.mor)
    rep.check("one_signed", int(sw.one_signed), 1)
    rep.check("slopes_negative", int(sw.slopes_negative), 1)
    rep.check("grid_counts_match_eigenvalues", int(sw.interval_match), 1)
    if sw.mor0 != sw.mor:
        rep.notes.append(f"kernel at lambda = 0: Mor = {sw.mor}, Mor0 = {sw.mor0}")
    _emit_trace(ctx, rep, "lambda", (sw.lambdas, np.asarray(sw.mor_grid, dtype=float)[:, None]), "lambda")


RUNNERS = {
    "mormas": (run_mormas, True),
    "dnbracket": (run_dnbracket, True),
    "friedlander": (run_friedlander, False),
    "doubled-1d": (run_doubled, True),
    "perturb": (run_perturb, True),
    "nodal": (run_nodal, False),
    "periodic": (run_periodic, False),
    "robin": (run_robin, False),
    "homotopy": (run_homotopy, True),
    "lambda-sweep": (run_lambda_sweep, False),
}


JITTER_ATTEMPTS = 3


def run_scenario(cfg: ScenarioConfig, *, timing: bool = False, ctx: Optional[Context] = None,
                 scenario: Optional[str] = None) -> Report:
    """Run one scenario.  ``ctx`` lets several scenarios share assembled inputs.

    When a pivot lands in the indeterminate band the shift lambda is jittered
    by about 1e-6 times the potential scale (seeded) and the scenario rerun;
    after the last attempt the report is marked indeterminate.
    """
    name = scenario or cfg.scenario
    runner, needs_blocks = RUNNERS[name]
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.numeric.seed)
    lam0 = cfg.numeric.lam
    notes = []
    for attempt in range(JITTER_ATTEMPTS + 1):
        rep = Report(name, cfg.model_dump(mode="json"))
        rep.notes.extend(notes)
        try:
            if ctx is None:
                ctx = Context.from_config(cfg, blocks=needs_blocks)
            elif needs_blocks and ctx.blocks is None:
                ctx.blocks = assemble_blocks(ctx.domain, ctx.V, build_partition(cfg, ctx.domain), cfg.numeric.lam)
            runner(ctx, rep)
            break
        except Indeterminate as exc:
            if attempt == JITTER_ATTEMPTS:
                rep.indeterminate = True
                rep.notes.append(f"indeterminate: {exc}")
                break
            scale = max(1.0, float(np.abs(ctx.V.sample(ctx.domain)).max())) if ctx is not None else 1.0
            lam = lam0 + 1e-6 * scale * rng.uniform(-1.0, 1.0)
            notes.append(f"indeterminate pivot ({exc}); lambda jittered to {lam!r}")
            cfg = cfg.model_copy(update={"numeric": cfg.numeric.model_copy(update={"lam": lam})})
            ctx = None
        except (NumericError, DomainError) as exc:
            raise type(exc)(f"scenario {name}: {exc}") from exc
    if timing:
        rep.wall_time = time.perf_counter() - start
    return rep


# -- suite ------------------------------------------------------------------------

SUITE_SCENARIOS = ("mormas", "dnbracket", "friedlander", "homotopy")


def random_case(seed: int, max_cells: int = 40) -> dict:
    """Config overrides for one randomized rectangle scenario."""
    rng = np.random.default_rng(seed)
    nx, ny = (int(n) for n in rng.integers(4, max_cells + 1, size=2))
    bc = {side: str(rng.choice(["dirichlet", "neumann"])) for side in ("left", "right", "bottom", "top")}
    axis = int(rng.integers(0, 2))
    index = int(rng.integers(1, (nx, ny)[axis]))
    return {
        "domain": {"kind": "rectangle", "cells": [nx, ny], "lengths": [1.0, 1.0], "bc": bc},
        "potential": {"kind": "random", "seed": int(rng.integers(0, 2**31))},
        "partition": {"kind": "line", "axis": axis, "index": index},
    }


def run_case(args):
    """Run the suite scenarios on one (case id, overrides) job with shared assembly."""
    case_id, overrides = args
    from .config import make_config

    cfg = make_config("mormas", overrides)
    ctx = Context.from_config(cfg)
    reports = {}
    for name in SUITE_SCENARIOS:
        rep = run_scenario(cfg, ctx=ctx, scenario=name)
        d = rep.as_dict()
        d.pop("config")
        reports[name] = d
    return case_id, dump_config(cfg), reports


def suite_jobs(seed: int, count: int, max_cells: int = 40) -> list[tuple[int, dict]]:
    rng = np.random.default_rng(seed)
    return [(i, random_case(int(s), max_cells)) for i, s in enumerate(rng.integers(0, 2**31, size=count))]


def run_suite(seed: int, count: int, workers: int = 1, max_cells: int = 40) -> dict:
    """Randomized corpus; stops at the first failing case and attaches its config."""
    if count < 1:
        raise ConfigError("suite count must be at least 1")
    jobs = suite_jobs(seed, count, max_cells)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = sorted(pool.map(run_case, jobs))
    else:
        results = []
        for job in jobs:
            results.append(run_case(job))
            if any(r["status"] != "pass" for r in results[-1][2].values()):
                break
    totals = {name: {"pass": 0, "fail": 0, "indeterminate": 0} for name in SUITE_SCENARIOS}
    cases, replay, status = [], None, "pass"
    for case_id, cfg_text, reports in results:
        for name, r in reports.items():
            totals[name][r["status"]] += 1
        cases.append({"id": case_id, "reports": reports})
        bad = [r["status"] for r in reports.values() if r["status"] != "pass"]
        if bad:
            status = "fail" if "fail" in bad else "indeterminate"
            replay = cfg_text
            break
    return {"seed": seed, "count": count, "completed": len(cases), "totals": totals, "cases": cases,
            "status": status, "replay_config": replay, "tool_version": __version__}


# -- convergence ------------------------------------------------------------------

def _friedlander_expected(c: float, length: float) -> int:
    # Neumann eigenvalues (j pi / l)^2, j >= 0, minus Dirichlet ones, j >= 1
    n = sum(1 for j in range(0, 1000) if (j * math.pi / length) ** 2 < c)
    d = sum(1 for j in range(1, 1000) if (j * math.pi / length) ** 2 < c)
    return n - d


def convergence_study(scenario: str, n_list, overrides: Optional[dict] = None) -> dict:
    from .config import make_config

    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list[:-1], n_list[1:])):
        raise ConfigError("N list must be nonempty and strictly increasing")
    if scenario not in ("doubled-1d", "friedlander"):
        raise ConfigError("convergence study supports doubled-1d and friedlander")
    rows = []
    for n in n_list:
        over = dict(overrides or {})
        dom = dict(over.get("domain", {}))
        dom["cells"] = [n]
        over["domain"] = dom
        cfg = make_config(scenario, over)
        if scenario == "doubled-1d":
            if n % 2:
                raise ConfigError("doubled-1d needs an even cell count")
            theta = doubled_theta(cfg)
            ctx = Context.from_config(cfg)
            lam1, lam2 = ctx.maps()
            floor = interface_scale(ctx.blocks)
            value = ldlt_inertia(lam1 + lam2, ctx.tol, floor).mor0 - ldlt_inertia(lam1, ctx.tol, floor).mor0
            expected = signed_indicator(theta)
            extra = {"crossing_indicator": crossing_indicator(theta)}
        else:
            if cfg.domain.kind != "interval" or cfg.potential.kind != "constant":
                raise ConfigError("friedlander convergence runs on an interval with constant V")
            ctx = Context.from_config(cfg, blocks=False)
            prob = boundary_dtn(ctx.domain, ctx.V, 0.0, ctx.tol)
            value = ldlt_inertia(prob.neumann.matrix, ctx.tol).mor - ldlt_inertia(prob.dirichlet.matrix, ctx.tol).mor
            expected = _friedlander_expected(-cfg.potential.value, cfg.domain.lengths[0])
            extra = {}
        rows.append({"N": n, "value": value, "expected": expected, "match": value == expected, **extra})
    stable = None
    for i in range(len(rows)):
        if all(r["match"] for r in rows[i:]):
            stable = rows[i]["N"]
            break
    return {"scenario": scenario, "rows": rows, "stabilized_at": stable, "tool_version": __version__}
