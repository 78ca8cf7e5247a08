"""Discretized covering and separation programs, explicit measures, volume bounds.

The covering number of ``f`` by ``g`` with weight ``h`` is approximated by

    min  sum_j h(t_j) w_j   s.t.  sum_j g(x_i - t_j) w_j >= f(x_i),  w >= 0

with constraint nodes ``x_i`` and atom nodes ``t_j``.  The LP dual is the
separation program of ``f`` by the reflection of ``g``, so an optimal solve
yields both numbers and the gap between them is the duality certificate.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import lp
from .function_space import (
    TAIL_EPS,
    DimensionError,
    DiscreteMeasure,
    FunctionExpr,
    GridError,
    GridSpec,
    One,
    Power,
    Product,
    Reflect,
    evaluate,
    integrate,
    is_even,
    max_nodes,
    support_box,
)
from .transforms import convolve, sup_convolve

DEFAULT_P = (1.5, 2.0, 3.0)
DIVERGENCE_GROWTH = 0.10


class PaddingError(GridError):
    pass


def _expr_dim(*exprs) -> Optional[int]:
    dims = {e.dim for e in exprs if e is not None and e.dim is not None}
    if len(dims) > 1:
        raise DimensionError(f"expressions disagree on dimension: {sorted(dims)}")
    return dims.pop() if dims else None


def _snap_box(lo, hi, step):
    return GridSpec.from_step(lo, hi, step)


@dataclass(frozen=True)
class GridConfig:
    """Constraint and atom grids of a covering program.

    The atom window must contain the constraint window; ``allow_unpadded``
    switches the check off.  :meth:`auto` additionally pads by the radius
    outside of which ``g`` is below the tail threshold.
    """

    constraints: GridSpec
    atoms: GridSpec
    allow_unpadded: bool = False

    def __post_init__(self):
        if self.constraints.dim != self.atoms.dim:
            raise DimensionError("constraint and atom grids differ in dimension")
        if not self.allow_unpadded and not self.atoms.contains_window(self.constraints):
            raise PaddingError(
                f"atom window {self.atoms.lo}..{self.atoms.hi} does not contain the "
                f"constraint window {self.constraints.lo}..{self.constraints.hi}"
            )

    @property
    def dim(self) -> int:
        return self.constraints.dim

    @property
    def step(self) -> float:
        return float(np.max(self.constraints.step))

    @classmethod
    def from_windows(cls, lo, hi, points, atom_lo, atom_hi, atom_points, allow_unpadded=False):
        return cls(GridSpec(lo, hi, points), GridSpec(atom_lo, atom_hi, atom_points), allow_unpadded)

    @classmethod
    def auto(cls, f: FunctionExpr, g: FunctionExpr, step: float, window=None,
             dim: Optional[int] = None, eps: float = TAIL_EPS, max_pad: float = 20.0) -> "GridConfig":
        """Lattice-aligned grids: constraints over the ``eps``-support of ``f``
        (or ``window``), atoms padded by the ``eps``-support of ``g``."""
        dim = dim or _expr_dim(f, g) or 1
        if window is None:
            box = support_box(f, dim, eps)
            if box is None:
                raise GridError("f has no bounded support box; pass a window")
            lo, hi = box
        else:
            lo, hi = (np.broadcast_to(np.asarray(v, dtype=float), (dim,)) for v in window)
        cons = _snap_box(lo, hi, step)
        gb = support_box(g, dim, eps)
        if gb is None:
            gb = (np.zeros(dim), np.zeros(dim))
        # atoms t with g(x - t) >= eps for some constraint x lie in x - supp g
        alo = np.array(cons.lo) - np.minimum(gb[1], max_pad)
        ahi = np.array(cons.hi) - np.maximum(gb[0], -max_pad)
        atoms = _snap_box(np.minimum(alo, cons.lo), np.maximum(ahi, cons.hi), step)
        return cls(cons, atoms)

    def refined(self, factor: int = 2) -> "GridConfig":
        """Same windows, step divided by ``factor``."""
        def ref(gs):
            return GridSpec(gs.lo, gs.hi, tuple((p - 1) * factor + 1 for p in gs.points_per_axis))
        return GridConfig(ref(self.constraints), ref(self.atoms), self.allow_unpadded)


@dataclass(frozen=True, eq=False)
class CoveringInstance:
    f_expr: FunctionExpr
    g_expr: FunctionExpr
    h_expr: FunctionExpr
    constraint_grid: GridSpec
    atom_grid: GridSpec
    matrix: lp.LpProblem = field(repr=False)

    @property
    def shape(self) -> tuple:
        return self.matrix.shape

    @property
    def density(self) -> float:
        return float(np.count_nonzero(self.matrix.A)) / self.matrix.A.size


def _lattice_index(grid: GridSpec) -> list:
    return [int(round(grid.lo[k] / grid.step[k])) for k in range(grid.dim)]


def _kernel_matrix(g: FunctionExpr, x: np.ndarray, t: np.ndarray,
                   xgrid: Optional[GridSpec] = None, tgrid: Optional[GridSpec] = None) -> np.ndarray:
    """``K[i, j] = g(x_i - t_j)``, evaluated exactly.

    When both node sets are full grids on one origin-aligned lattice every
    difference is a lattice offset, and ``g`` is evaluated once per offset.
    """
    if (xgrid is not None and tgrid is not None and xgrid.same_lattice(tgrid)
            and xgrid.is_origin_aligned() and tgrid.is_origin_aligned()):
        h = xgrid.step
        ix0, it0 = _lattice_index(xgrid), _lattice_index(tgrid)
        per_axis = []
        offsets = []
        for k in range(xgrid.dim):
            ix = ix0[k] + np.arange(xgrid.shape[k])
            it = it0[k] + np.arange(tgrid.shape[k])
            lo = ix[0] - it[-1]
            offsets.append(np.arange(lo, ix[-1] - it[0] + 1) * h[k])
            per_axis.append(ix[:, None] - it[None, :] - lo)
        mesh = np.meshgrid(*offsets, indexing="ij")
        table = g(np.stack([m.ravel() for m in mesh], axis=-1)).reshape(mesh[0].shape)
        if xgrid.dim == 1:
            return table[per_axis[0]]
        a, b = per_axis
        # rows (i1, i2), columns (j1, j2) in C order
        K = table[a[:, None, :, None], b[None, :, None, :]]
        return K.reshape(xgrid.size, tgrid.size)
    out = np.empty((x.shape[0], t.shape[0]))
    block = max(1, 2_000_000 // t.shape[0])
    for s in range(0, x.shape[0], block):
        xs = x[s : s + block]
        diff = (xs[:, None, :] - t[None, :, :]).reshape(-1, x.shape[1])
        out[s : s + block] = g(diff).reshape(xs.shape[0], -1)
    return out


def build_instance(f: FunctionExpr, g: FunctionExpr, h: Optional[FunctionExpr],
                   cfg: GridConfig) -> CoveringInstance:
    h = One() if h is None else h
    d = _expr_dim(f, g, h)
    if d is not None and d != cfg.dim:
        raise DimensionError(f"expressions have dimension {d}, grids have {cfg.dim}")
    x = cfg.constraints.nodes()
    t = cfg.atoms.nodes()
    if x.shape[0] * t.shape[0] > lp.MAX_ENTRIES:
        raise GridError(f"LP would have {x.shape[0] * t.shape[0]} entries, above {lp.MAX_ENTRIES}")
    A = _kernel_matrix(g, x, t, cfg.constraints, cfg.atoms)
    prob = lp.LpProblem(A, f(x), h(t))
    return CoveringInstance(f, g, h, cfg.constraints, cfg.atoms, prob)


# ----------------------------------------------------------------------------
# results


@dataclass(frozen=True, eq=False)
class CoveringResult:
    value_primal: float
    value_dual: float
    mu: Optional[DiscreteMeasure]
    rho: Optional[DiscreteMeasure]
    gap: float
    status: str
    lower_bound: float
    upper_bound: float
    runtime_ms: float
    step: float = math.nan
    n_constraints: int = 0
    n_atoms: int = 0
    iterations: int = 0
    certificate: Optional[lp.CertificateReport] = None
    witness: Optional[tuple] = None
    bounds: Optional["BoundsReport"] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == lp.OPTIMAL

    def row(self) -> dict:
        return {
            "step": self.step,
            "n_constraints": self.n_constraints,
            "n_atoms": self.n_atoms,
            "value_primal": self.value_primal,
            "value_dual": self.value_dual,
            "gap": self.gap,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "status": self.status,
            "runtime_ms": self.runtime_ms,
        }


def _reduced(A, b, c):
    """Drop rows with ``b <= 0`` (met by any ``w >= 0`` since ``A >= 0``) and
    columns that vanish on the remaining rows and cost nothing to omit."""
    rows = np.nonzero(b > 0)[0]
    if rows.size == 0:
        return rows, np.zeros(0, dtype=int)
    cols = np.nonzero(np.any(A[rows] > 0, axis=0) | (c < 0))[0]
    return rows, cols


def _attach_bounds(f, g, h, cfg, want: bool):
    if not want:
        return None, -math.inf, math.inf
    rep = volume_bounds(f, g, None, h, cfg)
    return rep, rep.best_lower(), rep.best_upper()


def covering_number(inst: CoveringInstance, tol: lp.ToleranceConfig = lp.ToleranceConfig(),
                    bounds: bool = True) -> CoveringResult:
    """Solve the covering program of ``inst``; ``rho`` is the separation
    measure of ``f`` by the reflected kernel, read off the LP dual."""
    t0 = time.perf_counter()
    A, b, c = inst.matrix.A, inst.matrix.b, inst.matrix.c
    k, m = A.shape
    common = dict(step=float(np.max(inst.constraint_grid.step)), n_constraints=k, n_atoms=m)
    rows, cols = _reduced(A, b, c)
    bnd, lo_b, up_b = _attach_bounds(inst.f_expr, inst.g_expr, inst.h_expr,
                                     GridConfig(inst.constraint_grid, inst.atom_grid, True), bounds)
    if rows.size == 0:
        ms = (time.perf_counter() - t0) * 1e3
        return CoveringResult(0.0, 0.0, DiscreteMeasure(inst.atom_grid, np.zeros(m)),
                              DiscreteMeasure(inst.constraint_grid, np.zeros(k)), 0.0,
                              lp.OPTIMAL, lo_b, up_b, ms, bounds=bnd, **common)
    sub = A[np.ix_(rows, cols)] if cols.size else np.zeros((rows.size, 0))
    dead = rows[~np.any(sub > 0, axis=1)] if cols.size else rows
    if dead.size:
        node = tuple(inst.constraint_grid.nodes()[dead[0]])
        ms = (time.perf_counter() - t0) * 1e3
        return CoveringResult(math.inf, math.nan, None, None, math.nan, lp.INFEASIBLE,
                              lo_b, up_b, ms, witness=node, bounds=bnd, **common)
    prob = lp.LpProblem(sub, b[rows], c[cols])
    sol = lp.solve(prob, tol)
    ms = (time.perf_counter() - t0) * 1e3
    if not sol.optimal:
        witness = None
        if sol.farkas is not None:
            witness = tuple(inst.constraint_grid.nodes()[rows[int(np.argmax(sol.farkas))]])
        return CoveringResult(sol.primal_value, math.nan, None, None, math.nan, sol.status,
                              lo_b, up_b, ms, iterations=sol.iterations, witness=witness,
                              bounds=bnd, **common)
    w = np.zeros(m)
    w[cols] = np.maximum(sol.w, 0.0)
    rho = np.zeros(k)
    rho[rows] = np.maximum(sol.rho, 0.0)
    cert = lp.certify(inst.matrix, lp.LpSolution(sol.status, sol.primal_value, w, rho, sol.gap,
                                                 sol.iterations))
    return CoveringResult(
        value_primal=sol.primal_value,
        value_dual=sol.dual_value,
        mu=DiscreteMeasure(inst.atom_grid, w),
        rho=DiscreteMeasure(inst.constraint_grid, rho),
        gap=sol.gap,
        status=sol.status,
        lower_bound=lo_b,
        upper_bound=up_b,
        runtime_ms=ms,
        iterations=sol.iterations,
        certificate=cert,
        bounds=bnd,
        **common,
    )


def separation_number(f: FunctionExpr, g: FunctionExpr, h: Optional[FunctionExpr],
                      cfg: GridConfig, tol: lp.ToleranceConfig = lp.ToleranceConfig(),
                      bounds: bool = False) -> CoveringResult:
    """``max sum_i f(x_i) rho_i  s.t.  sum_i rho_i g(t_j - x_i) <= h(t_j)``.

    ``rho`` lives on the constraint grid, the packing constraints sit at the
    atom nodes.  The program is the LP dual of covering ``f`` by the
    reflection of ``g``; ``value_dual`` holds the separation value and
    ``value_primal`` the covering value of that dual.
    """
    t0 = time.perf_counter()
    h = One() if h is None else h
    d = _expr_dim(f, g, h)
    if d is not None and d != cfg.dim:
        raise DimensionError(f"expressions have dimension {d}, grids have {cfg.dim}")
    x = cfg.constraints.nodes()
    t = cfg.atoms.nodes()
    fx = f(x)
    ht = h(t)
    G = _kernel_matrix(Reflect(g), t, x, cfg.atoms, cfg.constraints)  # G[j, i] = g(t_j - x_i)
    k, m = x.shape[0], t.shape[0]
    common = dict(step=float(np.max(cfg.constraints.step)), n_constraints=k, n_atoms=m)
    bnd, lo_b, up_b = _attach_bounds(f, Reflect(g), h, cfg, bounds)
    live = np.nonzero(fx > 0)[0]
    if live.size == 0:
        ms = (time.perf_counter() - t0) * 1e3
        return CoveringResult(0.0, 0.0, DiscreteMeasure(cfg.atoms, np.zeros(m)),
                              DiscreteMeasure(cfg.constraints, np.zeros(k)), 0.0, lp.OPTIMAL,
                              lo_b, up_b, ms, bounds=bnd, **common)
    Gl = G[:, live]
    free = live[~np.any(Gl > 0, axis=0)]
    if free.size:
        ms = (time.perf_counter() - t0) * 1e3
        return CoveringResult(math.nan, math.inf, None, None, math.nan, lp.UNBOUNDED, lo_b, up_b,
                              ms, witness=tuple(x[free[0]]), bounds=bnd, **common)
    act = np.nonzero(np.any(Gl > 0, axis=1))[0]
    prob = lp.LpProblem(-Gl[act], -ht[act], -fx[live])
    sol = lp.solve(prob, tol)
    ms = (time.perf_counter() - t0) * 1e3
    if not sol.optimal:
        return CoveringResult(math.nan, -sol.primal_value, None, None, math.nan, sol.status,
                              lo_b, up_b, ms, iterations=sol.iterations, bounds=bnd, **common)
    rho = np.zeros(k)
    rho[live] = np.maximum(sol.w, 0.0)
    mu = np.zeros(m)
    mu[act] = np.maximum(sol.rho, 0.0)
    return CoveringResult(
        value_primal=-sol.dual_value,
        value_dual=-sol.primal_value,
        mu=DiscreteMeasure(cfg.atoms, mu),
        rho=DiscreteMeasure(cfg.constraints, rho),
        gap=sol.gap,
        status=sol.status,
        lower_bound=lo_b,
        upper_bound=up_b,
        runtime_ms=ms,
        iterations=sol.iterations,
        bounds=bnd,
        **common,
    )


def solve_covering(f: FunctionExpr, g: FunctionExpr, h: Optional[FunctionExpr] = None,
                   cfg: Optional[GridConfig] = None, step: float = 0.05,
                   bounds: bool = True) -> CoveringResult:
    """Convenience wrapper: build with :meth:`GridConfig.auto` unless given."""
    if cfg is None:
        cfg = GridConfig.auto(f, g, step)
    return covering_number(build_instance(f, g, h, cfg), bounds=bounds)


def verify_cover(mu: DiscreteMeasure, g: FunctionExpr, f: FunctionExpr, grid: GridSpec) -> float:
    """``min_x (mu*g)(x) - f(x)`` over the nodes of ``grid``."""
    x = grid.nodes()
    return float(np.min(mu.convolve_at(g, x) - f(x)))


# ----------------------------------------------------------------------------
# quadrature helpers for the bounds


def _bounds_grid(f: FunctionExpr, g: FunctionExpr, cfg: GridConfig, eps: float = TAIL_EPS,
                 cap: Optional[int] = None) -> GridSpec:
    """Lattice window holding ``supp f - supp g`` (and the config windows),
    coarsened by an integer factor if it would exceed ``cap`` nodes."""
    dim = cfg.dim
    cap = cap or min(max_nodes(), 4096 if dim == 2 else 8192)
    fb = support_box(f, dim, eps)
    gb = support_box(g, dim, eps)
    lo = np.minimum(cfg.constraints.lo, cfg.atoms.lo)
    hi = np.maximum(cfg.constraints.hi, cfg.atoms.hi)
    if fb is not None and gb is not None:
        lo = np.minimum(lo, fb[0] - gb[1])
        hi = np.maximum(hi, fb[1] - gb[0])
    step = cfg.step
    factor = 1
    while True:
        s = step * factor
        n = np.prod(np.ceil((hi - lo) / s) + 2)
        if n <= cap:
            return GridSpec.from_step(lo, hi, s)
        factor += 1


def _quad(expr: FunctionExpr, grid: GridSpec) -> float:
    return integrate(evaluate(expr, grid))


def _conv_max(f: FunctionExpr, g: FunctionExpr, grid: GridSpec):
    """``max_x (f*g)(x)`` and the maximizer, ties broken toward the origin."""
    conv = convolve(evaluate(f, grid), g)
    v = conv.values
    top = v.max()
    nodes = grid.nodes()
    cand = np.nonzero(v >= top * (1 - 1e-12))[0]
    best = cand[np.argmin(np.linalg.norm(nodes[cand], axis=1))]
    return float(top), nodes[best]


@dataclass(frozen=True)
class BoundsReport:
    lower_ratio: float
    upper_p: dict
    lower_sq: float
    upper_sq: float
    even_variant: Optional[tuple] = None
    weighted_variant: Optional[dict] = None
    dim: int = 1
    step: float = math.nan

    def best_lower(self) -> float:
        if self.weighted_variant is not None:
            return 0.0
        cands = [self.lower_ratio, self.lower_sq]
        if self.even_variant is not None:
            cands.append(self.even_variant[0])
        return max(v for v in cands if math.isfinite(v)) if cands else 0.0

    def best_upper(self) -> float:
        if self.weighted_variant is not None:
            return self.weighted_variant.get("upper_explicit", math.inf)
        cands = list(self.upper_p.values()) + [self.upper_sq]
        if self.even_variant is not None:
            cands.append(self.even_variant[1])
        return min(cands)


def volume_bounds(f: FunctionExpr, g: FunctionExpr, p_list: Optional[Sequence[float]] = None,
                  h: Optional[FunctionExpr] = None, cfg: Optional[GridConfig] = None,
                  step: Optional[float] = None) -> BoundsReport:
    """Integral bounds on the covering number of ``f`` by ``g``.

    Lower: ``int f / int g`` and ``int f^2 / ||f*g_-||``.  Upper, for each
    ``p``: ``int (f sup* g_-^(p-1)) / int g_-^p``, and ``2^n int f^2 / ||f*g||``.
    For even ``f, g`` the pair ``int f^2 / int fg`` and ``2^n`` times it is
    added.  The upper bounds are guaranteed for geometric log-concave inputs.

    With a non-constant weight ``h`` the weighted forms are reported in
    ``weighted_variant``:

    * ``lower_submult``: ``int fh / int gh``, valid when ``h(x+y) <= h(x)h(y)``;
    * ``upper_sep_p``: ``int (f sup* g_-^(p-1)) h / int g_-^p``, bounding the
      weighted separation number of ``f`` by ``g_-``;
    * ``upper_even_printed``: ``2^n int f^2 h / int fg``;
    * ``upper_explicit``: the weighted cost ``int h dmu`` of the explicit
      covering measure, ``2^n int h(2s - x0) f^2(s) ds / ||f*g||``.  It is the
      value used as ``best_upper``; it coincides with the printed even form
      when ``h`` is constant.
    """
    p_list = tuple(DEFAULT_P if p_list is None else p_list)
    if any(p <= 1 for p in p_list):
        raise ValueError("every p must exceed 1")
    dim = _expr_dim(f, g, h) or (cfg.dim if cfg else 1)
    if cfg is None:
        cfg = GridConfig.auto(f, g, step or 0.02, dim=dim)
    grid = _bounds_grid(f, g, cfg)
    gm = Reflect(g)
    int_f = _quad(f, grid)
    int_g = _quad(g, grid)
    int_f2 = _quad(Power(f, 2.0), grid)
    lower_ratio = int_f / int_g if int_g > 0 else math.inf

    sf = evaluate(f, grid)
    upper_p = {}
    for p in p_list:
        num = integrate(sup_convolve(sf, Power(gm, p - 1)))
        den = _quad(Power(gm, p), grid)
        upper_p[float(p)] = num / den if den > 0 else math.inf
    norm_minus, _ = _conv_max(f, gm, grid)
    norm_plus, x0 = _conv_max(f, g, grid)
    lower_sq = int_f2 / norm_minus if norm_minus > 0 else math.inf
    upper_sq = 2**dim * int_f2 / norm_plus if norm_plus > 0 else math.inf

    even = None
    if is_even(f) and is_even(g):
        fg = _quad(Product((f, g)), grid)
        r = int_f2 / fg if fg > 0 else math.inf
        even = (r, 2**dim * r)

    weighted = None
    if h is not None and not isinstance(h, One):
        wv = {}
        gh = _quad(Product((g, h)), grid)
        wv["lower_submult"] = _quad(Product((f, h)), grid) / gh if gh > 0 else math.inf
        hv = h(grid.nodes())
        for p in p_list:
            sc = sup_convolve(sf, Power(gm, p - 1))
            num = math.fsum(sc.values * hv * grid.weights())
            wv[f"upper_sep_p{p:g}"] = num / _quad(Power(gm, p), grid)
        fg = _quad(Product((f, g)), grid)
        wv["upper_even_printed"] = (2**dim * _quad(Product((Power(f, 2.0), h)), grid) / fg
                                    if fg > 0 else math.inf)
        s = grid.nodes()
        cost = math.fsum(h(2 * s - x0[None, :]) * f(s) ** 2 * grid.weights())
        wv["upper_explicit"] = 2**dim * cost / norm_plus if norm_plus > 0 else math.inf
        weighted = wv

    return BoundsReport(lower_ratio, upper_p, lower_sq, upper_sq, even, weighted, dim,
                        float(np.max(grid.step)))


# ----------------------------------------------------------------------------
# explicit measures


@dataclass(frozen=True, eq=False)
class ExplicitMeasure(DiscreteMeasure):
    """A :class:`DiscreteMeasure` that remembers how it was built."""

    x0: tuple = ()
    norm: float = math.nan
    check: float = math.nan  # cover slack or peak load, depending on the kind
    value: float = math.nan  # mass of a covering, payoff of a separation


def explicit_covering_measure(f: FunctionExpr, g: FunctionExpr, cfg: GridConfig) -> ExplicitMeasure:
    """Atoms ``f^2((t + x0)/2) / ||f*g|| * cell`` on the atom grid, ``x0`` the
    maximizer of ``f*g``.  ``check`` holds the minimal cover slack over the
    constraint nodes."""
    grid = _bounds_grid(f, g, GridConfig(cfg.constraints, cfg.atoms, True), cap=max_nodes())
    norm, x0 = _conv_max(f, g, grid)
    if norm <= 0:
        raise ValueError("f*g vanishes identically")
    t = cfg.atoms.nodes()
    w = f((t + x0[None, :]) / 2) ** 2 / norm * cfg.atoms.weights()
    mu = DiscreteMeasure(cfg.atoms, w)
    slack = verify_cover(mu, g, f, cfg.constraints)
    return ExplicitMeasure(cfg.atoms, w, tuple(x0), norm, slack, mu.mass)


def explicit_separation_measure(f: FunctionExpr, g: FunctionExpr, cfg: GridConfig) -> ExplicitMeasure:
    """Atoms ``f(x) / ||f*g|| * cell`` on the constraint grid.  ``check`` is
    the largest value of ``rho*g`` over the atom nodes, ``value`` the payoff
    ``int f drho``."""
    grid = _bounds_grid(f, g, GridConfig(cfg.constraints, cfg.atoms, True), cap=max_nodes())
    norm, x0 = _conv_max(f, g, grid)
    if norm <= 0:
        raise ValueError("f*g vanishes identically")
    x = cfg.constraints.nodes()
    w = f(x) / norm * cfg.constraints.weights()
    rho = DiscreteMeasure(cfg.constraints, w)
    load = float(np.max(rho.convolve_at(g, cfg.atoms.nodes())))
    return ExplicitMeasure(cfg.constraints, w, tuple(x0), norm, load, rho.integrate(f))


# ----------------------------------------------------------------------------
# refinement


@dataclass(frozen=True)
class RefinementReport:
    steps: tuple
    values: tuple
    diffs: tuple
    divergence_suspected: bool
    reference: float

    @property
    def relative_changes(self) -> tuple:
        return tuple(abs(b - a) / abs(a) if a else math.inf
                     for a, b in zip(self.values, self.values[1:]))


def refinement_study(f: FunctionExpr, g: FunctionExpr, h: Optional[FunctionExpr],
                     cfg: GridConfig, levels: int = 3) -> RefinementReport:
    """Covering values at steps ``s, s/2, s/4, ...`` over fixed windows.

    Flags divergence when every refinement grows the value by at least 10%.
    """
    steps, vals = [], []
    c = cfg
    for lvl in range(levels):
        if lvl:
            c = c.refined(2)
        res = covering_number(build_instance(f, g, h, c), bounds=False)
        steps.append(c.step)
        vals.append(res.value_primal)
    diffs = tuple(b - a for a, b in zip(vals, vals[1:]))
    growth = [b / a - 1 if a > 0 else math.inf for a, b in zip(vals, vals[1:])]
    diverging = bool(growth) and all(gr >= DIVERGENCE_GROWTH for gr in growth)
    return RefinementReport(tuple(steps), tuple(vals), diffs, diverging, vals[-1])
