"""Drivers for the larger numerical experiments.

Each driver builds its covering programs with :meth:`GridConfig.auto` on a
common origin-aligned lattice, so that tabulated functions (log-duals, which
only exist on grid nodes) can be used as kernels without interpolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import lp
from .covering import (
    CoveringResult,
    GridConfig,
    build_instance,
    covering_number,
    volume_bounds,
    _expr_dim,
)
from .function_space import (
    DiscreteSupConvolution,
    FunctionExpr,
    Gaussian,
    GridSpec,
    HadwigerScale,
    Linear,
    One,
    Product,
    Reflect,
    ScaleValue,
    Sum,
    Tabulated,
    barycenter,
    evaluate,
    integrate,
    is_even,
    support_box,
)
from .transforms import (
    NotCenteredError,
    PolarInclusionReport,
    default_dual_grid,
    level_set_body,
    log_dual,
    polar_inclusions,
    santalo_product,
    sup_convolve,
)

# loose per-dimension constant standing in for the unspecified universal ones
PROPERTY_CONSTANT = 8.0
WEAK_DUALITY_TOL = 1e-7


class ExperimentError(RuntimeError):
    """A covering program inside an experiment did not reach optimality."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Discretization shared by the drivers.

    ``None`` fields pick a dimension-dependent default: step 0.05, tail
    threshold 1e-9 and padding cap 20 in 1D; 0.5, 1e-4 and 6 in 2D.
    """

    step: Optional[float] = None
    eps: Optional[float] = None
    max_pad: Optional[float] = None
    slope_cap: float = 30.0
    center_tol: float = 1e-3
    constant: float = PROPERTY_CONSTANT
    tol: lp.ToleranceConfig = lp.ToleranceConfig()

    def resolved(self, dim: int) -> tuple:
        one = dim == 1
        step = self.step if self.step is not None else (0.05 if one else 0.5)
        eps = self.eps if self.eps is not None else (1e-9 if one else 1e-4)
        pad = self.max_pad if self.max_pad is not None else (20.0 if one else 6.0)
        return step, eps, pad


def _dim(*exprs, default: int = 1) -> int:
    return _expr_dim(*exprs) or default


def weak_duality_ok(res: CoveringResult) -> bool:
    if not res.optimal:
        return True
    return res.value_dual <= res.value_primal + WEAK_DUALITY_TOL * (1 + abs(res.value_primal))


def cover(f: FunctionExpr, g: FunctionExpr, ec: ExperimentConfig = ExperimentConfig(),
          h: Optional[FunctionExpr] = None, dim: Optional[int] = None, window=None) -> CoveringResult:
    """Covering number of ``f`` by ``g`` on automatically sized grids."""
    dim = dim or _dim(f, g)
    step, eps, pad = ec.resolved(dim)
    cfg = GridConfig.auto(f, g, step, window=window, dim=dim, eps=eps, max_pad=pad)
    return covering_number(build_instance(f, g, h, cfg), ec.tol, bounds=False)


def _window_grid(boxes, step: float, dim: int, cap: int) -> GridSpec:
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    factor = 1
    while True:
        grid = GridSpec.from_step(lo, hi, step * factor)
        if grid.size <= cap:
            return grid
        factor += 1


def _box(expr: FunctionExpr, dim: int, eps: float):
    b = support_box(expr, dim, eps)
    if b is None:
        raise ValueError(f"{expr} has no bounded support box")
    return b


def sup_integral(a: FunctionExpr, b: FunctionExpr, ec: ExperimentConfig = ExperimentConfig(),
                 dim: Optional[int] = None) -> float:
    """``int a sup* b``, both factors evaluated on one lattice."""
    dim = dim or _dim(a, b)
    step, eps, _ = ec.resolved(dim)
    ba, bb = _box(a, dim, eps), _box(b, dim, eps)
    total = (ba[0] + bb[0], ba[1] + bb[1])
    grid = _window_grid([ba, bb, total], step, dim, 2048 if dim == 1 else 3600)
    return integrate(sup_convolve(evaluate(a, grid), b))


def quad(expr: FunctionExpr, ec: ExperimentConfig = ExperimentConfig(), dim: Optional[int] = None) -> float:
    dim = dim or _dim(expr)
    step, eps, _ = ec.resolved(dim)
    grid = _window_grid([_box(expr, dim, eps)], step, dim, 1 << 16)
    return integrate(evaluate(expr, grid))


def tabulate_dual(f: FunctionExpr, ec: ExperimentConfig = ExperimentConfig(),
                  dim: Optional[int] = None) -> Tabulated:
    """``f^*`` tabulated on the dual window of the primal lattice."""
    dim = dim or _dim(f)
    step, eps, _ = ec.resolved(dim)
    grid = GridSpec.from_step(*_box(f, dim, eps), step)
    sf = evaluate(f, grid)
    dg = default_dual_grid(sf, ec.slope_cap)
    return Tabulated(dg, log_dual(sf, dg).values, label=f"dual({f})")


def _check_centered(f: FunctionExpr, ec: ExperimentConfig, dim: int) -> np.ndarray:
    step, eps, _ = ec.resolved(dim)
    grid = GridSpec.from_step(*_box(f, dim, eps), step / 2 if dim == 1 else step / 4)
    bary = barycenter(evaluate(f, grid))
    if np.max(np.abs(bary)) > ec.center_tol:
        raise NotCenteredError(f"{f} has barycenter {bary}; center it first")
    return bary


def _extrapolate(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Value at ``x = 0`` of the least-squares line through the points."""
    slope, icpt = np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)
    return float(icpt)


# ----------------------------------------------------------------------------
# duality gap


@dataclass(frozen=True)
class DualityStudy:
    rows: tuple  # (step, N, M, gap, mass)
    k_values: tuple
    k_covering: tuple
    k_limit: float
    base_value: float

    @property
    def limit_rel_error(self) -> float:
        return abs(self.k_limit - self.base_value) / abs(self.base_value)


def default_bump(dim: int) -> FunctionExpr:
    return Gaussian(((1.0,),)) if dim == 1 else Gaussian(((1.0, 0.0), (0.0, 1.0)))


def duality_gap_study(f: FunctionExpr, g: FunctionExpr, h: Optional[FunctionExpr] = None,
                      cfg: Optional[GridConfig] = None, levels: int = 3,
                      ks: Sequence[int] = (1, 2, 4, 8, 16), bump: Optional[FunctionExpr] = None,
                      ec: ExperimentConfig = ExperimentConfig()) -> DualityStudy:
    """Primal and dual values under grid refinement, and the limit of
    ``N(f, g_k)`` for the decreasing kernels ``g_k = g (1 + bump / k)``."""
    dim = cfg.dim if cfg is not None else _dim(f, g, h)
    if cfg is None:
        step, eps, pad = ec.resolved(dim)
        cfg = GridConfig.auto(f, g, step, dim=dim, eps=eps, max_pad=pad)
    rows = []
    c = cfg
    any_ok = False
    for lvl in range(levels):
        if lvl:
            c = c.refined(2)
        res = covering_number(build_instance(f, g, h, c), ec.tol, bounds=False)
        if res.optimal:
            any_ok = True
            rows.append((c.step, res.value_primal, res.value_dual, res.gap, res.mu.mass))
        else:
            rows.append((c.step, res.value_primal, math.nan, math.nan, math.nan))
    if not any_ok:
        raise ExperimentError(f"covering of {f} by {g} failed at every level")
    base = next(r[1] for r in rows if math.isfinite(r[3]))

    bump = bump or default_bump(dim)
    kvals = []
    for k in ks:
        gk = Sum((g, ScaleValue(Product((g, bump)), 1.0 / k)))
        res = covering_number(build_instance(f, gk, h, cfg), ec.tol, bounds=False)
        kvals.append(res.value_primal)
    tail = slice(-3, None)
    limit = _extrapolate([1.0 / k for k in ks][tail], kvals[tail])
    return DualityStudy(tuple(rows), tuple(ks), tuple(kvals), limit, base)


# ----------------------------------------------------------------------------
# Hadwiger scan


@dataclass(frozen=True)
class HadwigerScan:
    f: FunctionExpr
    lambdas: tuple
    values: tuple
    bound_even: float
    bound_general: float
    extrapolated_limit: float
    even: bool
    lower: tuple
    upper: tuple
    duals: tuple = ()
    monotone: Optional[bool] = None

    @property
    def bound(self) -> float:
        return self.bound_even if self.even else self.bound_general

    def rows(self) -> list:
        return [
            {"lambda": lam, "value": v, "lower": lo, "upper": up, "value_dual": d}
            for lam, v, lo, up, d in zip(self.lambdas, self.values, self.lower, self.upper, self.duals)
        ]


def hadwiger_scan(f: FunctionExpr, lambdas: Sequence[float],
                  ec: ExperimentConfig = ExperimentConfig(), dim: Optional[int] = None) -> HadwigerScan:
    """``N(f, f_lambda)`` over ``lambdas`` with the two-sided integral
    sandwich, and the linear extrapolation to ``lambda -> 1``."""
    lambdas = tuple(sorted(float(v) for v in lambdas))
    if not lambdas or any(not 0 < v < 1 for v in lambdas):
        raise ValueError("lambdas must lie in (0, 1)")
    dim = dim or _dim(f)
    step, eps, pad = ec.resolved(dim)
    vals, duals, lows, ups = [], [], [], []
    for lam in lambdas:
        g = HadwigerScale(f, lam)
        cfg = GridConfig.auto(f, g, step, dim=dim, eps=eps, max_pad=pad)
        res = covering_number(build_instance(f, g, None, cfg), ec.tol, bounds=False)
        if not res.optimal:
            raise ExperimentError(f"N({f}, f_{lam}) has status {res.status}")
        vals.append(res.value_primal)
        duals.append(res.value_dual)
        rep = volume_bounds(f, g, (2.0,), cfg=cfg)
        lows.append(rep.lower_ratio)
        ups.append(rep.upper_p[2.0])
    top = min(3, len(lambdas))
    xs = [1 - v for v in lambdas[-top:]]
    limit = _extrapolate(xs, vals[-top:]) if top >= 2 else vals[-1]
    diffs = np.diff(vals)
    monotone = bool(np.all(diffs <= 1e-9) or np.all(diffs >= -1e-9)) if len(vals) > 1 else None
    return HadwigerScan(f, lambdas, tuple(vals), 2.0**dim, 4.0**dim, limit, is_even(f),
                        tuple(lows), tuple(ups), tuple(duals), monotone)


# ----------------------------------------------------------------------------
# Konig-Milman


@dataclass(frozen=True)
class KonigMilmanReport:
    N_fg: float
    N_dual: float
    ratio_per_dim: float
    dim: int
    f_dual: Tabulated = field(repr=False)
    g_dual: Tabulated = field(repr=False)
    results: tuple = field(default=(), repr=False)

    @property
    def within_constant(self) -> bool:
        c = PROPERTY_CONSTANT
        return 1 / c <= self.ratio_per_dim <= c


def konig_milman(f: FunctionExpr, g: FunctionExpr, ec: ExperimentConfig = ExperimentConfig(),
                 dim: Optional[int] = None, check_center: bool = True) -> KonigMilmanReport:
    """``N(f, g)`` against ``N(g^*, f^*)``, duals tabulated on the lattice."""
    dim = dim or _dim(f, g)
    if check_center:
        _check_centered(f, ec, dim)
        _check_centered(g, ec, dim)
    fd = tabulate_dual(f, ec, dim)
    gd = tabulate_dual(g, ec, dim)
    r1 = cover(f, g, ec, dim=dim)
    r2 = cover(gd, fd, ec, dim=dim)
    for r, what in ((r1, "N(f, g)"), (r2, "N(g*, f*)")):
        if not r.optimal:
            raise ExperimentError(f"{what} has status {r.status}")
    ratio = (r1.value_primal / r2.value_primal) ** (1 / dim)
    return KonigMilmanReport(r1.value_primal, r2.value_primal, ratio, dim, fd, gd, (r1, r2))


def konig_milman_swapped(rep: KonigMilmanReport, ec: ExperimentConfig = ExperimentConfig()) -> KonigMilmanReport:
    """Rerun with the roles replaced: ``(g^*, f^*)`` in place of ``(f, g)``."""
    return konig_milman(rep.g_dual, rep.f_dual, ec, rep.dim, check_center=False)


# ----------------------------------------------------------------------------
# even reduction


@dataclass(frozen=True)
class EvenReductionReport:
    N_f_g: float
    N_prod_g: float
    N_sup_g: float
    N_g_f: float
    N_g_prod: float
    N_g_sup: float
    rogers_shephard: float
    dim: int

    @property
    def ordering_ok(self) -> bool:
        t = 1e-6
        first = self.N_prod_g <= self.N_f_g * (1 + t) and self.N_f_g <= self.N_sup_g * (1 + t)
        # in the second slot the order reverses: larger kernels are cheaper
        second = self.N_g_sup <= self.N_g_f * (1 + t) and self.N_g_f <= self.N_g_prod * (1 + t)
        return first and second

    @property
    def ratios(self) -> dict:
        return {
            "prod/f": self.N_prod_g / self.N_f_g,
            "sup/f": self.N_sup_g / self.N_f_g,
            "g_prod/g_f": self.N_g_prod / self.N_g_f,
            "g_sup/g_f": self.N_g_sup / self.N_g_f,
        }

    def ratios_within(self, constant: float = PROPERTY_CONSTANT) -> bool:
        c = constant**self.dim
        return all(1 / c <= r <= c for r in self.ratios.values())

    @property
    def rogers_shephard_ok(self) -> bool:
        return self.rogers_shephard <= 4.0**self.dim + 1e-6


def even_reduction(f: FunctionExpr, g: FunctionExpr, ec: ExperimentConfig = ExperimentConfig(),
                   dim: Optional[int] = None) -> EvenReductionReport:
    """Covering numbers of ``f``, ``f f_-`` and ``f sup* f_-`` by ``g`` and
    of ``g`` by each of them, with ``int f sup* f_- / int f``."""
    dim = dim or _dim(f, g)
    _check_centered(f, ec, dim)
    step, eps, _ = ec.resolved(dim)
    fm = Reflect(f)
    prod = Product((f, fm))
    sgrid = GridSpec.from_step(*_box(f, dim, eps), step)
    sup = DiscreteSupConvolution(f, fm, sgrid)
    vals = []
    for a, b in ((f, g), (prod, g), (sup, g), (g, f), (g, prod), (g, sup)):
        r = cover(a, b, ec, dim=dim)
        if not r.optimal:
            raise ExperimentError(f"N({a}, {b}) has status {r.status}")
        vals.append(r.value_primal)
    rs = sup_integral(f, fm, ec, dim) / quad(f, ec, dim)
    return EvenReductionReport(*vals, rs, dim)


# ----------------------------------------------------------------------------
# M-position


def standard_gaussian(dim: int) -> Gaussian:
    return Gaussian(((1.0,),)) if dim == 1 else Gaussian(((1.0, 0.0), (0.0, 1.0)))


def normalizing_map(f: FunctionExpr, ec: ExperimentConfig = ExperimentConfig(),
                    dim: Optional[int] = None) -> np.ndarray:
    """``T`` with ``f(T x)`` isotropic and of integral ``(2 pi)^(n/2)``.

    The covariance ``S`` of the density ``f / int f`` is whitened by
    ``S^(1/2)`` (principal axes in 2D), then ``T = a S^(1/2)`` with ``a``
    fixing the integral.
    """
    dim = dim or _dim(f)
    step, eps, _ = ec.resolved(dim)
    grid = GridSpec.from_step(*_box(f, dim, eps), step / 4 if dim == 1 else step / 4)
    sf = evaluate(f, grid)
    w = sf.values * grid.weights()
    total = math.fsum(w)
    x = grid.nodes()
    mean = (w @ x) / total
    xc = x - mean
    cov = (xc * w[:, None]).T @ xc / total
    vals, vecs = np.linalg.eigh(cov)
    root = vecs @ np.diag(np.sqrt(vals)) @ vecs.T
    int1 = total / abs(np.linalg.det(root))
    a = (int1 / (2 * math.pi) ** (dim / 2)) ** (1 / dim)
    return a * root


@dataclass(frozen=True)
class MPositionReport:
    T_f: np.ndarray
    f_tilde: FunctionExpr = field(repr=False)
    f_tilde_dual: Tabulated = field(repr=False)
    N_f_g0: float
    N_g0_f: float
    N_fdual_g0: float
    N_g0_fdual: float
    Kf_volume: float
    Kfstar_volume: float
    integral: float
    santalo: float
    polar: PolarInclusionReport
    rbm_checks: tuple  # (label, int f~ sup* h / int g0 sup* h, same with f~*)
    reverse_bm: tuple  # (label, |f~ sup* h~|^(1/n) / (|f~|^(1/n) + |h~|^(1/n))), h~ normalized
    dim: int

    @property
    def covering_numbers(self) -> tuple:
        return (self.N_f_g0, self.N_g0_f, self.N_fdual_g0, self.N_g0_fdual)

    @property
    def constant_estimate(self) -> float:
        return max(self.covering_numbers) ** (1 / self.dim)

    @property
    def volume_constant(self) -> float:
        """Smallest ``C`` with every ratio in ``[C^-n, C^n]``."""
        worst = 1.0
        for _, r, rd in self.rbm_checks:
            for v in (r, rd):
                worst = max(worst, v, 1 / v)
        return worst ** (1 / self.dim)

    @property
    def reverse_bm_constant(self) -> float:
        return max((c for _, c in self.reverse_bm), default=0.0)

    @property
    def level_ratio(self) -> float:
        return self.Kf_volume / self.integral

    @property
    def dual_level_ratio(self) -> float:
        return self.Kfstar_volume / self.Kf_volume


def default_test_zoo(dim: int) -> list:
    from .parser import parse_expr

    if dim == 1:
        texts = ["gauss(1)", "gauss(0.25)", "gauss(4)", "ind_box(-1,1)", "expnorm(1,1)"]
    else:
        texts = ["gauss2(1,0,1)", "gauss2(2,0.5,1)", "ind_box2(-1,1,-1,1)", "expnorm(2,1)"]
    return [parse_expr(t) for t in texts]


def mposition(f: FunctionExpr, ec: ExperimentConfig = ExperimentConfig(),
              test_zoo: Optional[Sequence[FunctionExpr]] = None, dim: Optional[int] = None) -> MPositionReport:
    """Normalize ``f`` and collect the diagnostics of its position."""
    dim = dim or _dim(f)
    _check_centered(f, ec, dim)
    zoo = list(test_zoo) if test_zoo is not None else default_test_zoo(dim)
    step, eps, _ = ec.resolved(dim)
    T = normalizing_map(f, ec, dim)
    ft = Linear(f, tuple(tuple(float(v) for v in row) for row in T))
    fd = tabulate_dual(ft, ec, dim)
    g0 = standard_gaussian(dim)

    nums = []
    for a, b in ((ft, g0), (g0, ft), (fd, g0), (g0, fd)):
        r = cover(a, b, ec, dim=dim)
        if not r.optimal:
            raise ExperimentError(f"N({a}, {b}) has status {r.status}")
        nums.append(r.value_primal)

    grid = GridSpec.from_step(*_box(ft, dim, eps), step)
    sf = evaluate(ft, grid)
    kf = level_set_body(sf)
    kd = level_set_body(evaluate(fd, fd.grid))
    integral = quad(ft, ec, dim)
    dg = fd.grid
    santalo = santalo_product(sf, dg, center_tol=1.0)
    polar = polar_inclusions(sf, dg)

    rbm = []
    for h in zoo:
        base = sup_integral(g0, h, ec, dim)
        rbm.append((str(h), sup_integral(ft, h, ec, dim) / base, sup_integral(fd, h, ec, dim) / base))

    prop = []
    own = integral ** (1 / dim)
    for h in zoo:
        Th = normalizing_map(h, ec, dim)
        ht = Linear(h, tuple(tuple(float(v) for v in row) for row in Th))
        lhs = sup_integral(ft, ht, ec, dim) ** (1 / dim)
        prop.append((str(h), lhs / (own + quad(ht, ec, dim) ** (1 / dim))))

    return MPositionReport(T, ft, fd, *nums, kf.volume, kd.volume, integral, santalo, polar,
                           tuple(rbm), tuple(prop), dim)


@dataclass(frozen=True)
class EquivalenceReport:
    covering_constant: float  # measured max N^(1/n)
    volume_constant: float  # measured sup-convolution ratio constant
    chain_bounds: dict  # integral upper bounds on the four covering numbers
    implied_covering_constant: float  # from the chain, at most 4 x volume constant
    volume_from_covering_ok: bool
    covering_from_volume_ok: bool
    dim: int


def mposition_equivalence(f: FunctionExpr, ec: ExperimentConfig = ExperimentConfig(),
                          test_zoo: Optional[Sequence[FunctionExpr]] = None,
                          dim: Optional[int] = None,
                          report: Optional[MPositionReport] = None) -> EquivalenceReport:
    """Check both directions between the volume and covering positions.

    Covering to volume: every sup-convolution ratio ``r`` of the report must
    lie between ``1 / N(g0, f~)`` and ``N(f~, g0)`` (same for ``f~*``).
    Volume to covering: each covering number is bounded by an integral
    quotient, ``N(a, b) <= int a sup* b_- / int b^2``, itself at most
    ``(2C)^n`` or ``(4C)^n`` with ``C`` the volume constant.
    """
    rep = report or mposition(f, ec, test_zoo, dim)
    n = rep.dim
    ft, fd, g0 = rep.f_tilde, rep.f_tilde_dual, standard_gaussian(n)
    t = 1e-6

    vol_ok = True
    for _, r, rd in rep.rbm_checks:
        vol_ok &= 1 / rep.N_g0_f * (1 - t) <= r <= rep.N_f_g0 * (1 + t)
        vol_ok &= 1 / rep.N_g0_fdual * (1 - t) <= rd <= rep.N_fdual_g0 * (1 + t)

    g0sq = quad(Product((g0, g0)), ec, n)
    chain = {
        "N(f~,g0)": sup_integral(ft, g0, ec, n) / g0sq,
        "N(g0,f~)": sup_integral(g0, Reflect(ft), ec, n) / quad(Product((ft, ft)), ec, n),
        "N(f~*,g0)": sup_integral(fd, g0, ec, n) / g0sq,
        "N(g0,f~*)": sup_integral(g0, Reflect(fd), ec, n) / quad(Product((fd, fd)), ec, n),
    }
    measured = dict(zip(chain, rep.covering_numbers))
    cov_ok = all(measured[k] <= chain[k] * (1 + 1e-3) for k in chain)
    implied = max(chain.values()) ** (1 / n)
    cov_ok &= implied <= 4 * rep.volume_constant * (1 + 1e-3)
    return EquivalenceReport(rep.constant_estimate, rep.volume_constant, chain, implied,
                             bool(vol_ok), bool(cov_ok), n)
