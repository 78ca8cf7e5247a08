"""Randomized checks of the elementary identities and inequalities.

Every check compares covering numbers of the discretized programs on grids
chosen so that the continuous argument goes through verbatim (shared
lattices, shared windows), hence the tolerances are those of the LP solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import lp
from .covering import GridConfig, build_instance, covering_number
from .function_space import (
    DiscreteConvolution,
    DiscreteSupConvolution,
    ExpNorm,
    FunctionExpr,
    Gaussian,
    GridSpec,
    IndicatorBox,
    Linear,
    One,
    Product,
    ScaleValue,
    Sum,
    Translate,
    support_box,
)

FACT_EPS = 1e-9  # tail threshold for the windows
FACT_EPS_2D = 1e-4
REL_TOL = 1e-6
EXACT_TOL = 1e-9
POINTWISE_TOL = 1e-8


@dataclass(frozen=True)
class QuadraticWeight(FunctionExpr):
    """``1 + |x|^2``, a weight minimized at the origin."""

    dim: Optional[int] = None

    def _eval(self, pts):
        return 1.0 + np.sum(pts * pts, axis=1)


@dataclass(frozen=True)
class FactCheck:
    name: str
    lhs: float
    rhs: float
    relation: str  # "==" or "<=" or ">="
    tol: float
    detail: str = ""

    @property
    def ok(self) -> bool:
        scale = 1 + abs(self.rhs)
        if self.relation == "==":
            return abs(self.lhs - self.rhs) <= self.tol * scale
        if self.relation == "<=":
            return self.lhs <= self.rhs + self.tol * scale
        return self.lhs >= self.rhs - self.tol * scale

    def row(self) -> dict:
        return {"fact": self.name, "lhs": self.lhs, "rhs": self.rhs, "relation": self.relation,
                "tol": self.tol, "ok": self.ok, "detail": self.detail}


# ----------------------------------------------------------------------------
# helpers


def _solve(f, g, h, cfg: GridConfig) -> float:
    res = covering_number(build_instance(f, g, h, cfg), lp.ToleranceConfig(), bounds=False)
    if not res.optimal:
        raise RuntimeError(f"covering of {f} by {g} has status {res.status}")
    return res.value_primal


def _auto(f, g, step, dim) -> GridConfig:
    # 2D windows use a coarser tail threshold to keep the programs small
    if dim == 2:
        return GridConfig.auto(f, g, step, dim=dim, eps=FACT_EPS_2D, max_pad=6.0)
    return GridConfig.auto(f, g, step, dim=dim, eps=FACT_EPS, max_pad=12.0)


def _shift_grid(gs: GridSpec, a) -> GridSpec:
    a = np.asarray(a, dtype=float)
    return GridSpec(tuple(np.array(gs.lo) + a), tuple(np.array(gs.hi) + a), gs.points_per_axis)


def _scale_grid(gs: GridSpec, d) -> GridSpec:
    """Image of the grid under ``x -> x / d`` (``d`` positive diagonal)."""
    d = np.asarray(d, dtype=float)
    a, b = np.array(gs.lo) / d, np.array(gs.hi) / d
    return GridSpec(tuple(np.minimum(a, b)), tuple(np.maximum(a, b)), gs.points_per_axis)


def _box(e, dim):
    b = support_box(e, dim, FACT_EPS_2D if dim == 2 else FACT_EPS)
    if b is None:
        raise ValueError(f"{e} has unbounded support")
    return b


# ----------------------------------------------------------------------------
# random members


def random_member(rng: np.random.Generator, dim: int = 1) -> FunctionExpr:
    """A geometric log-concave zoo member with moderate parameters."""
    kind = rng.integers(4)
    if dim == 1:
        if kind == 0:
            return Gaussian(((float(rng.uniform(0.5, 3.0)),),))
        if kind == 1:
            return IndicatorBox((-float(rng.uniform(0.5, 2.0)),), (float(rng.uniform(0.5, 2.0)),))
        if kind == 2:
            return ExpNorm(2.0, float(rng.uniform(0.7, 2.0)))
        return Product((Gaussian(((float(rng.uniform(0.5, 2.0)),),)),
                        IndicatorBox((-float(rng.uniform(0.5, 2.0)),), (float(rng.uniform(0.5, 2.0)),))))
    a, b = rng.uniform(1.0, 3.0, size=2)
    if kind == 0:
        c = float(rng.uniform(-0.4, 0.4)) * math.sqrt(a * b)
        return Gaussian(((float(a), c), (c, float(b))))
    if kind == 1:
        return IndicatorBox((-1.0, -1.0), (float(rng.uniform(0.5, 1.5)), float(rng.uniform(0.5, 1.5))))
    if kind == 2:
        return ExpNorm(2.0, float(rng.uniform(1.5, 2.5)))
    return Product((Gaussian(((float(a), 0.0), (0.0, float(b)))), IndicatorBox((-1.5, -1.5), (1.5, 1.5))))


# ----------------------------------------------------------------------------
# individual facts


def scaling_identity(f, g, h, a: float, b: float, c: float, step: float, dim: int = 1) -> FactCheck:
    cfg = _auto(f, g, step, dim)
    base = _solve(f, g, h, cfg)
    scaled = _solve(ScaleValue(f, a), ScaleValue(g, b), ScaleValue(h, c), cfg)
    return FactCheck("scaling", scaled, a * c / b * base, "==", EXACT_TOL, f"a={a:g} b={b:g} c={c:g}")


def translation_invariance(f, g, h, shift_steps, step: float, dim: int = 1) -> list:
    """The three lattice-translation identities, windows moved along."""
    cfg = _auto(f, g, step, dim)
    a = np.asarray(shift_steps, dtype=float) * step
    base = _solve(f, g, h, cfg)
    X, T = cfg.constraints, cfg.atoms
    at = tuple(float(v) for v in a)
    mt = tuple(float(-v) for v in a)
    out = []
    v1 = _solve(Translate(f, at), Translate(g, at), h, GridConfig(_shift_grid(X, a), T, True))
    out.append(FactCheck("translation f_a,g_a,h", v1, base, "==", EXACT_TOL))
    v2 = _solve(f, Translate(g, at), Translate(h, mt), GridConfig(X, _shift_grid(T, -a), True))
    out.append(FactCheck("translation f,g_a,h_-a", v2, base, "==", EXACT_TOL))
    v3 = _solve(Translate(f, at), g, Translate(h, at),
                GridConfig(_shift_grid(X, a), _shift_grid(T, a), True))
    out.append(FactCheck("translation f_a,g,h_a", v3, base, "==", EXACT_TOL))
    return out


def diagonal_invariance(f, g, h, diag, step: float, dim: int = 1) -> FactCheck:
    """``N(f_A, g_A, h_A) = N(f, g, h)`` for ``A = diag(d)``, grids mapped by ``A^-1``."""
    cfg = _auto(f, g, step, dim)
    d = np.asarray(diag, dtype=float)
    A = tuple(tuple(float(d[i]) if i == j else 0.0 for j in range(dim)) for i in range(dim))
    base = _solve(f, g, h, cfg)
    mapped = GridConfig(_scale_grid(cfg.constraints, d), _scale_grid(cfg.atoms, d), True)
    v = _solve(Linear(f, A), Linear(g, A), Linear(h, A), mapped)
    return FactCheck("diagonal GL", v, base, "==", EXACT_TOL, "diag=" + " ".join(f"{v:g}" for v in d))


def monotonicity(f, g, h, shrink: FunctionExpr, grow: FunctionExpr, step: float, dim: int = 1) -> FactCheck:
    """``f1 = f shrink <= f``, ``g1 = g + grow >= g``, ``h1 = h <= h + grow``."""
    f1, g1, h1 = Product((f, shrink)), Sum((g, grow)), h
    f2, g2, h2 = f, g, Sum((h, grow))
    cfg = _auto(f2, g1, step, dim)
    return FactCheck("monotonicity", _solve(f1, g1, h1, cfg), _solve(f2, g2, h2, cfg), "<=", REL_TOL)


def subadditivity_f(f1, f2, g, h, step: float, dim: int = 1) -> FactCheck:
    cfg = _auto(Sum((f1, f2)), g, step, dim)
    lhs = _solve(Sum((f1, f2)), g, h, cfg)
    return FactCheck("sub-additivity in f", lhs, _solve(f1, g, h, cfg) + _solve(f2, g, h, cfg), "<=", REL_TOL)


def additivity_h(f, g, h1, h2, step: float, dim: int = 1) -> FactCheck:
    """``N(f, g, h1 + h2) >= N(f, g, h1) + N(f, g, h2)``.

    The value is an infimum of functionals linear in ``h``, hence concave in
    ``h``: splitting the weight can only lower the total.  The reverse
    (sub-additive) inequality fails in general; see the tests for an instance.
    """
    cfg = _auto(f, g, step, dim)
    lhs = _solve(f, g, Sum((h1, h2)), cfg)
    return FactCheck("super-additivity in h", lhs, _solve(f, g, h1, cfg) + _solve(f, g, h2, cfg), ">=", REL_TOL)


def submultiplicativity(f, g, phi, step: float, dim: int = 1) -> FactCheck:
    """``N(f, g) <= N(f, phi) N(phi, g)``; the atoms of the left program
    contain the sums of the atom windows of the right ones."""
    c1 = _auto(f, phi, step, dim)
    c2 = _auto(phi, g, step, dim)
    c0 = _auto(f, g, step, dim)
    lo = np.minimum(np.array(c1.atoms.lo) + np.array(c2.atoms.lo), c0.atoms.lo)
    hi = np.maximum(np.array(c1.atoms.hi) + np.array(c2.atoms.hi), c0.atoms.hi)
    cfg = GridConfig(c0.constraints, GridSpec.from_step(lo, hi, step))
    lhs = _solve(f, g, None, cfg)
    return FactCheck("sub-multiplicativity", lhs, _solve(f, phi, None, c1) * _solve(phi, g, None, c2),
                     "<=", REL_TOL)


def _phi_grid(phi, step, dim):
    return GridSpec.from_step(*_box(phi, dim), step)


def convolution_monotonicity(f, g, phi, step: float, dim: int = 1) -> FactCheck:
    """``N(f*phi, g*phi) <= N(f, g)`` with the discrete convolution."""
    G = _phi_grid(phi, step, dim)
    fc, gc = DiscreteConvolution(phi, f, G), DiscreteConvolution(phi, g, G)
    cfg = _auto(f, g, step, dim)
    bigger = _auto(fc, gc, step, dim)
    return FactCheck("convolution monotonicity", _solve(fc, gc, None, bigger), _solve(f, g, None, cfg),
                     "<=", REL_TOL)


def sup_convolution_monotonicity(f, g, phi, step: float, dim: int = 1) -> FactCheck:
    """``N(phi sup* f, phi sup* g) <= N(f, g)``."""
    G = _phi_grid(phi, step, dim)
    fs, gs = DiscreteSupConvolution(phi, f, G), DiscreteSupConvolution(phi, g, G)
    cfg = _auto(f, g, step, dim)
    bigger = _auto(fs, gs, step, dim)
    return FactCheck("sup-convolution monotonicity", _solve(fs, gs, None, bigger),
                     _solve(f, g, None, cfg), "<=", REL_TOL)


def _two_pair(f, g, phi, psi, step, dim, op, name) -> FactCheck:
    c1 = _auto(f, g, step, dim)
    c2 = _auto(phi, psi, step, dim)
    rhs = _solve(f, g, None, c1) * _solve(phi, psi, None, c2)
    Gf = _phi_grid(f, step, dim)
    Gg = _phi_grid(g, step, dim)
    left = op(phi, f, Gf)
    right = op(psi, g, Gg)
    c0 = _auto(left, right, step, dim)
    lo = np.minimum(np.array(c1.atoms.lo) + np.array(c2.atoms.lo), c0.atoms.lo)
    hi = np.maximum(np.array(c1.atoms.hi) + np.array(c2.atoms.hi), c0.atoms.hi)
    cfg = GridConfig(c0.constraints, GridSpec.from_step(lo, hi, step))
    return FactCheck(name, _solve(left, right, None, cfg), rhs, "<=", REL_TOL)


def two_pair_sup(f, g, phi, psi, step: float, dim: int = 1) -> FactCheck:
    """``N(f sup* phi, g sup* psi) <= N(f, g) N(phi, psi)``."""
    return _two_pair(f, g, phi, psi, step, dim, DiscreteSupConvolution, "two-pair sup-convolution")


def two_pair_conv(f, g, phi, psi, step: float, dim: int = 1) -> FactCheck:
    """``N(phi*f, psi*g) <= N(f, g) N(phi, psi)``."""
    return _two_pair(f, g, phi, psi, step, dim, DiscreteConvolution, "two-pair convolution")


def pointwise_mixed(f1, f2, f3, step: float, dim: int = 1) -> FactCheck:
    """``f1 * (f2 sup* f3) >= f2 sup* (f1 * f3)`` at every node."""
    G1, G2 = _phi_grid(f1, step, dim), _phi_grid(f2, step, dim)
    lhs = DiscreteConvolution(f1, DiscreteSupConvolution(f2, f3, G2), G1)
    rhs = DiscreteSupConvolution(f2, DiscreteConvolution(f1, f3, G1), G2)
    b1, b2, b3 = _box(f1, dim), _box(f2, dim), _box(f3, dim)
    nodes = GridSpec.from_step(b1[0] + b2[0] + b3[0], b1[1] + b2[1] + b3[1], step).nodes()
    diff = lhs(nodes) - rhs(nodes)
    worst = float(np.min(diff))
    return FactCheck("pointwise mixed inequality", worst, 0.0, ">=", POINTWISE_TOL,
                     f"{nodes.shape[0]} nodes")


def self_cover_weight(phi, h, step: float, dim: int = 1) -> FactCheck:
    """``N(phi, phi, h) = h(0)`` when ``h`` is smallest at the origin."""
    cfg = _auto(phi, phi, step, dim)
    h0 = float(h(np.zeros((1, dim)))[0])
    return FactCheck("self cover weight", _solve(phi, phi, h, cfg), h0, "==", REL_TOL)


# ----------------------------------------------------------------------------
# the suite


def run_suite(seed: int = 0, trials: int = 50, dim: int = 1, step: Optional[float] = None,
              progress: Optional[Callable[[FactCheck], None]] = None) -> list:
    """All facts over ``trials`` random combinations (each trial picks one
    randomized check per family in rotation), plus the fixed checks."""
    rng = np.random.default_rng(seed)
    step = step or (0.1 if dim == 1 else 0.5)
    out = []

    def add(items):
        items = items if isinstance(items, list) else [items]
        for c in items:
            out.append(c)
            if progress:
                progress(c)

    weight_pool = [One(), ExpNorm(2.0, 0.3), QuadraticWeight()]
    families = ["scaling", "translation", "diagonal", "monotone", "subadd_f", "subadd_h",
                "submult", "conv", "supconv", "two_sup", "two_conv", "pointwise"]
    for t in range(trials):
        fam = families[t % len(families)]
        f, g, phi = (random_member(rng, dim) for _ in range(3))
        h = weight_pool[rng.integers(len(weight_pool))]
        if fam == "scaling":
            a, b, c = rng.uniform(0.2, 5.0, size=3)
            add(scaling_identity(f, g, h, float(a), float(b), float(c), step, dim))
        elif fam == "translation":
            k = rng.integers(-5, 6, size=dim)
            add(translation_invariance(f, g, h, k, step, dim))
        elif fam == "diagonal":
            d = rng.choice([0.5, 2.0, -1.0, 4.0], size=dim)
            add(diagonal_invariance(f, g, h, d, step, dim))
        elif fam == "monotone":
            add(monotonicity(f, g, h, phi, ScaleValue(phi, float(rng.uniform(0.1, 1.0))), step, dim))
        elif fam == "subadd_f":
            add(subadditivity_f(f, Translate(phi, tuple(float(v) for v in rng.integers(-3, 4, size=dim) * step)),
                                g, h, step, dim))
        elif fam == "subadd_h":
            add(additivity_h(f, g, h, weight_pool[rng.integers(len(weight_pool))], step, dim))
        elif fam == "submult":
            add(submultiplicativity(f, g, phi, step, dim))
        elif fam == "conv":
            add(convolution_monotonicity(f, g, phi, step, dim))
        elif fam == "supconv":
            add(sup_convolution_monotonicity(f, g, phi, step, dim))
        elif fam == "two_sup":
            add(two_pair_sup(f, g, phi, random_member(rng, dim), step, dim))
        elif fam == "two_conv":
            add(two_pair_conv(f, g, phi, random_member(rng, dim), step, dim))
        else:
            add(pointwise_mixed(f, g, phi, step, dim))
    g0 = Gaussian(((1.0,),)) if dim == 1 else Gaussian(((1.0, 0.0), (0.0, 1.0)))
    add(self_cover_weight(g0, QuadraticWeight(), step, dim))
    return out
