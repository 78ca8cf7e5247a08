"""Grids, the log-concave function zoo, and grid samplings.

Every function used by the package is a :class:`FunctionExpr` from a closed
zoo, so it can be evaluated exactly at arbitrary points (``g(x - t)`` for a
covering kernel is never interpolated).  A :class:`SampledFunction` is such an
expression evaluated on the nodes of a :class:`GridSpec`.

Grids are origin-aligned lattices: the lower corner is an integer multiple of
the step along every axis.  Differences of nodes of two grids with the same
step are then nodes of the same lattice, which is what makes tabulated
functions usable as covering kernels.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_MAX_NODES = 65536
TAIL_EPS = 1e-10
UNDERFLOW = 1e-300
LC_TOL = 1e-9
# relative slack used by indicators so that lattice nodes computed in floating
# point still land inside closed sets
BOUNDARY_TOL = 1e-9


class GridError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class OffLatticeError(ValueError):
    pass


def max_nodes() -> int:
    env = os.environ.get("FCOVER_MAX_NODES")
    if env:
        return int(env)
    return DEFAULT_MAX_NODES


# ----------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridSpec:
    """Regular tensor lattice window in dimension 1 or 2."""

    lo: tuple
    hi: tuple
    points_per_axis: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        pts = tuple(int(v) for v in np.atleast_1d(self.points_per_axis))
        if len(pts) == 1 and len(lo) > 1:
            pts = pts * len(lo)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "points_per_axis", pts)
        if not (len(lo) == len(hi) == len(pts)):
            raise GridError("lo, hi and points_per_axis must have equal length")
        if len(lo) not in (1, 2):
            raise GridError(f"dimension must be 1 or 2, got {len(lo)}")
        for k in range(len(lo)):
            if not lo[k] < hi[k]:
                raise GridError(f"axis {k}: lo={lo[k]} must be < hi={hi[k]}")
            if pts[k] < 2:
                raise GridError(f"axis {k}: need at least 2 points")
        total = int(np.prod(pts))
        if total > max_nodes():
            raise GridError(
                f"grid has {total} nodes, above the cap of {max_nodes()} "
                "(set FCOVER_MAX_NODES to raise it)"
            )

    @classmethod
    def from_step(cls, lo, hi, step) -> "GridSpec":
        """Grid on the lattice ``step * Z^n`` covering ``[lo, hi]``.

        The window is snapped outwards to lattice nodes.
        """
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        step = np.broadcast_to(np.asarray(step, dtype=float), lo.shape)
        ilo = np.floor(lo / step + 1e-9).astype(int)
        ihi = np.ceil(hi / step - 1e-9).astype(int)
        ihi = np.maximum(ihi, ilo + 1)
        return cls(tuple(ilo * step), tuple(ihi * step), tuple(ihi - ilo + 1))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def step(self) -> np.ndarray:
        lo, hi = np.array(self.lo), np.array(self.hi)
        return (hi - lo) / (np.array(self.points_per_axis) - 1)

    @property
    def shape(self) -> tuple:
        return self.points_per_axis

    @property
    def size(self) -> int:
        return int(np.prod(self.points_per_axis))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.step))

    def axis(self, k: int) -> np.ndarray:
        # nodes as (i0 + i) * step keeps lattice points exact multiples of step
        h = self.step[k]
        i0 = round(self.lo[k] / h)
        if abs(i0 * h - self.lo[k]) <= 1e-9 * max(h, abs(self.lo[k])):
            return (i0 + np.arange(self.points_per_axis[k])) * h
        return self.lo[k] + np.arange(self.points_per_axis[k]) * h

    def axes(self) -> list:
        return [self.axis(k) for k in range(self.dim)]

    def nodes(self) -> np.ndarray:
        """All nodes, shape ``(size, dim)``, C order (last axis fastest)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def weights(self) -> np.ndarray:
        """Trapezoidal tensor weights, flattened like :meth:`nodes`."""
        ws = []
        for k in range(self.dim):
            w = np.full(self.points_per_axis[k], self.step[k])
            w[0] *= 0.5
            w[-1] *= 0.5
            ws.append(w)
        out = ws[0]
        for w in ws[1:]:
            out = np.outer(out, w).ravel()
        return out

    def is_origin_aligned(self) -> bool:
        for k in range(self.dim):
            r = self.lo[k] / self.step[k]
            if abs(r - round(r)) > 1e-6:
                return False
        return True

    def same_lattice(self, other: "GridSpec", rtol: float = 1e-9) -> bool:
        if self.dim != other.dim:
            return False
        if not np.allclose(self.step, other.step, rtol=rtol, atol=0):
            return False
        off = (np.array(self.lo) - np.array(other.lo)) / self.step
        return bool(np.all(np.abs(off - np.round(off)) < 1e-6))

    def contains_window(self, other: "GridSpec", tol: float = 1e-9) -> bool:
        return all(
            self.lo[k] <= other.lo[k] + tol and self.hi[k] >= other.hi[k] - tol
            for k in range(self.dim)
        )

    def nearest_index(self, point) -> int:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        idx = []
        for k in range(self.dim):
            i = int(round((point[k] - self.lo[k]) / self.step[k]))
            idx.append(min(max(i, 0), self.points_per_axis[k] - 1))
        return int(np.ravel_multi_index(tuple(idx), self.shape))

    def width(self) -> np.ndarray:
        return np.array(self.hi) - np.array(self.lo)


# ----------------------------------------------------------------------------
# expressions


def _as_points(x, dim: Optional[int]) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        if dim is None or dim == 1:
            x = x.reshape(-1, 1)
        else:
            x = x.reshape(1, -1)
    return x


class FunctionExpr:
    """Base class of the expression zoo.

    Subclasses are frozen dataclasses implementing ``_eval(points)`` on an
    array of shape ``(N, dim)``.  ``dim`` is ``None`` for expressions that make
    sense in any dimension (``one``, ``ind_ball``, ``expnorm``).
    """

    dim: Optional[int] = None

    def __call__(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        if self.dim is not None and pts.shape[1] != self.dim:
            raise DimensionError(
                f"expression has dimension {self.dim}, points have {pts.shape[1]}"
            )
        out = np.asarray(self._eval(pts), dtype=float)
        out = np.where(out < UNDERFLOW, 0.0, out)
        return out

    def _eval(self, pts: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def __str__(self) -> str:
        from .parser import to_text

        return to_text(self)

    # small conveniences used throughout the experiments
    def reflect(self) -> "FunctionExpr":
        return Reflect(self)

    def __mul__(self, other: "FunctionExpr") -> "FunctionExpr":
        return Product((self, other))


def _common_dim(children) -> Optional[int]:
    dims = {c.dim for c in children if c.dim is not None}
    if len(dims) > 1:
        raise DimensionError(f"children have mismatched dimensions {sorted(dims)}")
    return dims.pop() if dims else None


@dataclass(frozen=True)
class Gaussian(FunctionExpr):
    """``exp(-<Ax, x>/2)`` for a symmetric positive-definite ``A``."""

    A: tuple

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("gaussian matrix must be square")
        if not np.allclose(A, A.T, atol=1e-12):
            raise ValueError("gaussian matrix must be symmetric")
        if np.any(np.linalg.eigvalsh(A) <= 0):
            raise ValueError("gaussian matrix must be positive definite")
        object.__setattr__(self, "A", tuple(map(tuple, A.tolist())))

    @property
    def dim(self) -> int:
        return len(self.A)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.A)

    def _eval(self, pts):
        A = self.matrix
        q = np.einsum("ni,ij,nj->n", pts, A, pts)
        return np.exp(-0.5 * q)


@dataclass(frozen=True)
class IndicatorBox(FunctionExpr):
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("box corners must have the same length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("box lower corner exceeds upper corner")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def _eval(self, pts):
        lo, hi = np.array(self.lo), np.array(self.hi)
        tol = BOUNDARY_TOL * (1.0 + np.maximum(np.abs(lo), np.abs(hi)))
        inside = np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)
        return inside.astype(float)


def _pnorm(pts: np.ndarray, p: float) -> np.ndarray:
    if math.isinf(p):
        return np.max(np.abs(pts), axis=1)
    if p == 1:
        return np.sum(np.abs(pts), axis=1)
    if p == 2:
        return np.sqrt(np.sum(pts * pts, axis=1))
    return np.sum(np.abs(pts) ** p, axis=1) ** (1.0 / p)


def _check_p(p) -> float:
    p = float(p)
    if p not in (1.0, 2.0, math.inf):
        raise ValueError(f"norm exponent must be 1, 2 or inf, got {p}")
    return p


@dataclass(frozen=True)
class IndicatorBall(FunctionExpr):
    p: float
    r: float
    dim: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "p", _check_p(self.p))
        if not self.r > 0:
            raise ValueError("ball radius must be positive")

    def _eval(self, pts):
        return (_pnorm(pts, self.p) <= self.r * (1 + BOUNDARY_TOL)).astype(float)


@dataclass(frozen=True)
class ExpNorm(FunctionExpr):
    """``exp(-c ||x||_p)``."""

    p: float
    c: float
    dim: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "p", _check_p(self.p))
        if not self.c > 0:
            raise ValueError("expnorm scale must be positive")

    def _eval(self, pts):
        return np.exp(-self.c * _pnorm(pts, self.p))


@dataclass(frozen=True)
class One(FunctionExpr):
    dim: Optional[int] = None

    def _eval(self, pts):
        return np.ones(pts.shape[0])


@dataclass(frozen=True)
class Translate(FunctionExpr):
    """``u(x - a)``."""

    child: FunctionExpr
    a: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.a))
        object.__setattr__(self, "a", a)
        if self.child.dim is not None and self.child.dim != len(a):
            raise DimensionError("translation vector does not match child dimension")

    @property
    def dim(self) -> int:
        return len(self.a)

    def _eval(self, pts):
        return self.child(pts - np.array(self.a))


@dataclass(frozen=True)
class Reflect(FunctionExpr):
    """``u(-x)``."""

    child: FunctionExpr

    @property
    def dim(self):
        return self.child.dim

    def _eval(self, pts):
        return self.child(-pts)


@dataclass(frozen=True)
class Linear(FunctionExpr):
    """``u(Ax)`` for invertible ``A``."""

    child: FunctionExpr
    A: tuple

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("linear map must be square")
        if abs(np.linalg.det(A)) < 1e-14:
            raise ValueError("linear map must be invertible")
        if self.child.dim is not None and self.child.dim != A.shape[0]:
            raise DimensionError("linear map does not match child dimension")
        object.__setattr__(self, "A", tuple(map(tuple, A.tolist())))

    @property
    def dim(self) -> int:
        return len(self.A)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.A)

    def _eval(self, pts):
        return self.child(pts @ self.matrix.T)


@dataclass(frozen=True)
class ScaleValue(FunctionExpr):
    """``a * u(x)``."""

    child: FunctionExpr
    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("value scale must be positive")

    @property
    def dim(self):
        return self.child.dim

    def _eval(self, pts):
        return self.a * self.child(pts)


@dataclass(frozen=True)
class HadwigerScale(FunctionExpr):
    """``u(x / lam) ** lam`` with ``lam`` in (0, 1]."""

    child: FunctionExpr
    lam: float

    def __post_init__(self):
        if not (0 < self.lam <= 1):
            raise ValueError(f"lambda must lie in (0, 1], got {self.lam}")

    @property
    def dim(self):
        return self.child.dim

    def _eval(self, pts):
        return self.child(pts / self.lam) ** self.lam


@dataclass(frozen=True)
class Product(FunctionExpr):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("product needs at least one factor")
        _common_dim(self.children)

    @property
    def dim(self):
        return _common_dim(self.children)

    def _eval(self, pts):
        out = np.ones(pts.shape[0])
        for c in self.children:
            out = out * c(pts)
        return out


@dataclass(frozen=True)
class Sum(FunctionExpr):
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("sum needs at least one term")
        _common_dim(self.children)

    @property
    def dim(self):
        return _common_dim(self.children)

    def _eval(self, pts):
        out = np.zeros(pts.shape[0])
        for c in self.children:
            out = out + c(pts)
        return out


@dataclass(frozen=True)
class Power(FunctionExpr):
    child: FunctionExpr
    exponent: float

    def __post_init__(self):
        if not self.exponent > 0:
            raise ValueError("power exponent must be positive")

    @property
    def dim(self):
        return self.child.dim

    def _eval(self, pts):
        return self.child(pts) ** self.exponent


@dataclass(frozen=True, eq=False)
class Tabulated(FunctionExpr):
    """Values on a lattice window, looked up exactly at lattice nodes.

    Queries off the lattice raise :class:`OffLatticeError`; queries outside
    the window return 0 (the window is chosen where the function has decayed).
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)
    label: str = "tabulated"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def _eval(self, pts):
        g = self.grid
        idx = []
        inside = np.ones(pts.shape[0], dtype=bool)
        for k in range(g.dim):
            r = (pts[:, k] - g.lo[k]) / g.step[k]
            i = np.round(r)
            if np.any(np.abs(r - i) > 1e-6):
                bad = pts[np.argmax(np.abs(r - i))]
                raise OffLatticeError(f"{self.label}: point {bad} is not a lattice node")
            i = i.astype(int)
            inside &= (i >= 0) & (i < g.shape[k])
            idx.append(np.clip(i, 0, g.shape[k] - 1))
        out = self.values[tuple(idx)]
        return np.where(inside, out, 0.0)


@dataclass(frozen=True, eq=False)
class DiscreteConvolution(FunctionExpr):
    """``x -> sum_t left(t) right(x - t) w_t`` over the nodes of ``grid``.

    Exactly evaluable anywhere; ``w_t`` are the trapezoidal weights.
    """

    left: FunctionExpr
    right: FunctionExpr
    grid: GridSpec

    @property
    def dim(self):
        return self.grid.dim

    def _eval(self, pts):
        t = self.grid.nodes()
        lw = self.left(t) * self.grid.weights()
        keep = lw > 0
        t, lw = t[keep], lw[keep]
        out = np.empty(pts.shape[0])
        for s in range(0, pts.shape[0], 2048):
            chunk = pts[s : s + 2048]
            diff = (chunk[:, None, :] - t[None, :, :]).reshape(-1, pts.shape[1])
            vals = self.right(diff).reshape(chunk.shape[0], -1)
            out[s : s + 2048] = vals @ lw
        return out


@dataclass(frozen=True, eq=False)
class DiscreteSupConvolution(FunctionExpr):
    """``x -> max_z left(z) right(x - z)`` over the nodes of ``grid``."""

    left: FunctionExpr
    right: FunctionExpr
    grid: GridSpec

    @property
    def dim(self):
        return self.grid.dim

    def _eval(self, pts):
        z = self.grid.nodes()
        lv = self.left(z)
        keep = lv > 0
        z, lv = z[keep], lv[keep]
        out = np.zeros(pts.shape[0])
        if z.shape[0] == 0:
            return out
        for s in range(0, pts.shape[0], 2048):
            chunk = pts[s : s + 2048]
            diff = (chunk[:, None, :] - z[None, :, :]).reshape(-1, pts.shape[1])
            vals = self.right(diff).reshape(chunk.shape[0], -1)
            out[s : s + 2048] = np.max(vals * lv[None, :], axis=1)
        return out


# ----------------------------------------------------------------------------
# structural queries


def is_geometric(expr: FunctionExpr) -> bool:
    """Structural test for membership of the geometric log-concave class.

    A geometric log-concave function is upper semi-continuous, has convex
    ``-log f`` and satisfies ``max f = f(0) = 1``.  One passage of the source
    material instead writes ``f(0) = 0``, which would make the class trivial;
    the normalization ``f(0) = 1`` is the reading used everywhere here.
    ``one`` is excluded because its integral is infinite.
    """
    if isinstance(expr, Gaussian):
        return True
    if isinstance(expr, IndicatorBox):
        return all(a <= 0 <= b for a, b in zip(expr.lo, expr.hi)) and all(
            a < b for a, b in zip(expr.lo, expr.hi)
        )
    if isinstance(expr, (IndicatorBall, ExpNorm)):
        return True
    if isinstance(expr, Translate):
        return all(v == 0 for v in expr.a) and is_geometric(expr.child)
    if isinstance(expr, (Reflect, Linear, HadwigerScale)):
        return is_geometric(expr.child)
    if isinstance(expr, Power):
        return is_geometric(expr.child)
    if isinstance(expr, ScaleValue):
        return expr.a == 1 and is_geometric(expr.child)
    if isinstance(expr, Product):
        return all(is_geometric(c) for c in expr.children)
    return False


def is_even(expr: FunctionExpr) -> bool:
    """Structural evenness; ``False`` means "not known to be even"."""
    if isinstance(expr, (Gaussian, IndicatorBall, ExpNorm, One)):
        return True
    if isinstance(expr, IndicatorBox):
        return all(abs(a + b) < 1e-12 for a, b in zip(expr.lo, expr.hi))
    if isinstance(expr, Translate):
        return all(v == 0 for v in expr.a) and is_even(expr.child)
    if isinstance(expr, (Reflect, Linear, HadwigerScale, Power, ScaleValue)):
        return is_even(expr.child)
    if isinstance(expr, (Product, Sum)):
        return all(is_even(c) for c in expr.children)
    return False


def support_box(expr: FunctionExpr, dim: int, eps: float = TAIL_EPS):
    """Axis box outside of which ``expr < eps``; ``None`` if unknown/unbounded."""
    if isinstance(expr, Gaussian):
        cov = np.linalg.inv(expr.matrix)
        r = np.sqrt(2 * math.log(1 / eps) * np.diag(cov))
        return -r, r
    if isinstance(expr, IndicatorBox):
        return np.array(expr.lo), np.array(expr.hi)
    if isinstance(expr, IndicatorBall):
        r = np.full(dim, expr.r)
        return -r, r
    if isinstance(expr, ExpNorm):
        r = np.full(dim, math.log(1 / eps) / expr.c)
        return -r, r
    if isinstance(expr, One):
        return None
    if isinstance(expr, Translate):
        b = support_box(expr.child, dim, eps)
        if b is None:
            return None
        a = np.array(expr.a)
        return b[0] + a, b[1] + a
    if isinstance(expr, Reflect):
        b = support_box(expr.child, dim, eps)
        return None if b is None else (-b[1], -b[0])
    if isinstance(expr, Linear):
        b = support_box(expr.child, dim, eps)
        if b is None:
            return None
        # image of the child box under A^{-1}, as a bounding box
        Ainv = np.linalg.inv(expr.matrix)
        corners = np.array(np.meshgrid(*[[b[0][k], b[1][k]] for k in range(dim)], indexing="ij"))
        corners = corners.reshape(dim, -1).T @ Ainv.T
        return corners.min(axis=0), corners.max(axis=0)
    if isinstance(expr, ScaleValue):
        return support_box(expr.child, dim, min(eps / expr.a, 0.5))
    if isinstance(expr, HadwigerScale):
        b = support_box(expr.child, dim, eps ** (1 / expr.lam))
        return None if b is None else (b[0] * expr.lam, b[1] * expr.lam)
    if isinstance(expr, Power):
        return support_box(expr.child, dim, min(eps ** (1 / expr.exponent), 0.5))
    if isinstance(expr, Product):
        boxes = [support_box(c, dim, eps) for c in expr.children]
        boxes = [b for b in boxes if b is not None]
        if not boxes:
            return None
        lo = np.max([b[0] for b in boxes], axis=0)
        hi = np.min([b[1] for b in boxes], axis=0)
        return lo, np.maximum(hi, lo)
    if isinstance(expr, Sum):
        boxes = [support_box(c, dim, eps / len(expr.children)) for c in expr.children]
        if any(b is None for b in boxes):
            return None
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)
    if isinstance(expr, Tabulated):
        keep = expr.values.ravel() >= eps
        if not np.any(keep):
            return np.array(expr.grid.lo), np.array(expr.grid.lo)
        pts = expr.grid.nodes()[keep]
        return pts.min(axis=0), pts.max(axis=0)
    if isinstance(expr, (DiscreteConvolution, DiscreteSupConvolution)):
        a = support_box(expr.left, dim, eps)
        b = support_box(expr.right, dim, eps)
        if a is None or b is None:
            return None
        # the sum is limited to the grid window
        lo = np.maximum(a[0], expr.grid.lo) + b[0]
        hi = np.minimum(a[1], expr.grid.hi) + b[1]
        return lo, hi
    return None


def check_window(expr: FunctionExpr, grid: GridSpec, eps: float = TAIL_EPS) -> bool:
    """True when the grid window contains the ``eps``-support of ``expr``.

    Expressions with unknown decay are accepted.
    """
    box = support_box(expr, grid.dim, eps)
    if box is None:
        return True
    lo, hi = box
    step = grid.step
    return bool(
        np.all(np.array(grid.lo) <= lo + step) and np.all(np.array(grid.hi) >= hi - step)
    )


# ----------------------------------------------------------------------------
# sampled functions and measures


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: GridSpec
    values: np.ndarray = field(repr=False)
    source: Optional[FunctionExpr] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.shape[0] != self.grid.size:
            raise ValueError("values do not match the grid size")
        if np.any(v < 0):
            raise ValueError("sampled values must be nonnegative")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def as_expr(self, label: str = "tabulated") -> Tabulated:
        return Tabulated(self.grid, self.values, label)

    def __mul__(self, a: float) -> "SampledFunction":
        return SampledFunction(self.grid, self.values * a, None)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Atomic measure ``sum_j w_j delta_{t_j}`` on grid nodes."""

    grid: GridSpec
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.shape[0] != self.grid.size:
            raise ValueError("weights do not match the grid size")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("measure weights must be finite and nonnegative")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, grid: GridSpec, point, mass: float = 1.0) -> "DiscreteMeasure":
        w = np.zeros(grid.size)
        w[grid.nearest_index(point)] = mass
        return cls(grid, w)

    @property
    def mass(self) -> float:
        return float(math.fsum(self.weights))

    def integrate(self, u: FunctionExpr) -> float:
        """``int u dmu`` with ``u`` evaluated exactly at the atoms."""
        nz = self.weights > 0
        if not np.any(nz):
            return 0.0
        return float(math.fsum(self.weights[nz] * u(self.grid.nodes()[nz])))

    def convolve_at(self, g: FunctionExpr, points) -> np.ndarray:
        """``(mu * g)(x) = sum_j w_j g(x - t_j)`` at the given points."""
        pts = _as_points(points, self.grid.dim)
        nz = self.weights > 0
        t, w = self.grid.nodes()[nz], self.weights[nz]
        out = np.zeros(pts.shape[0])
        for s in range(0, pts.shape[0], 4096):
            chunk = pts[s : s + 4096]
            diff = (chunk[:, None, :] - t[None, :, :]).reshape(-1, pts.shape[1])
            out[s : s + 4096] = g(diff).reshape(chunk.shape[0], -1) @ w
        return out

    def support_size(self, tol: float = 0.0) -> int:
        return int(np.count_nonzero(self.weights > tol))


# ----------------------------------------------------------------------------
# operations


def evaluate(expr: FunctionExpr, grid: GridSpec) -> SampledFunction:
    if expr.dim is not None and expr.dim != grid.dim:
        raise DimensionError(
            f"expression dimension {expr.dim} does not match grid dimension {grid.dim}"
        )
    return SampledFunction(grid, expr(grid.nodes()), expr)


def integrate(sf: SampledFunction) -> float:
    """Trapezoidal tensor rule over the grid window."""
    return float(math.fsum(sf.values * sf.grid.weights()))


def sup_norm(sf: SampledFunction) -> float:
    return float(np.max(sf.values))


def barycenter(sf: SampledFunction) -> np.ndarray:
    w = sf.values * sf.grid.weights()
    total = math.fsum(w)
    if total <= 0:
        raise ValueError("barycenter of a function with zero integral")
    nodes = sf.grid.nodes()
    return np.array([math.fsum(w * nodes[:, k]) / total for k in range(sf.grid.dim)])


@dataclass(frozen=True)
class LogConcavityReport:
    is_lc: bool
    worst_violation: float
    peak_ok: bool
    peak_value: float
    three_term_ok: bool


def _grid_lines(arr: np.ndarray):
    if arr.ndim == 1:
        yield arr
        return
    n0, n1 = arr.shape
    for i in range(n0):
        yield arr[i, :]
    for j in range(n1):
        yield arr[:, j]
    # both diagonal families
    for off in range(-(n0 - 1), n1):
        yield np.diagonal(arr, offset=off)
        yield np.diagonal(arr[::-1, :], offset=off)


def check_geometric_log_concave(sf: SampledFunction, tol: float = LC_TOL) -> LogConcavityReport:
    """Discrete midpoint log-concavity along grid lines plus peak normalization.

    Along every axis line (and both diagonal families in 2D) the samples must
    satisfy ``v_i**2 >= v_{i-1} v_{i+1}`` up to the multiplicative tolerance
    ``tol``; the maximum must sit at the node nearest the origin with value 1
    up to grid resolution.  The reported violation is
    ``max (v_{i-1} v_{i+1} - v_i**2) / (v_{i-1} v_{i+1})``.
    """
    worst = 0.0
    for line in _grid_lines(sf.array):
        if line.size < 3:
            continue
        outer = line[:-2] * line[2:]
        mid = line[1:-1] ** 2
        pos = outer > 0
        if np.any(pos):
            viol = (outer[pos] - mid[pos]) / outer[pos]
            worst = max(worst, float(np.max(viol)))
    three_term_ok = worst <= tol
    peak = float(np.max(sf.values))
    at_origin = float(sf.values[sf.grid.nearest_index(np.zeros(sf.grid.dim))])
    resolution = float(np.max(sf.grid.step))
    peak_ok = at_origin >= peak * (1 - tol) and abs(peak - 1.0) <= resolution
    return LogConcavityReport(
        is_lc=three_term_ok and peak_ok,
        worst_violation=max(worst, 0.0),
        peak_ok=peak_ok,
        peak_value=peak,
        three_term_ok=three_term_ok,
    )
