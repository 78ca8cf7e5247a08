"""Convolution, sup-convolution, discrete Legendre transform and friends.

``legendre`` computes ``max_i <y, x_i> - phi_i`` over grid nodes.  In 1D it
takes the lower convex hull of the points ``(x_i, phi_i)`` and then sweeps the
sorted dual nodes along the hull (linear time after the hull).  In 2D the
discrete conjugate factorizes over the axes:
``max_{x1} [y1 x1 + max_{x2} (y2 x2 - phi(x1, x2))]``, so the 1D routine is
applied row by row and then column by column.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .function_space import (
    DimensionError,
    FunctionExpr,
    GridSpec,
    SampledFunction,
    barycenter,
    integrate,
)


def _check_dims(f: SampledFunction, g: FunctionExpr):
    if g.dim is not None and g.dim != f.grid.dim:
        raise DimensionError(f"dimension mismatch: {f.grid.dim} vs {g.dim}")


def convolve(f: SampledFunction, g: FunctionExpr) -> SampledFunction:
    """``(f*g)(x_i) = sum_j f(t_j) g(x_i - t_j) w_j`` on ``f.grid``.

    ``w_j`` are the trapezoidal weights of the grid; ``g`` is evaluated
    exactly off the grid.  Mass of ``g`` beyond the window is ignored.
    """
    _check_dims(f, g)
    nodes = f.grid.nodes()
    fw = f.values * f.grid.weights()
    keep = fw > 0
    t, fw = nodes[keep], fw[keep]
    out = np.zeros(nodes.shape[0])
    if t.shape[0]:
        block = max(1, 4_000_000 // max(t.shape[0], 1))
        for s in range(0, nodes.shape[0], block):
            x = nodes[s : s + block]
            diff = (x[:, None, :] - t[None, :, :]).reshape(-1, nodes.shape[1])
            out[s : s + block] = g(diff).reshape(x.shape[0], -1) @ fw
    return SampledFunction(f.grid, np.maximum(out, 0.0), None)


def sup_convolve_brute(f: SampledFunction, g: FunctionExpr) -> SampledFunction:
    """Reference ``max_j f(z_j) g(x_i - z_j)``, quadratic in the node count."""
    _check_dims(f, g)
    nodes = f.grid.nodes()
    keep = f.values > 0
    z, fz = nodes[keep], f.values[keep]
    out = np.zeros(nodes.shape[0])
    if z.shape[0]:
        block = max(1, 4_000_000 // z.shape[0])
        for s in range(0, nodes.shape[0], block):
            x = nodes[s : s + block]
            diff = (x[:, None, :] - z[None, :, :]).reshape(-1, nodes.shape[1])
            vals = g(diff).reshape(x.shape[0], -1) * fz[None, :]
            out[s : s + block] = vals.max(axis=1)
    return SampledFunction(f.grid, out, None)


def sup_convolve(f: SampledFunction, g: FunctionExpr) -> SampledFunction:
    """Asplund product ``(f * g)(x) = sup_z f(z) g(x - z)`` over grid nodes ``z``.

    Brute-force semantics; a log-concave fast path is not used because the
    brute force is already within budget at the supported grid sizes.
    """
    return sup_convolve_brute(f, g)


# ----------------------------------------------------------------------------
# Legendre transform


def _lower_hull(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of ``(x, v)`` for increasing ``x``."""
    hull = []
    for i in range(x.shape[0]):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord a -> i
            if (v[b] - v[a]) * (x[i] - x[a]) >= (v[i] - v[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


def legendre_1d(x: np.ndarray, phi: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``max_i y*x_i - phi_i`` for every ``y``; ``+inf`` entries of ``phi`` are skipped.

    ``x`` must be increasing.  Returns ``-inf`` everywhere when all ``phi``
    are infinite.
    """
    x = np.asarray(x, dtype=float)
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(y, dtype=float)
    finite = np.isfinite(phi)
    if not np.any(finite):
        return np.full(y.shape, -np.inf)
    xs, ps = x[finite], phi[finite]
    h = _lower_hull(xs, ps)
    hx, hp = xs[h], ps[h]
    order = np.argsort(y, kind="stable")
    out = np.empty(y.shape[0])
    j = 0
    last = hx.shape[0] - 1
    for idx in order:
        yy = y[idx]
        # slopes of the hull increase, so the maximizer moves right with y
        while j < last and yy * hx[j + 1] - hp[j + 1] >= yy * hx[j] - hp[j]:
            j += 1
        out[idx] = yy * hx[j] - hp[j]
    return out


def legendre_brute(nodes: np.ndarray, phi: np.ndarray, dual_nodes: np.ndarray) -> np.ndarray:
    """``O(N M)`` reference: ``max_i <y, x_i> - phi_i``."""
    finite = np.isfinite(phi)
    if not np.any(finite):
        raise ValueError("legendre transform of an all-infinite function")
    xs, ps = nodes[finite], phi[finite]
    out = np.empty(dual_nodes.shape[0])
    for s in range(0, dual_nodes.shape[0], 256):
        y = dual_nodes[s : s + 256]
        out[s : s + 256] = np.max(y @ xs.T - ps[None, :], axis=1)
    return out


def legendre(phi_values: np.ndarray, grid: GridSpec, dual_grid: GridSpec) -> np.ndarray:
    """Discrete Legendre transform of grid samples onto ``dual_grid`` nodes.

    ``phi_values`` may contain ``+inf`` (zeros of the underlying function).
    The result is flattened like ``dual_grid.nodes()``.
    """
    phi = np.asarray(phi_values, dtype=float).reshape(grid.shape)
    if not np.any(np.isfinite(phi)):
        raise ValueError("legendre transform of an all-infinite function")
    if grid.dim != dual_grid.dim:
        raise DimensionError("primal and dual grids differ in dimension")
    if grid.dim == 1:
        return legendre_1d(grid.axis(0), phi, dual_grid.axis(0))
    x1, x2 = grid.axes()
    y1, y2 = dual_grid.axes()
    # inner: psi(x1, y2) = max_x2 y2 x2 - phi(x1, x2)
    psi = np.stack([legendre_1d(x2, phi[i], y2) for i in range(x1.shape[0])])
    out = np.empty((y1.shape[0], y2.shape[0]))
    for j in range(y2.shape[0]):
        out[:, j] = legendre_1d(x1, -psi[:, j], y1)
    return out.ravel()


def potential(f: SampledFunction) -> np.ndarray:
    """``-log f`` with ``+inf`` at zeros."""
    with np.errstate(divide="ignore"):
        return np.where(f.values > 0, -np.log(np.where(f.values > 0, f.values, 1.0)), np.inf)


def default_dual_grid(f: SampledFunction, slope_cap: float = 30.0) -> GridSpec:
    """Dual window covering the slopes of ``-log f``, on the primal lattice.

    Along each axis the half-width is the largest absolute slope of the
    potential between neighbouring nodes.  A jump to ``+inf`` (an indicator
    edge) counts as slope ``slope_cap``; ``exp(-30)`` is far below the tail
    threshold for the linearly decaying duals such edges produce.  Keeping
    the primal step puts dual nodes on the same lattice.
    """
    phi = potential(f).reshape(f.grid.shape)
    half = []
    for k, ax in enumerate(f.grid.axes()):
        lines = np.moveaxis(phi, k, -1).reshape(-1, ax.shape[0])
        with np.errstate(invalid="ignore"):
            d = np.diff(lines, axis=1)
        fin = np.isfinite(lines)
        both = fin[:, 1:] & fin[:, :-1]
        edge = fin[:, 1:] ^ fin[:, :-1]
        slope = np.max(np.abs(d[both])) / (ax[1] - ax[0]) if np.any(both) else 0.0
        if np.any(edge):
            slope = slope_cap
        half.append(min(max(slope, 1.0), slope_cap))
    half = np.array(half)
    return GridSpec.from_step(-half, half, f.grid.step)


def log_dual(f: SampledFunction, dual_grid: GridSpec) -> SampledFunction:
    """``f^* = exp(-L(-log f))`` sampled on ``dual_grid``."""
    if not np.any(f.values > 0):
        raise ValueError("log-dual of the zero function")
    L = legendre(potential(f), f.grid, dual_grid)
    return SampledFunction(dual_grid, np.exp(-L), None)


# ----------------------------------------------------------------------------
# level sets and Santalo


@dataclass(frozen=True, eq=False)
class LevelSetBody:
    grid: GridSpec
    inside: np.ndarray = field(repr=False)
    volume: float
    bounding_box: Optional[tuple]
    threshold: float

    @property
    def empty(self) -> bool:
        return not bool(np.any(self.inside))


def _cell_volume_count(mask: np.ndarray, grid: GridSpec) -> float:
    """Cells with all corners inside count fully, partially covered cells half."""
    m = mask.astype(np.int8)
    if grid.dim == 1:
        corners = m[:-1] + m[1:]
        full, part = np.sum(corners == 2), np.sum(corners == 1)
    else:
        corners = m[:-1, :-1] + m[1:, :-1] + m[:-1, 1:] + m[1:, 1:]
        full, part = np.sum(corners == 4), np.sum((corners > 0) & (corners < 4))
    return float((full + 0.5 * part) * grid.cell_volume)


def level_set_body(f: SampledFunction, n: Optional[int] = None, threshold: Optional[float] = None) -> LevelSetBody:
    """``K_f = {x : f(x) > exp(-n)}`` with ``n`` the grid dimension by default."""
    if threshold is None:
        threshold = math.exp(-(f.grid.dim if n is None else n))
    inside = f.array > threshold
    if not np.any(inside):
        return LevelSetBody(f.grid, inside, 0.0, None, threshold)
    pts = f.grid.nodes()[inside.ravel()]
    box = (tuple(pts.min(axis=0)), tuple(pts.max(axis=0)))
    return LevelSetBody(f.grid, inside, _cell_volume_count(inside, f.grid), box, threshold)


def is_lattice_convex(mask: np.ndarray) -> bool:
    """Every axis line meets the mask in a contiguous run."""
    lines = [mask] if mask.ndim == 1 else list(mask) + list(mask.T)
    for line in lines:
        idx = np.nonzero(line)[0]
        if idx.size and idx[-1] - idx[0] + 1 != idx.size:
            return False
    return True


class NotCenteredError(ValueError):
    pass


def santalo_product(f: SampledFunction, dual_grid: GridSpec, center_tol: float = 1e-3) -> float:
    """``int f * int f^*`` for a centered ``f``."""
    bary = barycenter(f)
    width = float(np.max(f.grid.width()))
    if np.max(np.abs(bary)) > center_tol * width:
        raise NotCenteredError(f"function is not centered: barycenter {bary}")
    return integrate(f) * integrate(log_dual(f, dual_grid))


@dataclass(frozen=True)
class PolarInclusionReport:
    inner_ok: bool
    outer_ok: bool
    inner_violations: int
    outer_violations: int
    slack: float


def polar_inclusions(f: SampledFunction, dual_grid: GridSpec, t: Optional[float] = None,
                     s: Optional[float] = None) -> PolarInclusionReport:
    """Check ``t {phi<=t}° ⊆ {L phi <= t} ⊆ (t+s) {phi<=s}°`` node-wise.

    Polars are taken of the node sets ``{phi <= level}``, via their support
    function ``h(y) = max <x, y>``.  The outer inclusion is exact for the
    discrete transform.  The inner one uses a continuous body that the node
    set only approximates from inside, so its right-hand side is allowed the
    Lipschitz slack ``|y| * diam(cell)``.  Defaults ``t = s = dim`` give
    ``n K_f° ⊆ K_{f*} ⊆ 2n K_f°``.
    """
    n = f.grid.dim
    t = float(n if t is None else t)
    s = float(n if s is None else s)
    phi = potential(f)
    nodes = f.grid.nodes()
    y = dual_grid.nodes()
    L = legendre(phi, f.grid, dual_grid)
    h_t = np.max(y @ nodes[phi <= t].T, axis=1)
    h_s = np.max(y @ nodes[phi <= s].T, axis=1)
    cell = float(np.linalg.norm(f.grid.step))
    slack = np.linalg.norm(y, axis=1) * cell
    inner_lhs = h_t <= t
    inner_bad = inner_lhs & ~(L <= t + slack)
    outer_bad = (L <= t) & ~(h_s <= t + s + 1e-12)
    return PolarInclusionReport(
        inner_ok=not np.any(inner_bad),
        outer_ok=not np.any(outer_bad),
        inner_violations=int(inner_bad.sum()),
        outer_violations=int(outer_bad.sum()),
        slack=float(slack.max()),
    )
