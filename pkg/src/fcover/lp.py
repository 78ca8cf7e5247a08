"""Dense linear programs ``min c.w  s.t.  A w >= b, w >= 0`` with certificates.

Two methods are available.

``simplex``
    Revised dual simplex on the standard form ``[A, -I] (w, s) = b`` with an
    explicitly maintained basis inverse, dual steepest-edge leaving-row
    choice, a Harris two-pass ratio test and a lowest-index (Bland) fallback
    once the dual objective stalls.  Covering programs have ``c >= 0``, so the
    all-surplus basis is dual feasible and no phase one is needed.  Problems
    with ``b <= 0`` are solved through their dual; anything else gets an
    artificial bounding row ``sum w <= U``.
``ipm``
    Mehrotra predictor-corrector interior point method on the normal
    equations.  Returns an interior point of the optimal face rather than a
    vertex.

``auto`` (the default) runs the simplex under an iteration budget and falls
back to the interior point method when the simplex hits a numerically
singular basis, runs out of budget, or returns an answer whose certificate
does not check.  Gaussian kernels make this necessary: optimal covers that
approximate a density need bases of nearly parallel columns.

Every optimal answer carries a primal vector ``w`` and a dual vector ``rho``;
:func:`certify` recomputes the residuals in extended precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

MAX_ENTRIES = 2**24

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"
NUMERICAL = "numerical"  # internal: simplex gave up on conditioning


class SingularBasisError(RuntimeError):
    def __init__(self, message: str, condition: float):
        self.condition = condition
        super().__init__(f"{message} (condition estimate {condition:.3e})")


@dataclass(frozen=True)
class ToleranceConfig:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-7
    pivot_tol: float = 1e-9
    harris_tol: float = 1e-11
    rel_pivot_tol: float = 1e-9
    max_iter: int = 200_000
    refactor_every: int = 64
    stall_limit: int = 400
    max_condition: float = 1e15
    method: str = "auto"
    simplex_budget: Optional[int] = None  # auto: 3 (k + m) + 500 iterations
    ipm_tol: float = 1e-3  # stop once every residual is this fraction of its tolerance
    ipm_max_iter: int = 200
    accept_tol: float = 1e-6  # residual above which a simplex optimum is re-solved by the IPM


@dataclass(frozen=True, eq=False)
class LpProblem:
    """``min c.w  s.t.  A w >= b, w >= 0``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float).ravel()
        c = np.array(self.c, dtype=float).ravel()
        k, m = A.shape
        if k < 1 or m < 1:
            raise ValueError("problem needs at least one row and one column")
        if b.shape[0] != k or c.shape[0] != m:
            raise ValueError(f"shapes disagree: A {A.shape}, b {b.shape}, c {c.shape}")
        if k * m > MAX_ENTRIES:
            raise ValueError(f"problem has {k * m} matrix entries, above {MAX_ENTRIES}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("problem data must be finite")
        for arr in (A, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def shape(self):
        return self.A.shape


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    primal_value: float
    w: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)
    gap: float
    iterations: int
    dual_value: float = math.nan
    condition_estimate: float = math.nan
    basis: Optional[np.ndarray] = field(default=None, repr=False)
    farkas: Optional[np.ndarray] = field(default=None, repr=False)
    dual_trace: tuple = field(default=(), repr=False)
    method: str = "simplex"

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass(frozen=True)
class CertificateReport:
    primal_infeas: float
    dual_infeas: float
    gap: float
    complementarity: float

    def ok(self, feas_tol: float = 1e-8, gap_tol: float = 1e-7, value: float = 0.0) -> bool:
        return (
            self.primal_infeas <= feas_tol
            and self.dual_infeas <= feas_tol
            and self.gap <= gap_tol * (1 + abs(value))
        )


# ----------------------------------------------------------------------------
# dual simplex core


@dataclass
class _CoreResult:
    status: str
    x: np.ndarray
    y: np.ndarray
    basis: np.ndarray
    iterations: int
    farkas: Optional[np.ndarray]
    condition: float
    trace: list


def _dual_simplex(A, b, c, tol: ToleranceConfig, basis=None) -> _CoreResult:
    """Dual simplex for ``min c.x, A x - s = b, x, s >= 0`` from a dual-feasible basis.

    Variables ``0..m-1`` are structural, ``m..m+k-1`` are the surpluses.
    """
    k, m = A.shape
    n = m + k
    cost = np.concatenate([c, np.zeros(k)])
    if basis is None:
        basis = np.arange(m, m + k)
    basis = np.array(basis, dtype=int)
    is_basic = np.zeros(n, dtype=bool)
    is_basic[basis] = True

    def column(j):
        if j < m:
            return A[:, j]
        e = np.zeros(k)
        e[j - m] = -1.0
        return e

    def basis_matrix():
        B = np.zeros((k, k))
        struct = basis < m
        B[:, struct] = A[:, basis[struct]]
        rows = basis[~struct] - m
        B[rows, np.nonzero(~struct)[0]] = -1.0
        return B

    def refactor():
        B = basis_matrix()
        try:
            Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise SingularBasisError("basis matrix is singular", math.inf) from None
        cond = float(np.linalg.norm(B, 1) * np.linalg.norm(Binv, 1))
        if not np.isfinite(cond) or cond > tol.max_condition:
            raise SingularBasisError("basis matrix is numerically singular", cond)
        # one step of iterative refinement on the basic solution and duals
        xB = Binv @ b
        xB += Binv @ (b - B @ xB)
        cB = cost[basis]
        y = cB @ Binv
        y += (cB - y @ B) @ Binv
        d = np.concatenate([c - A.T @ y, y])
        d[basis] = 0.0
        return Binv, xB, y, d, cond

    Binv, xB, y, d, cond = refactor()
    good_basis = basis.copy()
    since_refactor = 0
    trace = []
    best_obj = -math.inf
    stall = 0
    bland = False
    it = 0
    barred = np.zeros(n, dtype=bool)  # entering candidates excluded after a rollback
    entered = []
    rollbacks = 0
    skip_until = np.zeros(k, dtype=int)  # rows passed over after a rejected pivot
    skips = 0

    def safe_refactor():
        """Refactor; on numerical singularity roll back to the last good basis
        and bar the columns that entered since."""
        nonlocal basis, good_basis, entered, rollbacks
        try:
            out = refactor()
        except SingularBasisError:
            rollbacks += 1
            if rollbacks > 50 or not entered:
                raise
            barred[entered] = True
            basis[:] = good_basis
            is_basic[:] = False
            is_basic[basis] = True
            out = refactor()
        good_basis = basis.copy()
        entered = []
        return out

    while True:
        if it >= tol.max_iter:
            return _CoreResult(ITERATION_LIMIT, _full_x(xB, basis, n), y, basis, it, None, cond, trace)
        obj = float(b @ y)
        trace.append(obj)
        if obj > best_obj + 1e-12 * (1 + abs(obj)):
            best_obj = obj
            stall = 0
        else:
            stall += 1
            if stall > tol.stall_limit:
                bland = True

        infeas = xB < -tol.feas_tol * 0.1
        if not np.any(infeas):
            if since_refactor:
                Binv, xB, y, d, cond = safe_refactor()
                since_refactor = 0
                if np.any(xB < -tol.feas_tol * 0.1) or np.any(d < -tol.feas_tol):
                    continue
            return _CoreResult(OPTIMAL, _full_x(xB, basis, n), y, basis, it, None, cond, trace)

        open_rows = infeas & (skip_until <= it)
        forced = not np.any(open_rows)
        if forced:
            open_rows = infeas
        if bland:
            cand = np.nonzero(open_rows)[0]
            r = int(cand[np.argmin(basis[cand])])
        else:
            beta = np.einsum("ij,ij->i", Binv, Binv)
            score = np.where(open_rows, xB * xB / beta, -1.0)
            r = int(np.argmax(score))

        rho_r = Binv[r]
        alpha = np.concatenate([rho_r @ A, -rho_r])
        alpha[is_basic] = 0.0
        elig_all = alpha < -tol.pivot_tol
        if not np.any(elig_all):
            if since_refactor:
                Binv, xB, y, d, cond = safe_refactor()
                since_refactor = 0
                continue
            farkas = -rho_r.copy()
            return _CoreResult(INFEASIBLE, _full_x(xB, basis, n), y, basis, it, farkas, cond, trace)
        elig = elig_all & ~barred
        if not np.any(elig):
            # only barred columns can repair this row; lift the bar
            barred[:] = False
            elig = elig_all

        q = -1
        u = None
        fallback = None
        for _attempt in range(8):
            idx = np.nonzero(elig)[0]
            if idx.size == 0:
                break
            neg_a = -alpha[idx]
            dj = np.maximum(d[idx], 0.0)
            ratios = dj / neg_a
            if bland:
                tmin = ratios.min()
                ties = idx[ratios <= tmin * (1 + 1e-12) + 1e-300]
                cand_q = int(ties.min())
            else:
                theta_max = np.min((dj + tol.harris_tol) / neg_a)
                ok = ratios <= theta_max
                sub = idx[ok]
                best = np.max(neg_a[ok])
                # largest pivot among the Harris candidates, lowest index on ties
                cand_q = int(sub[np.nonzero(neg_a[ok] >= best)[0][0]])
            uq = Binv @ column(cand_q)
            if abs(uq[r]) >= max(tol.pivot_tol, tol.rel_pivot_tol * np.max(np.abs(uq))):
                q, u = cand_q, uq
                break
            if fallback is None and abs(uq[r]) >= tol.pivot_tol:
                fallback = (cand_q, uq)
            elig[cand_q] = False
        if q < 0 and forced and fallback is not None:
            q, u = fallback
        if q < 0:
            skip_until[r] = it + 25
            skips += 1
            if skips > max(k, 100):
                return _CoreResult(NUMERICAL, _full_x(xB, basis, n), y, basis, it, None, cond, trace)
            it += 1
            continue
        theta_d = max(d[q], 0.0) / (-alpha[q])

        d += theta_d * alpha
        leaving = basis[r]
        d[leaving] = theta_d
        d[q] = 0.0
        y = y - theta_d * rho_r

        theta_p = xB[r] / u[r]
        xB = xB - theta_p * u
        xB[r] = theta_p

        row = Binv[r] / u[r]
        Binv -= np.outer(u, row)
        Binv[r] = row

        is_basic[leaving] = False
        is_basic[q] = True
        basis[r] = q
        entered.append(q)
        it += 1
        since_refactor += 1
        if since_refactor >= tol.refactor_every:
            Binv, xB, y, d, cond = safe_refactor()
            since_refactor = 0


def _full_x(xB, basis, n):
    x = np.zeros(n)
    x[basis] = xB
    return x


# ----------------------------------------------------------------------------
# public entry points


def _finish(p: LpProblem, status, w, rho, iterations, cond, basis=None, farkas=None, trace=(),
            method="simplex"):
    if status == OPTIMAL:
        w = np.where(np.abs(w) < 1e-15, 0.0, w)
        rho = np.where(np.abs(rho) < 1e-15, 0.0, rho)
        pv = float(np.dot(p.c, w))
        dv = float(np.dot(p.b, rho))
        gap = abs(pv - dv)
    else:
        pv = {INFEASIBLE: math.inf, UNBOUNDED: -math.inf}.get(status, math.nan)
        dv = math.nan
        gap = math.nan
    return LpSolution(
        status=status,
        primal_value=pv,
        w=w,
        rho=rho,
        gap=gap,
        iterations=iterations,
        dual_value=dv,
        condition_estimate=cond,
        basis=basis,
        farkas=farkas,
        dual_trace=tuple(trace),
        method=method,
    )


def _pow2(v: np.ndarray, cap: int = 30) -> np.ndarray:
    out = np.ones_like(v)
    pos = v > 0
    out[pos] = np.exp2(np.clip(np.round(-np.log2(v[pos])), -cap, cap))
    return out


def _scale_factors(A: np.ndarray):
    """Power-of-two row and column factors bringing every row and column
    maximum of ``|A|`` close to 1.  Exact in floating point."""
    absA = np.abs(A)
    r = _pow2(absA.max(axis=1))
    s = _pow2((absA * r[:, None]).max(axis=0))
    return r, s


def solve(p: LpProblem, tol: ToleranceConfig = ToleranceConfig()) -> LpSolution:
    """Solve ``p`` to optimality, infeasibility or unboundedness.

    Rows and columns are equilibrated by powers of two first (all factors are
    at least 1, so residuals of the original data are no larger than those
    of the scaled data); the answer is mapped back.  Deterministic for
    identical inputs.  ``iteration_limit`` is reported as a status, never as
    an answer.
    """
    if tol.method not in ("auto", "simplex", "ipm"):
        raise ValueError(f"unknown method {tol.method!r}")
    k, m = p.shape
    r, s = _scale_factors(p.A)
    scaled = not (np.all(r == 1) and np.all(s == 1))
    q = LpProblem(p.A * r[:, None] * s[None, :], p.b * r, p.c * s) if scaled else p

    def back(sol: LpSolution) -> LpSolution:
        if not scaled:
            return sol
        return _finish(p, sol.status, sol.w * s, sol.rho * r, sol.iterations,
                       sol.condition_estimate, sol.basis,
                       None if sol.farkas is None else sol.farkas * r, sol.dual_trace, sol.method)

    if tol.method == "ipm":
        return back(_ipm(q, tol, r, s))
    budget = tol.max_iter
    if tol.method == "auto":
        budget = min(budget, tol.simplex_budget or 3 * (k + m) + 500)
    try:
        sol = _solve_scaled(q, replace(tol, max_iter=budget))
    except SingularBasisError:
        if tol.method == "simplex":
            raise
        sol = None
    if tol.method == "simplex":
        if sol.status == NUMERICAL:
            raise SingularBasisError("simplex could not find acceptable pivots",
                                     sol.condition_estimate)
        return back(sol)
    if sol is not None:
        sol = back(sol)
        if sol.status == OPTIMAL and certify(p, sol).ok(tol.accept_tol, tol.gap_tol, sol.primal_value):
            return sol
        if sol.status in (INFEASIBLE, UNBOUNDED):
            return sol
    alt = back(_ipm(q, tol, r, s))
    if alt.status == OPTIMAL or sol is None or sol.status == NUMERICAL:
        return alt
    return sol


# ----------------------------------------------------------------------------
# interior point


def _feasible_factor(v: np.ndarray, b: np.ndarray, scale: np.ndarray, tol: float) -> float:
    """Factor ``a`` closest to 1 with ``a v >= b`` (up to rounding), or 1.

    With one-signed data, as in covering and packing programs, a nearly
    feasible interior point becomes feasible after such a rescaling.
    """
    viol = (b - v) / scale > 0.5 * tol
    if not np.any(viol):
        return 1.0
    lo, hi = 0.0, math.inf
    pos, neg = v > 0, v < 0
    if np.any(viol & ~pos):
        return 1.0
    lo = float(np.max(b[viol] / v[viol]))
    if np.any(neg):
        hi = min(hi, float(np.min(b[neg] / v[neg])))
    if lo > hi:
        return 1.0
    a = min(max(1.0, lo), hi)
    # nudge against rounding in the product
    return a * (1 + 4e-16) if a > 1 else a * (1 - 4e-16)


def _ipm(p: LpProblem, tol: ToleranceConfig, row_scale: Optional[np.ndarray] = None,
         col_scale: Optional[np.ndarray] = None) -> LpSolution:
    """Mehrotra predictor-corrector for ``A w - s = b``, ``A^T y + z = c``.

    The Newton systems are reduced to ``(A D A^T + E) dy = rhs`` with
    ``D = w/z`` and ``E = s/y`` and solved by Cholesky.  Only convergence to
    an optimum is reported; lack of convergence gives ``iteration_limit``.
    Residuals are scored in the units of the unscaled problem when the
    equilibration factors are passed.
    """
    A, b, c = p.A, p.b, p.c
    k, m = A.shape
    rs = np.ones(k) if row_scale is None else row_scale
    cs = np.ones(m) if col_scale is None else col_scale
    nb = max(1.0, float(np.max(np.abs(b))))
    nc = max(1.0, float(np.max(np.abs(c))))
    w = np.full(m, nb)
    s = np.full(k, nb)
    y = np.full(k, nc)
    z = np.full(m, nc)
    eps = tol.ipm_tol
    trace = []
    it = 0
    cond = math.nan

    def step_len(v, dv):
        neg = dv < 0
        return min(1.0, float(np.min(-v[neg] / dv[neg]))) if np.any(neg) else 1.0

    best = (math.inf, None, None, 0)
    since_best = 0
    for it in range(1, tol.ipm_max_iter + 1):
        rp = b - A @ w + s
        rd = c - A.T @ y - z
        mu = (w @ z + s @ y) / (m + k)
        # score the clipped iterate against the certificate tolerances
        wp, yp = np.maximum(w, 0.0), np.maximum(y, 0.0)
        wp = wp * _feasible_factor(A @ wp, b, rs, tol.feas_tol)
        yp = yp * _feasible_factor(-(A.T @ yp), -c, cs, tol.feas_tol)
        pv, dv = float(c @ wp), float(b @ yp)
        trace.append(dv)
        merit = max(
            float(np.max((b - A @ wp) / rs, initial=0.0)) / tol.feas_tol,
            float(np.max((A.T @ yp - c) / cs, initial=0.0)) / tol.feas_tol,
            abs(pv - dv) / (tol.gap_tol * (1 + abs(pv))),
        )
        if merit < best[0]:
            best = (merit, wp, yp, it)
            since_best = 0
        else:
            since_best += 1
        if best[0] <= eps or (best[0] <= 1.0 and since_best >= 5) or mu <= 0:
            break
        D = w / z
        E = s / y
        M = (A * D) @ A.T
        M[np.diag_indices(k)] += E
        reg = 0.0
        while True:
            try:
                fac = cho_factor(M, lower=True, check_finite=False)
                break
            except np.linalg.LinAlgError:
                reg = max(reg * 100, 1e-14 * float(np.trace(M)) / k)
                M[np.diag_indices(k)] += reg
        d = np.diag(fac[0]) ** 2
        cond = float(d.max() / d.min()) if d.min() > 0 else math.inf

        def newton(rwz, rsy):
            rhs = rp + A @ (D * (rd - rwz / w)) + rsy / y
            dy = cho_solve(fac, rhs, check_finite=False)
            dw = D * (A.T @ dy - rd + rwz / w)
            dz = (rwz - z * dw) / w
            ds = (rsy - s * dy) / y
            return dw, ds, dy, dz

        dw, ds, dy, dz = newton(-w * z, -s * y)
        ap = min(step_len(w, dw), step_len(s, ds))
        ad = min(step_len(y, dy), step_len(z, dz))
        mu_aff = ((w + ap * dw) @ (z + ad * dz) + (s + ap * ds) @ (y + ad * dy)) / (m + k)
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        dw2, ds2, dy2, dz2 = newton(sigma * mu - w * z - dw * dz, sigma * mu - s * y - ds * dy)
        ap = 0.995 * min(step_len(w, dw2), step_len(s, ds2))
        ad = 0.995 * min(step_len(y, dy2), step_len(z, dz2))
        w = w + ap * dw2
        s = s + ap * ds2
        y = y + ad * dy2
        z = z + ad * dz2
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(y))):
            break
    if best[0] > 1.0:
        return _finish(p, ITERATION_LIMIT, np.zeros(m), np.zeros(k), it, cond,
                       trace=trace, method="ipm")
    return _finish(p, OPTIMAL, best[1], best[2], best[3], cond, trace=trace, method="ipm")


def _solve_scaled(p: LpProblem, tol: ToleranceConfig) -> LpSolution:
    A, b, c = p.A, p.b, p.c
    k, m = A.shape
    ctol = tol.harris_tol
    if np.all(c >= -ctol):
        res = _dual_simplex(A, b, np.maximum(c, 0.0), tol)
        w = res.x[:m]
        return _finish(p, res.status, w, res.y, res.iterations, res.condition,
                       res.basis, res.farkas, res.trace)

    if np.all(b <= ctol):
        # dual: min (-b).rho  s.t.  -A^T rho >= -c, rho >= 0
        res = _dual_simplex(-A.T, -c, np.maximum(-b, 0.0), tol)
        if res.status == INFEASIBLE:
            return _finish(p, UNBOUNDED, np.zeros(m), np.zeros(k), res.iterations, res.condition)
        if res.status != OPTIMAL:
            return _finish(p, res.status, np.zeros(m), np.zeros(k), res.iterations, res.condition)
        rho = res.x[:k]
        w = res.y
        return _finish(p, OPTIMAL, w, rho, res.iterations, res.condition, res.basis,
                       None, [-v for v in res.trace])

    # artificial bounding row  -sum(w) >= -U
    U = 1e7 * (1.0 + float(np.max(np.abs(b))))
    A2 = np.vstack([A, -np.ones((1, m))])
    b2 = np.concatenate([b, [-U]])
    q = int(np.argmin(c))
    basis = np.concatenate([m + np.arange(k), [q]])
    res = _dual_simplex(A2, b2, c, tol, basis=basis)
    if res.status == OPTIMAL and res.y[k] > tol.feas_tol:
        return _finish(p, UNBOUNDED, res.x[:m], res.y[:k], res.iterations, res.condition)
    return _finish(p, res.status, res.x[:m], res.y[:k], res.iterations, res.condition,
                   None, None if res.farkas is None else res.farkas[:k], res.trace)


def certify(p: LpProblem, s: LpSolution) -> CertificateReport:
    """Residuals of ``s`` for ``p``, accumulated in extended precision.

    ``primal_infeas`` combines violated rows and negative entries of ``w``;
    ``dual_infeas`` does the same for ``A^T rho <= c`` and ``rho``.
    """
    A = p.A.astype(np.longdouble)
    w = np.asarray(s.w, dtype=np.longdouble)
    rho = np.asarray(s.rho, dtype=np.longdouble)
    b = p.b.astype(np.longdouble)
    c = p.c.astype(np.longdouble)
    Aw = A @ w
    ATr = A.T @ rho
    primal = max(float(np.max(b - Aw)), float(np.max(-w)), 0.0)
    dual = max(float(np.max(ATr - c)), float(np.max(-rho)), 0.0)
    gap = abs(float(np.dot(c, w) - np.dot(b, rho)))
    comp = max(float(np.max(np.abs(w * (c - ATr)))), float(np.max(np.abs(rho * (Aw - b)))))
    return CertificateReport(primal, dual, gap, comp)
