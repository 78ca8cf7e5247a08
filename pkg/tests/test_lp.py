import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from fcover import lp
from fcover.lp import LpProblem, LpSolution, ToleranceConfig, certify, solve


def highs(p: LpProblem):
    # independent oracle: min c.w, -A w <= -b, w >= 0
    r = linprog(p.c, A_ub=-p.A, b_ub=-p.b, bounds=(0, None), method="highs")
    return r


def test_one_variable():
    s = solve(LpProblem([[1.0]], [1.0], [1.0]))
    assert s.optimal
    assert s.primal_value == 1.0 and s.w[0] == 1.0 and s.rho[0] == 1.0 and s.gap == 0.0
    rep = certify(LpProblem([[1.0]], [1.0], [1.0]), s)
    assert rep.primal_infeas == rep.dual_infeas == rep.gap == rep.complementarity == 0.0


def test_decoupled():
    s = solve(LpProblem(np.eye(2), [1.0, 1.0], [1.0, 1.0]))
    assert s.primal_value == pytest.approx(2.0)
    assert s.w == pytest.approx([1.0, 1.0])


def test_small_vertex():
    s = solve(LpProblem([[1.0, 1.0], [2.0, 1.0]], [1.0, 2.0], [3.0, 2.0]))
    assert s.primal_value == pytest.approx(3.0)
    assert s.w == pytest.approx([1.0, 0.0])
    assert s.dual_value == pytest.approx(3.0)


def test_infeasible_has_farkas_ray():
    # w1 >= 1 and -w1 >= 0 cannot both hold
    p = LpProblem([[1.0], [-1.0]], [1.0, 0.0], [1.0])
    s = solve(p)
    assert s.status == lp.INFEASIBLE
    y = s.farkas
    assert y is not None and np.all(y >= -1e-12)
    assert np.all(p.A.T @ y <= 1e-12) and p.b @ y > 0


def test_unbounded():
    s = solve(LpProblem([[1.0, 1.0]], [1.0], [1.0, -1.0]))
    assert s.status == lp.UNBOUNDED


def test_perturbed_solution_is_flagged():
    p = LpProblem([[1.0, 1.0], [2.0, 1.0]], [1.0, 2.0], [3.0, 2.0])
    s = solve(p)
    bad = LpSolution(s.status, s.primal_value, s.w + 0.1, s.rho, s.gap, s.iterations)
    assert certify(p, bad).complementarity > 0


def test_problem_validation():
    with pytest.raises(ValueError):
        LpProblem([[1.0, 2.0]], [1.0, 2.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        LpProblem([[math.nan]], [1.0], [1.0])
    with pytest.raises(ValueError):
        solve(LpProblem([[1.0]], [1.0], [1.0]), ToleranceConfig(method="magic"))


def _covering(k, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0, 1, size=(k, m)) * (rng.uniform(size=(k, m)) < 0.6)
    A[np.arange(k), rng.integers(m, size=k)] += 0.5
    return LpProblem(A, rng.uniform(0.1, 1, size=k), rng.uniform(0.5, 2, size=m))


@pytest.mark.parametrize("method", ["auto", "simplex", "ipm"])
@pytest.mark.parametrize("seed", range(6))
def test_matches_highs_on_covering_programs(method, seed):
    p = _covering(25 + 5 * seed, 40, seed)
    s = solve(p, ToleranceConfig(method=method))
    ref = highs(p)
    assert s.optimal
    assert s.primal_value == pytest.approx(ref.fun, rel=1e-6)
    rep = certify(p, s)
    assert rep.primal_infeas <= 1e-6 and rep.dual_infeas <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 10_000))
def test_weak_and_strong_duality(k, m, seed):
    p = _covering(k, m, seed)
    s = solve(p)
    assert s.optimal
    assert s.dual_value <= s.primal_value + 1e-9 * (1 + abs(s.primal_value))
    assert s.gap <= 1e-7 * (1 + abs(s.primal_value))
    assert s.primal_value == pytest.approx(highs(p).fun, rel=1e-7, abs=1e-9)


def test_deterministic():
    p = _covering(30, 50, 3)
    a, b = solve(p), solve(p)
    assert np.array_equal(a.w, b.w) and np.array_equal(a.rho, b.rho)


def test_badly_scaled_rows():
    p = _covering(20, 30, 7)
    scale = 10.0 ** np.arange(-4, 4, 0.4)[:20]
    q = LpProblem(p.A * scale[:, None], p.b * scale, p.c)
    assert solve(q).primal_value == pytest.approx(solve(p).primal_value, rel=1e-7)


def test_gaussian_covering_gap():
    x = np.linspace(-6, 6, 241)
    t = np.linspace(-8, 8, 321)
    A = np.exp(-(x[:, None] - t[None, :]) ** 2 / 2)
    s = solve(LpProblem(A, np.exp(-x**2 / 2), np.ones(t.size)))
    assert s.optimal and s.gap <= 1e-7
    assert s.primal_value == pytest.approx(1.0, abs=1e-4)
