import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcover.function_space import GridSpec, IndicatorBox, SampledFunction, Translate, evaluate, integrate
from fcover.parser import parse_expr as P
from fcover.transforms import (
    NotCenteredError,
    convolve,
    default_dual_grid,
    is_lattice_convex,
    legendre,
    legendre_1d,
    legendre_brute,
    level_set_body,
    log_dual,
    polar_inclusions,
    santalo_product,
    sup_convolve,
    sup_convolve_brute,
)

G0 = P("gauss(1)")


def grid1(lo, hi, step):
    return GridSpec.from_step((lo,), (hi,), step)


def test_convolution_fubini():
    grid = grid1(-8, 8, 0.05)
    sf = evaluate(G0, grid)
    conv = convolve(sf, G0)
    assert integrate(conv) == pytest.approx(integrate(sf) ** 2, rel=1e-6)


def test_convolution_peaks():
    sf = evaluate(G0, grid1(-8, 8, 0.05))
    c = convolve(sf, G0)
    assert c.values[c.grid.nearest_index((0.0,))] == pytest.approx(math.sqrt(math.pi), abs=1e-3)
    box = IndicatorBox((-1.0,), (1.0,))
    c = convolve(evaluate(box, grid1(-3, 3, 0.002)), box)
    assert c.values[c.grid.nearest_index((0.0,))] == pytest.approx(2.0, abs=0.01)


def test_sup_convolution_of_intervals_is_minkowski_sum():
    grid = grid1(-1, 3, 0.05)
    unit = IndicatorBox((0.0,), (1.0,))
    out = sup_convolve(evaluate(unit, grid), unit)
    assert np.array_equal(out.values, evaluate(IndicatorBox((0.0,), (2.0,)), grid).values)


def test_sup_convolution_of_gaussians_at_even_nodes():
    # the maximizer of g0(x - y) g0(y) is y = x/2, a node only when x is an even node
    grid = grid1(-6, 6, 0.05)
    out = sup_convolve(evaluate(G0, grid), G0)
    x = grid.nodes()[:, 0]
    even = np.arange(x.size) % 2 == (grid.nearest_index((0.0,)) % 2)
    assert np.max(np.abs(out.values[even] - np.exp(-x[even] ** 2 / 4))) <= 1e-9
    assert np.all(out.values <= np.exp(-x**2 / 4) + 1e-12)


def test_sup_convolution_at_origin_is_one():
    grid = grid1(-4, 4, 0.05)
    for text in ("gauss(1)", "ind_box(-1,2)", "expnorm(1,1)", "gauss(3)"):
        f = P(text)
        out = sup_convolve(evaluate(f, grid), f)
        assert out.values[grid.nearest_index((0.0,))] == pytest.approx(1.0, abs=1e-12)


def test_sup_convolution_matches_brute_force_2d():
    grid = GridSpec.from_step((-2, -2), (2, 2), 0.25)
    f = evaluate(P("gauss2(2,0.5,1)"), grid)
    g = P("expnorm(2,1)")
    assert np.max(np.abs(sup_convolve(f, g).values - sup_convolve_brute(f, g).values)) <= 1e-12


def test_legendre_examples():
    grid = grid1(-10, 10, 0.01)
    x = grid.nodes()[:, 0]
    dual = grid1(-3, 3, 0.01)
    y = dual.nodes()[:, 0]
    assert np.max(np.abs(legendre(x**2 / 2, grid, dual) - y**2 / 2)) <= 1e-6
    L = legendre(np.abs(x), grid, grid1(-2, 2, 0.01))
    yy = grid1(-2, 2, 0.01).nodes()[:, 0]
    assert np.max(np.abs(L[np.abs(yy) <= 1])) <= 1e-12
    assert np.all(L[np.abs(yy) > 1.05] > 0.4)
    box = grid1(-1, 1, 0.01)
    assert np.max(np.abs(legendre(np.zeros(box.size), box, dual) - np.abs(y))) <= 1e-9


def test_legendre_matches_brute_2d():
    grid = GridSpec.from_step((-1, -1), (1, 1), 0.1)
    x = grid.nodes()
    phi = 0.5 * x[:, 0] ** 2 + x[:, 1] ** 2 + np.abs(x[:, 0] + x[:, 1])
    dual = GridSpec.from_step((-3, -3), (3, 3), 0.2)
    assert np.max(np.abs(legendre(phi, grid, dual) - legendre_brute(x, phi, dual.nodes()))) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=40, unique=True),
       st.lists(st.floats(-20, 20), min_size=1, max_size=30))
def test_legendre_1d_equals_brute(xs, phis_seed):
    x = np.sort(np.array(xs))
    phi = np.resize(np.array(phis_seed), x.size)
    y = np.linspace(-7, 7, 23)
    fast = legendre_1d(x, phi, y)
    brute = legendre_brute(x[:, None], phi, y[:, None])
    assert np.max(np.abs(fast - brute)) <= 1e-10 * (1 + np.max(np.abs(brute)))


def test_gaussian_self_dual():
    sf = evaluate(G0, grid1(-8, 8, 0.01))
    fd = log_dual(sf, default_dual_grid(sf))
    y = fd.grid.nodes()[:, 0]
    inner = np.abs(y) <= 3
    assert np.max(np.abs(fd.values[inner] - np.exp(-y[inner] ** 2 / 2))) <= 1e-6


def test_indicator_dual_is_exponential():
    sf = evaluate(IndicatorBox((-1.0,), (1.0,)), grid1(-2, 2, 0.01))
    fd = log_dual(sf, default_dual_grid(sf))
    y = fd.grid.nodes()[:, 0]
    assert np.max(np.abs(fd.values - np.exp(-np.abs(y)))) <= 1e-6


def test_gaussian_dual_inverts_matrix():
    # on a lattice the maximizer x = y/2 is missed by at most half a step,
    # which costs at most step**2 / 4 in the potential
    sf = evaluate(P("gauss(2)"), grid1(-6, 6, 0.001))
    dual = grid1(-3, 3, 0.001)
    fd = log_dual(sf, dual)
    y = dual.nodes()[:, 0]
    assert np.max(np.abs(fd.values - np.exp(-y**2 / 4))) <= 1e-6


def test_default_dual_grid_keeps_lattice():
    sf = evaluate(G0, grid1(-5, 5, 0.05))
    d = default_dual_grid(sf)
    assert np.allclose(d.step, sf.grid.step)
    assert d.is_origin_aligned()
    assert d.hi[0] == pytest.approx(5.0, abs=0.05)


def test_level_set_bodies():
    g = grid1(-5, 5, 0.001)
    assert level_set_body(evaluate(G0, g)).volume == pytest.approx(2 * math.sqrt(2), abs=0.01)
    assert level_set_body(evaluate(P("expnorm(1,1)"), g)).volume == pytest.approx(2.0, abs=0.01)
    assert level_set_body(evaluate(IndicatorBox((-1.0,), (1.0,)), g)).volume == pytest.approx(2.0, abs=0.01)


def test_lattice_convexity():
    assert is_lattice_convex(np.array([0, 1, 1, 1, 0], dtype=bool))
    assert not is_lattice_convex(np.array([1, 0, 1], dtype=bool))
    sf = evaluate(P("gauss2(2,0.5,1)"), GridSpec.from_step((-3, -3), (3, 3), 0.1))
    assert is_lattice_convex(level_set_body(sf).inside)


def test_santalo_products():
    sf = evaluate(G0, grid1(-9, 9, 0.01))
    assert santalo_product(sf, default_dual_grid(sf)) == pytest.approx(2 * math.pi, abs=1e-3)
    sf = evaluate(IndicatorBox((-1.0,), (1.0,)), grid1(-2, 2, 0.002))
    s = santalo_product(sf, default_dual_grid(sf))
    assert s == pytest.approx(4.0, abs=0.02)
    assert s <= 2 * math.pi
    with pytest.raises(NotCenteredError):
        sf = evaluate(Translate(G0, (0.5,)), grid1(-9, 9, 0.01))
        santalo_product(sf, default_dual_grid(sf))


@pytest.mark.parametrize("text", ["gauss(1)", "ind_box(-1,1)", "expnorm(1,1)", "gauss(4)"])
def test_polar_inclusions(text):
    sf = evaluate(P(text), grid1(-8, 8, 0.02))
    rep = polar_inclusions(sf, default_dual_grid(sf))
    assert rep.inner_ok and rep.outer_ok


def test_polar_inclusions_2d():
    sf = evaluate(P("gauss2(2,0.5,1)"), GridSpec.from_step((-5, -5), (5, 5), 0.1))
    rep = polar_inclusions(sf, default_dual_grid(sf))
    assert rep.inner_ok and rep.outer_ok


def test_log_dual_rejects_zero():
    grid = grid1(-1, 1, 0.5)
    with pytest.raises(ValueError):
        log_dual(SampledFunction(grid, np.zeros(5), None), grid)
