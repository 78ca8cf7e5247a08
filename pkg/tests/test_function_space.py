import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcover.function_space import (
    DimensionError,
    DiscreteMeasure,
    ExpNorm,
    Gaussian,
    GridError,
    GridSpec,
    IndicatorBox,
    OffLatticeError,
    Reflect,
    ScaleValue,
    Sum,
    Tabulated,
    Translate,
    barycenter,
    check_geometric_log_concave,
    check_window,
    evaluate,
    integrate,
    is_even,
    is_geometric,
    max_nodes,
    sup_norm,
    support_box,
)
from fcover.parser import ExprDomainError, ExprSyntaxError, parse_expr, to_text

G0 = Gaussian(((1.0,),))


def line(lo, hi, n):
    return GridSpec((lo,), (hi,), (n,))


def test_gaussian_values():
    assert G0(np.array([[0.0]]))[0] == 1.0
    assert G0(np.array([[1.0]]))[0] == pytest.approx(0.60653066, abs=1e-8)


def test_indicator_boundary_counts_inside():
    box = IndicatorBox((-1.0,), (1.0,))
    assert box(np.array([[1.0]]))[0] == 1.0
    assert box(np.array([[1.0001]]))[0] == 0.0


def test_evaluation_matches_closed_form():
    grid = line(-4, 4, 161)
    x = grid.nodes()[:, 0]
    assert np.max(np.abs(evaluate(G0, grid).values - np.exp(-x**2 / 2))) <= 1e-12
    e = ExpNorm(2.0, 1.5)
    assert np.max(np.abs(evaluate(e, grid).values - np.exp(-1.5 * np.abs(x)))) <= 1e-12


def test_integrals():
    # closed indicator: the boundary nodes count fully, which adds exactly one step
    box = integrate(evaluate(IndicatorBox((-1.0,), (1.0,)), line(-4, 4, 801)))
    assert abs(box - 2.0) <= 0.01 + 1e-12
    grid = line(-8, 8, 1601)
    assert integrate(evaluate(G0, grid)) == pytest.approx(math.sqrt(2 * math.pi), abs=1e-4)
    sq = evaluate(G0, grid)
    assert integrate(type(sq)(grid, sq.values**2, None)) == pytest.approx(math.sqrt(math.pi), abs=1e-4)


def test_sup_norm():
    grid = line(-4, 4, 81)
    assert sup_norm(evaluate(G0, grid)) == 1.0
    assert sup_norm(evaluate(ScaleValue(G0, 0.5), grid)) == 0.5


def test_barycenter():
    grid = line(-10, 10, 2001)
    assert abs(barycenter(evaluate(G0, grid))[0]) <= 1e-9
    assert barycenter(evaluate(Translate(G0, (0.5,)), grid))[0] == pytest.approx(0.5, abs=1e-3)
    assert barycenter(evaluate(IndicatorBox((0.0,), (2.0,)), grid))[0] == pytest.approx(1.0, abs=0.01)


def test_log_concavity_checker():
    grid = line(-8, 8, 321)
    assert check_geometric_log_concave(evaluate(G0, grid)).is_lc
    assert check_geometric_log_concave(evaluate(G0, grid)).worst_violation == 0.0
    bimodal = Sum((ScaleValue(Translate(G0, (3.0,)), 0.5), ScaleValue(Translate(G0, (-3.0,)), 0.5)))
    assert not check_geometric_log_concave(evaluate(bimodal, grid)).is_lc
    assert check_geometric_log_concave(evaluate(IndicatorBox((-1.0,), (1.0,)), grid)).is_lc


def test_log_concavity_2d():
    grid = GridSpec((-3, -3), (3, 3), (31, 31))
    rep = check_geometric_log_concave(evaluate(parse_expr("gauss2(2,0.5,1)"), grid))
    assert rep.is_lc


def test_geometric_normalization_of_zoo():
    grid = line(-5, 5, 201)
    for text in ("gauss(1)", "gauss(3)", "ind_box(-1,2)", "expnorm(1,2)", "ind_ball(2,1)"):
        f = parse_expr(text)
        assert is_geometric(f)
        s = sup_norm(evaluate(f, grid))
        assert 1 - 0.05**2 <= s <= 1


def test_structural_flags():
    assert is_even(G0)
    assert not is_even(Translate(G0, (1.0,)))
    assert not is_geometric(ScaleValue(G0, 0.5))
    assert is_even(IndicatorBox((-2.0,), (2.0,)))
    assert not is_even(IndicatorBox((-1.0,), (2.0,)))


def test_grid_cap(monkeypatch):
    with pytest.raises(GridError, match="FCOVER_MAX_NODES"):
        GridSpec((0, 0), (1, 1), (300, 300))
    monkeypatch.setenv("FCOVER_MAX_NODES", "100000")
    assert max_nodes() == 100000
    assert GridSpec((0, 0), (1, 1), (300, 300)).size == 90000


def test_grid_validation():
    with pytest.raises(GridError):
        GridSpec((1.0,), (0.0,), (10,))
    with pytest.raises(GridError):
        GridSpec((0.0,), (1.0,), (1,))


def test_from_step_is_origin_aligned():
    g = GridSpec.from_step((-1.03,), (2.01,), 0.1)
    assert g.is_origin_aligned()
    assert g.lo[0] <= -1.03 + 1e-12 and g.hi[0] >= 2.01 - 1e-12


def test_tabulated_lookup():
    grid = GridSpec.from_step((-1,), (1,), 0.5)
    t = Tabulated(grid, np.arange(5.0))
    assert t(np.array([[0.5]]))[0] == 3.0
    assert t(np.array([[3.0]]))[0] == 0.0
    with pytest.raises(OffLatticeError):
        t(np.array([[0.25]]))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        G0(np.zeros((3, 2)))


def test_support_box():
    lo, hi = support_box(G0, 1, 1e-10)
    assert hi[0] == pytest.approx(math.sqrt(2 * math.log(1e10)), rel=1e-9)
    assert lo[0] == -hi[0]
    lo, hi = support_box(IndicatorBox((-1.0,), (2.0,)), 1)
    assert (lo[0], hi[0]) == (-1.0, 2.0)
    lo, hi = support_box(Reflect(IndicatorBox((-1.0,), (2.0,))), 1)
    assert (lo[0], hi[0]) == (-2.0, 1.0)


def test_check_window():
    assert check_window(G0, line(-7, 7, 141))
    assert not check_window(G0, line(-3, 3, 61))


def test_discrete_measure():
    grid = line(-2, 2, 41)
    mu = DiscreteMeasure.dirac(grid, (0.0,))
    assert mu.mass == 1.0
    assert mu.convolve_at(G0, np.array([[0.0], [1.0]])) == pytest.approx([1.0, math.exp(-0.5)])
    with pytest.raises(ValueError):
        DiscreteMeasure(grid, -np.ones(41))


# ----------------------------------------------------------------------------
# parser


def test_parser_literals():
    assert parse_expr("gauss(1)") == Gaussian(((1.0,),))
    e = parse_expr("hscale(gauss(1), 0.95)")
    assert e.lam == 0.95 and e.child == G0
    with pytest.raises(ExprDomainError):
        parse_expr("hscale(gauss(1), 1.5)")


@pytest.mark.parametrize("text", ["gauss(", "gauss(1,", "gauss(1))", "", "gauss(1) gauss(1)", "3"])
def test_parser_syntax_errors(text):
    with pytest.raises((ExprSyntaxError, ExprDomainError)):
        parse_expr(text)


def test_parser_unknown_name():
    with pytest.raises(ExprDomainError, match="unknown"):
        parse_expr("cauchy(1)")


def test_parser_domain_errors():
    for text in ("gauss(-1)", "gauss2(1,2,1)", "ind_box(2,1)", "expnorm(0.5,1)", "pow(gauss(1),-1)"):
        with pytest.raises((ExprDomainError, ValueError)):
            parse_expr(text)


_leaf = st.sampled_from(["gauss(1)", "gauss(0.25)", "ind_box(-1,2)", "expnorm(2,1.5)", "ind_ball(1,2)", "one"])


@st.composite
def _exprs(draw, depth=2):
    if depth == 0 or draw(st.booleans()):
        return draw(_leaf)
    inner = draw(_exprs(depth=depth - 1))
    kind = draw(st.sampled_from(["translate", "reflect", "scale", "pow", "hscale", "prod", "linmap"]))
    num = draw(st.floats(0.1, 3.0, allow_nan=False).map(lambda v: round(v, 3)))
    if kind == "translate":
        return f"translate({inner},{num})"
    if kind == "reflect":
        return f"reflect({inner})"
    if kind == "scale":
        return f"scale({inner},{num})"
    if kind == "pow":
        return f"pow({inner},{num})"
    if kind == "hscale":
        return f"hscale({inner},{min(num, 1.0)})"
    if kind == "linmap":
        return f"linmap({inner},{num})"
    return f"prod({inner},{draw(_leaf)})"


@settings(max_examples=60, deadline=None)
@given(_exprs())
def test_parser_round_trip(text):
    e = parse_expr(text)
    assert parse_expr(to_text(e)) == e


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 4))
def test_translate_and_linear_evaluate_pointwise(a, s):
    x = np.linspace(-5, 5, 41)[:, None]
    t = parse_expr(f"translate(gauss({s}),{a!r})")
    assert np.allclose(t(x), np.exp(-s * (x[:, 0] - a) ** 2 / 2), atol=1e-12)
    lin = parse_expr(f"linmap(gauss(1),{s!r})")
    assert np.allclose(lin(x), np.exp(-(s * x[:, 0]) ** 2 / 2), atol=1e-12)
