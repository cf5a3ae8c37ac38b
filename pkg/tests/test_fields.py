import numpy as np
import pytest
import sympy as sp

from qcurv.fields import (
    COORDS,
    Box,
    ChartError,
    DegenerateMetricError,
    DerivativeOrderError,
    MetricField,
    ScalarField,
    fd_partial,
    symmetry_defect,
)

x0, x1, x2, x3 = COORDS


def test_box_contains_and_interior():
    box = Box.cube(2.0)
    assert box.contains((1.0, -1.0, 0.0, 1.9))
    assert not box.contains((2.5, 0.0, 0.0, 0.0))
    assert not box.contains((1.95, 0.0, 0.0, 0.0), margin=0.1)
    with pytest.raises(ChartError):
        box.require_interior((3.0, 0.0, 0.0, 0.0))


def test_scalar_partial_matches_hand_derivative():
    dom = Box.cube(3.0)
    f = ScalarField.from_expr(x0**2 * x1 + sp.sin(x2), dom)
    pts = np.array([[0.5, -1.0, 0.3, 0.0], [1.0, 2.0, -0.5, 0.7]])
    np.testing.assert_allclose(f.partial(pts, (0,)), 2 * pts[:, 0] * pts[:, 1], atol=1e-13)
    np.testing.assert_allclose(f.partial(pts, (2,)), np.cos(pts[:, 2]), atol=1e-13)
    np.testing.assert_allclose(f.partial(pts, (0, 1)), 2 * pts[:, 0], atol=1e-13)


def test_fd_matches_analytic_derivatives():
    dom = Box.cube(3.0)
    expr = sp.exp(x0) * sp.cos(x1) + x3**3
    fa = ScalarField.from_expr(expr, dom)
    fn = ScalarField.from_callable(
        lambda p: float(np.exp(p[0]) * np.cos(p[1]) + p[3] ** 3), dom, fd_step=0.05
    )
    pts = np.array([[0.2, 0.4, -0.1, 0.3]])
    for index in [(0,), (1, 1), (0, 1), (3, 3, 3)]:
        a = fa.partial(pts, index)[0]
        b = fn.partial(pts, index)[0]
        assert abs(a - b) < 1e-5


def test_mixed_partials_symmetric():
    dom = Box.cube(2.0)
    f = ScalarField.from_callable(
        lambda p: float(np.sin(p[0] * p[1]) + p[2] * p[3] ** 2), dom, fd_step=0.02
    )
    pts = np.array([[0.3, 0.5, -0.2, 0.4]])
    h = f.hessian(pts)[0]
    assert np.max(np.abs(h - h.T)) < 1e-10


def test_derivative_order_capped():
    dom = Box.cube(1.0)
    f = ScalarField.from_expr(x0**6, dom)
    with pytest.raises(DerivativeOrderError):
        f.partial(np.zeros((1, 4)), (0,) * 5)


def test_fd_partial_polynomial_exact_to_stencil_order():
    def func(p):
        return p[0] ** 4 + p[1] ** 2 * p[2]

    # the 5-point order-4 stencil differentiates quartics exactly
    val = fd_partial(func, np.array([1.0, 2.0, 3.0, 0.0]), (0, 0), 0.1)
    assert abs(val - 12.0) < 1e-9


def test_metric_symmetry_and_degeneracy():
    dom = Box.cube(2.0)
    g = MetricField.from_exprs(sp.eye(4) * (1 + x0**2), dom)
    pts = np.random.default_rng(0).uniform(-1, 1, (10, 4))
    assert symmetry_defect(g, pts) == 0.0

    bad = MetricField.from_exprs(sp.diag(x0, 1, 1, 1), dom)
    with pytest.raises(DegenerateMetricError):
        bad.eval(np.array([1e-12, 0.0, 0.0, 0.0]))


def test_metric_jet_layout():
    dom = Box.cube(2.0)
    g = MetricField.from_exprs(sp.eye(4) + sp.Matrix(4, 4, lambda a, b: 0), dom)
    gm = MetricField.from_exprs(
        sp.Matrix(4, 4, lambda a, b: sp.Integer(a == b) + (x0**2 if (a, b) == (1, 1) else 0)),
        dom,
    )
    pts = np.array([[0.5, 0.0, 0.0, 0.0]])
    gval, dg = gm.jet(pts, 1)
    assert gval.shape == (1, 4, 4) and dg.shape == (1, 4, 4, 4)
    assert abs(dg[0, 1, 1, 0] - 1.0) < 1e-12  # d_0 g_11 = 2 x0
    assert np.max(np.abs(g.jet(pts, 2)[1])) == 0.0


def test_flat_metric_flag():
    dom = Box.cube(2.0)
    assert MetricField.flat(dom).is_flat
    assert not MetricField.from_exprs(2 * sp.eye(4), dom).is_flat
