"""Coordinate-chart fields on 4-dimensional patches.

Two kinds of derivative access coexist:

* analytic  -- fields built from sympy expressions; partial derivatives of
  any order are obtained symbolically and compiled (lambdified) once.
* sampled   -- fields given only as callables; partials fall back to
  centered finite differences of order 4, with the step recorded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import sympy as sp

DIM = 4
COORDS = sp.symbols("x0 x1 x2 x3")

# eigenvalue floor below which a metric is treated as degenerate
EIG_FLOOR = 1e-8


class ChartError(ValueError):
    """Point outside the chart domain (or too close to its boundary)."""


class DegenerateMetricError(ValueError):
    """Metric not positive definite at an evaluation point."""


class DerivativeOrderError(ValueError):
    """Requested derivative order is not available."""


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in chart coordinates."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != DIM or len(self.hi) != DIM:
            raise ValueError("Box must be 4-dimensional")

    @classmethod
    def cube(cls, half_width, center=(0.0,) * DIM):
        c = np.asarray(center, float)
        return cls(tuple(c - half_width), tuple(c + half_width))

    @property
    def width(self):
        return float(np.min(np.asarray(self.hi) - np.asarray(self.lo)))

    def contains(self, x, margin=0.0):
        x = np.asarray(x, float)
        lo = np.asarray(self.lo) + margin
        hi = np.asarray(self.hi) - margin
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def require_interior(self, x, margin=0.0):
        if not self.contains(x, margin):
            raise ChartError(f"point {x} outside domain (margin {margin})")


# 5-point centered stencils, order-4 accurate
_D1_COEF = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_COEF = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFFSETS = np.array([-2, -1, 0, 1, 2])


def fd_partial(func, x, index, step):
    """Centered finite difference of ``func`` at ``x``.

    ``index`` is a tuple of coordinate axes (one entry per derivative);
    repeated axes are grouped so e.g. (0, 0) uses the second-derivative
    stencil directly instead of nesting two first-derivative stencils.
    """
    if len(index) == 0:
        return func(x)
    counts = {}
    for ax in index:
        counts[ax] = counts.get(ax, 0) + 1
    ax, mult = next(iter(counts.items()))
    rest = tuple(a for a in index if a != ax)
    x = np.asarray(x, float)

    def shifted(k):
        y = x.copy()
        y[ax] += k * step
        return fd_partial(func, y, rest, step)

    if mult == 1:
        vals = [shifted(k) for k in _OFFSETS]
        return sum(c * v for c, v in zip(_D1_COEF, vals)) / step
    if mult == 2:
        vals = [shifted(k) for k in _OFFSETS]
        return sum(c * v for c, v in zip(_D2_COEF, vals)) / step**2
    # higher multiplicity: peel one derivative and recurse
    def inner(y):
        return fd_partial(func, y, (ax,) * (mult - 1) + rest, step)

    vals = []
    for k in _OFFSETS:
        y = x.copy()
        y[ax] += k * step
        vals.append(inner(y))
    return sum(c * v for c, v in zip(_D1_COEF, vals)) / step


def _lambdify(expr):
    """Compile a sympy scalar to a vectorized function of points (n, 4)."""
    f = sp.lambdify(COORDS, expr, modules="numpy")

    def call(pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        out = f(pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3])
        return np.broadcast_to(np.asarray(out, float), (pts.shape[0],)).copy()

    return call


class ScalarField:
    """Real field on a chart box with derivative access up to order 4."""

    def __init__(self, domain, expr=None, func=None, fd_step=None):
        if (expr is None) == (func is None):
            raise ValueError("give exactly one of expr / func")
        self.domain = domain
        self.expr = sp.sympify(expr) if expr is not None else None
        self._func = func
        self.analytic = expr is not None
        self.fd_step = fd_step if fd_step is not None else domain.width * 1e-2
        self._partials = {}

    @classmethod
    def from_expr(cls, expr, domain):
        return cls(domain, expr=expr)

    @classmethod
    def from_callable(cls, func, domain, fd_step=None):
        return cls(domain, func=func, fd_step=fd_step)

    @classmethod
    def constant(cls, value, domain):
        return cls(domain, expr=sp.Float(value))

    def _partial_fn(self, index):
        key = tuple(sorted(index))
        if key not in self._partials:
            e = self.expr
            for ax in key:
                e = sp.diff(e, COORDS[ax])
            self._partials[key] = _lambdify(e)
        return self._partials[key]

    def eval(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        if self.analytic:
            return self._partial_fn(())(pts)
        return np.array([self._func(p) for p in pts], float)

    def __call__(self, x):
        return float(self.eval(np.atleast_2d(x))[0])

    def partial(self, pts, index):
        """Partial derivative for multi-index ``index`` at each point."""
        if len(index) > 4:
            raise DerivativeOrderError("derivatives available up to order 4")
        pts = np.atleast_2d(np.asarray(pts, float))
        if self.analytic:
            return self._partial_fn(tuple(index))(pts)
        return np.array(
            [fd_partial(self._func, p, tuple(index), self.fd_step) for p in pts],
            float,
        )

    def gradient(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        return np.stack([self.partial(pts, (a,)) for a in range(DIM)], axis=-1)

    def hessian(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        h = np.empty((pts.shape[0], DIM, DIM))
        for a in range(DIM):
            for b in range(a, DIM):
                h[:, a, b] = h[:, b, a] = self.partial(pts, (a, b))
        return h

    def third(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        t = np.empty((pts.shape[0], DIM, DIM, DIM))
        for idx in itertools.combinations_with_replacement(range(DIM), 3):
            val = self.partial(pts, idx)
            for perm in set(itertools.permutations(idx)):
                t[(slice(None),) + perm] = val
        return t


class MetricField:
    """Symmetric positive-definite 4x4 metric on a chart box."""

    dim = DIM

    def __init__(self, domain, matrix=None, func=None, fd_step=None):
        if (matrix is None) == (func is None):
            raise ValueError("give exactly one of matrix / func")
        self.domain = domain
        self.matrix = sp.Matrix(matrix) if matrix is not None else None
        if self.matrix is not None and not self.matrix.is_symmetric():
            # tolerate numerically symmetric inputs, reject structural asymmetry
            d = sp.simplify(self.matrix - self.matrix.T)
            if any(e != 0 for e in d):
                raise ValueError("metric matrix must be symmetric")
        self._func = func
        self.analytic = matrix is not None
        self.fd_step = fd_step if fd_step is not None else domain.width * 1e-2
        self._comp_fns = {}

    @classmethod
    def from_exprs(cls, matrix, domain):
        return cls(domain, matrix=matrix)

    @classmethod
    def from_callable(cls, func, domain, fd_step=None):
        return cls(domain, func=func, fd_step=fd_step)

    @classmethod
    def flat(cls, domain):
        return cls(domain, matrix=sp.eye(DIM))

    @property
    def is_flat(self):
        return self.analytic and self.matrix == sp.eye(DIM)

    def _component_fn(self, a, b, index):
        key = (a, b, tuple(sorted(index)))
        if key not in self._comp_fns:
            e = self.matrix[a, b]
            for ax in key[2]:
                e = sp.diff(e, COORDS[ax])
            self._comp_fns[key] = _lambdify(e)
        return self._comp_fns[key]

    def eval(self, x, check=True):
        g = self.eval_batch(np.atleast_2d(x))[0]
        if check:
            w = np.linalg.eigvalsh(g)
            if w[0] <= EIG_FLOOR:
                raise DegenerateMetricError(
                    f"metric eigenvalue {w[0]:.3e} below floor at {x}"
                )
        return g

    def eval_batch(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        g = np.empty((pts.shape[0], DIM, DIM))
        if self.analytic:
            for a in range(DIM):
                for b in range(a, DIM):
                    g[:, a, b] = g[:, b, a] = self._component_fn(a, b, ())(pts)
        else:
            for i, p in enumerate(pts):
                m = np.asarray(self._func(p), float)
                g[i] = 0.5 * (m + m.T)
        return g

    def partial_batch(self, pts, index):
        """d^|index| g_ab for every point; shape (n, 4, 4)."""
        pts = np.atleast_2d(np.asarray(pts, float))
        out = np.empty((pts.shape[0], DIM, DIM))
        if self.analytic:
            for a in range(DIM):
                for b in range(a, DIM):
                    out[:, a, b] = out[:, b, a] = self._component_fn(a, b, index)(pts)
        else:
            for i, p in enumerate(pts):
                m = fd_partial(
                    lambda q: np.asarray(self._func(q), float),
                    p,
                    tuple(index),
                    self.fd_step,
                )
                out[i] = 0.5 * (m + m.T)
        return out

    def jet(self, pts, order):
        """Metric derivative jet.

        Returns ``[g, dg, d2g, ...]`` up to ``order``; derivative axes come
        last, so ``dg[n, a, b, c] = d_c g_ab`` and
        ``d2g[n, a, b, c, d] = d_c d_d g_ab``.
        """
        if order > 4:
            raise DerivativeOrderError("metric derivatives available up to order 4")
        pts = np.atleast_2d(np.asarray(pts, float))
        n = pts.shape[0]
        jets = [self.eval_batch(pts)]
        for k in range(1, order + 1):
            arr = np.empty((n,) + (DIM, DIM) + (DIM,) * k)
            for idx in itertools.combinations_with_replacement(range(DIM), k):
                val = self.partial_batch(pts, idx)
                for perm in set(itertools.permutations(idx)):
                    arr[(slice(None), slice(None), slice(None)) + perm] = val
            jets.append(arr)
        return jets

    def inverse(self, pts):
        return np.linalg.inv(self.eval_batch(pts))

    def sqrt_det(self, pts):
        return np.sqrt(np.linalg.det(self.eval_batch(pts)))


def symmetry_defect(g_field, pts):
    """Max |g_ab - g_ba| over sampled points (exactly 0 on the analytic path)."""
    g = g_field.eval_batch(pts)
    return float(np.max(np.abs(g - np.swapaxes(g, -1, -2))))
