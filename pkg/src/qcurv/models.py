"""Closed-model substrates: round S^4 in a stereographic chart, flat torus.

The S^4 chart covers the sphere minus a point with metric
g = 4 (1 + |x|^2)^{-2} delta.  Global quadrature substitutes r = tan(theta/2)
so that chart radii map to polar angle theta on the sphere; the volume
element is sin^3(theta) d(theta) dS^3.
"""

import numpy as np
import sympy as sp

from .fields import Box, COORDS, MetricField, ScalarField
from .quadrature import gauss_legendre, s3_nodes

S4_VOLUME = 8.0 * np.pi**2 / 3.0


def sphere_conformal_factor_expr():
    """u with e^{2u} delta = round S^4 chart metric: u = log(2/(1+|x|^2))."""
    r2 = sum(c**2 for c in COORDS)
    return sp.log(2 / (1 + r2))


def sphere_metric(domain=None) -> MetricField:
    """Round unit-S^4 metric in the stereographic chart."""
    if domain is None:
        domain = Box.cube(100.0)
    r2 = sum(c**2 for c in COORDS)
    return MetricField.from_exprs(4 / (1 + r2) ** 2 * sp.eye(4), domain)


def sphere_conformal_u(domain=None) -> ScalarField:
    if domain is None:
        domain = Box.cube(100.0)
    return ScalarField.from_expr(sphere_conformal_factor_expr(), domain)


class SphereModel:
    """S^4 with a global chart quadrature (for Gauss-Bonnet-type integrals).

    ``quad_weights`` already include the Riemannian volume element, so
    ``sum(w * f(points))`` approximates the integral of f over the sphere.
    An optional conformal factor e^{2u} (u a sympy expr in the chart)
    perturbs the metric; the volume element picks up e^{4u}.
    """

    volume_round = S4_VOLUME

    def __init__(self, n_theta=16, n_u=8, n_phi=8, conformal_expr=None):
        domain = Box.cube(1e4)
        if conformal_expr is None:
            self.metric = sphere_metric(domain)
        else:
            r2 = sum(c**2 for c in COORDS)
            self.metric = MetricField.from_exprs(
                sp.exp(2 * conformal_expr) * 4 / (1 + r2) ** 2 * sp.eye(4),
                domain,
            )
        theta, wth = gauss_legendre(n_theta, 0.0, np.pi)
        sphere_pts, sphere_w = s3_nodes(n_u, n_phi)
        r = np.tan(theta / 2.0)
        pts = r[:, None, None] * sphere_pts[None, :, :]
        # round-sphere volume element in (theta, S^3) coordinates: sin^3(theta)
        w = (wth * np.sin(theta) ** 3)[:, None] * sphere_w[None, :]
        self.quad_points = pts.reshape(-1, 4)
        base_w = w.reshape(-1)
        if conformal_expr is None:
            self.quad_weights = base_w
            self.volume = S4_VOLUME
        else:
            u = ScalarField.from_expr(conformal_expr, domain)
            factor = np.exp(4.0 * u.eval(self.quad_points))
            self.quad_weights = base_w * factor
            self.volume = float(np.sum(self.quad_weights))

    @staticmethod
    def chart_distance(x, y):
        """Geodesic (great-circle) distance between chart points on unit S^4."""
        x = np.asarray(x, float)
        y = np.asarray(y, float)

        def embed(p):
            r2 = float(p @ p)
            return np.append(2.0 * p, r2 - 1.0) / (1.0 + r2)

        c = float(np.clip(embed(x) @ embed(y), -1.0, 1.0))
        return float(np.arccos(c))


class FlatTorusModel:
    """Flat 4-torus of side L: zero curvature, zero Q, Euler characteristic 0."""

    def __init__(self, L=2.0 * np.pi, n=4):
        self.L = L
        self.metric = MetricField.flat(Box(lo=(0.0,) * 4, hi=(L,) * 4))
        axis = (np.arange(n) + 0.5) * L / n
        grid = np.stack(np.meshgrid(*([axis] * 4), indexing="ij"), axis=-1)
        self.quad_points = grid.reshape(-1, 4)
        self.quad_weights = np.full(self.quad_points.shape[0], (L / n) ** 4)
        self.volume = L**4
