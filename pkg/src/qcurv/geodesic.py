"""Geodesic distances on perturbed metrics and Euclidean-comparison checks.

Distances are computed by minimizing the path energy of a polyline with
fixed endpoints; the energy functional (rather than length) removes the
reparametrization degeneracy, and the length of the optimal path is
reported.  Comparison sweeps quantify how far the distance of a small
curvature perturbation of the flat metric departs from the Euclidean one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .cnc import blowup_metric
from .fields import ChartError, MetricField

DEFAULT_NODES = 64
GRAD_TOL = 1e-10


@dataclass
class PathPolyline:
    """Ordered chart-coordinate nodes with fixed endpoints."""

    nodes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.nodes = np.atleast_2d(np.asarray(self.nodes, float))
        if self.nodes.shape[0] < 2 or self.nodes.shape[1] != 4:
            raise ValueError("polyline needs >= 2 nodes of dimension 4")

    @property
    def midpoints(self):
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @property
    def deltas(self):
        return self.nodes[1:] - self.nodes[:-1]

    def energy(self, g: MetricField):
        """n * sum of Delta^T g(midpoint) Delta over the n segments."""
        G = g.eval_batch(self.midpoints)
        d = self.deltas
        return float(len(d) * np.einsum("na,nab,nb->", d, G, d))

    def length(self, g: MetricField):
        G = g.eval_batch(self.midpoints)
        d = self.deltas
        return float(np.sum(np.sqrt(np.einsum("na,nab,nb->n", d, G, d))))


def _energy_and_grad(flat_interior, g, y, z, n_seg):
    nodes = np.vstack([y, flat_interior.reshape(-1, 4), z])
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    d = nodes[1:] - nodes[:-1]
    G, dG = g.jet(mids, 1)
    quad = np.einsum("na,nab,nb->n", d, G, d)
    energy = n_seg * float(np.sum(quad))
    # dE/dx_p collects the two adjacent segments: the Delta endpoints and
    # the half-weight of each midpoint inside g(m).
    gd = np.einsum("nab,nb->na", G, d)  # (G Delta)_a per segment
    mid_term = 0.5 * np.einsum("na,nabc,nb->nc", d, dG, d)
    grad = np.zeros_like(nodes)
    grad[1:] += 2.0 * gd + mid_term
    grad[:-1] += -2.0 * gd + mid_term
    return energy, n_seg * grad[1:-1].ravel()


def geodesic_distance(
    g: MetricField, y, z, n_nodes=DEFAULT_NODES, max_iter=5000, tol=GRAD_TOL
):
    """Length of the energy-minimizing polyline from y to z.

    Equals |y - z| exactly for the flat metric (the straight equispaced
    polyline is already stationary).  Raises on non-convergence or if the
    optimal path leaves the metric's domain.
    """
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    t = np.linspace(0.0, 1.0, n_nodes)[:, None]
    nodes = (1.0 - t) * y + t * z
    for p in nodes:
        g.domain.require_interior(p, margin=0.0)
    if g.is_flat:
        return float(np.linalg.norm(y - z))
    n_seg = n_nodes - 1
    res = minimize(
        _energy_and_grad,
        nodes[1:-1].ravel(),
        args=(g, y, z, n_seg),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-16},
    )
    # L-BFGS line searches stall near the rounding floor of the energy; a
    # residual gradient of size s only perturbs the length at order s^2,
    # so anything at or below 1e-6 is converged for our purposes.
    gnorm = float(np.max(np.abs(res.jac)))
    if not res.success and gnorm > max(1e3 * tol, 1e-6):
        raise RuntimeError(f"geodesic solver did not converge: {res.message}")
    path = PathPolyline(np.vstack([y, res.x.reshape(-1, 4), z]))
    for p in path.nodes:
        if not g.domain.contains(p):
            raise ChartError("optimal path left the metric domain")
    return path.length(g)


def distance_ratio_sweep(jet, eps_list, pairs, n_nodes=DEFAULT_NODES):
    """Fit c in |d_g/|y-z| - 1| <= c eps^2 (|y|^2 + |z|^2) over an eps sweep.

    The metric is the blow-up expansion of the jet with its quadratic term
    scaled by eps^2 (cubic by eps^3).  Returns per-pair rows, the per-eps
    worst constant, a stability ratio max/min of those constants, and the
    log-log exponent of the mean ratio gap in eps (2 for a genuine
    second-order departure).
    """
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps values must be positive")
    rows = []
    per_eps_c = {}
    mean_gap = []
    for eps in eps_list:
        g = blowup_metric(jet, eps, half_width=4.0 / eps)
        consts, gaps = [], []
        for y, z in pairs:
            y = np.asarray(y, float)
            z = np.asarray(z, float)
            euclid = float(np.linalg.norm(y - z))
            geod = geodesic_distance(g, y, z, n_nodes=n_nodes)
            gap = abs(geod / euclid - 1.0)
            scale = eps**2 * (np.dot(y, y) + np.dot(z, z))
            c = gap / scale
            rows.append(
                {
                    "eps": eps,
                    "y_norm": float(np.linalg.norm(y)),
                    "z_norm": float(np.linalg.norm(z)),
                    "euclid": euclid,
                    "geodesic": geod,
                    "ratio_gap": gap,
                    "fitted_c": c,
                }
            )
            consts.append(c)
            gaps.append(gap)
        per_eps_c[eps] = float(np.max(consts))
        mean_gap.append(float(np.mean(gaps)))
    cs = np.array([per_eps_c[e] for e in eps_list])
    stability = float(np.max(cs) / np.min(cs))
    slope = float(np.polyfit(np.log(eps_list), np.log(mean_gap), 1)[0])
    return {
        "rows": rows,
        "per_eps_c": per_eps_c,
        "stability_ratio": stability,
        "eps_exponent": slope,
    }


_STENCILS = {
    1: ([-1, 1], [-0.5, 0.5], 1),
    2: ([-1, 0, 1], [1.0, -2.0, 1.0], 2),
    3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5], 3),
}


def log_distance_derivative_gap(jet, eps, y, z, order, direction=None, n_nodes=32):
    """FD derivative in y of log|y-z| - log d_g(y,z) along a direction.

    Central differences over full geodesic re-solves, step 1e-3 |y|.  The
    same stencil is re-evaluated at twice the step; the relative spread of
    the two values is returned as a noise indicator (a large spread means
    the FD step sits below the solver noise floor).
    """
    if order not in _STENCILS:
        raise ValueError("order must be 1, 2, or 3")
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    if np.linalg.norm(z) >= 0.5 * np.linalg.norm(y):
        raise ValueError("requires |z| < |y|/2")
    if direction is None:
        direction = y / np.linalg.norm(y)
    direction = np.asarray(direction, float)
    direction = direction / np.linalg.norm(direction)
    g = blowup_metric(jet, eps, half_width=4.0 * np.linalg.norm(y) / max(eps, 1e-12))

    def f(t):
        p = y + t * direction
        gap = np.log(np.linalg.norm(p - z))
        if eps > 0:
            gap -= np.log(geodesic_distance(g, p, z, n_nodes=n_nodes))
        else:
            gap -= np.log(np.linalg.norm(p - z))
        return gap

    offsets, coeffs, power = _STENCILS[order]
    step = 1e-3 * np.linalg.norm(y)

    def stencil(h):
        return sum(c * f(o * h) for o, c in zip(offsets, coeffs)) / h**power

    v1 = stencil(step)
    v2 = stencil(2.0 * step)
    scale = max(abs(v1), abs(v2), 1e-300)
    return {"value": v1, "coarse_value": v2, "noise": abs(v1 - v2) / scale}
