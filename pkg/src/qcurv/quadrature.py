"""Quadrature rules: Gauss-Legendre intervals, S^3 product rules, 4-balls.

S^3 is parametrized by Hopf coordinates (eta, phi1, phi2):

    x = (cos(eta) cos(phi1), cos(eta) sin(phi1),
         sin(eta) cos(phi2), sin(eta) sin(phi2)),   eta in [0, pi/2]

with area element sin(eta) cos(eta) d(eta) d(phi1) d(phi2).  Substituting
u = sin^2(eta) turns the eta-integral into (1/2) * du over [0,1], which a
Gauss rule handles exactly for polynomial integrands; the two angles use
trapezoid rules (spectrally accurate for periodic integrands).
"""

import numpy as np
from scipy import special

S3_AREA = 2.0 * np.pi**2  # area of the unit 3-sphere
BALL4_VOL = np.pi**2 / 2.0  # volume of the unit 4-ball


def gauss_legendre(n, a=0.0, b=1.0):
    """Nodes and weights for Gauss-Legendre on [a, b]."""
    x, w = special.roots_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def s3_nodes(n_u=24, n_phi=24):
    """Quadrature nodes (m, 4) and weights on the unit S^3.

    Weights sum to 2*pi^2 exactly (up to roundoff).
    """
    u, wu = gauss_legendre(n_u, 0.0, 1.0)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2.0 * np.pi / n_phi

    su = np.sqrt(u)  # sin(eta)
    cu = np.sqrt(1.0 - u)  # cos(eta)
    c1, s1 = np.cos(phi), np.sin(phi)
    c2, s2 = np.cos(phi), np.sin(phi)

    pts = np.empty((n_u, n_phi, n_phi, 4))
    pts[..., 0] = cu[:, None, None] * c1[None, :, None]
    pts[..., 1] = cu[:, None, None] * s1[None, :, None]
    pts[..., 2] = su[:, None, None] * c2[None, None, :]
    pts[..., 3] = su[:, None, None] * s2[None, None, :]

    w = 0.5 * wu[:, None, None] * wphi * wphi * np.ones((n_u, n_phi, n_phi))
    return pts.reshape(-1, 4), w.reshape(-1)


def sphere_rule(radius, n_u=24, n_phi=24):
    """Nodes/weights on the sphere |x| = radius in R^4 (weights sum to 2 pi^2 r^3)."""
    pts, w = s3_nodes(n_u, n_phi)
    return radius * pts, radius**3 * w


def ball_rule(radius, n_r=48, n_u=24, n_phi=24, r_min=0.0):
    """Polar product rule on the (annular) ball r_min <= |x| <= radius.

    Returns nodes (m, 4) and weights summing to the 4-volume.
    """
    r, wr = gauss_legendre(n_r, r_min, radius)
    s_pts, s_w = s3_nodes(n_u, n_phi)
    pts = r[:, None, None] * s_pts[None, :, :]
    w = (wr * r**3)[:, None] * s_w[None, :]
    return pts.reshape(-1, 4), w.reshape(-1)


def radial_ball_integral(f_of_r, radius, n_r=200, r_min=0.0):
    """Integrate a radial function over the 4-ball: 2 pi^2 * int r^3 f(r) dr."""
    r, wr = gauss_legendre(n_r, r_min, radius)
    return S3_AREA * float(np.sum(wr * r**3 * f_of_r(r)))
