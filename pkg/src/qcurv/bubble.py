"""Standard bubbles, linearized kernel, mass integrals, barrier checks.

The rescaled profile is U(y) = -log(1 + rho |y|^2) with rho = sqrt(H)/(4 sqrt 3)
(so rho^2 = H/48), which satisfies Delta^2 U = 2 H e^{4U} identically on R^4.
All derivatives below are closed forms obtained by the chain rule in
s = rho r^2:

    U'        = -2 rho r / (1+s)
    U''       = -2 rho (1-s) / (1+s)^2
    U'''      =  4 rho^2 r (3-s) / (1+s)^3
    Delta U   = -4 rho (2+s) / (1+s)^2
    (Delta U)'=  8 rho^2 r (3+s) / (1+s)^3
    Delta^2 U =  96 rho^2 / (1+s)^4
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_legendre, S3_AREA

H_FLOOR = 1e-3  # default lower bound c0 for H

RHO0 = 1.0 / (4.0 * np.sqrt(3.0))  # rho at the lemma normalization H = 1

MASS_LIMIT = 16.0 * np.pi**2


@dataclass(frozen=True)
class BubbleParams:
    """Unscaled bubble U_{p,eps,H}(xi) = -log(eps + sqrt(H) d^2 / (4 sqrt(3) eps))."""

    p: tuple
    eps: float
    H: float

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.H < H_FLOOR:
            raise ValueError(f"H must be >= {H_FLOOR}")


def bubble_eval(b: BubbleParams, d):
    """Profile value at distance d >= 0 from the center."""
    d = np.asarray(d, float)
    if np.any(d < 0):
        raise ValueError("distance must be nonnegative")
    return -np.log(b.eps + np.sqrt(b.H) * d**2 / (4.0 * np.sqrt(3.0) * b.eps))


@dataclass(frozen=True)
class RescaledBubble:
    """U(y) = -log(1 + rho |y|^2), the H-normalized entire solution."""

    H: float = 1.0

    @property
    def rho(self):
        return np.sqrt(self.H) / (4.0 * np.sqrt(3.0))

    def _s(self, r):
        return self.rho * np.asarray(r, float) ** 2

    def val(self, y):
        r = np.linalg.norm(np.atleast_2d(y), axis=1)
        return -np.log1p(self._s(r))

    def val_r(self, r):
        return -np.log1p(self._s(r))

    def d1(self, r):
        s = self._s(r)
        return -2.0 * self.rho * r / (1.0 + s)

    def d2(self, r):
        s = self._s(r)
        return -2.0 * self.rho * (1.0 - s) / (1.0 + s) ** 2

    def d3(self, r):
        s = self._s(r)
        return 4.0 * self.rho**2 * r * (3.0 - s) / (1.0 + s) ** 3

    def grad(self, y):
        y = np.atleast_2d(np.asarray(y, float))
        s = self.rho * np.sum(y**2, axis=1)
        return -2.0 * self.rho * y / (1.0 + s)[:, None]

    def lap(self, y_or_r):
        r = _radius(y_or_r)
        s = self._s(r)
        return -4.0 * self.rho * (2.0 + s) / (1.0 + s) ** 2

    def dlap_dr(self, y_or_r):
        r = _radius(y_or_r)
        s = self._s(r)
        return 8.0 * self.rho**2 * r * (3.0 + s) / (1.0 + s) ** 3

    def bilap(self, y_or_r):
        r = _radius(y_or_r)
        s = self._s(r)
        return 96.0 * self.rho**2 / (1.0 + s) ** 4

    def exp4u(self, y_or_r):
        r = _radius(y_or_r)
        return 1.0 / (1.0 + self._s(r)) ** 4


def _radius(y_or_r):
    a = np.asarray(y_or_r, float)
    if a.ndim >= 1 and a.shape[-1] == 4 and a.ndim <= 2:
        return np.linalg.norm(np.atleast_2d(a), axis=1)
    return a


def rescaling_identity_gap(b: BubbleParams, xi):
    """|U_{p,eps,H}(xi) - (U((xi-p)/eps) - log eps)|, identically 0."""
    xi = np.asarray(xi, float)
    d = np.linalg.norm(xi - np.asarray(b.p, float))
    lhs = float(bubble_eval(b, d))
    rb = RescaledBubble(H=b.H)
    rhs = float(rb.val_r(d / b.eps)) - np.log(b.eps)
    return abs(lhs - rhs)


def bubble_pde_residual(rb: RescaledBubble, y):
    """Delta^2 U - 2 H e^{4U}; analytically zero."""
    return rb.bilap(y) - 2.0 * rb.H * rb.exp4u(y)


class KernelElement:
    """The five bounded solutions of Delta^2 phi = 8 e^{4U} phi at H = 1.

    psi_0 = (1-s)/(1+s) (dilation), psi_j = y_j/(1+s) (translations),
    where s = |y|^2 / (4 sqrt 3).  Closed-form Laplacians:

        Delta psi_0 = -16 rho0 (1+s)^{-3}
        Delta^2 psi_0 = 8 (1-s)(1+s)^{-5}
        Delta psi_j = -4 rho0 y_j (3+s)(1+s)^{-3}
        Delta^2 psi_j = 8 y_j (1+s)^{-5}
    """

    def __init__(self, index):
        if index not in range(5):
            raise ValueError("index must be in 0..4")
        self.index = index

    def _s(self, y):
        y = np.atleast_2d(np.asarray(y, float))
        return RHO0 * np.sum(y**2, axis=1)

    def val(self, y):
        y = np.atleast_2d(np.asarray(y, float))
        s = self._s(y)
        if self.index == 0:
            return (1.0 - s) / (1.0 + s)
        return y[:, self.index - 1] / (1.0 + s)

    def bilap(self, y):
        y = np.atleast_2d(np.asarray(y, float))
        s = self._s(y)
        if self.index == 0:
            return 8.0 * (1.0 - s) / (1.0 + s) ** 5
        return 8.0 * y[:, self.index - 1] / (1.0 + s) ** 5

    def lap(self, y):
        y = np.atleast_2d(np.asarray(y, float))
        s = self._s(y)
        if self.index == 0:
            return -16.0 * RHO0 / (1.0 + s) ** 3
        return -4.0 * RHO0 * y[:, self.index - 1] * (3.0 + s) / (1.0 + s) ** 3


def linearized_residual(k: KernelElement, y):
    """Delta^2 psi - 8 e^{4U} psi at H = 1; analytically zero."""
    rb = RescaledBubble(H=1.0)
    return k.bilap(y) - 8.0 * rb.exp4u(y) * k.val(y)


def mass_integral(rb: RescaledBubble, R, n_r=64):
    """2 H * integral of e^{4U} over B_R, by composite radial quadrature."""
    if R < 0:
        raise ValueError("R must be nonnegative")
    if R == 0:
        return 0.0
    edges = [0.0]
    e = min(1.0, R)
    while e < R:
        edges.append(e)
        e *= 4.0
    edges.append(R)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        r, w = gauss_legendre(n_r, a, b)
        total += float(np.sum(w * r**3 * rb.exp4u(r)))
    return 2.0 * rb.H * S3_AREA * total


def mass_integral_exact(rb: RescaledBubble, R):
    """Closed form of mass_integral: 96 pi^2 [F(T) - F(0)], T = rho R^2,
    with F(t) = -1/2 (1+t)^{-2} + 1/3 (1+t)^{-3}."""
    T = rb.rho * R**2

    def F(t):
        return -0.5 / (1.0 + t) ** 2 + 1.0 / (3.0 * (1.0 + t) ** 3)

    return 96.0 * np.pi**2 * (F(T) - F(0.0))


def bubble_scalar_field(rb: RescaledBubble, domain):
    """U as an analytic ScalarField on ``domain`` (for operator application)."""
    import sympy as sp

    from .fields import COORDS, ScalarField

    r2 = sum(c**2 for c in COORDS)
    return ScalarField.from_expr(-sp.log(1 + sp.Float(rb.rho) * r2), domain)


def perturbed_paneitz_residual(rb: RescaledBubble, g_field, y, step=None):
    """P_g U(y) - 2 H e^{4U(y)} for a blow-up metric g.

    For the flat metric this reduces to bubble_pde_residual.  ``g_field``
    must cover y with margin (Taylor validity is the caller's contract).
    """
    from .curvature import paneitz_apply

    y = np.asarray(y, float)
    g_field.domain.require_interior(y, margin=0.0)
    u = bubble_scalar_field(rb, g_field.domain)
    return paneitz_apply(g_field, u, y, step=step) - 2.0 * rb.H * float(
        rb.exp4u(y[None, :])[0]
    )


def barrier_check(lap_v, rb: RescaledBubble, A, L, c_max=1e6, n=200):
    """Search for C with Delta[C(1 + 1/|y|)] <= -|Delta v - Delta U| on A<=r<=L.

    In R^4, Delta(1/r) = -r^{-3}, so the condition reads C >= r^3 |dlap(r)|.
    Returns (admissible, minimal_C).  ``lap_v`` maps radius to Delta v.
    """
    r = np.geomspace(A, L, n)
    gap = np.abs(np.asarray(lap_v(r), float) - rb.lap(r))
    c_min = float(np.max(r**3 * gap))
    return c_min <= c_max, c_min


def weighted_sup_norm(u, b: BubbleParams, tau, delta, n=2000, rng=None):
    """tau-weighted sup norm of u - U_{p,eps,H} outside the core d < eps.

    ``u`` maps points (m, 4) to values.  Returns (outer, core) where outer =
    sup_{eps<=d<=delta} |u - U| / d^tau and core = sup_{d<eps} |u - U| / eps^tau.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    rng = np.random.default_rng(rng)
    p = np.asarray(b.p, float)

    def sample_shell(d_lo, d_hi, m):
        d = np.exp(rng.uniform(np.log(max(d_lo, 1e-12)), np.log(d_hi), m))
        v = rng.standard_normal((m, 4))
        v /= np.linalg.norm(v, axis=1)[:, None]
        return p + d[:, None] * v, d

    pts, d = sample_shell(b.eps, delta, n)
    diff = np.abs(np.asarray(u(pts), float) - bubble_eval(b, d))
    outer = float(np.max(diff / d**tau))

    pts_c, d_c = sample_shell(b.eps * 1e-3, b.eps, n // 4)
    diff_c = np.abs(np.asarray(u(pts_c), float) - bubble_eval(b, d_c))
    core = float(np.max(diff_c) / b.eps**tau)
    return outer, core
