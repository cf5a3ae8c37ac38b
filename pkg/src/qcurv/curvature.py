"""Curvature tensors, the Paneitz operator, and conformal-transformation checks.

Conventions (fixed once, used everywhere):

* Riemann:  R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
            + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb};
  Ricci is the (a,c) trace.  The round sphere then has R = +12.
* All tensors are stored with lowered indices; raising is explicit.
* Weyl (dimension 4, lowered):
      W_abcd = R_abcd - (1/2)(g_ac Ric_bd - g_ad Ric_bc
                              + g_bd Ric_ac - g_bc Ric_ad)
             + (R/6)(g_ac g_bd - g_ad g_bc),
  the normalization pinned by W = 0 on constant-curvature metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .fields import (
    COORDS,
    DIM,
    MetricField,
    ScalarField,
    fd_partial,
    _D1_COEF,
    _D2_COEF,
    _OFFSETS,
)


def _christoffel(g, ginv, dg):
    """Gamma^a_{bc} from g, g^{-1} and dg[a,b,c] = d_c g_ab."""
    # 1/2 g^{ad} (d_b g_dc + d_c g_db - d_d g_bc)
    brack = np.empty((DIM, DIM, DIM))
    for d in range(DIM):
        for b in range(DIM):
            for c in range(DIM):
                brack[d, b, c] = dg[d, c, b] + dg[d, b, c] - dg[b, c, d]
    return 0.5 * np.einsum("ad,dbc->abc", ginv, brack)


def _dchristoffel(ginv, dg, d2g):
    """d_e Gamma^a_{bc}; d2g[a,b,c,d] = d_c d_d g_ab."""
    dginv = -np.einsum("am,mne,nd->ade", ginv, dg, ginv)  # d_e g^{ad}
    brack = np.empty((DIM, DIM, DIM))
    dbrack = np.empty((DIM, DIM, DIM, DIM))
    for d in range(DIM):
        for b in range(DIM):
            for c in range(DIM):
                brack[d, b, c] = dg[d, c, b] + dg[d, b, c] - dg[b, c, d]
                for e in range(DIM):
                    dbrack[d, b, c, e] = (
                        d2g[d, c, b, e] + d2g[d, b, c, e] - d2g[b, c, d, e]
                    )
    out = 0.5 * np.einsum("ade,dbc->abce", dginv, brack)
    out += 0.5 * np.einsum("ad,dbce->abce", ginv, dbrack)
    return out


@dataclass
class RiemannAtPoint:
    """Lowered Riemann tensor with the metric at the point."""

    components: np.ndarray  # R_abcd
    g: np.ndarray

    @property
    def g_inv(self):
        return np.linalg.inv(self.g)

    @property
    def ricci(self):
        return np.einsum("ac,abcd->bd", self.g_inv, self.components)

    @property
    def scalar(self):
        return float(np.einsum("bd,bd->", self.g_inv, self.ricci))

    @property
    def ricci_norm_sq(self):
        ric = self.ricci
        gi = self.g_inv
        return float(np.einsum("ab,cd,ac,bd->", gi, gi, ric, ric))

    def symmetry_residuals(self):
        r = self.components
        return {
            "antisym_first": float(np.max(np.abs(r + r.transpose(1, 0, 2, 3)))),
            "antisym_last": float(np.max(np.abs(r + r.transpose(0, 1, 3, 2)))),
            "pair": float(np.max(np.abs(r - r.transpose(2, 3, 0, 1)))),
            "bianchi": float(
                np.max(
                    np.abs(
                        r + r.transpose(0, 2, 3, 1) + r.transpose(0, 3, 1, 2)
                    )
                )
            ),
        }

    def check(self, tol=1e-10):
        return all(v <= tol for v in self.symmetry_residuals().values())


def riemann_of_metric(g: MetricField, x) -> RiemannAtPoint:
    """Lowered Riemann tensor of ``g`` at ``x``."""
    x = np.asarray(x, float)
    margin = 0.0 if g.analytic else 2 * g.fd_step
    g.domain.require_interior(x, margin)
    gm = g.eval(x)  # raises on degeneracy
    g0, dg, d2g = g.jet(x, 2)
    g0, dg, d2g = g0[0], dg[0], d2g[0]
    ginv = np.linalg.inv(g0)
    gam = _christoffel(g0, ginv, dg)
    dgam = _dchristoffel(ginv, dg, d2g)
    # R^a_{bcd} = d_c Gam^a_{db} - d_d Gam^a_{cb} + Gam Gam terms
    r_up = np.empty((DIM, DIM, DIM, DIM))
    for a in range(DIM):
        for b in range(DIM):
            for c in range(DIM):
                for d in range(DIM):
                    r_up[a, b, c, d] = dgam[a, d, b, c] - dgam[a, c, b, d]
    r_up += np.einsum("ace,edb->abcd", gam, gam)
    r_up -= np.einsum("ade,ecb->abcd", gam, gam)
    r_low = np.einsum("ae,ebcd->abcd", gm, r_up)
    return RiemannAtPoint(components=r_low, g=gm)


def weyl_tensor(riem: RiemannAtPoint, g_at_x=None) -> np.ndarray:
    """Lowered Weyl tensor W_abcd (trace-free part of Riemann, n = 4)."""
    g = riem.g if g_at_x is None else np.asarray(g_at_x, float)
    r = riem.components
    ric = riem.ricci
    scal = riem.scalar
    kulk = np.einsum("ac,bd->abcd", g, ric) - np.einsum("ad,bc->abcd", g, ric)
    kulk += np.einsum("bd,ac->abcd", g, ric) - np.einsum("bc,ad->abcd", g, ric)
    gg = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    return r - 0.5 * kulk + (scal / 6.0) * gg


def weyl_trace_residual(w, g):
    """Max magnitude over all single g^{-1}-contractions of a Weyl candidate."""
    gi = np.linalg.inv(g)
    worst = 0.0
    for axes in [(0, 2), (0, 3), (1, 2), (1, 3), (0, 1), (2, 3)]:
        sub = "abcd"
        spec = sub[axes[0]] + sub[axes[1]]
        tr = np.einsum(f"{spec},abcd->" + "".join(
            ch for ch in sub if ch not in spec), gi, w)
        worst = max(worst, float(np.max(np.abs(tr))))
    return worst


def weyl_norm_sq(w, g):
    """|W|^2 = W_abcd W^abcd with indices raised by g^{-1}."""
    gi = np.linalg.inv(g)
    w_up = np.einsum("ae,bf,cg,dh,efgh->abcd", gi, gi, gi, gi, w)
    return float(np.einsum("abcd,abcd->", w, w_up))


def laplace_beltrami(g: MetricField, u: ScalarField, x) -> float:
    """Delta_g u(x) = g^{ij}(d_ij u - Gamma^k_ij d_k u)."""
    x = np.atleast_2d(np.asarray(x, float))
    g0, dg = (a[0] for a in g.jet(x, 1))
    ginv = np.linalg.inv(g0)
    gam = _christoffel(g0, ginv, dg)
    hess = u.hessian(x)[0]
    grad = u.gradient(x)[0]
    return float(
        np.einsum("ij,ij->", ginv, hess)
        - np.einsum("ij,kij,k->", ginv, gam, grad)
    )


def scalar_curvature(g: MetricField, x) -> float:
    return riemann_of_metric(g, x).scalar


def scalar_curvature_batch(g: MetricField, pts) -> np.ndarray:
    """Scalar curvature at many points in one vectorized jet evaluation."""
    pts = np.atleast_2d(np.asarray(pts, float))
    g0, dg, d2g = g.jet(pts, 2)
    ginv = np.linalg.inv(g0)
    # brack[n,d,b,c] = d_b g_dc + d_c g_db - d_d g_bc
    brack = dg.transpose(0, 1, 3, 2) + dg - dg.transpose(0, 3, 1, 2)
    gam = 0.5 * np.einsum("nad,ndbc->nabc", ginv, brack)
    dginv = -np.einsum("nam,nmpe,npd->nade", ginv, dg, ginv)
    dbrack = (
        d2g.transpose(0, 1, 3, 2, 4) + d2g - d2g.transpose(0, 3, 1, 2, 4)
    )
    dgam = 0.5 * np.einsum("nade,ndbc->nabce", dginv, brack)
    dgam += 0.5 * np.einsum("nad,ndbce->nabce", ginv, dbrack)
    r_up = dgam.transpose(0, 1, 3, 4, 2) - dgam.transpose(0, 1, 3, 2, 4)
    r_up += np.einsum("nace,nedb->nabcd", gam, gam)
    r_up -= np.einsum("nade,necb->nabcd", gam, gam)
    r_low = np.einsum("nae,nebcd->nabcd", g0, r_up)
    ric = np.einsum("nac,nabcd->nbd", ginv, r_low)
    return np.einsum("nbd,nbd->n", ginv, ric)


def q_curvature(g: MetricField, x, step=None) -> float:
    """Q_g(x) = -(1/12)(Delta_g R - R^2 + 3 |Ric|^2).

    R and Ric come from exact metric jets; Delta_g R uses order-4 centered
    differences over exact scalar-curvature evaluations.
    """
    x = np.asarray(x, float)
    if g.is_flat:
        return 0.0
    riem = riemann_of_metric(g, x)
    scal = riem.scalar
    ric_sq = riem.ricci_norm_sq
    if step is None:
        step = max(1e-2, 1e-2 * float(np.linalg.norm(x)))
    # gather every stencil point of grad R / hess R and evaluate the scalar
    # curvature in a single batched jet call (same order-4 stencils as
    # fd_partial, just without the per-point python recursion)
    offsets = {}

    def key(off):
        t = tuple(off)
        if t not in offsets:
            offsets[t] = len(offsets)
        return offsets[t]

    grad_plan = []
    for i in range(DIM):
        plan = []
        for k, c in zip(_OFFSETS, _D1_COEF):
            if c == 0.0:
                continue
            off = [0] * DIM
            off[i] = k
            plan.append((key(off), c))
        grad_plan.append(plan)
    hess_plan = {}
    for i in range(DIM):
        for j in range(i, DIM):
            plan = []
            if i == j:
                for k, c in zip(_OFFSETS, _D2_COEF):
                    off = [0] * DIM
                    off[i] = k
                    plan.append((key(off), c))
            else:
                for k, ck in zip(_OFFSETS, _D1_COEF):
                    if ck == 0.0:
                        continue
                    for l, cl in zip(_OFFSETS, _D1_COEF):
                        if cl == 0.0:
                            continue
                        off = [0] * DIM
                        off[i] = k
                        off[j] = l
                        plan.append((key(off), ck * cl))
            hess_plan[(i, j)] = plan
    pts = x[None, :] + step * np.array(list(offsets.keys()), float)
    vals = scalar_curvature_batch(g, pts)
    grad_r = np.array(
        [sum(c * vals[idx] for idx, c in grad_plan[i]) for i in range(DIM)]
    ) / step
    hess_r = np.empty((DIM, DIM))
    for (i, j), plan in hess_plan.items():
        hess_r[i, j] = hess_r[j, i] = sum(c * vals[idx] for idx, c in plan) / step**2
    g0, dg = (a[0] for a in g.jet(np.atleast_2d(x), 1))
    ginv = np.linalg.inv(g0)
    gam = _christoffel(g0, ginv, dg)
    lap_r = float(
        np.einsum("ij,ij->", ginv, hess_r)
        - np.einsum("ij,kij,k->", ginv, gam, grad_r)
    )
    return -(lap_r - scal**2 + 3.0 * ric_sq) / 12.0


def _lap_field(g: MetricField, u: ScalarField):
    """Delta_g u as a callable of the point (exact jets inside)."""

    def lap(p):
        return laplace_beltrami(g, u, p)

    return lap


def paneitz_apply(g: MetricField, u: ScalarField, x, step=None) -> float:
    """P_g u(x) = Delta_g^2 u - div_g((2/3 R g - 2 Ric) grad u).

    The second term is the codifferential pairing delta(T du); the sign is
    pinned by conformal covariance (on the round S^4 it gives the known
    P = Delta^2 - 2 Delta).  Flat metrics take an exact path.  Curved metrics
    evaluate inner quantities from exact jets and apply the outer
    derivatives with order-4 centered differences of step ``step``.
    """
    x = np.asarray(x, float)
    if g.is_flat:
        total = 0.0
        pt = np.atleast_2d(x)
        for i in range(DIM):
            for j in range(DIM):
                total += float(u.partial(pt, (i, i, j, j))[0])
        return total
    if step is None:
        step = g.fd_step

    lap = _lap_field(g, u)

    # outer Laplacian of f = Delta_g u:
    # Delta_g f = g^{ij} d_ij f + (d_i(sqrt(g) g^{ij})/sqrt(g)) d_j f,
    # with the coefficient fields exact from jets and f-derivatives by FD.
    g0, dg = (a[0] for a in g.jet(np.atleast_2d(x), 1))
    ginv = np.linalg.inv(g0)
    sg = np.sqrt(np.linalg.det(g0))
    # d_i sqrt(g) = (1/2) sqrt(g) g^{ab} d_i g_ab
    dsg = 0.5 * sg * np.einsum("ab,abi->i", ginv, dg)
    dginv = -np.einsum("am,mni,nb->abi", ginv, dg, ginv)
    coef = (np.einsum("i,ij->j", dsg, ginv) + sg * np.einsum("iji->j", dginv)) / sg

    hess_f = np.empty((DIM, DIM))
    grad_f = np.empty(DIM)
    for i in range(DIM):
        grad_f[i] = fd_partial(lap, x, (i,), step)
        for j in range(i, DIM):
            hess_f[i, j] = hess_f[j, i] = fd_partial(lap, x, (i, j), step)
    bilap = float(np.einsum("ij,ij->", ginv, hess_f) + coef @ grad_f)

    # divergence term: V^i = sqrt(g) T^{ij} d_j u with
    # T^{ij} = (2/3) R g^{ij} - 2 Ric^{ij}; div = (1/sqrt(g)) d_i V^i by FD.
    def v_comp(p, i):
        riem = riemann_of_metric(g, p)
        gi = riem.g_inv
        t_up = (2.0 / 3.0) * riem.scalar * gi - 2.0 * np.einsum(
            "ia,jb,ab->ij", gi, gi, riem.ricci
        )
        gradu = u.gradient(np.atleast_2d(p))[0]
        sgp = np.sqrt(np.linalg.det(riem.g))
        return sgp * float(t_up[i] @ gradu)

    div = 0.0
    for i in range(DIM):
        div += fd_partial(lambda p, i=i: v_comp(p, i), x, (i,), step)
    div /= sg
    return bilap - div


def conformal_transform(g: MetricField, u: ScalarField) -> MetricField:
    """The conformal metric e^{2u} g, with composed derivative access."""
    if g.domain != u.domain:
        raise ValueError("domains must match")
    if g.analytic and u.analytic:
        return MetricField.from_exprs(sp.exp(2 * u.expr) * g.matrix, g.domain)

    def func(p):
        return np.exp(2.0 * u(p)) * g.eval_batch(np.atleast_2d(p))[0]

    return MetricField.from_callable(func, g.domain, fd_step=g.fd_step)


def check_conformal_covariance(g, u, f, pts, step=None):
    """Max over ``pts`` of |P_gt f - e^{-4u} P_g f| for gt = e^{2u} g."""
    gt = conformal_transform(g, u)
    worst = 0.0
    for p in np.atleast_2d(np.asarray(pts, float)):
        lhs = paneitz_apply(gt, f, p, step=step)
        rhs = np.exp(-4.0 * u(p)) * paneitz_apply(g, f, p, step=step)
        worst = max(worst, abs(lhs - rhs))
    return worst


def check_q_transformation(g, u, pts, step=None):
    """Max over ``pts`` of |P_g u + 2 Q_g - 2 Q_gt e^{4u}|."""
    gt = conformal_transform(g, u)
    worst = 0.0
    for p in np.atleast_2d(np.asarray(pts, float)):
        lhs = paneitz_apply(g, u, p, step=step) + 2.0 * q_curvature(g, p, step=step)
        rhs = 2.0 * q_curvature(gt, p, step=step) * np.exp(4.0 * u(p))
        worst = max(worst, abs(lhs - rhs))
    return worst


def gauss_bonnet_check(model):
    """Integral of (Q + |W|^2 / 8) dV over a closed model.

    ``model`` supplies ``metric``, ``quad_points`` (chart nodes) and
    ``quad_weights`` (including the Riemannian volume factor).  Raises if
    the weights do not reproduce the model volume within 1%.
    """
    g = model.metric
    pts = model.quad_points
    w = model.quad_weights
    vol = float(np.sum(w))
    if abs(vol - model.volume) > 0.01 * model.volume:
        raise ValueError(
            f"quadrature volume {vol:.6g} vs expected {model.volume:.6g}"
        )
    total = 0.0
    for p, wt in zip(pts, w):
        riem = riemann_of_metric(g, p)
        q = q_curvature(g, p)
        wsq = weyl_norm_sq(weyl_tensor(riem), riem.g)
        total += wt * (q + wsq / 8.0)
    return total
