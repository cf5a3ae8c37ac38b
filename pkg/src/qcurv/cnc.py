"""Conformal-normal-coordinate metric Taylor expansions, in exact arithmetic.

Polynomials in the chart variable xi in R^4 are dicts mapping exponent
tuples (e0, e1, e2, e3) to Fraction coefficients, so every algebraic
identity below is checked to literal zero, not to a float tolerance.

Curvature jets use the lowered-index convention of the curvature module
(round sphere positive): Ric_ij = sum_a R[a,i,a,j], and the normal
coordinate expansion

    g_ab(xi) = delta_ab + (1/3) R_aijb(0) xi^i xi^j
             + (1/6) R_aijb,k(0) xi^i xi^j xi^k + O(r^4).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import sympy as sp

from .fields import Box, COORDS, MetricField

DIM = 4

# ---------------------------------------------------------------------------
# exact polynomial arithmetic


def poly_zero():
    return {}


def poly_const(c):
    c = Fraction(c)
    return {} if c == 0 else {(0, 0, 0, 0): c}


def poly_var(i):
    e = [0, 0, 0, 0]
    e[i] = 1
    return {tuple(e): Fraction(1)}


def poly_add(*ps):
    out = {}
    for p in ps:
        for m, c in p.items():
            c2 = out.get(m, Fraction(0)) + c
            if c2 == 0:
                out.pop(m, None)
            else:
                out[m] = c2
    return out


def poly_scale(p, c):
    c = Fraction(c)
    if c == 0:
        return {}
    return {m: v * c for m, v in p.items()}


def poly_mul(p, q):
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(a + b for a, b in zip(m1, m2))
            c = out.get(m, Fraction(0)) + c1 * c2
            if c == 0:
                out.pop(m, None)
            else:
                out[m] = c
    return out


def poly_diff(p, i):
    out = {}
    for m, c in p.items():
        if m[i] == 0:
            continue
        m2 = list(m)
        m2[i] -= 1
        out[tuple(m2)] = c * m[i]
    return out


def poly_truncate(p, max_deg):
    return {m: c for m, c in p.items() if sum(m) <= max_deg}


def poly_degree_part(p, deg):
    return {m: c for m, c in p.items() if sum(m) == deg}


def poly_eval(p, x):
    x = np.asarray(x, float)
    total = 0.0
    for m, c in p.items():
        total += float(c) * np.prod(x**np.array(m))
    return total


def poly_to_sympy(p, scale=1):
    expr = sp.Integer(0)
    for m, c in p.items():
        term = sp.Rational(c.numerator, c.denominator)
        for i, e in enumerate(m):
            term *= (scale * COORDS[i]) ** e
        expr += term
    return expr


def poly_str(p):
    """Stable plain-text rendering, monomials in lexicographic order."""
    if not p:
        return "0"
    parts = []
    for m in sorted(p):
        c = p[m]
        mono = "*".join(
            f"x{i}" + (f"^{e}" if e > 1 else "")
            for i, e in enumerate(m)
            if e > 0
        )
        parts.append(f"{c}" + (f"*{mono}" if mono else ""))
    return " + ".join(parts)


# ---------------------------------------------------------------------------
# curvature jets


def _tensor(shape):
    return np.full(shape, Fraction(0), dtype=object)


def riemann_symmetry_violation(R0):
    worst = Fraction(0)
    for a, b, c, d in itertools.product(range(DIM), repeat=4):
        worst = max(
            worst,
            abs(R0[a, b, c, d] + R0[b, a, c, d]),
            abs(R0[a, b, c, d] + R0[a, b, d, c]),
            abs(R0[a, b, c, d] - R0[c, d, a, b]),
            abs(R0[a, b, c, d] + R0[a, c, d, b] + R0[a, d, b, c]),
        )
    return worst


def ricci_of(R0):
    ric = _tensor((DIM, DIM))
    for i, j in itertools.product(range(DIM), repeat=2):
        ric[i, j] = sum(R0[a, i, a, j] for a in range(DIM))
    return ric


def ricci_deriv_of(R1):
    """Ric_{ij,k} from R_{abcd,e}."""
    out = _tensor((DIM, DIM, DIM))
    for i, j, k in itertools.product(range(DIM), repeat=3):
        out[i, j, k] = sum(R1[a, i, a, j, k] for a in range(DIM))
    return out


@dataclass
class CurvatureJet:
    """Riemann tensor and first derivatives at the chart origin.

    ``R0[a,b,c,d]`` = R_abcd(0), ``R1[a,b,c,d,e]`` = R_abcd,e(0), as
    Fraction-valued object arrays.  ``conformal_normal`` asserts
    Ric(0) = 0 and the symmetrized first-derivative Ricci identity.
    """

    R0: np.ndarray
    R1: np.ndarray = None
    R2: np.ndarray = None
    conformal_normal: bool = False

    def __post_init__(self):
        if self.R1 is None:
            self.R1 = _tensor((DIM,) * 5)
        self.R0 = np.asarray(self.R0, dtype=object)
        self.R1 = np.asarray(self.R1, dtype=object)
        if riemann_symmetry_violation(self.R0) != 0:
            raise ValueError("R0 violates Riemann symmetries")
        for e in range(DIM):
            if riemann_symmetry_violation(self.R1[..., e]) != 0:
                raise ValueError("R1 violates Riemann symmetries slot-wise")
        if self.conformal_normal:
            ric = ricci_of(self.R0)
            if any(ric[i, j] != 0 for i in range(DIM) for j in range(DIM)):
                raise ValueError("conformal-normal jet must have Ric(0) = 0")
            dr = ricci_deriv_of(self.R1)
            for i, j, k in itertools.product(range(DIM), repeat=3):
                if dr[i, j, k] + dr[j, k, i] + dr[k, i, j] != 0:
                    raise ValueError(
                        "conformal-normal jet violates the symmetrized "
                        "Ricci-derivative identity"
                    )

    @classmethod
    def constant_curvature(cls, K):
        K = Fraction(K)
        R0 = _tensor((DIM,) * 4)
        for a, b, c, d in itertools.product(range(DIM), repeat=4):
            R0[a, b, c, d] = K * (
                Fraction(int(a == c) * int(b == d))
                - Fraction(int(a == d) * int(b == c))
            )
        return cls(R0=R0)


# ---------------------------------------------------------------------------
# random conformal-normal jets via exact nullspace bases

_PAIRS = [(a, b) for a in range(DIM) for b in range(a + 1, DIM)]
_COMPS0 = [(i, j) for i in range(6) for j in range(i, 6)]  # 21 pair-sym slots


def _fill_riemann(vec):
    R = _tensor((DIM,) * 4)
    for val, (i, j) in zip(vec, _COMPS0):
        (a, b), (c, d) = _PAIRS[i], _PAIRS[j]
        val = Fraction(val)
        for (p, q), sp_ in (((a, b), 1), ((b, a), -1)):
            for (r, s), sq in (((c, d), 1), ((d, c), -1)):
                R[p, q, r, s] = sp_ * sq * val
                R[r, s, p, q] = sp_ * sq * val
    return R


def _riemann_constraints(vec_to_tensor, n_vars, rows_fn):
    cols = []
    for k in range(n_vars):
        v = [Fraction(0)] * n_vars
        v[k] = Fraction(1)
        cols.append(rows_fn(vec_to_tensor(v)))
    mat = sp.Matrix([[cols[k][r] for k in range(n_vars)] for r in range(len(cols[0]))])
    return mat.nullspace()


def _bianchi1_rows(R):
    return [R[0, 1, 2, 3] + R[0, 2, 3, 1] + R[0, 3, 1, 2]]


@lru_cache(maxsize=1)
def _weyl_basis():
    """Exact basis of algebraic curvature tensors with Ric = 0 (dim 10)."""

    def rows(R):
        out = _bianchi1_rows(R)
        ric = ricci_of(R)
        for i in range(DIM):
            for j in range(i, DIM):
                out.append(ric[i, j])
        return out

    return tuple(
        tuple(v) for v in _riemann_constraints(_fill_riemann, 21, rows)
    )


def _fill_riemann_deriv(vec):
    R1 = _tensor((DIM,) * 5)
    for e in range(DIM):
        sub = _fill_riemann(vec[21 * e : 21 * (e + 1)])
        R1[..., e] = sub
    return R1


@lru_cache(maxsize=1)
def _deriv_basis():
    """Exact basis for admissible R_abcd,e jets at a conformal-normal origin.

    Constraints: slot-wise first Bianchi, the second Bianchi identity, and
    the symmetrized Ricci-derivative identity (nabla R(0) = 0 follows).
    """

    def rows(R1):
        out = []
        for e in range(DIM):
            out.extend(_bianchi1_rows(R1[..., e]))
        # second Bianchi: R_ab[cd,e] cyclic sum
        for a, b in _PAIRS:
            for c, d, e in itertools.combinations(range(DIM), 3):
                out.append(
                    R1[a, b, c, d, e] + R1[a, b, d, e, c] + R1[a, b, e, c, d]
                )
        dr = ricci_deriv_of(R1)
        for i, j, k in itertools.combinations_with_replacement(range(DIM), 3):
            out.append(dr[i, j, k] + dr[j, k, i] + dr[k, i, j])
        return out

    return tuple(
        tuple(v) for v in _riemann_constraints(_fill_riemann_deriv, 84, rows)
    )


def scale_jet(jet: CurvatureJet, factor) -> CurvatureJet:
    """Jet with R0 and R1 multiplied by an exact rational factor."""
    f = Fraction(factor)
    R0 = _tensor((DIM,) * 4)
    R1 = _tensor((DIM,) * 5)
    for idx in itertools.product(range(DIM), repeat=4):
        R0[idx] = f * jet.R0[idx]
    for idx in itertools.product(range(DIM), repeat=5):
        R1[idx] = f * jet.R1[idx]
    return CurvatureJet(R0=R0, R1=R1, conformal_normal=jet.conformal_normal)


def random_conformal_normal_jet(rng=None, spread=6):
    """Random exact-rational jet satisfying all conformal-normal constraints."""
    rng = np.random.default_rng(rng)

    def combo(basis, fill):
        coeffs = [Fraction(int(c)) for c in rng.integers(-spread, spread + 1, len(basis))]
        vec = [
            sum(c * Fraction(b[k]) for c, b in zip(coeffs, basis))
            for k in range(len(basis[0]))
        ]
        return fill(vec)

    R0 = combo(_weyl_basis(), _fill_riemann)
    R1 = combo(_deriv_basis(), _fill_riemann_deriv)
    return CurvatureJet(R0=R0, R1=R1, conformal_normal=True)


# ---------------------------------------------------------------------------
# metric Taylor polynomials


@dataclass
class MetricTaylor:
    """Exact polynomial expansion of g_ab (or g^ab) valid through degree 3."""

    comps: np.ndarray  # (4, 4) object array of polynomials
    jet: CurvatureJet
    max_degree: int = 3
    inverse: bool = False

    def component(self, a, b):
        return poly_truncate(self.comps[a, b], self.max_degree)

    def eval(self, x):
        g = np.empty((DIM, DIM))
        for a in range(DIM):
            for b in range(a, DIM):
                g[a, b] = g[b, a] = poly_eval(self.comps[a, b], x)
        return g

    def __str__(self):
        lines = []
        kind = "g^" if self.inverse else "g_"
        for a in range(DIM):
            for b in range(a, DIM):
                lines.append(f"{kind}{{{a}{b}}} = {poly_str(self.comps[a, b])}")
        return "\n".join(lines)


def metric_taylor_from_jet(jet: CurvatureJet) -> MetricTaylor:
    comps = np.empty((DIM, DIM), dtype=object)
    xi = [poly_var(i) for i in range(DIM)]
    for a in range(DIM):
        for b in range(DIM):
            p = poly_const(1 if a == b else 0)
            for i, j in itertools.product(range(DIM), repeat=2):
                if jet.R0[a, i, j, b] != 0:
                    p = poly_add(
                        p,
                        poly_scale(
                            poly_mul(xi[i], xi[j]),
                            Fraction(jet.R0[a, i, j, b], 3),
                        ),
                    )
                for k in range(DIM):
                    if jet.R1[a, i, j, b, k] != 0:
                        p = poly_add(
                            p,
                            poly_scale(
                                poly_mul(poly_mul(xi[i], xi[j]), xi[k]),
                                Fraction(jet.R1[a, i, j, b, k], 6),
                            ),
                        )
            comps[a, b] = p
    return MetricTaylor(comps=comps, jet=jet)


def inverse_metric_taylor(mt: MetricTaylor) -> MetricTaylor:
    """Sign-flipped expansion for g^ab; exact inverse through degree 3."""
    comps = np.empty((DIM, DIM), dtype=object)
    for a in range(DIM):
        for b in range(DIM):
            p = mt.comps[a, b]
            flipped = {}
            for m, c in p.items():
                flipped[m] = c if sum(m) == 0 else -c
            comps[a, b] = flipped
    return MetricTaylor(comps=comps, jet=mt.jet, inverse=True)


def product_defect(mt: MetricTaylor, inv: MetricTaylor):
    """g * g^{-1} - delta truncated at degree 3; {} per entry if exact."""
    out = {}
    for a in range(DIM):
        for c in range(DIM):
            p = poly_zero()
            for b in range(DIM):
                p = poly_add(p, poly_mul(mt.comps[a, b], inv.comps[b, c]))
            p = poly_add(p, poly_const(-1 if a == c else 0))
            p = poly_truncate(p, 3)
            if p:
                out[(a, c)] = p
    return out


def d_inverse_metric(mt: MetricTaylor):
    """Formal derivative d_c g^{ab} as a (4,4,4) array of polynomials."""
    inv = inverse_metric_taylor(mt)
    out = np.empty((DIM, DIM, DIM), dtype=object)
    for a, b, c in itertools.product(range(DIM), repeat=3):
        out[a, b, c] = poly_truncate(poly_diff(inv.comps[a, b], c), 2)
    return out


def d_inverse_metric_display(jet: CurvatureJet):
    """Closed form: -(2/3) R_a(ci)b xi^i
    - (1/6)(2 R_a(ci)b,j + R_aijb,c) xi^i xi^j."""
    xi = [poly_var(i) for i in range(DIM)]
    out = np.empty((DIM, DIM, DIM), dtype=object)
    for a, b, c in itertools.product(range(DIM), repeat=3):
        p = poly_zero()
        for i in range(DIM):
            sym = Fraction(jet.R0[a, c, i, b] + jet.R0[a, i, c, b], 2)
            if sym:
                p = poly_add(p, poly_scale(xi[i], -Fraction(2, 3) * sym))
            for j in range(DIM):
                symd = Fraction(jet.R1[a, c, i, b, j] + jet.R1[a, i, c, b, j], 2)
                coef = -Fraction(2 * symd + jet.R1[a, i, j, b, c], 6)
                if coef:
                    p = poly_add(p, poly_scale(poly_mul(xi[i], xi[j]), coef))
        out[a, b, c] = p
    return out


def contracted_first_derivative(mt: MetricTaylor):
    """d_a g^{ab} by formal contraction; requires a conformal-normal jet."""
    if not mt.jet.conformal_normal:
        raise ValueError("conformal-normal jet required")
    d = d_inverse_metric(mt)
    out = np.empty(DIM, dtype=object)
    for b in range(DIM):
        out[b] = poly_add(*[d[a, b, a] for a in range(DIM)])
    return out


def contracted_first_derivative_display(jet: CurvatureJet):
    """Closed form -(1/6)(2 R_ib,j - R_ij,b) xi^i xi^j."""
    dr = ricci_deriv_of(jet.R1)
    xi = [poly_var(i) for i in range(DIM)]
    out = np.empty(DIM, dtype=object)
    for b in range(DIM):
        p = poly_zero()
        for i, j in itertools.product(range(DIM), repeat=2):
            coef = -Fraction(2 * dr[i, b, j] - dr[i, j, b], 6)
            if coef:
                p = poly_add(p, poly_scale(poly_mul(xi[i], xi[j]), coef))
        out[b] = p
    return out


def contracted_second_derivative(mt: MetricTaylor):
    """d_a d_d g^{ab}; linear term (2/3) R_id,b xi^i for conformal-normal jets."""
    if not mt.jet.conformal_normal:
        raise ValueError("conformal-normal jet required")
    inv = inverse_metric_taylor(mt)
    out = np.empty((DIM, DIM), dtype=object)
    for b, d in itertools.product(range(DIM), repeat=2):
        p = poly_zero()
        for a in range(DIM):
            p = poly_add(p, poly_diff(poly_diff(inv.comps[a, b], a), d))
        out[b, d] = poly_truncate(p, 1)
    return out


def contracted_second_derivative_display(jet: CurvatureJet):
    dr = ricci_deriv_of(jet.R1)
    xi = [poly_var(i) for i in range(DIM)]
    out = np.empty((DIM, DIM), dtype=object)
    for b, d in itertools.product(range(DIM), repeat=2):
        p = poly_zero()
        for i in range(DIM):
            coef = Fraction(2, 3) * Fraction(dr[i, d, b])
            if coef:
                p = poly_add(p, poly_scale(xi[i], coef))
        out[b, d] = p
    return out


def log_det_poly(mt: MetricTaylor):
    """log det g through degree 3 (= trace of g - delta there, since the
    perturbation starts at degree 2)."""
    p = poly_zero()
    for a in range(DIM):
        q = dict(mt.comps[a, a])
        q.pop((0, 0, 0, 0), None)
        p = poly_add(p, q)
    return poly_truncate(p, 3)


def cnc_identity_suite(jet: CurvatureJet):
    """Residual report for the conformal-normal-coordinate identities."""
    report = {}
    ric = ricci_of(jet.R0)
    report["ricci_zero"] = {
        "residual": float(max(abs(ric[i, j]) for i in range(DIM) for j in range(DIM))),
        "pass": all(ric[i, j] == 0 for i in range(DIM) for j in range(DIM)),
    }
    dr = ricci_deriv_of(jet.R1)
    worst = max(
        abs(dr[i, j, k] + dr[j, k, i] + dr[k, i, j])
        for i, j, k in itertools.product(range(DIM), repeat=3)
    )
    report["ricci_deriv_symmetrized"] = {"residual": float(worst), "pass": worst == 0}
    grad_r = [sum(dr[i, i, k] for i in range(DIM)) for k in range(DIM)]
    worst = max(abs(v) for v in grad_r)
    report["scalar_gradient_zero"] = {"residual": float(worst), "pass": worst == 0}
    # contracted second Bianchi: R_pijq,p = Ric_iq,j - Ric_ij,q
    worst = Fraction(0)
    for i, j, q in itertools.product(range(DIM), repeat=3):
        lhs = sum(jet.R1[p, i, j, q, p] for p in range(DIM))
        worst = max(worst, abs(lhs - (dr[i, q, j] - dr[i, j, q])))
    report["contracted_second_bianchi"] = {"residual": float(worst), "pass": worst == 0}
    if jet.R2 is None:
        report["laplacian_scalar_weyl"] = {"status": "not checkable (R2 missing)"}
        report["second_deriv_ricci_quadratic"] = {
            "status": "not checkable (R2 missing)"
        }
    return report


def detone_laplacian(mt: MetricTaylor, u, x):
    """Laplacian in the det-one gauge: d_a g^{ab} d_b u + g^{ab} d_ab u."""
    x = np.asarray(x, float)
    inv = inverse_metric_taylor(mt)
    div = contracted_first_derivative(mt)
    pt = np.atleast_2d(x)
    grad = u.gradient(pt)[0]
    hess = u.hessian(pt)[0]
    total = 0.0
    for b in range(DIM):
        total += poly_eval(div[b], x) * grad[b]
        for a in range(DIM):
            total += poly_eval(inv.comps[a, b], x) * hess[a, b]
    return float(total)


# ---------------------------------------------------------------------------
# blow-up metric and serialization


def blowup_metric(jet: CurvatureJet, eps, half_width=None) -> MetricField:
    """Rescaled metric g(eps*y) as an analytic MetricField in y.

    Quadratic coefficients scale by eps^2, cubic by eps^3 (the blow-up
    gauge).  eps = 0 returns the flat metric.
    """
    if half_width is None:
        half_width = 10.0 if eps == 0 else 1.0 / eps
    domain = Box.cube(half_width)
    if eps == 0:
        return MetricField.flat(domain)
    mt = metric_taylor_from_jet(jet)
    rows = []
    for a in range(DIM):
        row = []
        for b in range(DIM):
            expr = sp.Integer(0)
            for m, c in mt.comps[a, b].items():
                term = sp.Rational(c.numerator, c.denominator)
                if sum(m):
                    term *= sp.Float(eps) ** sum(m)
                for i, e in enumerate(m):
                    term *= COORDS[i] ** e
                expr += term
            row.append(expr)
        rows.append(row)
    return MetricField.from_exprs(sp.Matrix(rows), domain)


def dump_jet(jet: CurvatureJet, path):
    """Text format: sections [R0] / [R1], lines 'a b c d [e] value', 1-based."""
    with open(path, "w") as fh:
        fh.write("[R0]\n")
        for idx in itertools.product(range(DIM), repeat=4):
            v = jet.R0[idx]
            if v != 0:
                fh.write(" ".join(str(i + 1) for i in idx) + f" {v}\n")
        fh.write("[R1]\n")
        for idx in itertools.product(range(DIM), repeat=5):
            v = jet.R1[idx]
            if v != 0:
                fh.write(" ".join(str(i + 1) for i in idx) + f" {v}\n")


def load_jet(path, conformal_normal=False) -> CurvatureJet:
    R0 = _tensor((DIM,) * 4)
    R1 = _tensor((DIM,) * 5)
    target = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line == "[R0]":
                target = R0
                continue
            if line == "[R1]":
                target = R1
                continue
            if target is None:
                raise ValueError("jet file must start with a section header")
            *idx, val = line.split()
            idx = tuple(int(i) - 1 for i in idx)
            target[idx] = Fraction(val)
    return CurvatureJet(R0=R0, R1=R1, conformal_normal=conformal_normal)
