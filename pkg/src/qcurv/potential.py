"""Fundamental solutions and Green's functions.

Torus side: zero-mean periodic fields stored as full FFT coefficient
arrays (numpy ``fftn`` layout, f(x) = sum_k c_k e^{2 pi i k.x / L}); the
biharmonic Green's function is exact in the truncated spectral space with
multiplier 1 / (L^4 |2 pi k / L|^4).

R^4 side: the log-potential v(x) = (1/4 pi^2) int log(|y|/|x-y|) rho(y) dy
and its derivative kernels, integrated in polar coordinates centered at
the singular point x (the r^3 Jacobian absorbs every kernel singularity
up to second order; second derivatives get a principal-value-safe polar
patch automatically for the same reason).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .quadrature import gauss_legendre, s3_nodes


# ---------------------------------------------------------------------------
# torus spectral fields


class TorusSpectralField:
    """Real periodic scalar field on [0, L)^4 as Fourier coefficients."""

    def __init__(self, L, coeffs, require_real=True):
        self.L = float(L)
        self.coeffs = np.asarray(coeffs, complex)
        if self.coeffs.ndim != 4:
            raise ValueError("coefficient array must be 4-dimensional")
        self.N = self.coeffs.shape[0]
        if any(s != self.N for s in self.coeffs.shape):
            raise ValueError("coefficient array must be N^4")
        if self.N % 2 != 0:
            raise ValueError("N must be even")
        if require_real:
            v = self.grid_values()
            if np.max(np.abs(v.imag)) > 1e-10 * max(1.0, np.max(np.abs(v.real))):
                raise ValueError("coefficients violate conjugate symmetry")

    @classmethod
    def from_grid(cls, L, values):
        values = np.asarray(values, float)
        return cls(L, sfft.fftn(values) / values.size)

    @classmethod
    def from_modes(cls, L, N, modes):
        """``modes``: dict mapping integer wave vectors k to amplitudes of
        cos terms; builds sum_k a_k cos(2 pi k.x / L) (manifestly real)."""
        c = np.zeros((N,) * 4, complex)
        for k, a in modes.items():
            k = tuple(int(v) % N for v in k)
            kneg = tuple((-int(v)) % N for v in k)
            c[k] += a / 2.0
            c[kneg] += a / 2.0
        return cls(L, c)

    @property
    def zero_mean(self):
        return abs(self.coeffs[0, 0, 0, 0]) < 1e-12

    def wavenumbers(self):
        k = sfft.fftfreq(self.N, d=1.0 / self.N)
        return np.meshgrid(k, k, k, k, indexing="ij")

    def ksq(self):
        k = sfft.fftfreq(self.N, d=1.0 / self.N)
        k2 = k**2
        return (
            k2[:, None, None, None]
            + k2[None, :, None, None]
            + k2[None, None, :, None]
            + k2[None, None, None, :]
        ) * (2.0 * np.pi / self.L) ** 2

    def grid_values(self):
        return sfft.ifftn(self.coeffs) * self.coeffs.size

    def values(self):
        return self.grid_values().real

    def mean(self):
        return float(self.coeffs[0, 0, 0, 0].real)

    def eval(self, pts):
        """Direct mode-sum evaluation at arbitrary points (m, 4)."""
        pts = np.atleast_2d(np.asarray(pts, float))
        idx = np.nonzero(self.coeffs)
        if len(idx[0]) > 20000:
            raise ValueError("direct evaluation only for sparse spectra")
        ks = np.stack(
            [sfft.fftfreq(self.N, d=1.0 / self.N)[i] for i in idx], axis=1
        )
        amps = self.coeffs[idx]
        phase = 2.0 * np.pi / self.L * pts @ ks.T
        return (np.exp(1j * phase) @ amps).real

    def gradient(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        idx = np.nonzero(self.coeffs)
        ks = np.stack(
            [sfft.fftfreq(self.N, d=1.0 / self.N)[i] for i in idx], axis=1
        )
        amps = self.coeffs[idx]
        phase = 2.0 * np.pi / self.L * pts @ ks.T
        fac = 1j * 2.0 * np.pi / self.L
        out = np.empty((pts.shape[0], 4))
        for a in range(4):
            out[:, a] = (np.exp(1j * phase) @ (fac * ks[:, a] * amps)).real
        return out

    def bilaplacian(self):
        return TorusSpectralField(self.L, self.coeffs * self.ksq() ** 2)

    def parseval_gap(self):
        v = self.values()
        lhs = float(np.mean(v**2))
        rhs = float(np.sum(np.abs(self.coeffs) ** 2))
        return abs(lhs - rhs)


def biharmonic_green_torus(N, L, source=None) -> TorusSpectralField:
    """Spectral solution of Delta^2 G = delta_source - 1/L^4, zero mean."""
    if N < 16 or N % 2:
        raise ValueError("N must be even and >= 16")
    k = sfft.fftfreq(N, d=1.0 / N)
    k2 = k**2
    ksq = (
        k2[:, None, None, None]
        + k2[None, :, None, None]
        + k2[None, None, :, None]
        + k2[None, None, None, :]
    ) * (2.0 * np.pi / L) ** 2
    with np.errstate(divide="ignore"):
        mult = 1.0 / (L**4 * ksq**2)
    mult[0, 0, 0, 0] = 0.0
    coeffs = mult.astype(complex)
    if source is not None:
        kx = np.meshgrid(k, k, k, k, indexing="ij")
        phase = sum(
            kx[a] * source[a] for a in range(4)
        ) * (2.0 * np.pi / L)
        coeffs = coeffs * np.exp(-1j * phase)
    return TorusSpectralField(L, coeffs, require_real=source is None)


def green_grid_values(N, L):
    """Grid samples of G with source at the grid origin (memory-lean rfft)."""
    if N < 16 or N % 2:
        raise ValueError("N must be even and >= 16")
    k = sfft.fftfreq(N, d=1.0 / N)
    kr = sfft.rfftfreq(N, d=1.0 / N)
    k2 = k**2
    ksq = (
        k2[:, None, None, None]
        + k2[None, :, None, None]
        + k2[None, None, :, None]
        + (kr**2)[None, None, None, :]
    ) * (2.0 * np.pi / L) ** 2
    with np.errstate(divide="ignore"):
        mult = 1.0 / (L**4 * ksq**2)
    mult[0, 0, 0, 0] = 0.0
    del ksq
    # irfftn normalizes by 1/N^4; the mode sum needs the raw sum, so scale back
    return sfft.irfftn(mult * N**4, s=(N,) * 4)


def green_pair_value(N, L, xi, eta):
    """G(xi, eta) by direct mode sum (used for symmetry checks)."""
    k = sfft.fftfreq(N, d=1.0 / N)
    kx = np.meshgrid(k, k, k, k, indexing="ij")
    ksq = sum(a**2 for a in kx) * (2.0 * np.pi / L) ** 2
    with np.errstate(divide="ignore"):
        mult = 1.0 / (L**4 * ksq**2)
    mult[0, 0, 0, 0] = 0.0
    d = np.asarray(xi, float) - np.asarray(eta, float)
    phase = sum(kx[a] * d[a] for a in range(4)) * (2.0 * np.pi / L)
    return float(np.sum(mult * np.cos(phase)))


@dataclass
class GreenDecomposition:
    c_log: float
    fit_window: tuple
    rms: float
    n_points: int


LOG_COEFF = -1.0 / (8.0 * np.pi**2)


def fit_log_singularity(N, L, grid=None, window=None) -> GreenDecomposition:
    """Least-squares split G = c_log * log r + smooth near the source.

    Fits over grid points with minimum-image radius in ``window``
    (default [4L/N, L/8]) against the basis {log r, 1, x_a, r^2}.
    """
    if window is None:
        window = (4.0 * L / N, L / 8.0)
    if window[0] < 2.0 * L / N:
        raise ValueError("fit window unresolved: r_min below 2 grid spacings")
    if grid is None:
        grid = green_grid_values(N, L)
    # signed minimum-image coordinates
    coord = np.arange(N) * L / N
    signed = np.where(coord <= L / 2, coord, coord - L)
    X = np.meshgrid(signed, signed, signed, signed, indexing="ij")
    r = np.sqrt(sum(a**2 for a in X))
    mask = (r >= window[0]) & (r <= window[1])
    rr = r[mask]
    g = grid[mask]
    cols = [np.log(rr), np.ones_like(rr)]
    cols += [X[a][mask] for a in range(4)]
    cols.append(rr**2)
    A = np.stack(cols, axis=1)
    sol, *_ = np.linalg.lstsq(A, g, rcond=None)
    resid = g - A @ sol
    return GreenDecomposition(
        c_log=float(sol[0]),
        fit_window=tuple(window),
        rms=float(np.sqrt(np.mean(resid**2))),
        n_points=int(mask.sum()),
    )


def representation_check(f: TorusSpectralField):
    """Max grid deviation of f(xi) - fbar - int G(xi,.) Delta^2 f."""
    ksq = f.ksq()
    c = f.coeffs.copy()
    bilap = c * ksq**2
    with np.errstate(divide="ignore", invalid="ignore"):
        back = np.where(ksq > 0, bilap / ksq**2, 0.0)
    target = c.copy()
    target[0, 0, 0, 0] = 0.0
    gap = sfft.ifftn(back - target) * c.size
    return float(np.max(np.abs(gap)))


def regular_part_field(b: TorusSpectralField) -> TorusSpectralField:
    """phi = 2 int G(.,eta) b(eta) dV, i.e. multiplier 2/|2 pi k/L|^4."""
    ksq = b.ksq()
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(ksq > 0, 2.0 * b.coeffs / ksq**2, 0.0)
    return TorusSpectralField(b.L, c)


# ---------------------------------------------------------------------------
# R^4 log-potential quadrature


def _polar_panels(r_max, n_panels=10, r_inner=1e-3):
    edges = [0.0, r_inner]
    while edges[-1] < r_max:
        edges.append(min(edges[-1] * 3.0, r_max))
    return edges


class BallDensity:
    """Density on R^4 with decay |rho| <= C (1+|y|)^{-8+sigma}, truncated."""

    def __init__(self, func, sigma=1.0, C=1.0, r_cut=None):
        self.func = func
        self.sigma = sigma
        if r_cut is None:
            # (1+R)^{-8+sigma} < 1e-12
            r_cut = 10.0 ** (12.0 / (8.0 - sigma)) - 1.0
            r_cut = min(r_cut, 200.0)
        self.r_cut = float(r_cut)
        self.truncation_bound = C * (1.0 + self.r_cut) ** (-8.0 + sigma)

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, float))
        vals = np.asarray(self.func(pts), float)
        vals = np.where(np.linalg.norm(pts, axis=1) <= self.r_cut, vals, 0.0)
        return vals


def _integrate_centered(kernel_of_ry, rho, x, n_r=32, n_u=16, n_phi=16):
    """int kernel(r, y) rho(y) dy in polar coordinates centered at x.

    ``kernel_of_ry(r, y)`` receives the distance r = |y - x| and the
    absolute points y, vectorized.
    """
    x = np.asarray(x, float)
    r_max = float(np.linalg.norm(x)) + rho.r_cut
    s_pts, s_w = s3_nodes(n_u, n_phi)
    total = 0.0
    edges = _polar_panels(r_max)
    for a, b in zip(edges[:-1], edges[1:]):
        r, wr = gauss_legendre(n_r, a, b)
        y = x[None, None, :] + r[:, None, None] * s_pts[None, :, :]
        dens = rho(y.reshape(-1, 4)).reshape(len(r), -1)
        ker = kernel_of_ry(
            np.repeat(r, s_pts.shape[0]).reshape(len(r), -1), y
        )
        total += float(
            np.sum((wr * r**3)[:, None] * s_w[None, :] * dens * ker)
        )
    return total


def log_potential(rho, x, **quad):
    """(1/4 pi^2) int log(|y| / |x-y|) rho(y) dy."""

    def kernel(r, y):
        ay = np.linalg.norm(y, axis=-1)
        with np.errstate(divide="ignore"):
            return np.log(np.maximum(ay, 1e-300)) - np.log(np.maximum(r, 1e-300))

    return _integrate_centered(kernel, rho, x, **quad) / (4.0 * np.pi**2)


def radial_log_potential(rho_of_r, x_norm, r_cut, n_r=200):
    """Log-potential of a radial density, angular integral in closed form.

    Averaging the kernel over S^3 (Chebyshev/Gegenbauer expansion with the
    sin^2 weight) gives, with M = max(s, x), m = min(s, x):

        v(x)    = (1/2) int rho(s) s^3 [log s - log M - m^2/(4 M^2)] ds
        Dv(x)   = -(1/x^3) int_0^x rho s^3 [x^2 - s^2/2]/x^0 ... (see code)
        lap v   = - int rho(s) s^3 / M^2 ds
        d_r lap = (2/x^3) int_0^x rho(s) s^3 ds

    Returns a dict {v, dv, lap, dlap}; all four are 1-D quadratures, so
    they are accurate to near machine precision for smooth rho.
    """
    x = float(x_norm)

    def seg(a, b, f):
        if b <= a:
            return 0.0
        total = 0.0
        edges = np.unique(np.concatenate([
            np.geomspace(max(a, 1e-6), b, 8) if a < 1e-6 else np.linspace(a, b, 8),
            [a, b],
        ]))
        edges = edges[(edges >= a) & (edges <= b)]
        for lo, hi in zip(edges[:-1], edges[1:]):
            r, w = gauss_legendre(n_r // 4, lo, hi)
            total += float(np.sum(w * f(r)))
        return total

    rho = rho_of_r
    inner_mass = seg(0.0, min(x, r_cut), lambda s: rho(s) * s**3)
    v = 0.5 * (
        seg(0.0, min(x, r_cut), lambda s: rho(s) * s**3 * (np.log(np.maximum(s, 1e-300)) - np.log(x) - s**2 / (4 * x**2)))
        + seg(min(x, r_cut), r_cut, lambda s: rho(s) * s**3 * (-x**2 / (4 * s**2)))
    )
    dv = 0.5 * (
        seg(0.0, min(x, r_cut), lambda s: rho(s) * s**3 * (-1.0 / x + s**2 / (2 * x**3)))
        + seg(min(x, r_cut), r_cut, lambda s: rho(s) * s**3 * (-x / (2 * s**2)))
    )
    lap = -(
        seg(0.0, min(x, r_cut), lambda s: rho(s) * s**3) / x**2
        + seg(min(x, r_cut), r_cut, lambda s: rho(s) * s)
    )
    dlap = 2.0 * inner_mass / x**3
    return {"v": v, "dv": dv, "lap": lap, "dlap": dlap, "inner_mass": inner_mass}


def potential_derivatives(rho, x, which, index=None, **quad):
    """Derivative kernels of the log-potential per the closed-form displays.

    which: 'grad' (index a), 'lap', 'hess' (index (i, j)), 'gradlap'
    (index i).  All integrals converge absolutely against the r^3
    Jacobian of the centered polar rule.
    """
    x = np.asarray(x, float)

    if which == "grad":
        a = index

        def kernel(r, y):
            return -(x[a] - y[..., a]) / np.maximum(r, 1e-300) ** 2 / (4.0 * np.pi**2)

    elif which == "lap":

        def kernel(r, y):
            return -1.0 / np.maximum(r, 1e-300) ** 2 / (2.0 * np.pi**2)

    elif which == "hess":
        i, j = index

        def kernel(r, y):
            d_i = x[i] - y[..., i]
            d_j = x[j] - y[..., j]
            rr = np.maximum(r, 1e-300)
            return (
                -(float(i == j) * rr**2 - 2.0 * d_i * d_j)
                / rr**4
                / (4.0 * np.pi**2)
            )

    elif which == "gradlap":
        i = index

        def kernel(r, y):
            return (x[i] - y[..., i]) / np.maximum(r, 1e-300) ** 4 / np.pi**2

    else:
        raise ValueError(f"unknown derivative spec {which!r}")

    return _integrate_centered(kernel, rho, x, **quad)
