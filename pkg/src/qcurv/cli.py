"""Batch verification CLI.

Each subcommand runs one check suite and writes a JSON summary (and a CSV
for sweep commands) into the output directory.  Exit codes: 0 all checks
passed, 1 at least one check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__

USAGE_ERROR = 2


# ---------------------------------------------------------------------------
# configuration

DEFAULTS = {
    "bubble-check": {"n_points": 10000},
    "kernel-check": {"n_points": 10000},
    "mass": {"r": 10.0, "h": 1.0, "n_r": 64},
    "pohozaev": {
        "r": 20.0,
        "n_r": 48,
        "n_u": 24,
        "n_phi": 24,
        "eps_list": "0.1,0.05,0.025",
        "tilt_amp": 0.05,
        "n_third": 100,
    },
    "green-fit": {"n": 64, "l": 6.283185307179586, "n_pairs": 20},
    "represent": {"n": 16, "l": 6.283185307179586, "n_fields": 10, "n_modes": 10},
    "cnc": {"n_jets": 50},
    "distance": {"eps_list": "0.1,0.05,0.025", "n_pairs": 2, "n_nodes": 32},
    "longrange": {"eps": 1e-4, "h": 1.0},
    "alpha-sweep": {"eps_list": "1e-2,1e-3,1e-4,1e-5", "h": 1.0, "amp": 0.0},
    "mainest": {"eps_list": "1e-2,1e-3,1e-4", "amp": 0.02, "tau": 0.5},
    "vrate": {"n": 16, "l": 6.283185307179586, "tau": 0.5},
}

COMMANDS = list(DEFAULTS) + ["all"]


class ConfigError(Exception):
    pass


def load_config(path, command):
    """Per-command key/value overrides from a flat sectioned text file."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
    params = dict(DEFAULTS[command])
    if parser.has_section(command):
        for key, raw in parser[command].items():
            default = DEFAULTS[command][key]
            try:
                if isinstance(default, str):
                    params[key] = raw
                elif isinstance(default, int):
                    params[key] = int(raw)
                else:
                    params[key] = float(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {command}.{key}: {raw}") from exc
    return params


def parse_eps_list(raw, decreasing=True):
    try:
        eps = tuple(float(tok) for tok in str(raw).split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"bad eps_list: {raw}") from exc
    if not eps or any(e <= 0 for e in eps):
        raise ConfigError("eps_list must contain positive values")
    if decreasing and not all(b < a for a, b in zip(eps[:-1], eps[1:])):
        raise ConfigError("eps_list must be strictly decreasing")
    return eps


def _check(name, value, bound, passed):
    return {"name": name, "value": value, "bound": bound, "pass": bool(passed)}


# ---------------------------------------------------------------------------
# suites; each returns (checks, csv_header, csv_rows)


def run_bubble_check(p, seed):
    from .bubble import BubbleParams, RescaledBubble, bubble_pde_residual, rescaling_identity_gap

    rng = np.random.default_rng(seed)
    worst = 0.0
    n = int(p["n_points"])
    for H in rng.uniform(0.5, 2.0, 16):
        pts = rng.uniform(-50.0, 50.0, (n // 16, 4))
        pts = pts[np.linalg.norm(pts, axis=1) <= 50.0]
        worst = max(worst, float(np.max(np.abs(bubble_pde_residual(RescaledBubble(H), pts)))))
    gap = 0.0
    for _ in range(20):
        b = BubbleParams(
            p=tuple(rng.uniform(-1, 1, 4)),
            eps=float(rng.uniform(0.05, 2.0)),
            H=float(rng.uniform(0.5, 2.0)),
        )
        xi = rng.uniform(-3, 3, 4)
        gap = max(gap, rescaling_identity_gap(b, xi))
    checks = [
        _check("max_pde_residual", worst, 1e-10, worst <= 1e-10),
        _check("rescaling_identity_gap", gap, 1e-14, gap <= 1e-14),
    ]
    return checks, None, None


def run_kernel_check(p, seed):
    from .bubble import KernelElement, linearized_residual

    rng = np.random.default_rng(seed)
    pts = rng.uniform(-50.0, 50.0, (int(p["n_points"]), 4))
    pts = pts[np.linalg.norm(pts, axis=1) <= 50.0]
    worst = max(
        float(np.max(np.abs(linearized_residual(KernelElement(j), pts))))
        for j in range(5)
    )
    return [_check("max_linearized_residual", worst, 1e-8, worst <= 1e-8)], None, None


def run_mass(p, seed):
    from .bubble import MASS_LIMIT, RescaledBubble, mass_integral, mass_integral_exact

    rb = RescaledBubble(H=p["h"])
    m = mass_integral(rb, p["r"], n_r=int(p["n_r"]))
    ratio = m / MASS_LIMIT
    quad_gap = abs(m - mass_integral_exact(rb, p["r"]))
    radii = [10.0, 20.0, 40.0, 80.0, 160.0]
    rows = []
    gaps = []
    for R in radii:
        mq = mass_integral(rb, R, n_r=int(p["n_r"]))
        ex = mass_integral_exact(rb, R)
        rows.append([R, mq, ex, abs(mq - ex)])
        gaps.append(abs(ex - MASS_LIMIT))
    # fit on the asymptotic radii (the R^-4 law is a tail statement)
    slope = float(np.polyfit(np.log(radii[1:]), np.log(gaps[1:]), 1)[0])
    checks = [
        _check("mass_over_16pi2", ratio, "[0.999, 1.001]", 0.999 <= ratio <= 1.001),
        _check("tail_log_slope", slope, "-4 +- 0.2", abs(slope + 4.0) <= 0.2),
        _check("quadrature_vs_exact", quad_gap, 1e-10, quad_gap <= 1e-10),
    ]
    return checks, ["R", "mass", "exact", "error_estimate"], rows


def run_pohozaev(p, seed):
    from fractions import Fraction

    from .bubble import RescaledBubble
    from .cnc import metric_taylor_from_jet, random_conformal_normal_jet, scale_jet
    from .pohozaev import (
        BallDomain,
        RadialProfileField,
        pohozaev_balance,
        radial_third_derivative,
    )

    rng = np.random.default_rng(seed)
    rb = RescaledBubble(H=1.0)
    ball = BallDomain(p["r"], n_r=int(p["n_r"]), n_u=int(p["n_u"]), n_phi=int(p["n_phi"]))
    u = RadialProfileField(rb)
    h = lambda pts: np.full(len(np.atleast_2d(pts)), 1.0)
    b = lambda pts: np.zeros(len(np.atleast_2d(pts)))
    rep = pohozaev_balance(u, h, b, ball)
    rel = abs(rep.residual) / abs(rep.I0)
    rows = [["flat", rep.I0, rep.I1, rep.I2, rep.I3, rep.I4, rep.residual, rep.error_estimate]]

    # curved sweep on a unit ball with a tilted bubble
    jet = random_conformal_normal_jet(rng=int(rng.integers(0, 2**31)))
    tilt = [p["tilt_amp"], -0.6 * p["tilt_amp"], 0.4 * p["tilt_amp"], 0.8 * p["tilt_amp"]]
    ut = RadialProfileField(rb, tilt=tilt)
    small = BallDomain(1.0, n_r=24, n_u=16, n_phi=16)
    eps_list = parse_eps_list(p["eps_list"])
    mags = []
    for eps in eps_list:
        sj = scale_jet(jet, Fraction(eps).limit_denominator(10**6))
        mt = metric_taylor_from_jet(sj)
        r = pohozaev_balance(ut, h, b, small, metric_taylor=mt, jet=sj)
        mags.append(abs(r.I2) + abs(r.I3) + abs(r.I4))
        rows.append([eps, r.I0, r.I1, r.I2, r.I3, r.I4, r.residual, r.error_estimate])
    slope = float(np.polyfit(np.log(eps_list), np.log(mags), 1)[0])

    worst3 = 0.0
    for _ in range(int(p["n_third"])):
        a, c = rng.uniform(0.2, 2.0, 2)
        prof = _SmoothRadial(a, c)
        y = rng.uniform(-2, 2, 4)
        if np.linalg.norm(y) < 0.3:
            y[0] += 1.0
        i, m, l = rng.integers(0, 4, 3)
        worst3 = max(worst3, abs(radial_third_derivative(prof, y, i, m, l) - _fd_third(prof, y, i, m, l)))

    checks = [
        _check("flat_rel_residual", rel, 1e-4, rel <= 1e-4),
        _check("curved_eps_slope", slope, "1 +- 0.3", abs(slope - 1.0) <= 0.3),
        _check("radial_third_vs_fd", worst3, 1e-6, worst3 <= 1e-6),
    ]
    header = ["parameter", "I0", "I1", "I2", "I3", "I4", "residual", "error_estimate"]
    return checks, header, rows


class _SmoothRadial:
    """log(1 + a r^2) * exp(-c r^2 / 8) style profile with FD-checkable d3."""

    def __init__(self, a, c):
        self.a = a
        self.c = c

    def val_r(self, r):
        return np.log1p(self.a * np.asarray(r) ** 2) + np.cos(self.c * np.asarray(r))

    def d1(self, r):
        r = np.asarray(r)
        return 2 * self.a * r / (1 + self.a * r**2) - self.c * np.sin(self.c * r)

    def d2(self, r):
        r = np.asarray(r)
        q = 1 + self.a * r**2
        return 2 * self.a * (1 - self.a * r**2) / q**2 - self.c**2 * np.cos(self.c * r)

    def d3(self, r):
        r = np.asarray(r)
        q = 1 + self.a * r**2
        return 4 * self.a**2 * r * (self.a * r**2 - 3) / q**3 + self.c**3 * np.sin(self.c * r)


def _fd_third(prof, y, i, m, l, h=2e-2):
    def f(pt):
        return float(prof.val_r(np.linalg.norm(pt)))

    def axis_diff(fun, ax, step):
        e = np.zeros(4)
        e[ax] = step
        return lambda pt: (fun(pt + e) - fun(pt - e)) / (2 * step)

    def third(step):
        g = axis_diff(axis_diff(axis_diff(f, i, step), m, step), l, step)
        return g(np.asarray(y, float))

    # Richardson extrapolation of the O(h^2) nested central differences
    return (4.0 * third(h / 2) - third(h)) / 3.0


def run_green_fit(p, seed):
    from .potential import LOG_COEFF, fit_log_singularity, green_pair_value

    rng = np.random.default_rng(seed)
    N, L = int(p["n"]), p["l"]
    dec = fit_log_singularity(N, L)
    rel = abs(dec.c_log - LOG_COEFF) / abs(LOG_COEFF)
    sym = 0.0
    for _ in range(int(p["n_pairs"])):
        xi = rng.uniform(0, L, 4)
        eta = rng.uniform(0, L, 4)
        sym = max(
            sym, abs(green_pair_value(N, L, xi, eta) - green_pair_value(N, L, eta, xi))
        )
    checks = [
        _check("c_log_rel_error", rel, 0.02, rel <= 0.02),
        _check("symmetry_defect", sym, 1e-10, sym <= 1e-10),
    ]
    rows = [[dec.fit_window[0], dec.fit_window[1], dec.c_log, dec.rms]]
    return checks, ["window_lo", "window_hi", "c_log", "rms_error_estimate"], rows


def run_represent(p, seed):
    from .potential import TorusSpectralField, representation_check

    rng = np.random.default_rng(seed)
    N, L = int(p["n"]), p["l"]
    worst = 0.0
    rows = []
    for k in range(int(p["n_fields"])):
        modes = {}
        for _ in range(int(p["n_modes"])):
            kv = tuple(int(v) for v in rng.integers(-3, 4, 4))
            if kv == (0, 0, 0, 0):
                kv = (1, 0, 0, 0)
            modes[kv] = float(rng.uniform(-1, 1))
        f = TorusSpectralField.from_modes(L, N, modes)
        dev = representation_check(f)
        rows.append([k, dev, np.finfo(float).eps * N**2])
        worst = max(worst, dev)
    checks = [_check("max_representation_deviation", worst, 1e-9, worst <= 1e-9)]
    return checks, ["field", "deviation", "roundoff_scale"], rows


def run_cnc(p, seed):
    from .cnc import (
        cnc_identity_suite,
        contracted_first_derivative,
        contracted_first_derivative_display,
        contracted_second_derivative,
        contracted_second_derivative_display,
        inverse_metric_taylor,
        log_det_poly,
        metric_taylor_from_jet,
        product_defect,
        random_conformal_normal_jet,
    )

    rng = np.random.default_rng(seed)
    failures = 0
    n_jets = int(p["n_jets"])
    for _ in range(n_jets):
        jet = random_conformal_normal_jet(rng=int(rng.integers(0, 2**31)))
        mt = metric_taylor_from_jet(jet)
        inv = inverse_metric_taylor(mt)
        if any(v for v in product_defect(mt, inv).values()):
            failures += 1
            continue
        from .cnc import poly_truncate

        if poly_truncate(log_det_poly(mt), 2):
            failures += 1
            continue
        c1, c1d = contracted_first_derivative(mt), contracted_first_derivative_display(jet)
        if any(c1[i] != c1d[i] for i in range(4)):
            failures += 1
            continue
        c2, c2d = contracted_second_derivative(mt), contracted_second_derivative_display(jet)
        if any(c2[i, j] != c2d[i, j] for i in range(4) for j in range(4)):
            failures += 1
            continue
        suite = cnc_identity_suite(jet)
        if any("pass" in r and not r["pass"] for r in suite.values()):
            failures += 1
    checks = [_check("exact_identity_failures", failures, 0, failures == 0)]
    return checks, None, None


def run_distance(p, seed):
    from .cnc import random_conformal_normal_jet, scale_jet
    from .geodesic import distance_ratio_sweep, geodesic_distance
    from fractions import Fraction

    rng = np.random.default_rng(seed)
    jet = scale_jet(random_conformal_normal_jet(rng=int(rng.integers(0, 2**31))), Fraction(1, 10))
    pairs = []
    for _ in range(int(p["n_pairs"])):
        u = rng.standard_normal(4)
        v = rng.standard_normal(4)
        pairs.append((u / np.linalg.norm(u), 1.5 * v / np.linalg.norm(v)))
    eps_list = parse_eps_list(p["eps_list"])
    rep = distance_ratio_sweep(jet, eps_list, pairs, n_nodes=int(p["n_nodes"]))
    cs = np.array(list(rep["per_eps_c"].values()))
    dev = float(np.max(np.abs(cs - np.mean(cs))) / np.mean(cs))
    rows = []
    from .cnc import blowup_metric

    for r in rep["rows"]:
        rows.append(
            [
                r["eps"],
                r["y_norm"],
                r["z_norm"],
                r["euclid"],
                r["geodesic"],
                r["ratio_gap"],
                r["fitted_c"],
                0.0,
            ]
        )
    # node-halving error estimate on the first pair of each eps
    for eps in eps_list:
        g = blowup_metric(jet, eps, half_width=4.0 / eps)
        y, z = pairs[0]
        d_full = geodesic_distance(g, y, z, n_nodes=int(p["n_nodes"]))
        d_half = geodesic_distance(g, y, z, n_nodes=max(int(p["n_nodes"]) // 2, 8))
        for row in rows:
            if row[0] == eps:
                row[7] = abs(d_full - d_half)
    checks = [
        _check("constant_stability", dev, 0.25, dev <= 0.25),
        _check("eps_exponent", rep["eps_exponent"], "2 +- 0.3", abs(rep["eps_exponent"] - 2.0) <= 0.3),
    ]
    header = ["eps", "y_norm", "z_norm", "euclid", "geodesic", "ratio_gap", "fitted_c", "error_estimate"]
    return checks, header, rows


def run_longrange(p, seed):
    from .bubble import RescaledBubble
    from .harness import long_range_checks

    rep = long_range_checks(RescaledBubble(H=p["h"]), p["eps"])
    bands = {"slope_v_vs_logr": 0.01, "lap_v_times_L2": 0.05, "dr_lap_v_times_L3": 0.05}
    checks = []
    rows = []
    for c in rep["checks"]:
        rows.append([c["name"], c["value"], c["target"], abs(c["gap"]), c["gap_times_L"]])
        if c["name"] in bands:
            rel = abs(c["gap"] / c["target"])
            checks.append(
                _check(c["name"], c["value"], f"{c['target']} +- {bands[c['name']]:.0%}", rel <= bands[c["name"]])
            )
    header = ["name", "value", "target", "error_estimate", "gap_times_L"]
    return checks, header, rows


def run_alpha_sweep(p, seed):
    from .harness import SequenceConfig, alpha_sweep, synth_sequence

    eps_list = parse_eps_list(p["eps_list"])
    cfg = SequenceConfig(eps_list=eps_list, H=p["h"], amp=p["amp"], seed=seed)
    rep = alpha_sweep(synth_sequence(cfg), cfg)
    small = [r for r in rep["rows"] if r["eps"] <= 1e-3]
    worst = max((abs(r["rel_gap"]) for r in small), default=0.0)
    checks = [
        _check("alpha_rel_gap_eps_le_1e-3", worst, 0.005, worst <= 0.005),
    ]
    if "tail_log_slope" in rep:
        checks.append(
            _check(
                "deviation_faster_than_1_over_L",
                rep["tail_log_slope"],
                "log-slope < -1",
                rep["faster_than_one_over_L"],
            )
        )
    rows = [
        [r["eps"], r["L"], r["alpha"], r["gap"], r["rel_gap"], r["error_estimate"]]
        for r in rep["rows"]
    ]
    header = ["eps", "L", "alpha", "gap", "rel_gap", "error_estimate"]
    return checks, header, rows


def run_mainest(p, seed):
    from .harness import SequenceConfig, mainest_fit, synth_sequence

    eps_list = parse_eps_list(p["eps_list"])
    cfg = SequenceConfig(eps_list=eps_list, amp=p["amp"], tau=p["tau"], seed=seed)
    rep = mainest_fit(synth_sequence(cfg), cfg)
    checks = [_check("constant_ratio", rep["ratio"], 3.0, rep["bounded_constant"])]
    rows = [[r["eps"], r["outer_norm"], r["core_norm"], 0.05 * r["outer_norm"]] for r in rep["rows"]]
    return checks, ["eps", "outer_norm", "core_norm", "sampling_error_estimate"], rows


def run_vrate(p, seed):
    from .harness import sine_source, tuned_source, vrate_balance, vrate_rate_fit
    from .potential import TorusSpectralField

    rng = np.random.default_rng(seed)
    N, L = int(p["n"]), p["l"]
    hs = sine_source(L, N, {(1, 0, 0, 0): 0.3, (0, 1, 0, 0): -0.2, (0, 0, 1, 1): 0.15})
    hc = hs.coeffs.copy()
    hc[0, 0, 0, 0] = 2.0
    h = TorusSpectralField(L, hc)
    bt = tuned_source(h)
    tuned = float(np.linalg.norm(vrate_balance(h, bt)))

    bu = TorusSpectralField.from_modes(
        L, N, {(1, 1, 0, 0): float(rng.uniform(0.2, 0.6))}
    )
    q = np.array([0.3, 0.2, 0.1, 0.0])
    vec = vrate_balance(h, bu, q=q)
    oracle = _fd_balance(h, bu, q)
    gap = float(np.max(np.abs(vec - oracle)))

    boff = sine_source(L, N, {(0, 0, 1, 0): 0.5})
    fit = vrate_rate_fit(h, bt, boff, [1e-1, 1e-2, 1e-3], p["tau"])
    checks = [
        _check("tuned_balance", tuned, 1e-8, tuned <= 1e-8),
        _check("untuned_vs_fd_oracle", gap, 1e-6, gap <= 1e-6),
        _check(
            "rate_exponent",
            fit["exponent"],
            f"tau/2 = {fit['target']}",
            abs(fit["exponent"] - fit["target"]) <= 0.05,
        ),
    ]
    rows = [[e, n, abs(n - n)] for e, n in fit["norms"].items()]
    return checks, ["eps", "balance_norm", "error_estimate"], rows


def _fd_balance(h, b, q, step=1e-5):
    from .potential import regular_part_field

    phi = regular_part_field(b)
    out = np.zeros(4)
    hq = float(h.eval(q[None, :])[0])
    for a in range(4):
        e = np.zeros(4)
        e[a] = step
        dh = (float(h.eval((q + e)[None, :])[0]) - float(h.eval((q - e)[None, :])[0])) / (2 * step)
        dp = (float(phi.eval((q + e)[None, :])[0]) - float(phi.eval((q - e)[None, :])[0])) / (2 * step)
        out[a] = dh / hq + 4.0 * dp
    return out


RUNNERS = {
    "bubble-check": run_bubble_check,
    "kernel-check": run_kernel_check,
    "mass": run_mass,
    "pohozaev": run_pohozaev,
    "green-fit": run_green_fit,
    "represent": run_represent,
    "cnc": run_cnc,
    "distance": run_distance,
    "longrange": run_longrange,
    "alpha-sweep": run_alpha_sweep,
    "mainest": run_mainest,
    "vrate": run_vrate,
}


def _versions():
    import scipy
    import sympy

    return {
        "qcurv": __version__,
        "python": ".".join(map(str, sys.version_info[:3])),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "sympy": sympy.__version__,
    }


def _write_outputs(out_dir, command, checks, header, rows, seed, quiet):
    passed = all(c["pass"] for c in checks)
    summary = {
        "command": command,
        "pass": passed,
        "checks": checks,
        "seed": seed,
        "versions": _versions(),
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{command}.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if header is not None:
        with open(out / f"{command}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    if not quiet:
        for c in checks:
            status = "PASS" if c["pass"] else "FAIL"
            print(f"[{command}] {status} {c['name']} = {c['value']} (bound {c['bound']})")
    return passed


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="qcurv",
        description="Verification suites for the fourth-order curvature laboratory.",
    )
    parser.add_argument("command", choices=COMMANDS, help="suite to run")
    parser.add_argument("--config", default=None, help="sectioned key=value config file")
    parser.add_argument("--out", default="qcurv-out", help="output directory")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--quiet", action="store_true", help="suppress per-check lines")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0

    names = list(RUNNERS) if args.command == "all" else [args.command]
    all_pass = True
    for name in names:
        try:
            params = (
                load_config(args.config, name) if args.config else dict(DEFAULTS[name])
            )
            checks, header, rows = RUNNERS[name](params, args.seed)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return USAGE_ERROR
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return USAGE_ERROR
        all_pass &= _write_outputs(args.out, name, checks, header, rows, args.seed, args.quiet)
    return 0 if all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
