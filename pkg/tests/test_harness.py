import numpy as np
import pytest

from qcurv.bubble import MASS_LIMIT
from qcurv.harness import (
    SequenceConfig,
    alpha_sweep,
    big_l,
    long_range_checks,
    mainest_fit,
    sine_source,
    small_l,
    synth_sequence,
    tuned_source,
    vrate_balance,
    vrate_rate_fit,
)
from qcurv.potential import TorusSpectralField

L_TORUS = 2.0 * np.pi


def test_sequence_config_validation():
    with pytest.raises(ValueError):
        SequenceConfig(eps_list=())
    with pytest.raises(ValueError):
        SequenceConfig(eps_list=(0.1, 0.2))
    with pytest.raises(ValueError):
        SequenceConfig(eps_list=(0.1,), tau=1.5)
    with pytest.raises(ValueError):
        SequenceConfig(eps_list=(0.1,), tau=0.5, sigma=0.5)
    with pytest.raises(ValueError):
        SequenceConfig(eps_list=(0.1,), amp=20.0)
    with pytest.raises(ValueError):
        SequenceConfig(eps_list=(0.1, -0.05))


def test_scales():
    assert abs(big_l(np.exp(-3.0)) - 3.0) < 1e-14
    assert abs(small_l(np.exp(-3.0)) - 3.0 * np.exp(-3.0)) < 1e-14


def test_synth_sequence_deterministic_and_normalized():
    cfg = SequenceConfig(eps_list=(0.1, 0.01), amp=0.05, n_modes=3, seed=5)
    s1 = synth_sequence(cfg)
    s2 = synth_sequence(cfg)
    assert np.array_equal(s1[0].wavevectors, s2[0].wavevectors)
    assert len(s1) == 2
    # the correction and its gradient vanish at the concentration point
    f = s1[0]
    assert abs(f.correction(np.zeros((1, 4)))[0]) < 1e-15
    h = 1e-6
    for a in range(4):
        e = np.zeros((1, 4))
        e[0, a] = h
        fd = (f.correction(e)[0] - f.correction(-e)[0]) / (2 * h)
        assert abs(fd) < 1e-8


def test_alpha_sweep_pure_bubble_tail():
    cfg = SequenceConfig(eps_list=(1e-2, 1e-3, 1e-4))
    out = alpha_sweep(synth_sequence(cfg), cfg)
    rows = out["rows"]
    assert len(rows) == 3
    for r in rows:
        assert r["alpha"] < MASS_LIMIT
        assert r["error_estimate"] < 1e-8
    gaps = [abs(r["gap"]) for r in rows]
    assert all(b < a for a, b in zip(gaps[:-1], gaps[1:]))
    # zero-correction deviation is a bubble tail, far faster than 1/L
    assert out["faster_than_one_over_L"]
    assert out["tail_log_slope"] < -1.5


def test_alpha_sweep_with_correction_converges():
    cfg = SequenceConfig(eps_list=(1e-2, 1e-3), amp=0.02, n_modes=2, seed=1)
    out = alpha_sweep(synth_sequence(cfg), cfg)
    rel = [abs(r["rel_gap"]) for r in out["rows"]]
    assert rel[1] < rel[0]
    assert rel[1] < 0.1


def test_long_range_checks_on_exact_bubble():
    from qcurv.bubble import RescaledBubble

    eps = 1e-4
    out = long_range_checks(RescaledBubble(1.0), eps)
    names = {c["name"]: c for c in out["checks"]}
    a8 = MASS_LIMIT / (8.0 * np.pi**2)  # = 2
    assert abs(names["slope_v_vs_logr"]["value"] + a8) / a8 < 0.01
    assert abs(names["dr_v_times_L"]["value"] + a8) / a8 < 0.1
    assert abs(names["lap_v_times_L2"]["value"] + 2 * a8) / (2 * a8) < 0.01
    assert abs(names["dr_lap_v_times_L3"]["value"] - 4 * a8) / (4 * a8) < 0.02
    # the next-order correction enters at O(1/L): gap * L stays bounded
    for c in out["checks"]:
        assert abs(c["gap_times_L"]) < 10.0


def test_mainest_fit_verdicts():
    cfg0 = SequenceConfig(eps_list=(1e-2, 1e-3, 1e-4), tau=0.5)
    out0 = mainest_fit(synth_sequence(cfg0), cfg0, n=1000)
    assert out0["bounded_constant"]
    for r in out0["rows"]:
        assert r["outer_norm"] < 1e-10

    cfg = SequenceConfig(eps_list=(1e-2, 1e-3, 1e-4), amp=0.02, n_modes=2, tau=0.5, seed=3)
    out = mainest_fit(synth_sequence(cfg), cfg, n=1000)
    assert out["bounded_constant"]
    assert out["ratio"] < 3.0


def test_vrate_balance_tuned_source_annihilates():
    h = TorusSpectralField.from_modes(
        L_TORUS, 16, {(1, 0, 0, 0): 0.3, (0, 1, 1, 0): -0.2}
    )
    # shift the zero mode so h > 0 everywhere
    c = h.coeffs.copy()
    c[0, 0, 0, 0] += 2.0
    h = TorusSpectralField(L_TORUS, c)

    q = np.array([0.7, 1.3, 0.2, 2.1])
    b = tuned_source(h, q)
    assert np.max(np.abs(vrate_balance(h, b, q))) < 1e-12

    # an untuned source leaves a finite imbalance
    b_off = sine_source(L_TORUS, 16, {(1, 0, 0, 0): 0.5})
    assert np.max(np.abs(vrate_balance(h, b_off, q))) > 1e-3


def test_vrate_balance_requires_positive_h():
    h = TorusSpectralField.from_modes(L_TORUS, 16, {(1, 0, 0, 0): 1.0})
    b = sine_source(L_TORUS, 16, {(1, 0, 0, 0): 0.1})
    with pytest.raises(ValueError):
        vrate_balance(h, b, np.array([np.pi, 0.0, 0.0, 0.0]))


def test_vrate_rate_fit_returns_half_tau():
    c = np.zeros((16,) * 4, complex)
    c[0, 0, 0, 0] = 2.0
    base = TorusSpectralField(L_TORUS, c)
    h = TorusSpectralField(
        L_TORUS,
        base.coeffs
        + TorusSpectralField.from_modes(L_TORUS, 16, {(1, 0, 0, 0): 0.3}).coeffs,
    )
    q = np.array([0.5, 0.0, 0.0, 0.0])
    b_tuned = tuned_source(h, q)
    b_off = sine_source(L_TORUS, 16, {(0, 1, 0, 0): 0.4})
    tau = 0.5
    out = vrate_rate_fit(h, b_tuned, b_off, [1e-2, 1e-3, 1e-4], tau, q)
    assert abs(out["exponent"] - tau / 2.0) < 1e-6

    # a cosine offset has zero gradient at the origin and must be rejected
    b_cos = TorusSpectralField.from_modes(L_TORUS, 16, {(0, 1, 0, 0): 0.4})
    h0 = TorusSpectralField(L_TORUS, base.coeffs)
    b0 = tuned_source(h0)
    with pytest.raises(ValueError):
        vrate_rate_fit(h0, b0, b_cos, [1e-2, 1e-3], tau)
