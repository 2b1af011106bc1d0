import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ks2d.constants import compute_K1, linear_coefficients
from ks2d.mild import (
    Check,
    HypothesisError,
    SchemeConfig,
    advance_modes,
    advance_w,
    check_hypotheses,
    inductive_bounds,
    iplus,
    mild_residual,
    run_scheme,
    semigroup_apply,
    semigroup_series,
    theorem_initial_data,
)
from ks2d.spectral import (
    TWO_PI,
    Domain,
    ModeSplit,
    SpectralField,
    WienerParams,
    random_field,
    sigma,
    special_mask,
    sup_wiener_norm,
    wiener_norm,
)
from ks2d.toy import Forcing, ToyState, ToySystem, integrate

D2PI = Domain(TWO_PI, TWO_PI, 8)
D = Domain(TWO_PI * 1.2, TWO_PI * 1.15, 8)


# --------------------------------------------------------------------------
# config


def test_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(dt=1 / 128, dt_w=1 / 256)
    with pytest.raises(ValueError):
        SchemeConfig(cauchy_tol=0.0)
    with pytest.raises(ValueError):
        SchemeConfig(T=1.0, dt_w=0.3)
    cfg = SchemeConfig(T=1.0, dt=1 / 1024, dt_w=1 / 256)
    assert cfg.n_samples == 257 and cfg.substeps == 4


# --------------------------------------------------------------------------
# semigroup


def test_semigroup_examples(rng):
    w0 = random_field(D, rng, off_special=True)
    assert semigroup_apply(w0, 0.0) == w0
    s = semigroup_apply(SpectralField.mode(D2PI, 1, 1, 3.0), 1.0)
    assert s.coefficient(1, 1) == pytest.approx(3.0 * math.exp(-2.0), rel=1e-14)
    with pytest.raises(ValueError):
        semigroup_apply(SpectralField.mode(D, 1, 0), 1.0)


def test_semigroup_sup_attained_at_zero(rng):
    # on a near-critical box every retained mode decays
    d = Domain.near_critical(1e-3, 1e-3, 8)
    w0 = random_field(d, rng, off_special=True)
    series = semigroup_series(w0.coeffs, np.linspace(0, 2, 41), d)
    p = WienerParams(0.1, 1)
    assert sup_wiener_norm(series, 0.1, 1) == wiener_norm(w0, p)


# --------------------------------------------------------------------------
# I+


def test_iplus_zero():
    assert not np.any(iplus(np.zeros((11, 9, 9)), 0.1, D))


def test_iplus_constant_single_mode():
    k, j, c, dt = 1, 1, 0.7, 1 / 64
    h = np.zeros((129, 9, 9))
    h[:, k, j] = c
    y = iplus(h, dt, D)
    s = sigma(k, j, D)
    t = np.arange(129) * dt
    exact = c * (1 - np.exp(s * t)) / (-s)
    assert np.max(np.abs(y[:, k, j] - exact)) < 1e-12 * c / -s
    # long horizon: the sup approaches c / (-sigma)
    y = iplus(np.broadcast_to(h[:1], (401, 9, 9)), 0.25, D)
    assert np.max(y[:, k, j]) == pytest.approx(c / -s, rel=1e-12)


def test_iplus_drops_special_modes(rng):
    h = rng.standard_normal((5, 9, 9))
    y = iplus(h, 0.1, D)
    assert not np.any(y[:, special_mask(8)])


def test_iplus_linear_source_is_exact():
    # h(s) = s: integral of e^{sigma (t - s)} s ds in closed form
    dt = 0.1
    t = np.arange(21) * dt
    h = np.zeros((21, 9, 9))
    h[:, 2, 1] = t
    s = sigma(2, 1, D)
    exact = (np.exp(s * t) - 1 - s * t) / s ** 2
    assert np.max(np.abs(iplus(h, dt, D)[:, 2, 1] - exact)) < 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_iplus_operator_bound(seed):
    rng = np.random.default_rng(seed)
    d = Domain.near_critical(1e-3, 2e-3, 8)
    h = rng.standard_normal((33, 9, 9)) * np.exp(-0.4 * np.add.outer(np.arange(9), np.arange(9)))
    h[:, special_mask(8)] = 0.0
    y = iplus(h, 1 / 16, d)
    assert sup_wiener_norm(y, 0.1, 1) <= compute_K1(d) * sup_wiener_norm(h, 0.1, 0) * (1 + 1e-12)


# --------------------------------------------------------------------------
# mode ODEs against the toy model


def _toy_pair(d, q, axis):
    eps1, eps2, B1, B2 = linear_coefficients(d)
    ei, B, L = (eps1, B1, d.L1) if axis == 1 else (eps2, B2, d.L2)
    return ToySystem(axis, ei, B, L, max(eps1, eps2), 1e6, 1.0, 1.0,
                     Forcing.constant(*q) if any(q) else Forcing.zero())


@pytest.mark.parametrize("q", [(0.0, 0.0), (0.003, -0.002)])
def test_advance_modes_matches_toy(q):
    d = Domain.near_critical(1e-3, 2e-3, 8)
    cfg = SchemeConfig(T=1.0, dt=1 / 2048, dt_w=1 / 256, N=8)
    amps0 = (0.1, -0.02, 0.08, 0.03)
    F = np.zeros((cfg.n_samples, 8))
    F[:, 0], F[:, 2], F[:, 4], F[:, 6] = q[0], q[1], q[0], q[1]
    out = advance_modes(F, d, amps0, cfg)
    for axis, (ia, ib) in ((1, (0, 1)), (2, (2, 3))):
        sys = _toy_pair(d, q, axis)
        traj = integrate(ToyState(0.0, amps0[ia], amps0[ib], sys.L, sys.eps), sys, 1.0, 1 / 2048,
                         max_records=2049)
        assert np.max(np.abs(traj.a[::8] - out[:, ia])) < 1e-10
        assert np.max(np.abs(traj.b[::8] - out[:, ib])) < 1e-10


def test_advance_modes_zero():
    cfg = SchemeConfig(T=0.5, N=8)
    assert not np.any(advance_modes(np.zeros((cfg.n_samples, 8)), D, (0, 0, 0, 0), cfg))


# --------------------------------------------------------------------------
# w update


def _source_of(phi_coeffs, d):
    from ks2d.forcing import forcing_and_source
    amps = np.array([phi_coeffs[1, 0], phi_coeffs[2, 0], phi_coeffs[0, 1], phi_coeffs[0, 2]])
    w = phi_coeffs.copy()
    w[special_mask(d.N)] = 0.0
    return forcing_and_source(amps, w, d)[1]


def test_advance_w_without_source_is_semigroup(rng):
    cfg = SchemeConfig(T=0.5, dt_w=1 / 32, dt=1 / 32, N=8)
    w0 = random_field(D, rng, off_special=True).coeffs
    out = advance_w(np.zeros((cfg.n_samples, 9, 9)), w0, D, cfg)
    assert np.array_equal(out, semigroup_series(w0, cfg.times(), D))


@pytest.mark.parametrize("modes", [{(1, 0): 0.4}, {(1, 0): 0.4, (0, 1): -0.3}])
def test_advance_w_axis_modes_produce_no_w(modes):
    cfg = SchemeConfig(T=0.5, dt_w=1 / 32, dt=1 / 32, N=8)
    phi = SpectralField.from_modes(D, modes).coeffs
    src = np.broadcast_to(_source_of(phi, D), (cfg.n_samples, 9, 9))
    assert np.max(np.abs(advance_w(src, np.zeros((9, 9)), D, cfg))) < 1e-16


# --------------------------------------------------------------------------
# hypotheses and the scheme


def test_hypotheses_on_preset(theorem_setup):
    d, led = theorem_setup
    assert all(h.holds for h in check_hypotheses(theorem_initial_data(led, d), led))
    assert not all(h.holds for h in check_hypotheses(theorem_initial_data(led, d, 1.5), led))


def test_check_margin():
    assert Check("x", 0.5, 2.0, True).margin == 0.75
    assert Check("x", 0.0, 0.0, True).margin == 0.0
    assert Check("x", 1.0, 0.0, False).margin == -math.inf


def test_inductive_bounds_names(theorem_setup):
    _, led = theorem_setup
    b = inductive_bounds(led)
    assert b["a10"] == 2 * math.sqrt(led.M11 * led.eps)
    assert b["F10x"] == led.K * led.eps ** 2 and len(b) == 13


def test_zero_data_converges_at_once(theorem_setup):
    d, led = theorem_setup
    cfg = SchemeConfig(T=0.25, N=d.N)
    res = run_scheme(ModeSplit(0, 0, 0, 0, SpectralField.zeros(d)), led, cfg)
    assert res.converged and len(res.reports) == 2
    assert not np.any(res.final.amps) and not np.any(res.final.w)


def test_large_w0_rejected_before_iterating(theorem_setup):
    d, led = theorem_setup
    init = theorem_initial_data(led, d)
    big = ModeSplit(init.a10, init.a20, init.a01, init.a02, init.w * (100 / 0.9))
    with pytest.raises(HypothesisError) as err:
        run_scheme(big, led, SchemeConfig(N=d.N))
    assert "||w0||_B1" in str(err.value)


def test_mismatched_N_rejected(theorem_setup):
    d, led = theorem_setup
    with pytest.raises(ValueError):
        run_scheme(theorem_initial_data(led, d), led, SchemeConfig(N=16))


def test_theorem_run_holds_and_satisfies_mild_equation(theorem_setup):
    d, led = theorem_setup
    init = theorem_initial_data(led, d)
    cfg = SchemeConfig(T=0.5, dt=1 / 512, dt_w=1 / 128, N=d.N)
    res = run_scheme(init, led, cfg)
    assert res.converged and res.all_bounds_hold and res.first_violation() is None
    _, rel = mild_residual(res.final, init, cfg)
    assert rel < 10 * cfg.cauchy_tol
    # initial data are the same for every iterate after the zero one
    assert np.array_equal(res.final.w[0], init.w.coeffs)


def test_nonlinear_run_records_violation(theorem_setup):
    # amplitude far above the inductive bounds: reported, not raised
    d, led = theorem_setup
    init = ModeSplit(1e-3, 0.0, 0.0, 0.0, SpectralField.mode(d, 1, 1, 1e-4))
    cfg = SchemeConfig(T=0.25, dt=1 / 256, dt_w=1 / 64, N=d.N, max_iters=4)
    res = run_scheme(init, led, cfg, check=False)
    assert not res.all_bounds_hold
    fv = res.first_violation()
    assert fv["iterate"] >= 1 and fv["margin"] < 0


def test_dt_w_refinement_ratio_near_four():
    # converged w under dt_w halving: successive differences shrink ~4x
    from ks2d.constants import build_ledger
    d = Domain(TWO_PI * 1.2, TWO_PI * 1.15, 16)
    led = build_ledger(d, 0.1)
    init = ModeSplit(0.3, 0.05, 0.2, -0.04, SpectralField.from_modes(
        d, {(1, 1): 0.05, (2, 1): -0.02, (1, 2): 0.03, (3, 0): 0.01}))
    ends = []
    for dtw in (1 / 32, 1 / 64, 1 / 128):
        cfg = SchemeConfig(T=1.0, dt=1 / 1024, dt_w=dtw, N=16, max_iters=60, cauchy_tol=1e-12)
        res = run_scheme(init, led, cfg, check=False)
        assert res.converged
        ends.append(res.final.w[-1])
    r = wiener_norm(SpectralField(d, ends[0] - ends[1]), WienerParams(0.1, 1)) / \
        wiener_norm(SpectralField(d, ends[1] - ends[2]), WienerParams(0.1, 1))
    assert r == pytest.approx(4, rel=0.15)
