import math
from types import SimpleNamespace

import numpy as np
import pytest

from ks2d.direct import (
    CFLError,
    DirectRun,
    DirectSolver,
    SolverState,
    cross_validate,
    direct_bound_checks,
    from_grid,
    mean_grad_sq,
    to_grid,
    track_mean,
    write_run_csv,
)
from ks2d.mild import Iterate, SchemeConfig, semigroup_series, theorem_initial_data
from ks2d.spectral import TWO_PI, Domain, ModeSplit, SpectralField, random_field, sigma
from oracles import trig_grid

D = Domain(TWO_PI * 1.2, TWO_PI * 1.15, 16)
D8 = Domain(TWO_PI * 1.2, TWO_PI * 1.15, 8)


def test_zero_stays_zero():
    run = DirectSolver(D8, 0.01).run(SpectralField.zeros(D8), 0.5)
    assert not np.any(run.coeffs)
    assert not np.any(run.psi_bar)


@pytest.mark.parametrize("dt", [1e-3, 0.05, 0.5])
def test_linear_single_mode_exact(dt):
    s = DirectSolver(D8, dt, nonlinear=False)
    run = s.run(SpectralField.mode(D8, 1, 1, 0.8), 1.0)
    exact = 0.8 * np.exp(sigma(1, 1, D8) * run.times)
    assert np.max(np.abs(run.coeffs[:, 1, 1] - exact)) < 1e-12
    assert np.count_nonzero(run.coeffs[-1]) == 1


def test_richardson_ratio_sixteen():
    # smooth low-mode data; random fields excite stiff transients that cost order
    phi0 = SpectralField.from_modes(D, {(1, 0): 0.3, (2, 0): 0.05, (0, 1): 0.2, (0, 2): -0.04,
                                        (1, 1): 0.05, (2, 1): -0.02, (1, 2): 0.03, (3, 0): 0.01})
    ends = [DirectSolver(D, 0.1 / n).run(phi0, 0.1).coeffs[-1] for n in (32, 64, 128)]
    r = np.abs(ends[0] - ends[1]).sum() / np.abs(ends[1] - ends[2]).sum()
    assert r == pytest.approx(16, rel=0.1)


def test_track_mean_examples():
    assert track_mean(0.3, 0.0, 0.0, 0.1) == 0.3
    a = 0.7
    phi = SpectralField.mode(D8, 1, 0, a).coeffs
    rate = mean_grad_sq(phi, D8)
    assert rate == pytest.approx(2 * math.pi ** 2 * a ** 2 / D8.L1 ** 2, rel=1e-15)
    assert track_mean(0.0, rate, rate, 0.5) == pytest.approx(-0.5 * rate, rel=1e-15)


def test_mean_is_monotone_and_phi_stays_mean_free(rng):
    phi0 = random_field(D, rng, 0.5)
    run = DirectSolver(D, 1e-3).run(phi0, 0.5)
    assert run.mean_violations == 0
    assert np.all(np.diff(run.psi_bar) <= 0)
    assert not np.any(run.coeffs[:, 0, 0])
    assert np.all(np.diff(run.dissipated) >= 0)


def test_cfl_rejection():
    phi0 = SpectralField.mode(D8, 3, 3, 50.0)
    with pytest.raises(CFLError):
        DirectSolver(D8, 0.1).step(SolverState(0.0, phi0))


def test_run_requires_multiple_of_dt():
    with pytest.raises(ValueError):
        DirectSolver(D8, 0.3).run(SpectralField.zeros(D8), 1.0)


def test_grid_roundtrip_and_oracle(rng):
    c = random_field(D8, rng).coeffs
    assert to_grid(c, 24, 20).shape == (24, 20)
    ref = trig_grid(c, D8.L1, D8.L2, 24)
    assert np.max(np.abs(to_grid(c, 24) - ref)) < 1e-12
    assert np.max(np.abs(from_grid(to_grid(c, 24), 8) - c)) < 1e-13
    with pytest.raises(ValueError):
        to_grid(c, 16)


def test_direct_run_split():
    c = SpectralField.from_modes(D8, {(1, 0): 1.0, (0, 2): 2.0, (3, 1): 3.0}).coeffs
    run = DirectRun(D8, np.zeros(1), c[None], np.zeros(1), np.zeros(1))
    ms = run.split(0)
    assert ms.amplitudes == (1.0, 0.0, 0.0, 2.0)
    assert ms.w == SpectralField.mode(D8, 3, 1, 3.0)


def test_csv_output(tmp_path, rng):
    run = DirectSolver(D8, 0.01).run(random_field(D8, rng) * 0.1, 0.05)
    path = write_run_csv(run, tmp_path / "r.csv", config={"k": 1})
    lines = path.read_text().splitlines()
    assert lines[0] == '# config: {"k": 1}'
    assert lines[1].split(",")[:3] == ["t", "psi_bar", "a10"]
    assert len(lines) == 2 + len(run.times)


# --------------------------------------------------------------------------
# cross-validation


def test_cross_validate_zero_data(theorem_setup):
    d, led = theorem_setup
    cfg = SchemeConfig(T=0.25, N=d.N)
    xv = cross_validate(ModeSplit(0, 0, 0, 0, SpectralField.zeros(d)), led, cfg, 1 / 1024)
    assert xv.max_dist_B0 == 0.0 and xv.max_dist_l1 == 0.0
    assert xv.rel_dist_B0 == 0.0


def test_cross_validate_linear_only(rng):
    # mild side built from the exact linear flow: semigroup for w, exponentials for the amplitudes
    from ks2d.constants import build_ledger, linear_coefficients
    d = D8
    led = build_ledger(d, 0.1)
    cfg = SchemeConfig(T=0.5, dt=1 / 64, dt_w=1 / 64, N=8)
    w0 = random_field(d, rng, off_special=True)
    init = ModeSplit(0.3, -0.1, 0.2, 0.05, w0)
    t = cfg.times()
    eps1, eps2, B1, B2 = linear_coefficients(d)
    amps = np.stack([0.3 * np.exp(eps1 * t), -0.1 * np.exp(-B1 * t),
                     0.2 * np.exp(eps2 * t), 0.05 * np.exp(-B2 * t)], axis=1)
    it = Iterate(1, t, amps, semigroup_series(w0.coeffs, t, d), np.zeros((len(t), 8)),
                 np.zeros((len(t), 9, 9)), np.zeros(1))
    xv = cross_validate(init, led, cfg, 1 / 256, mild=SimpleNamespace(final=it, converged=True),
                        nonlinear=False)
    assert xv.max_dist_B0 < 1e-14


def test_direct_bounds_on_theorem_data(theorem_setup):
    d, led = theorem_setup
    init = theorem_initial_data(led, d)
    from ks2d.spectral import assemble
    run = DirectSolver(d, 1 / 256).run(-assemble(init), 0.5)
    mirrored = DirectRun(d, run.times, -run.coeffs, run.psi_bar, run.dissipated)
    assert all(c.holds for c in direct_bound_checks(mirrored, led, 0.1))
