"""Lagged iteration for (a10, a20, a01, a02, w) and its inductive bounds.

Iterate n + 1 solves the four mode ODEs driven by the forcing scalars of
iterate n, and

    w^{n+1}(t) = e^{t sigma} w0 + I+[ P5((phi^n_x)^2 + (phi^n_y)^2) ](t)

on a uniform grid t_m = m dt_w.  I+ integrates the exponential exactly
against a piecewise-linear interpolant of the source, so stiff modes cost
nothing extra.  Time-dependent norms are maxima over the grid samples.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .constants import ConstantLedger, linear_coefficients
from .expint import phi_functions
from .forcing import FORCING_NAMES, forcing_and_source
from .spectral import (
    Domain,
    ModeSplit,
    SpectralField,
    special_mask,
    sup_wiener_norm,
    wavenumber_scale,
    wiener_norm_array,
)

MODE_NAMES = ("a10", "a20", "a01", "a02")


class HypothesisError(ValueError):
    def __init__(self, results):
        failed = [r.name for r in results if not r.holds]
        super().__init__(f"initial data violate: {', '.join(failed)}")
        self.results = results


class SchemeBlowupError(RuntimeError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    T: float = 1.0
    dt: float = 1.0 / 1024
    dt_w: float = 1.0 / 256
    N: int = 32
    rho: float = 0.1
    max_iters: int = 20
    cauchy_tol: float = 1e-8

    def __post_init__(self):
        if not (self.T > 0 and self.dt > 0 and self.dt_w > 0):
            raise ValueError("T, dt and dt_w must be positive")
        if self.dt > self.dt_w * (1 + 1e-12):
            raise ValueError("dt must not exceed dt_w")
        if not self.cauchy_tol > 0:
            raise ValueError("cauchy_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name, n in (("T / dt_w", self.T / self.dt_w), ("dt_w / dt", self.dt_w / self.dt)):
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ValueError(f"{name} must be an integer, got {n}")

    @property
    def n_samples(self) -> int:
        return int(round(self.T / self.dt_w)) + 1

    @property
    def substeps(self) -> int:
        return int(round(self.dt_w / self.dt))

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_samples)


# --------------------------------------------------------------------------
# linear pieces


def semigroup_apply(w0: SpectralField, t: float) -> SpectralField:
    """e^{t sigma} applied modewise to a field supported off A."""
    _require_off_special(w0.coeffs)
    sig = w0.domain.sigma_grid()
    return SpectralField(w0.domain, np.exp(sig * t) * w0.coeffs)


def semigroup_series(w0: np.ndarray, times: np.ndarray, domain: Domain) -> np.ndarray:
    sig = domain.sigma_grid()
    return np.exp(np.multiply.outer(np.asarray(times, float), sig)) * w0


def _require_off_special(c: np.ndarray):
    if np.any(c[..., special_mask(c.shape[-1] - 1)] != 0):
        raise ValueError("field must vanish on the special modes")


def iplus(h: np.ndarray, dt_w: float, domain: Domain) -> np.ndarray:
    """I+ on a uniform grid with h linear between samples (exact otherwise).

    h has shape (M + 1, N + 1, N + 1); returns y with y[0] = 0 and
    y[m+1] = e^z y[m] + dt_w [(phi1(z) - phi2(z)) h[m] + phi2(z) h[m+1]],
    z = sigma dt_w, which is the exact integral of e^{sigma (t - s)} against
    the linear interpolant.  Modes in A are dropped (P5).
    """
    h = np.asarray(h, dtype=float)
    sig = domain.sigma_grid(h.shape[-1] - 1)
    z = sig * dt_w
    _, p1, p2 = phi_functions(z, 2)
    E = np.exp(z)
    keep = ~special_mask(h.shape[-1] - 1)
    w_old = np.where(keep, dt_w * (p1 - p2), 0.0)
    w_new = np.where(keep, dt_w * p2, 0.0)
    y = np.zeros_like(h)
    for m in range(len(h) - 1):
        y[m + 1] = E * y[m] + w_old * h[m] + w_new * h[m + 1]
    return y


# --------------------------------------------------------------------------
# mode ODEs


@numba.njit(cache=True)
def _mode_rhs(y, f, eps1, eps2, B1, B2, c11, c21, c12, c22, out):
    out[0] = eps1 * y[0] + c11 * y[0] * y[1] + f[0]
    out[1] = -B1 * y[1] - c21 * y[0] * y[0] + f[1]
    out[2] = eps2 * y[2] + c12 * y[2] * y[3] + f[2]
    out[3] = -B2 * y[3] - c22 * y[2] * y[2] + f[3]


@numba.njit(cache=True)
def _advance_modes(y0, forcing, dt_w, sub, eps1, eps2, B1, B2, c11, c21, c12, c22):
    M = forcing.shape[0] - 1
    out = np.empty((M + 1, 4))
    out[0] = y0
    y = y0.copy()
    h = dt_w / sub
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    tmp = np.empty(4)
    f0 = np.empty(4)
    fh = np.empty(4)
    f1 = np.empty(4)
    for m in range(M):
        for s in range(sub):
            # forcing interpolated linearly between the dt_w samples
            th0 = s / sub
            thh = (s + 0.5) / sub
            th1 = (s + 1.0) / sub
            for i in range(4):
                f0[i] = (1 - th0) * forcing[m, i] + th0 * forcing[m + 1, i]
                fh[i] = (1 - thh) * forcing[m, i] + thh * forcing[m + 1, i]
                f1[i] = (1 - th1) * forcing[m, i] + th1 * forcing[m + 1, i]
            _mode_rhs(y, f0, eps1, eps2, B1, B2, c11, c21, c12, c22, k1)
            for i in range(4):
                tmp[i] = y[i] + 0.5 * h * k1[i]
            _mode_rhs(tmp, fh, eps1, eps2, B1, B2, c11, c21, c12, c22, k2)
            for i in range(4):
                tmp[i] = y[i] + 0.5 * h * k2[i]
            _mode_rhs(tmp, fh, eps1, eps2, B1, B2, c11, c21, c12, c22, k3)
            for i in range(4):
                tmp[i] = y[i] + h * k3[i]
            _mode_rhs(tmp, f1, eps1, eps2, B1, B2, c11, c21, c12, c22, k4)
            for i in range(4):
                y[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        out[m + 1] = y
    return out


def mode_forcing(F: np.ndarray) -> np.ndarray:
    """(M+1, 8) forcing scalars -> (M+1, 4) right-hand sides of the a-equations."""
    F = np.asarray(F, dtype=float)
    return np.stack([F[:, 0] + F[:, 1], F[:, 2] + F[:, 3], F[:, 4] + F[:, 5], F[:, 6] + F[:, 7]], axis=1)


def advance_modes(F: np.ndarray, domain: Domain, amps0, cfg: SchemeConfig) -> np.ndarray:
    """RK4 (step cfg.dt) for the four mode ODEs with F given on the dt_w grid."""
    eps1, eps2, B1, B2 = linear_coefficients(domain)
    s1, s2 = wavenumber_scale(domain, 0), wavenumber_scale(domain, 1)
    out = _advance_modes(np.asarray(amps0, dtype=float), np.ascontiguousarray(mode_forcing(F)),
                         cfg.dt_w, cfg.substeps, eps1, eps2, B1, B2,
                         2 * s1 * s1, 0.5 * s1 * s1, 2 * s2 * s2, 0.5 * s2 * s2)
    if not np.all(np.isfinite(out)):
        bad = int(np.argmax(~np.all(np.isfinite(out), axis=1)))
        raise SchemeBlowupError(f"mode ODEs blew up near t = {bad * cfg.dt_w:.6g}")
    return out


def advance_w(source: np.ndarray, w0: np.ndarray, domain: Domain, cfg: SchemeConfig) -> np.ndarray:
    """Mild formula for the next w on the dt_w grid, given the (lagged) source samples."""
    _require_off_special(w0)
    return semigroup_series(w0, cfg.times(), domain) + iplus(source, cfg.dt_w, domain)


# --------------------------------------------------------------------------
# hypotheses and bounds


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    holds: bool
    strict: bool = False

    @property
    def margin(self) -> float:
        """1 - value / bound (positive when the check passes with room)."""
        if self.bound == 0:
            return 0.0 if self.value == 0 else -math.inf
        return 1.0 - self.value / self.bound

    def to_dict(self) -> dict:
        return {**asdict(self), "margin": self.margin}


def _check(name, value, bound, strict=False) -> Check:
    value, bound = float(value), float(bound)
    return Check(name, value, bound, value < bound if strict else value <= bound, strict)


def check_hypotheses(init: ModeSplit, led: ConstantLedger) -> list[Check]:
    """The five smallness requirements on the initial data."""
    e = led.eps
    w1 = wiener_norm_array(init.w.coeffs, led.rho, 1)
    return [
        _check("a10^2+a20^2 <= M11 eps/4", init.a10 ** 2 + init.a20 ** 2, led.M11 * e / 4),
        _check("|a20| <= M21 eps/2", abs(init.a20), led.M21 * e / 2),
        _check("a01^2+a02^2 <= M12 eps/4", init.a01 ** 2 + init.a02 ** 2, led.M12 * e / 4),
        _check("|a02| <= M22 eps/2", abs(init.a02), led.M22 * e / 2),
        _check("||w0||_B1 <= M3 eps^1.5/6", w1, led.M3 * e ** 1.5 / 6),
    ]


def inductive_bounds(led: ConstantLedger) -> dict[str, float]:
    e = led.eps
    out = {
        "a10": 2 * math.sqrt(led.M11 * e),
        "a20": led.M21 * e,
        "a01": 2 * math.sqrt(led.M12 * e),
        "a02": led.M22 * e,
        "w": led.M3 * e ** 1.5,
    }
    out.update({n: led.K * e * e for n in FORCING_NAMES})
    return out


@dataclass
class IterationReport:
    n: int
    sup_modes: dict
    w_norm_B1: float
    w_norm_B0: float
    sup_forcing: dict
    checks: list
    cauchy_abs: float
    cauchy_rel: float
    truncation_tail: float

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)

    @property
    def violations(self) -> list[str]:
        return [c.name for c in self.checks if not c.holds]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sup_modes": self.sup_modes,
            "w_norm_B1": self.w_norm_B1,
            "w_norm_B0": self.w_norm_B0,
            "sup_forcing": self.sup_forcing,
            "checks": [c.to_dict() for c in self.checks],
            "all_hold": self.all_hold,
            "cauchy_abs": self.cauchy_abs,
            "cauchy_rel": self.cauchy_rel,
            "truncation_tail": self.truncation_tail,
        }


@dataclass(frozen=True, eq=False)
class Iterate:
    """One iterate on the time grid: amplitudes (M+1, 4), w (M+1, N+1, N+1), F (M+1, 8)."""

    n: int
    times: np.ndarray
    amps: np.ndarray
    w: np.ndarray
    F: np.ndarray
    source: np.ndarray
    tail: np.ndarray

    def phi(self) -> np.ndarray:
        """Assembled coefficients of phi at every sample."""
        c = self.w.copy()
        c[:, 1, 0], c[:, 2, 0] = self.amps[:, 0], self.amps[:, 1]
        c[:, 0, 1], c[:, 0, 2] = self.amps[:, 2], self.amps[:, 3]
        return c

    def snapshot(self, m: int, domain: Domain) -> ModeSplit:
        a = self.amps[m]
        return ModeSplit(*(float(x) for x in a), SpectralField(domain, self.w[m]))


@dataclass
class SchemeResult:
    reports: list[IterationReport]
    final: Iterate
    converged: bool
    config: SchemeConfig
    hypotheses: list[Check] = field(default_factory=list)

    @property
    def all_bounds_hold(self) -> bool:
        return all(r.all_hold for r in self.reports)

    @property
    def cauchy_history(self) -> list[float]:
        return [r.cauchy_rel for r in self.reports]

    def first_violation(self) -> dict | None:
        for r in self.reports:
            for c in r.checks:
                if not c.holds:
                    return {"iterate": r.n, "bound": c.name, "value": c.value,
                            "limit": c.bound, "margin": c.margin}
        return None

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": len(self.reports),
            "all_bounds_hold": self.all_bounds_hold,
            "first_violation": self.first_violation(),
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "reports": [r.to_dict() for r in self.reports],
        }


def _evaluate(n, times, amps, w, domain, rho) -> Iterate:
    F, S, tail = forcing_and_source(amps, w, domain, with_tail=True, rho=rho)
    return Iterate(n, times, amps, w, F, S, np.atleast_1d(tail))


def _distance(new: Iterate, old: Iterate, rho: float) -> tuple[float, float]:
    da = float(np.max(np.abs(new.amps - old.amps))) if new.amps.size else 0.0
    dw = sup_wiener_norm(new.w - old.w, rho, 1)
    size = float(np.max(np.abs(new.amps))) + sup_wiener_norm(new.w, rho, 1)
    d = da + dw
    return d, (d / size if size > 0 else 0.0)


def _report(it: Iterate, led: ConstantLedger, rho: float, cauchy: tuple[float, float]) -> IterationReport:
    bounds = inductive_bounds(led)
    sup_modes = {n: float(np.max(np.abs(it.amps[:, i]))) for i, n in enumerate(MODE_NAMES)}
    sup_f = {n: float(np.max(np.abs(it.F[:, i]))) for i, n in enumerate(FORCING_NAMES)}
    wB1 = sup_wiener_norm(it.w, rho, 1)
    checks = [_check(n, sup_modes[n], bounds[n]) for n in MODE_NAMES]
    checks.append(_check("w", wB1, bounds["w"]))
    checks += [_check(n, sup_f[n], bounds[n]) for n in FORCING_NAMES]
    return IterationReport(it.n, sup_modes, wB1, sup_wiener_norm(it.w, rho, 0), sup_f, checks,
                           cauchy[0], cauchy[1], float(np.max(it.tail)))


def run_scheme(init: ModeSplit, led: ConstantLedger, cfg: SchemeConfig,
               *, check: bool = True, keep_iterates: bool = False):
    """Iterate from the zero iterate until the relative Cauchy distance drops below tolerance.

    The hypotheses on the initial data are checked first (HypothesisError if
    any fails and ``check`` is set).  Bound violations are recorded in the
    reports, never raised.  Returns a SchemeResult (and the list of all
    iterates if ``keep_iterates``).
    """
    domain = init.domain
    if domain.N != cfg.N:
        raise ValueError(f"initial data have N = {domain.N}, config says {cfg.N}")
    hyps = check_hypotheses(init, led)
    if check and not all(h.holds for h in hyps):
        raise HypothesisError(hyps)
    times = cfg.times()
    M1 = len(times)
    w0 = np.array(init.w.coeffs)
    amps0 = np.array(init.amplitudes, dtype=float)
    prev = _evaluate(0, times, np.zeros((M1, 4)), np.zeros((M1,) + w0.shape), domain, cfg.rho)
    history = [prev] if keep_iterates else None
    reports = [_report(prev, led, cfg.rho, (0.0, 0.0))]
    converged = False
    for n in range(1, cfg.max_iters + 1):
        amps = advance_modes(prev.F, domain, amps0, cfg)
        w = advance_w(prev.source, w0, domain, cfg)
        if not np.all(np.isfinite(w)):
            raise SchemeBlowupError(f"w became non-finite at iterate {n}")
        cur = _evaluate(n, times, amps, w, domain, cfg.rho)
        dist = _distance(cur, prev, cfg.rho)
        reports.append(_report(cur, led, cfg.rho, dist))
        if keep_iterates:
            history.append(cur)
        prev = cur
        if dist[1] < cfg.cauchy_tol:
            converged = True
            break
    result = SchemeResult(reports, prev, converged, cfg, hyps)
    return (result, history) if keep_iterates else result


def mild_residual(it: Iterate, init: ModeSplit, cfg: SchemeConfig) -> tuple[float, float]:
    """(absolute, relative) B^1 norm of w - e^{t sigma} w0 - I+(source of the same iterate)."""
    domain = init.domain
    r = it.w - advance_w(it.source, np.array(init.w.coeffs), domain, cfg)
    a = sup_wiener_norm(r, cfg.rho, 1)
    size = sup_wiener_norm(it.w, cfg.rho, 1)
    return a, (a / size if size > 0 else 0.0)


# pattern for the preset w0 (off A, a few low modes)
_W0_PATTERN = {(1, 1): 1.0, (2, 1): -0.5, (1, 2): 0.5, (3, 0): 0.25, (0, 3): -0.25, (2, 2): 0.125}


def theorem_initial_data(led: ConstantLedger, domain: Domain, fraction: float = 0.9) -> ModeSplit:
    """Data sitting at ``fraction`` of every hypothesis bound (fraction <= 1 passes them all)."""
    e = led.eps
    a20 = fraction * led.M21 * e / 2
    a02 = fraction * led.M22 * e / 2
    a10 = math.sqrt(max(fraction * led.M11 * e / 4 - a20 * a20, 0.0))
    a01 = math.sqrt(max(fraction * led.M12 * e / 4 - a02 * a02, 0.0))
    w = SpectralField.from_modes(domain, _W0_PATTERN)
    w = w * (fraction * led.M3 * e ** 1.5 / 6 / wiener_norm_array(w.coeffs, led.rho, 1))
    return ModeSplit(a10, a20, a01, a02, w)
