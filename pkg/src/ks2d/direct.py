"""Direct ETDRK4 pseudospectral solver for the mean-free equation.

    phi_t = sigma phi - P0 |grad phi|^2,
    psi_bar_t = -mean(|grad phi|^2)

on cosine coefficients, with the nonlinearity computed by the same padded
spectral product as everything else.  The mode equations and the w equation
used by the mild iteration carry the opposite sign in front of the
nonlinearity; the two problems are exchanged by phi -> -phi, which
:func:`cross_validate` takes care of.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import ConstantLedger
from .expint import etdrk4_coefficients
from .mild import MODE_NAMES, Check, SchemeConfig, SchemeResult, _check, inductive_bounds, run_scheme
from .spectral import (
    Domain,
    ModeSplit,
    SpectralField,
    assemble,
    derivative_coeffs,
    product_coeffs,
    project_off_special,
    truncate_coeffs,
    wiener_norm_array,
)


class CFLError(ValueError):
    pass


class DirectBlowupError(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"non-finite solution at t = {t:.6g}")
        self.t = t


@dataclass(frozen=True, eq=False)
class SolverState:
    t: float
    phi: SpectralField
    psi_bar: float = 0.0
    dissipated: float = 0.0


def parseval_weights(N: int) -> np.ndarray:
    """mean of cos^2 cos^2 products: 1 at (0,0), 1/2 on the axes, 1/4 elsewhere."""
    w = np.full((N + 1, N + 1), 0.25)
    w[0, :] = 0.5
    w[:, 0] = 0.5
    w[0, 0] = 1.0
    return w


def mean_grad_sq(coeffs: np.ndarray, domain: Domain) -> float:
    """(1 / (L1 L2)) integral of |grad phi|^2, by Parseval."""
    kx2, ky2 = domain.wavenumber_sq(coeffs.shape[-1] - 1)
    return math.fsum(((kx2 + ky2) * parseval_weights(coeffs.shape[-1] - 1) * coeffs ** 2).ravel())


def mean_sq(coeffs: np.ndarray) -> float:
    return math.fsum((parseval_weights(coeffs.shape[-1] - 1) * coeffs ** 2).ravel())


def track_mean(psi_bar: float, e_old: float, e_new: float, dt: float) -> float:
    """Trapezoidal step of psi_bar_t = -mean |grad phi|^2."""
    return psi_bar - 0.5 * dt * (e_old + e_new)


def grad_sq_coeffs(c: np.ndarray, domain: Domain) -> np.ndarray:
    """|grad phi|^2 truncated to N (padded product, no aliasing)."""
    N = domain.N
    out = np.zeros_like(c)
    for axis, parity in ((0, (1, 0)), (1, (0, 1))):
        d, _ = derivative_coeffs(c, (0, 0), domain, axis)
        full, _ = product_coeffs(d, parity, d, parity)
        out += truncate_coeffs(full, N)
    return out


class DirectSolver:
    """Fixed-step ETDRK4.

    ``sign`` multiplies P0 |grad phi|^2 (default -1: the equation above).
    ``cfl`` bounds dt * 2 ||grad phi||_{B^0_0} * k_max, the step measured
    against the transport speed of the linearized nonlinearity.
    """

    def __init__(self, domain: Domain, dt: float, *, nonlinear: bool = True,
                 sign: float = -1.0, cfl: float = 1.0):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.domain = domain
        self.dt = float(dt)
        self.nonlinear = nonlinear
        self.sign = float(sign)
        self.cfl = cfl
        self.sigma = domain.sigma_grid()
        self.coef = etdrk4_coefficients(self.sigma, self.dt)
        kx2, ky2 = domain.wavenumber_sq()
        self.k_max = math.sqrt(float(kx2.max() + ky2.max()))

    def nonlinearity(self, c: np.ndarray) -> np.ndarray:
        if not self.nonlinear:
            return np.zeros_like(c)
        g = grad_sq_coeffs(c, self.domain)
        g[0, 0] = 0.0
        return self.sign * g

    def cfl_number(self, c: np.ndarray) -> float:
        if not self.nonlinear:
            return 0.0
        speed = 0.0
        for axis in (0, 1):
            d, _ = derivative_coeffs(c, (0, 0), self.domain, axis)
            speed = max(speed, wiener_norm_array(d, 0.0, 0))
        return self.dt * 2 * speed * self.k_max

    def step_coeffs(self, u: np.ndarray) -> np.ndarray:
        k = self.coef
        Nu = self.nonlinearity(u)
        a = k["E2"] * u + k["Q"] * Nu
        Na = self.nonlinearity(a)
        b = k["E2"] * u + k["Q"] * Na
        Nb = self.nonlinearity(b)
        c = k["E2"] * a + k["Q"] * (2 * Nb - Nu)
        Nc = self.nonlinearity(c)
        return k["E"] * u + k["f1"] * Nu + 2 * k["f2"] * (Na + Nb) + k["f3"] * Nc

    def step(self, s: SolverState) -> SolverState:
        c = np.array(s.phi.coeffs)
        if (cn := self.cfl_number(c)) > self.cfl:
            raise CFLError(f"CFL number {cn:.3g} exceeds {self.cfl} at t = {s.t:.6g}; reduce dt")
        new = self.step_coeffs(c)
        new[0, 0] = 0.0
        if not np.all(np.isfinite(new)):
            raise DirectBlowupError(s.t + self.dt)
        e0, e1 = mean_grad_sq(c, self.domain), mean_grad_sq(new, self.domain)
        return SolverState(s.t + self.dt, SpectralField(self.domain, new),
                           track_mean(s.psi_bar, e0, e1, self.dt),
                           s.dissipated + 0.5 * self.dt * (e0 + e1))

    def run(self, phi0: SpectralField, T: float, record_every: int = 1, psi_bar0: float = 0.0) -> "DirectRun":
        nsteps = int(round(T / self.dt))
        if abs(nsteps * self.dt - T) > 1e-9 * max(T, 1.0):
            raise ValueError("T must be a multiple of dt")
        c = np.array(phi0.coeffs)
        c[0, 0] = 0.0
        s = SolverState(0.0, SpectralField(self.domain, c), psi_bar0)
        times, coeffs, psi, diss = [0.0], [c], [psi_bar0], [0.0]
        for n in range(1, nsteps + 1):
            s = self.step(s)
            if n % record_every == 0 or n == nsteps:
                times.append(n * self.dt)
                coeffs.append(np.array(s.phi.coeffs))
                psi.append(s.psi_bar)
                diss.append(s.dissipated)
        return DirectRun(self.domain, np.array(times), np.array(coeffs), np.array(psi), np.array(diss))


@dataclass(frozen=True, eq=False)
class DirectRun:
    domain: Domain
    times: np.ndarray
    coeffs: np.ndarray
    psi_bar: np.ndarray
    dissipated: np.ndarray

    @property
    def mean_violations(self) -> int:
        return int(np.count_nonzero(np.diff(self.psi_bar) > 0))

    def split(self, m: int) -> ModeSplit:
        c = self.coeffs[m]
        return ModeSplit(float(c[1, 0]), float(c[2, 0]), float(c[0, 1]), float(c[0, 2]),
                         SpectralField(self.domain, project_off_special(c)))


def write_run_csv(run: DirectRun, path, rho: float = 0.1, config: dict | None = None) -> Path:
    """Columns t,psi_bar,a10,a20,a01,a02,wnorm_rho0,wnorm_rho1,energy (energy = mean phi^2)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(config or {}, sort_keys=True, default=str) + "\n")
        wr = csv.writer(fh)
        wr.writerow(["t", "psi_bar", "a10", "a20", "a01", "a02", "wnorm_rho0", "wnorm_rho1", "energy"])
        for t, pb, c in zip(run.times, run.psi_bar, run.coeffs):
            w = project_off_special(c)
            row = (t, pb, c[1, 0], c[2, 0], c[0, 1], c[0, 2],
                   wiener_norm_array(w, 0.0, 0), wiener_norm_array(w, rho, 1), mean_sq(c))
            wr.writerow([f"{x:.17g}" for x in row])
    return path


# --------------------------------------------------------------------------
# gridded transforms (used to check symmetry against a general periodic solver)


def to_grid(coeffs: np.ndarray, nx: int, ny: int | None = None) -> np.ndarray:
    """Values of sum c[k,j] cos(2 pi k x/L1) cos(2 pi j y/L2) at x = L1 p/nx, y = L2 q/ny."""
    ny = nx if ny is None else ny
    N = coeffs.shape[-1] - 1
    if nx <= 2 * N or ny <= 2 * N:
        raise ValueError("grid must exceed 2N points per axis")
    spec = np.zeros((nx, ny), dtype=complex)
    half = np.where(np.arange(N + 1) > 0, 0.5, 1.0)
    e = coeffs * half[:, None] * half[None, :]
    for sk in (1, -1):
        for sj in (1, -1):
            ks = (sk * np.arange(N + 1)) % nx
            js = (sj * np.arange(N + 1)) % ny
            block = e.copy()
            if sk < 0:
                block[0, :] = 0.0
            if sj < 0:
                block[:, 0] = 0.0
            spec[np.ix_(ks, js)] += block
    return np.real(np.fft.ifft2(spec)) * nx * ny


def from_grid(values: np.ndarray, N: int) -> np.ndarray:
    """Cosine coefficients 0..N of gridded values (assumes the even symmetry)."""
    nx, ny = values.shape
    spec = np.fft.fft2(values) / (nx * ny)
    c = np.real(spec[: N + 1, : N + 1]).copy()
    c[1:, :] *= 2
    c[:, 1:] *= 2
    return c


# --------------------------------------------------------------------------
# cross-validation


@dataclass
class CrossValidation:
    times: np.ndarray
    dist_B0: np.ndarray
    dist_l1: np.ndarray
    size_B0: float
    mean_violations: int
    direct_checks: list[Check] = field(default_factory=list)
    mild: SchemeResult | None = None
    direct: DirectRun | None = None

    @property
    def max_dist_B0(self) -> float:
        return float(self.dist_B0.max()) if self.dist_B0.size else 0.0

    @property
    def rel_dist_B0(self) -> float:
        return self.max_dist_B0 / self.size_B0 if self.size_B0 > 0 else 0.0

    @property
    def max_dist_l1(self) -> float:
        return float(self.dist_l1.max()) if self.dist_l1.size else 0.0

    def to_dict(self) -> dict:
        return {
            "max_dist_B0": self.max_dist_B0,
            "rel_dist_B0": self.rel_dist_B0,
            "max_dist_l1": self.max_dist_l1,
            "size_B0": self.size_B0,
            "psi_bar_increases": self.mean_violations,
            "direct_bounds": [c.to_dict() for c in self.direct_checks],
            "mild_converged": None if self.mild is None else self.mild.converged,
        }


def direct_bound_checks(run: DirectRun, led: ConstantLedger, rho: float) -> list[Check]:
    """The amplitude and w bounds applied to the direct solution (mild sign convention)."""
    b = inductive_bounds(led)
    c = run.coeffs
    sup = {"a10": np.abs(c[:, 1, 0]).max(), "a20": np.abs(c[:, 2, 0]).max(),
           "a01": np.abs(c[:, 0, 1]).max(), "a02": np.abs(c[:, 0, 2]).max()}
    checks = [_check(n, sup[n], b[n]) for n in MODE_NAMES]
    w = project_off_special(c)
    wB1 = wiener_norm_array(np.max(np.abs(w), axis=0), rho, 1)
    checks.append(_check("w", wB1, b["w"]))
    return checks


def cross_validate(init: ModeSplit, led: ConstantLedger, cfg: SchemeConfig, dt_direct: float,
                   *, mild: SchemeResult | None = None, check: bool = True,
                   nonlinear: bool = True) -> CrossValidation:
    """Compare the converged mild iterate with a direct run from the same data.

    The direct solver is started from -phi0 and its output negated, which maps
    its sign convention onto the one of the iteration.
    """
    domain = init.domain
    if mild is None:
        if not nonlinear:
            raise ValueError("a linear comparison needs a precomputed mild result")
        mild = run_scheme(init, led, cfg, check=check)
    ratio = cfg.dt_w / dt_direct
    if abs(ratio - round(ratio)) > 1e-9 * ratio:
        raise ValueError("dt_direct must divide dt_w")
    solver = DirectSolver(domain, dt_direct, nonlinear=nonlinear)
    run = solver.run(-assemble(init), cfg.T, record_every=int(round(ratio)))
    run = DirectRun(domain, run.times, -run.coeffs, run.psi_bar, run.dissipated)
    phi_m = mild.final.phi()
    diff = run.coeffs - phi_m
    dist_B0 = wiener_norm_array(diff, cfg.rho, 0)
    dist_l1 = wiener_norm_array(diff, 0.0, 0)
    size = float(np.max(wiener_norm_array(phi_m, cfg.rho, 0)))
    return CrossValidation(run.times, np.atleast_1d(dist_B0), np.atleast_1d(dist_l1), size,
                           run.mean_violations, direct_bound_checks(run, led, cfg.rho), mild, run)
