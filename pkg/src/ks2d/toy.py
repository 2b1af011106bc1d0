"""Forced two-mode system for one axis and its Lyapunov monitoring.

    a' = eps_i a + (8 pi^2 / L^2) a b + Q1(t)
    b' = -B b - (2 pi^2 / L^2) a^2 + Q2(t)

with G(a, b) = a^2/2 + 2 b^2 + (L^2 eps / pi^2) b.  Long horizons at
B ~ 12 need ~1e7 RK4 steps, so the stepping loop and all the per-step
monitoring run in a numba kernel.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .constants import ConstantLedger

PI = math.pi

_KINDS = {"zero": 0, "constant": 1, "sinusoid": 2, "samples": 3}


class InadmissibleForcingError(ValueError):
    pass


class StepSizeError(ValueError):
    pass


class ToyBlowupError(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"non-finite state at t = {t:.6g}")
        self.t = t


@dataclass(frozen=True, eq=False)
class Forcing:
    """Forcing signal (Q1, Q2).

    ``sinusoid`` is (amp1 sin(omega t), amp2 cos(omega t)); ``samples`` is a
    zero-order hold of an (n, 2) array on a grid of spacing ``sample_dt``
    (the last value is held beyond the grid).
    """

    kind: str = "zero"
    amp1: float = 0.0
    amp2: float = 0.0
    omega: float = 0.0
    samples: np.ndarray | None = None
    sample_dt: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "samples":
            s = np.asarray(self.samples, dtype=float)
            if s.ndim != 2 or s.shape[1] != 2 or len(s) == 0:
                raise ValueError("samples must have shape (n, 2)")
            if not self.sample_dt > 0:
                raise ValueError("sample_dt must be positive")
            object.__setattr__(self, "samples", np.ascontiguousarray(s))

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def constant(cls, q1: float, q2: float):
        return cls("constant", q1, q2)

    @classmethod
    def sinusoid(cls, amp: float, omega: float, amp2: float | None = None):
        return cls("sinusoid", amp, amp if amp2 is None else amp2, omega)

    @classmethod
    def sampled(cls, values, sample_dt: float):
        return cls("samples", samples=np.asarray(values, dtype=float), sample_dt=sample_dt)

    def sup(self) -> tuple[float, float]:
        if self.kind == "samples":
            m = np.max(np.abs(self.samples), axis=0)
            return float(m[0]), float(m[1])
        return abs(self.amp1), abs(self.amp2)

    def __call__(self, t: float) -> tuple[float, float]:
        return _forcing_at(t, *self._packed())

    def _packed(self):
        s = self.samples if self.kind == "samples" else np.zeros((1, 2))
        return _KINDS[self.kind], self.amp1, self.amp2, self.omega, s, self.sample_dt

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("constant", "sinusoid"):
            d.update(amp1=self.amp1, amp2=self.amp2)
        if self.kind == "sinusoid":
            d["omega"] = self.omega
        if self.kind == "samples":
            d.update(n=len(self.samples), sample_dt=self.sample_dt)
        return d


@dataclass(frozen=True)
class ToySystem:
    axis: int
    eps_i: float
    B: float
    L: float
    eps: float
    K: float
    M1: float
    M2: float
    forcing: Forcing = field(default_factory=Forcing.zero)

    def __post_init__(self):
        if self.axis not in (1, 2):
            raise ValueError("axis must be 1 or 2")
        q1, q2 = self.forcing.sup()
        if q1 > self.forcing_bound or q2 > self.forcing_bound:
            raise InadmissibleForcingError(
                f"sup |Q| = ({q1:.3e}, {q2:.3e}) exceeds 2 K eps^2 = {self.forcing_bound:.3e}")

    @classmethod
    def from_ledger(cls, led: ConstantLedger, axis: int, forcing: Forcing | None = None) -> "ToySystem":
        a = led.axis(axis)
        return cls(axis, a["eps_i"], a["B"], a["L"], led.eps, led.K, a["M1"], a["M2"],
                   forcing if forcing is not None else Forcing.zero())

    @property
    def c1(self) -> float:
        return 8 * PI ** 2 / self.L ** 2

    @property
    def c2(self) -> float:
        return 2 * PI ** 2 / self.L ** 2

    @property
    def beta(self) -> float:
        return self.L ** 2 * self.eps / PI ** 2

    @property
    def forcing_bound(self) -> float:
        return 2 * self.K * self.eps ** 2

    @property
    def level(self) -> float:
        return self.M1 * self.eps

    def extreme(self, s1: int = 1, s2: int = 1) -> Forcing:
        """Constant forcing at the admissible extremes with the given signs."""
        q = self.forcing_bound
        return Forcing.constant(s1 * q, s2 * q)

    def with_forcing(self, forcing: Forcing) -> "ToySystem":
        return ToySystem(self.axis, self.eps_i, self.B, self.L, self.eps, self.K, self.M1, self.M2, forcing)

    def equilibrium(self) -> tuple[float, float]:
        """Unforced equilibrium with a > 0."""
        b = -self.eps_i / self.c1
        return math.sqrt(-self.B * b / self.c2), b


@dataclass(frozen=True)
class ToyState:
    t: float
    a: float
    b: float
    L: float
    eps: float

    @property
    def G(self) -> float:
        return lyapunov(self.a, self.b, self.L, self.eps)


def lyapunov(a, b, L, eps):
    return 0.5 * a * a + 2 * b * b + (L * L * eps / PI ** 2) * b


def toy_rhs(s: ToyState, sys: ToySystem) -> tuple[float, float]:
    q1, q2 = sys.forcing(s.t)
    return _rhs(s.a, s.b, sys.eps_i, sys.B, sys.c1, sys.c2, q1, q2)


def lyapunov_rate(a, b, sys: ToySystem, q1, q2):
    """dG/dt along the vector field, from the chain rule (vectorizes over a, b, q)."""
    da = sys.eps_i * a + sys.c1 * a * b + q1
    db = -sys.B * b - sys.c2 * a * a + q2
    return a * da + (4 * b + sys.beta) * db


# --------------------------------------------------------------------------
# kernel


@numba.njit(cache=True)
def _forcing_at(t, kind, amp1, amp2, omega, samples, sdt):
    if kind == 0:
        return 0.0, 0.0
    if kind == 1:
        return amp1, amp2
    if kind == 2:
        return amp1 * math.sin(omega * t), amp2 * math.cos(omega * t)
    i = int(math.floor(t / sdt + 1e-9))
    if i < 0:
        i = 0
    if i >= samples.shape[0]:
        i = samples.shape[0] - 1
    return samples[i, 0], samples[i, 1]


@numba.njit(cache=True)
def _rhs(a, b, eps_i, B, c1, c2, q1, q2):
    return eps_i * a + c1 * a * b + q1, -B * b - c2 * a * a + q2


@numba.njit(cache=True)
def _run(a0, b0, eps_i, B, c1, c2, beta, kind, amp1, amp2, omega, samples, sdt,
         dt, nsteps, stride, level, duh_const, rec, stats):
    # stats: 0 max a^2+b^2, 1 max |b|, 2 max G, 3 max Gdot on {G >= level},
    #        4 count on {G >= level}, 5 max (|b| - duhamel), 6 nan time (or -1),
    #        7 max |a|
    a, b = a0, b0
    nrec = 0
    babs0 = abs(b0)
    for n in range(nsteps + 1):
        t = n * dt
        q1, q2 = _forcing_at(t, kind, amp1, amp2, omega, samples, sdt)
        da, db = _rhs(a, b, eps_i, B, c1, c2, q1, q2)
        G = 0.5 * a * a + 2.0 * b * b + beta * b
        Gd = a * da + (4.0 * b + beta) * db
        if not (math.isfinite(a) and math.isfinite(b)):
            stats[6] = t
            return nrec
        r = a * a + b * b
        if r > stats[0]:
            stats[0] = r
        if abs(b) > stats[1]:
            stats[1] = abs(b)
        if abs(a) > stats[7]:
            stats[7] = abs(a)
        if G > stats[2]:
            stats[2] = G
        if G >= level:
            stats[4] += 1.0
            if Gd > stats[3]:
                stats[3] = Gd
        ex = abs(b) - (math.exp(-B * t) * babs0 + duh_const)
        if ex > stats[5]:
            stats[5] = ex
        if n % stride == 0 or n == nsteps:
            rec[nrec, 0] = t
            rec[nrec, 1] = a
            rec[nrec, 2] = b
            rec[nrec, 3] = G
            rec[nrec, 4] = Gd
            nrec += 1
        if n == nsteps:
            break
        th = t + 0.5 * dt
        q1h, q2h = _forcing_at(th, kind, amp1, amp2, omega, samples, sdt)
        k1a, k1b = da, db
        k2a, k2b = _rhs(a + 0.5 * dt * k1a, b + 0.5 * dt * k1b, eps_i, B, c1, c2, q1h, q2h)
        k3a, k3b = _rhs(a + 0.5 * dt * k2a, b + 0.5 * dt * k2b, eps_i, B, c1, c2, q1h, q2h)
        q1e, q2e = _forcing_at(t + dt, kind, amp1, amp2, omega, samples, sdt)
        k4a, k4b = _rhs(a + dt * k3a, b + dt * k3b, eps_i, B, c1, c2, q1e, q2e)
        a = a + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        b = b + dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    return nrec


@dataclass(frozen=True, eq=False)
class Trajectory:
    system: ToySystem
    T: float
    dt: float
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    G: np.ndarray
    Gdot: np.ndarray
    a0: float
    b0: float
    max_r2: float
    max_abs_a: float
    max_abs_b: float
    max_G: float
    max_Gdot_on_level: float
    n_on_level: int
    max_duhamel_excess: float

    @property
    def final(self) -> tuple[float, float]:
        return float(self.a[-1]), float(self.b[-1])


def default_horizon(sys: ToySystem) -> float:
    return 1e4 * max(1.0 / sys.eps_i if sys.eps_i > 0 else 0.0, 1.0 / sys.B)


def integrate(s0: ToyState, sys: ToySystem, T: float, dt: float | None = None,
              max_records: int = 20001, check_step: bool = True) -> Trajectory:
    """Fixed-step RK4 on [0, T], monitoring bounds at every step.

    ``dt`` defaults to 0.01 / B; the step must not exceed that (the decay
    scale of b has to be resolved).
    """
    dt_max = 0.01 / sys.B
    if dt is None:
        dt = dt_max
    if check_step and dt > dt_max * (1 + 1e-12):
        raise StepSizeError(f"dt = {dt:.3g} exceeds 0.01 / B = {dt_max:.3g}")
    nsteps = int(math.ceil(T / dt - 1e-9))
    dt = T / nsteps if nsteps else dt
    stride = max(1, -(-nsteps // max(1, max_records - 1)))
    rec = np.empty((nsteps // stride + 2, 5))
    stats = np.array([0.0, 0.0, -np.inf, -np.inf, 0.0, -np.inf, -1.0, 0.0])
    duh_const = (sys.M2 * sys.eps + sys.forcing_bound) / sys.B
    kind, amp1, amp2, omega, samples, sdt = sys.forcing._packed()
    n = _run(float(s0.a), float(s0.b), sys.eps_i, sys.B, sys.c1, sys.c2, sys.beta,
             kind, amp1, amp2, omega, samples, sdt, dt, nsteps, stride,
             sys.level, duh_const, rec, stats)
    if stats[6] >= 0:
        raise ToyBlowupError(float(s0.t + stats[6]))
    rec = rec[:n]
    return Trajectory(sys, T, dt, s0.t + rec[:, 0], rec[:, 1].copy(), rec[:, 2].copy(),
                      rec[:, 3].copy(), rec[:, 4].copy(), float(s0.a), float(s0.b),
                      float(stats[0]), float(stats[7]), float(stats[1]), float(stats[2]),
                      float(stats[3]), int(stats[4]), float(stats[5]))


# --------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class BoundReport:
    name: str
    holds: bool
    value: float
    bound: float
    details: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        if self.bound == 0:
            return -self.value
        return 1.0 - self.value / self.bound

    def to_dict(self) -> dict:
        return {"name": self.name, "holds": self.holds, "value": self.value,
                "bound": self.bound, "margin": self.margin, **self.details}


def _first_time(t, values, bound):
    idx = np.flatnonzero(values > bound)
    return float(t[idx[0]]) if len(idx) else None


def verify_prop31(traj: Trajectory) -> list[BoundReport]:
    """a^2 + b^2 <= 4 M1 eps throughout, and G_t < 0 wherever G >= M1 eps."""
    sys = traj.system
    bound = 4 * sys.M1 * sys.eps
    first = _first_time(traj.t, traj.a ** 2 + traj.b ** 2, bound)
    r0 = traj.a0 ** 2 + traj.b0 ** 2
    reports = [
        BoundReport("a2b2", traj.max_r2 <= bound, traj.max_r2, bound,
                    {"first_violation_t": first, "horizon": traj.T,
                     "initial_hypothesis": r0 <= sys.M1 * sys.eps / 4}),
        BoundReport("trapping", traj.max_G <= sys.level, traj.max_G, sys.level,
                    {"horizon": traj.T}),
    ]
    gd_ok = traj.n_on_level == 0 or traj.max_Gdot_on_level < 0
    reports.append(BoundReport("Gdot_on_level", gd_ok,
                               traj.max_Gdot_on_level if traj.n_on_level else 0.0, 0.0,
                               {"samples_on_level": traj.n_on_level}))
    return reports


def verify_prop32(traj: Trajectory) -> list[BoundReport]:
    """|b| <= M2 eps throughout, plus the pointwise Duhamel majorant."""
    sys = traj.system
    bound = sys.M2 * sys.eps
    first = _first_time(traj.t, np.abs(traj.b), bound)
    return [
        BoundReport("abs_b", traj.max_abs_b <= bound, traj.max_abs_b, bound,
                    {"first_violation_t": first, "horizon": traj.T,
                     "initial_hypothesis": abs(traj.b0) <= bound / 2}),
        BoundReport("duhamel", traj.max_duhamel_excess <= 0.0, traj.max_duhamel_excess, 0.0,
                    {"description": "max over t of |b| - (e^{-Bt}|b(0)| + (M2 eps + 2K eps^2)/B)"}),
    ]


def duhamel_majorant_ok(sys: ToySystem) -> bool:
    """Scalar check that e^{-Bt} M2 eps/2 + (M2 eps + 2K eps^2)/B <= M2 eps for all t >= 0."""
    return sys.M2 * sys.eps / 2 + (sys.M2 * sys.eps + sys.forcing_bound) / sys.B <= sys.M2 * sys.eps


@dataclass(frozen=True)
class SweepReport:
    n_points: int
    max_Gdot: float
    n_nonnegative: int
    max_G_residual: float

    @property
    def all_negative(self) -> bool:
        return self.n_nonnegative == 0


def level_set_points(sys: ToySystem, n: int = 10_000) -> tuple[np.ndarray, np.ndarray]:
    """n points on the ellipse G(a, b) = M1 eps.

    Completing the square, G = M1 eps is 2 (b + beta/4)^2 + a^2/2 = R with
    R = M1 eps + beta^2 / 8.
    """
    beta = sys.beta
    R = sys.level + beta * beta / 8
    theta = np.linspace(0.0, 2 * PI, n, endpoint=False)
    return math.sqrt(2 * R) * np.cos(theta), -beta / 4 + math.sqrt(R / 2) * np.sin(theta)


def level_set_sweep(sys: ToySystem, n: int = 10_000) -> SweepReport:
    """G_t at every level-set point for each of the four extreme forcings."""
    a, b = level_set_points(sys, n)
    q = sys.forcing_bound
    worst = -math.inf
    bad = 0
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            gd = lyapunov_rate(a, b, sys, s1 * q, s2 * q)
            worst = max(worst, float(gd.max()))
            bad += int(np.count_nonzero(gd >= 0))
    resid = np.max(np.abs(lyapunov(a, b, sys.L, sys.eps) - sys.level)) / sys.level
    return SweepReport(4 * n, worst, bad, float(resid))


# --------------------------------------------------------------------------
# output


def write_trajectory_csv(traj: Trajectory, path, config: dict | None = None) -> Path:
    """Columns t,a,b,G,Gdot,bound_a2b2,bound_b; the last two are the monitored
    quantities divided by their bounds (4 M1 eps and M2 eps), so <= 1 means OK."""
    sys = traj.system
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    r_bound = 4 * sys.M1 * sys.eps
    b_bound = sys.M2 * sys.eps
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(config or {}, sort_keys=True, default=str) + "\n")
        w = csv.writer(fh)
        w.writerow(["t", "a", "b", "G", "Gdot", "bound_a2b2", "bound_b"])
        for row in zip(traj.t, traj.a, traj.b, traj.G, traj.Gdot):
            t, a, b, G, Gd = row
            ra = (a * a + b * b) / r_bound if r_bound > 0 else 0.0
            rb = abs(b) / b_bound if b_bound > 0 else 0.0
            w.writerow([f"{x:.17g}" for x in (t, a, b, G, Gd, ra, rb)])
    return path
