"""Nonlinear bookkeeping for the mode split.

With p = phi_x - w_x (the x-derivative of the four special modes, which only
involves the (1, 0) and (2, 0) modes) one has

    (phi_x)^2 = p^2 + w_x (w_x + 2 p),

and the second term is exactly Psi_3 + Psi_5 + Psi_6 (the w-dependent part).
The eight forcing scalars are single coefficients of that term and the w
source only needs p^2 at (3, 0) and (4, 0), so one padded product per
direction and time sample yields everything.  The field-level builders below
construct each Psi / Phi term separately for inspection and testing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import ConstantLedger
from .spectral import (
    Domain,
    ModeSplit,
    OddField,
    SpectralField,
    derivative_coeffs,
    derivative_x,
    derivative_y,
    multiply,
    product_coeffs,
    project_off_special,
    truncate_coeffs,
    wavenumber_scale,
    wiener_norm_array,
)

FORCING_NAMES = ("F10x", "F10y", "F20x", "F20y", "F01x", "F01y", "F02x", "F02y")

# (mode index, family index) for each column of FORCING_NAMES; family 0 is the
# (phi_x)^2 decomposition and 1 the (phi_y)^2 one
_COLUMNS = (((1, 0), 0), ((1, 0), 1), ((2, 0), 0), ((2, 0), 1),
            ((0, 1), 0), ((0, 1), 1), ((0, 2), 0), ((0, 2), 1))


def _axis_modes(domain: Domain, axis: int, entries: dict[int, float]) -> np.ndarray:
    c = np.zeros((domain.N + 1, domain.N + 1))
    for k, v in entries.items():
        if axis == 0:
            c[k, 0] += v
        else:
            c[0, k] += v
    return c


def _sine(domain: Domain, axis: int, k: int, value: float) -> OddField:
    return OddField.sine_x(domain, k, value) if axis == 0 else OddField.sine_y(domain, k, value)


def _axis_amplitudes(ms: ModeSplit, axis: int) -> tuple[float, float]:
    return (ms.a10, ms.a20) if axis == 0 else (ms.a01, ms.a02)


# --------------------------------------------------------------------------
# Psi terms


@dataclass(frozen=True, eq=False)
class PsiBundle:
    psi_x: tuple  # Psi_1..Psi_6 for (phi_x)^2
    psi_y: tuple

    def total(self, axis: int) -> SpectralField:
        terms = self.psi_x if axis == 0 else self.psi_y
        out = terms[0]
        for t in terms[1:]:
            out = out + t
        return out

    def forcing_part(self, axis: int) -> SpectralField:
        terms = self.psi_x if axis == 0 else self.psi_y
        return terms[2] + terms[4] + terms[5]


def _psi_family(ms: ModeSplit, axis: int) -> tuple:
    d = ms.domain
    s = wavenumber_scale(d, axis)
    a1, a2 = _axis_amplitudes(ms, axis)
    dw = derivative_x(ms.w) if axis == 0 else derivative_y(ms.w)
    # sin^2(u) = (1 - cos 2u)/2, sin(u) sin(2u) = (cos u - cos 3u)/2
    c1 = s * s * a1 * a1
    c2 = 4 * s * s * a2 * a2
    c4 = 4 * s * s * a1 * a2
    psi1 = SpectralField(d, _axis_modes(d, axis, {0: c1 / 2, 2: -c1 / 2}))
    psi2 = SpectralField(d, _axis_modes(d, axis, {0: c2 / 2, 4: -c2 / 2}))
    psi3 = multiply(dw, dw)
    psi4 = SpectralField(d, _axis_modes(d, axis, {1: c4 / 2, 3: -c4 / 2}))
    psi5 = multiply(dw, _sine(d, axis, 1, -2 * s * a1))
    psi6 = multiply(dw, _sine(d, axis, 2, -4 * s * a2))
    return psi1, psi2, psi3, psi4, psi5, psi6


def build_psi(ms: ModeSplit) -> PsiBundle:
    return PsiBundle(_psi_family(ms, 0), _psi_family(ms, 1))


# --------------------------------------------------------------------------
# forcing scalars


@dataclass(frozen=True)
class ForcingSet:
    F10x: float = 0.0
    F10y: float = 0.0
    F20x: float = 0.0
    F20y: float = 0.0
    F01x: float = 0.0
    F01y: float = 0.0
    F02x: float = 0.0
    F02y: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FORCING_NAMES])

    @classmethod
    def from_array(cls, arr) -> "ForcingSet":
        return cls(*(float(x) for x in arr))

    def mode_totals(self) -> tuple[float, float, float, float]:
        """Right-hand side forcing of the a10, a20, a01, a02 equations."""
        return (self.F10x + self.F10y, self.F20x + self.F20y,
                self.F01x + self.F01y, self.F02x + self.F02y)


def build_forcing(ms: ModeSplit) -> ForcingSet:
    psi = build_psi(ms)
    gx, gy = psi.forcing_part(0).coeffs, psi.forcing_part(1).coeffs
    return ForcingSet.from_array([(gx if fam == 0 else gy)[k, j] for (k, j), fam in _COLUMNS])


def forcing_and_source(amps: np.ndarray, w: np.ndarray, domain: Domain,
                       *, with_tail: bool = False, rho: float = 0.1):
    """Batched forcing scalars and w source over leading (time) axes.

    amps has shape (..., 4) in the order a10, a20, a01, a02 and w shape
    (..., N+1, N+1).  Returns F with shape (..., 8) (columns FORCING_NAMES)
    and S = P5((phi_x)^2 + (phi_y)^2) with the shape of w; with ``with_tail``
    also the B^0_rho mass discarded by truncating the products.
    """
    amps = np.asarray(amps, dtype=float)
    w = np.asarray(w, dtype=float)
    N = domain.N
    lead = w.shape[:-2]
    F = np.zeros(lead + (8,))
    S = np.zeros(w.shape)
    tail = np.zeros(lead) if lead else 0.0
    for axis in (0, 1):
        s = wavenumber_scale(domain, axis)
        a1 = amps[..., 0] if axis == 0 else amps[..., 2]
        a2 = amps[..., 1] if axis == 0 else amps[..., 3]
        parity = (1, 0) if axis == 0 else (0, 1)
        dw, _ = derivative_coeffs(w, (0, 0), domain, axis)
        # w_x + 2 p with p = -s a1 sin(u) - 2 s a2 sin(2u)
        g = dw.copy()
        idx1 = (..., 1, 0) if axis == 0 else (..., 0, 1)
        idx2 = (..., 2, 0) if axis == 0 else (..., 0, 2)
        g[idx1] += -2 * s * a1
        g[idx2] += -4 * s * a2
        full, _ = product_coeffs(dw, parity, g, parity)
        prod = truncate_coeffs(full, N)
        if with_tail:
            c = full.copy()
            c[..., : N + 1, : N + 1] = 0.0
            tail = tail + wiener_norm_array(c, rho, 0)
        for col, ((k, j), fam) in enumerate(_COLUMNS):
            if fam == axis:
                F[..., col] = prod[..., k, j]
        S += prod
        # p^2 off A: (3,0) -> -alpha gamma, (4,0) -> -gamma^2 / 2 with
        # alpha = -s a1, gamma = -2 s a2
        alpha, gamma = -s * a1, -2 * s * a2
        i3 = (..., 3, 0) if axis == 0 else (..., 0, 3)
        i4 = (..., 4, 0) if axis == 0 else (..., 0, 4)
        S[i3] += -alpha * gamma
        S[i4] += -0.5 * gamma * gamma
    S = project_off_special(S)
    if with_tail:
        return F, S, tail
    return F, S


def explicit_quadratics(ms: ModeSplit) -> dict[str, float]:
    """The quadratic interactions split off in front of the forcing scalars.

    P_{1,0}((phi_x)^2) = q10 + F10x, P_{2,0}((phi_x)^2) = q20 + F20x and the
    y analogues.  The signs are the ones that match the mode equations.
    """
    s1, s2 = wavenumber_scale(ms.domain, 0), wavenumber_scale(ms.domain, 1)
    return {
        "q10": 2 * s1 * s1 * ms.a10 * ms.a20,
        "q20": -0.5 * s1 * s1 * ms.a10 ** 2,
        "q01": 2 * s2 * s2 * ms.a01 * ms.a02,
        "q02": -0.5 * s2 * s2 * ms.a01 ** 2,
    }


# --------------------------------------------------------------------------
# Phi terms


@dataclass(frozen=True, eq=False)
class PhiBundle:
    phi: tuple  # Phi_0 .. Phi_5 (Phi_2 and Phi_5 are odd)
    phi2_wx: SpectralField
    phi5_wy: SpectralField
    wx_sq: SpectralField
    wy_sq: SpectralField

    def square(self, axis: int) -> SpectralField:
        """Phi_0 + Phi_1 + Phi_2 w_x + (w_x)^2 (axis 0) or the y analogue."""
        if axis == 0:
            return self.phi[0] + self.phi[1] + self.phi2_wx + self.wx_sq
        return self.phi[3] + self.phi[4] + self.phi5_wy + self.wy_sq


def _phi_family(ms: ModeSplit, axis: int):
    d = ms.domain
    s = wavenumber_scale(d, axis)
    a1, a2 = _axis_amplitudes(ms, axis)
    dw = derivative_x(ms.w) if axis == 0 else derivative_y(ms.w)
    c0 = s * s * a1 * a1
    c11 = 4 * s * s * a1 * a2
    c12 = 4 * s * s * a2 * a2
    p0 = SpectralField(d, _axis_modes(d, axis, {0: c0 / 2, 2: -c0 / 2}))
    p1 = SpectralField(d, _axis_modes(d, axis, {0: c12 / 2, 1: c11 / 2, 3: -c11 / 2, 4: -c12 / 2}))
    p2 = _sine(d, axis, 1, -2 * s * a1) + _sine(d, axis, 2, -4 * s * a2)
    return p0, p1, p2, multiply(p2, dw), multiply(dw, dw)


def build_phi_bundle(ms: ModeSplit) -> PhiBundle:
    x0, x1, x2, x2w, xsq = _phi_family(ms, 0)
    y0, y1, y2, y2w, ysq = _phi_family(ms, 1)
    return PhiBundle((x0, x1, x2, y0, y1, y2), x2w, y2w, xsq, ysq)


# --------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class ForcingReport:
    bound: float
    sup: dict
    margins: dict

    @property
    def holds(self) -> bool:
        return all(m >= 0 for m in self.margins.values())

    @property
    def violations(self) -> list[str]:
        return [n for n, m in self.margins.items() if m < 0]

    def to_dict(self) -> dict:
        return {"bound": self.bound, "sup": self.sup, "margins": self.margins, "holds": self.holds}


def forcing_bound_check(fs, led: ConstantLedger) -> ForcingReport:
    """sup_t |F| <= K eps^2 for each scalar; margins are K eps^2 - sup |F|.

    ``fs`` is a ForcingSet or an array of shape (..., 8) (a time series).
    """
    arr = fs.as_array() if isinstance(fs, ForcingSet) else np.asarray(fs, dtype=float)
    arr = arr.reshape(-1, 8)
    sup = np.max(np.abs(arr), axis=0) if len(arr) else np.zeros(8)
    bound = led.K * led.eps ** 2
    return ForcingReport(bound, {n: float(v) for n, v in zip(FORCING_NAMES, sup)},
                         {n: float(bound - v) for n, v in zip(FORCING_NAMES, sup)})
