"""Truncated cosine-symmetric spectral fields on the torus [0, L1] x [0, L2].

A field is stored by its real coefficients ``c[k, j]`` (0 <= k, j <= N) on the
basis ``cos(2 pi k x / L1) cos(2 pi j y / L2)``.  Derivatives of such fields are
sine/cosine mixtures, which live in :class:`OddField`; products of two odd
fields of the same parity are even again, so everything a caller can hold on to
long term is a :class:`SpectralField`.

Products are computed exactly (up to rounding) by convolving the
complex-exponential coefficients on the full 2N index range and folding back,
so nothing aliases; the part above N is thrown away and its Wiener mass can be
inspected through :func:`multiply_full`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.signal import fftconvolve

TWO_PI = 2.0 * math.pi

#: wavenumber pairs handled by the low-mode ODEs (plus the mean)
SPECIAL_MODES = ((0, 0), (1, 0), (2, 0), (0, 1), (0, 2))

PROJECTORS = ("P0", "P5", "P10", "P20", "P01", "P02")


class DomainMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """Periodic box and truncation order.

    ``stretch`` optionally records ``L_i / (2 pi) - 1`` exactly.  Near the
    critical length the growth rate of the (1, 0) mode is far below the
    resolution of ``L_i`` itself, so whenever the stretch is known the growth
    rates and the symbol at (1, 0) / (0, 1) are computed from it.
    """

    L1: float
    L2: float
    N: int = 32
    stretch: tuple[float, float] | None = None

    def __post_init__(self):
        if not (self.L1 > 0 and self.L2 > 0):
            raise ValueError(f"domain lengths must be positive, got {self.L1}, {self.L2}")
        if int(self.N) != self.N or self.N < 4:
            raise ValueError(f"truncation order must be an integer >= 4, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if self.stretch is not None:
            d1, d2 = (float(s) for s in self.stretch)
            if d1 <= -1 or d2 <= -1:
                raise ValueError("stretch must exceed -1")
            for L, d in ((self.L1, d1), (self.L2, d2)):
                if abs(L - TWO_PI * (1.0 + d)) > 1e-12 * L:
                    raise ValueError(f"stretch {d} inconsistent with L = {L}")
            object.__setattr__(self, "stretch", (d1, d2))

    @classmethod
    def near_critical(cls, delta1: float, delta2: float | None = None, N: int = 32) -> "Domain":
        """Domain with L_i = 2 pi (1 + delta_i), keeping delta_i exactly."""
        if delta2 is None:
            delta2 = delta1
        return cls(TWO_PI * (1.0 + delta1), TWO_PI * (1.0 + delta2), N, (delta1, delta2))

    def with_N(self, N: int) -> "Domain":
        return Domain(self.L1, self.L2, N, self.stretch)

    @property
    def lengths(self) -> tuple[float, float]:
        return self.L1, self.L2

    def _scale_sq(self) -> tuple[float, float]:
        # (2 pi / L_i)^2
        if self.stretch is not None:
            return tuple(1.0 / (1.0 + d) ** 2 for d in self.stretch)
        return (TWO_PI / self.L1) ** 2, (TWO_PI / self.L2) ** 2

    def _one_minus_scale_sq(self) -> tuple[float, float]:
        if self.stretch is not None:
            return tuple(d * (2.0 + d) / (1.0 + d) ** 2 for d in self.stretch)
        s1, s2 = self._scale_sq()
        return 1.0 - s1, 1.0 - s2

    def growth_rates(self) -> tuple[float, float]:
        """sigma(1, 0) and sigma(0, 1)."""
        (s1, s2), (u1, u2) = self._scale_sq(), self._one_minus_scale_sq()
        return s1 * u1, s2 * u2

    @property
    def theorem_regime(self) -> bool:
        """Both lengths strictly between 2 pi and 4 pi."""
        if self.stretch is not None:
            return all(0.0 < d < 1.0 for d in self.stretch)
        return all(TWO_PI < L < 2 * TWO_PI for L in self.lengths)

    def wavenumber_sq(self, M: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Squared physical wavenumbers (2 pi k / L1)^2, (2 pi j / L2)^2 as an open grid."""
        M = self.N if M is None else M
        s1, s2 = self._scale_sq()
        k = np.arange(M + 1, dtype=float)
        return (k * k * s1)[:, None], (k * k * s2)[None, :]

    def sigma_grid(self, M: int | None = None) -> np.ndarray:
        kx2, ky2 = self.wavenumber_sq(M)
        kap2 = kx2 + ky2
        sig = kap2 * (1.0 - kap2)
        e1, e2 = self.growth_rates()
        sig[1, 0], sig[0, 1] = e1, e2
        return sig


def sigma(k: int, j: int, d: Domain) -> float:
    """Symbol of -Lap^2 - Lap at the cosine mode (k, j)."""
    k, j = abs(int(k)), abs(int(j))
    if (k, j) == (1, 0):
        return d.growth_rates()[0]
    if (k, j) == (0, 1):
        return d.growth_rates()[1]
    s1, s2 = d._scale_sq()
    kap2 = k * k * s1 + j * j * s2
    return -kap2 * kap2 + kap2


@dataclass(frozen=True)
class WienerParams:
    rho: float = 0.1
    m: int = 0

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if self.m not in (0, 1):
            raise ValueError("only m in {0, 1} is supported")


def wiener_weights(M: int, rho: float, m: int = 0, shape: tuple[int, int] | None = None) -> np.ndarray:
    nk, nj = shape if shape is not None else (M + 1, M + 1)
    s = np.arange(nk)[:, None] + np.arange(nj)[None, :]
    w = np.exp(rho * s)
    if m:
        w = w * (1.0 + s) ** m
    return w


def wiener_norm_array(coeffs: np.ndarray, rho: float = 0.1, m: int = 0):
    """Wiener norm of (a batch of) coefficient arrays, last two axes (k, j).

    A cosine (or sine) coefficient c at (k, j) splits into complex-exponential
    coefficients whose magnitudes add back up to |c|, so the norm is simply the
    weighted l1 sum of |c|.  Summation is exactly rounded (``math.fsum``).
    """
    c = np.asarray(coeffs, dtype=float)
    w = wiener_weights(0, rho, m, shape=c.shape[-2:])
    terms = np.abs(c) * w
    if terms.ndim == 2:
        return math.fsum(terms.ravel())
    flat = terms.reshape(-1, terms.shape[-2] * terms.shape[-1])
    out = np.array([math.fsum(row) for row in flat])
    return out.reshape(terms.shape[:-2])


def sup_wiener_norm(series: np.ndarray, rho: float = 0.1, m: int = 0) -> float:
    """Space-time norm: weighted sum over modes of the sup over time samples."""
    return wiener_norm_array(np.max(np.abs(series), axis=0), rho, m)


# --------------------------------------------------------------------------
# fields


class _Field:
    parity = (0, 0)

    def __init__(self, domain: Domain, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.shape != (domain.N + 1, domain.N + 1):
            raise ValueError(f"coeffs shape {c.shape} does not match N = {domain.N}")
        px, py = self.parity
        if px and np.any(c[0, :] != 0) or py and np.any(c[:, 0] != 0):
            raise ValueError("sine components at zero wavenumber must vanish")
        c.setflags(write=False)
        self.domain = domain
        self.coeffs = c

    def _like(self, coeffs):
        return type(self)(self.domain, coeffs)

    def _check(self, other):
        if type(other) is not type(self) or getattr(other, "parity", None) != self.parity:
            return NotImplemented
        if other.domain != self.domain:
            raise DomainMismatchError("fields live on different domains")
        return None

    def __add__(self, other):
        if (r := self._check(other)) is not None:
            return r
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other):
        if (r := self._check(other)) is not None:
            return r
        return self._like(self.coeffs - other.coeffs)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, _Field):
            return multiply(self, other)
        return self._like(self.coeffs * float(other))

    def __rmul__(self, other):
        return self._like(self.coeffs * float(other))

    def __truediv__(self, other):
        return self._like(self.coeffs / float(other))

    def __eq__(self, other):
        return (
            isinstance(other, _Field)
            and other.parity == self.parity
            and other.domain == self.domain
            and np.array_equal(other.coeffs, self.coeffs)
        )

    __hash__ = None

    def __repr__(self):
        nz = int(np.count_nonzero(self.coeffs))
        return f"{type(self).__name__}(N={self.domain.N}, parity={self.parity}, nonzero={nz})"

    def coefficient(self, k: int, j: int) -> float:
        return float(self.coeffs[k, j])


class SpectralField(_Field):
    """Even field: sum of c[k, j] cos(2 pi k x / L1) cos(2 pi j y / L2)."""

    parity = (0, 0)

    @classmethod
    def zeros(cls, domain: Domain) -> "SpectralField":
        return cls(domain, np.zeros((domain.N + 1, domain.N + 1)))

    @classmethod
    def from_modes(cls, domain: Domain, modes: Mapping[tuple[int, int], float]) -> "SpectralField":
        c = np.zeros((domain.N + 1, domain.N + 1))
        for (k, j), v in modes.items():
            c[k, j] += v
        return cls(domain, c)

    @classmethod
    def mode(cls, domain: Domain, k: int, j: int, value: float = 1.0) -> "SpectralField":
        return cls.from_modes(domain, {(k, j): value})

    @classmethod
    def constant(cls, domain: Domain, value: float) -> "SpectralField":
        return cls.mode(domain, 0, 0, value)


class OddField(_Field):
    """Sine in x (parity (1, 0)), in y (0, 1), or both (1, 1).

    Only produced by differentiation or the explicit sine constructors; the
    useful thing to do with one is to multiply it by another of equal parity.
    """

    def __init__(self, domain: Domain, coeffs, parity=(1, 0)):
        parity = tuple(int(p) for p in parity)
        if parity not in ((1, 0), (0, 1), (1, 1)):
            raise ValueError(f"bad parity {parity}")
        self.parity = parity
        super().__init__(domain, coeffs)

    def _like(self, coeffs):
        return OddField(self.domain, coeffs, self.parity)

    @classmethod
    def sine_x(cls, domain: Domain, k: int, value: float = 1.0) -> "OddField":
        """value * sin(2 pi k x / L1)."""
        c = np.zeros((domain.N + 1, domain.N + 1))
        c[k, 0] = value
        return cls(domain, c, (1, 0))

    @classmethod
    def sine_y(cls, domain: Domain, j: int, value: float = 1.0) -> "OddField":
        c = np.zeros((domain.N + 1, domain.N + 1))
        c[0, j] = value
        return cls(domain, c, (0, 1))


def _make(domain: Domain, coeffs, parity) -> _Field:
    if tuple(parity) == (0, 0):
        return SpectralField(domain, coeffs)
    return OddField(domain, coeffs, parity)


# --------------------------------------------------------------------------
# derivatives and projections


def wavenumber_scale(domain: Domain, axis: int) -> float:
    """2 pi / L along axis 0 (x) or 1 (y), taken from the stretch when known."""
    if domain.stretch is not None:
        return 1.0 / (1.0 + domain.stretch[axis])
    return TWO_PI / (domain.L1 if axis == 0 else domain.L2)


def derivative_coeffs(coeffs: np.ndarray, parity, domain: Domain, axis: int):
    """Coefficients and parity of d/dx (axis=0) or d/dy (axis=1) of a field."""
    k = wavenumber_scale(domain, axis) * np.arange(coeffs.shape[-2 + axis], dtype=float)
    k = k[:, None] if axis == 0 else k[None, :]
    odd = parity[axis]
    # d/dx cos = -k sin, d/dx sin = k cos
    out = (k if odd else -k) * coeffs
    new = list(parity)
    new[axis] = 1 - odd
    return out, tuple(new)


def derivative_x(f: _Field) -> _Field:
    c, p = derivative_coeffs(f.coeffs, f.parity, f.domain, 0)
    return _make(f.domain, c, p)


def derivative_y(f: _Field) -> _Field:
    c, p = derivative_coeffs(f.coeffs, f.parity, f.domain, 1)
    return _make(f.domain, c, p)


def project(f: SpectralField, which: str):
    """P0 removes the mean, P5 removes every special mode, P_kj extracts a coefficient."""
    if which == "P0":
        c = f.coeffs.copy()
        c[0, 0] = 0.0
        return SpectralField(f.domain, c)
    if which == "P5":
        return SpectralField(f.domain, project_off_special(f.coeffs))
    if which in ("P10", "P20", "P01", "P02"):
        return float(f.coeffs[int(which[1]), int(which[2])])
    raise ValueError(f"unknown projector {which!r}; expected one of {PROJECTORS}")


def project_off_special(coeffs: np.ndarray) -> np.ndarray:
    c = np.array(coeffs, dtype=float, copy=True)
    for k, j in SPECIAL_MODES:
        c[..., k, j] = 0.0
    return c


def special_mask(M: int) -> np.ndarray:
    mask = np.zeros((M + 1, M + 1), dtype=bool)
    for k, j in SPECIAL_MODES:
        mask[k, j] = True
    return mask


# --------------------------------------------------------------------------
# products


def _expand_axis(c: np.ndarray, axis: int, odd: bool) -> np.ndarray:
    # cosine/sine coefficients 0..M -> real exponential representation -M..M.
    # For sine the exponential coefficients are (1/i) times this array.
    c = np.moveaxis(c, axis, -1)
    half = 0.5 * c[..., 1:]
    if odd:
        neg, centre = -half[..., ::-1], np.zeros_like(c[..., :1])
    else:
        neg, centre = half[..., ::-1], c[..., :1]
    out = np.concatenate([neg, centre, half], axis=-1)
    return np.moveaxis(out, -1, axis)


def _fold_axis(e: np.ndarray, axis: int, odd: bool) -> np.ndarray:
    e = np.moveaxis(e, axis, -1)
    M = (e.shape[-1] - 1) // 2
    pos = e[..., M + 1:]
    neg = e[..., :M][..., ::-1]
    body = pos - neg if odd else pos + neg
    centre = np.zeros_like(e[..., M:M + 1]) if odd else e[..., M:M + 1]
    out = np.concatenate([centre, body], axis=-1)
    return np.moveaxis(out, -1, axis)


def product_coeffs(cf: np.ndarray, pf, cg: np.ndarray, pg):
    """Full (untruncated) product of two coefficient arrays.

    Inputs have shape (..., N+1, N+1) with broadcastable leading axes; the
    result has shape (..., 2N+1, 2N+1) and parity ``pf xor pg``.
    """
    ef = _expand_axis(_expand_axis(np.asarray(cf, float), -2, pf[0]), -1, pf[1])
    eg = _expand_axis(_expand_axis(np.asarray(cg, float), -2, pg[0]), -1, pg[1])
    if ef.ndim != eg.ndim:
        nd = max(ef.ndim, eg.ndim)
        ef = ef.reshape((1,) * (nd - ef.ndim) + ef.shape)
        eg = eg.reshape((1,) * (nd - eg.ndim) + eg.shape)
    conv = fftconvolve(ef, eg, axes=(-2, -1))
    # (1/i)^2 = -1 for every axis on which both factors are sines
    flips = (pf[0] & pg[0]) + (pf[1] & pg[1])
    if flips % 2:
        conv = -conv
    parity = (pf[0] ^ pg[0], pf[1] ^ pg[1])
    out = _fold_axis(_fold_axis(conv, -2, parity[0]), -1, parity[1])
    # sine components at zero wavenumber are exactly zero
    if parity[0]:
        out[..., 0, :] = 0.0
    if parity[1]:
        out[..., :, 0] = 0.0
    return out, parity


def truncate_coeffs(full: np.ndarray, N: int) -> np.ndarray:
    return np.ascontiguousarray(full[..., : N + 1, : N + 1])


def tail_norm(full: np.ndarray, N: int, rho: float = 0.1, m: int = 0):
    """Wiener mass of the modes of ``full`` above the truncation order N."""
    c = np.array(full, dtype=float, copy=True)
    c[..., : N + 1, : N + 1] = 0.0
    return wiener_norm_array(c, rho, m)


def multiply_full(f: _Field, g: _Field) -> _Field:
    """Exact product on the 2N-padded index range (domain truncation 2N)."""
    if f.domain != g.domain:
        raise DomainMismatchError("fields live on different domains")
    full, parity = product_coeffs(f.coeffs, f.parity, g.coeffs, g.parity)
    return _make(f.domain.with_N(2 * f.domain.N), full, parity)


def multiply(f: _Field, g: _Field) -> _Field:
    """Product truncated back to wavenumber N."""
    if f.domain != g.domain:
        raise DomainMismatchError("fields live on different domains")
    full, parity = product_coeffs(f.coeffs, f.parity, g.coeffs, g.parity)
    return _make(f.domain, truncate_coeffs(full, f.domain.N), parity)


def multiply_with_tail(f: _Field, g: _Field, params: WienerParams = WienerParams()):
    """Truncated product together with the Wiener norm of what was discarded."""
    if f.domain != g.domain:
        raise DomainMismatchError("fields live on different domains")
    full, parity = product_coeffs(f.coeffs, f.parity, g.coeffs, g.parity)
    prod = _make(f.domain, truncate_coeffs(full, f.domain.N), parity)
    return prod, tail_norm(full, f.domain.N, params.rho, params.m)


def wiener_norm(f: _Field, params: WienerParams = WienerParams()) -> float:
    return wiener_norm_array(f.coeffs, params.rho, params.m)


# --------------------------------------------------------------------------
# mode split


@dataclass(frozen=True, eq=False)
class ModeSplit:
    a10: float
    a20: float
    a01: float
    a02: float
    w: SpectralField

    def __post_init__(self):
        c = self.w.coeffs
        if any(c[k, j] != 0.0 for k, j in SPECIAL_MODES):
            raise ValueError("w must vanish on the special modes")

    @property
    def domain(self) -> Domain:
        return self.w.domain

    @property
    def amplitudes(self) -> tuple[float, float, float, float]:
        return self.a10, self.a20, self.a01, self.a02

    @classmethod
    def zeros(cls, domain: Domain) -> "ModeSplit":
        return cls(0.0, 0.0, 0.0, 0.0, SpectralField.zeros(domain))


def split(phi: SpectralField) -> ModeSplit:
    c = phi.coeffs
    return ModeSplit(
        float(c[1, 0]), float(c[2, 0]), float(c[0, 1]), float(c[0, 2]),
        SpectralField(phi.domain, project_off_special(c)),
    )


def assemble(ms: ModeSplit) -> SpectralField:
    c = np.array(ms.w.coeffs, copy=True)
    c[1, 0], c[2, 0], c[0, 1], c[0, 2] = ms.a10, ms.a20, ms.a01, ms.a02
    return SpectralField(ms.w.domain, c)


def assemble_coeffs(amps: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Batched assemble: amps (..., 4) in order a10, a20, a01, a02; w (..., N+1, N+1)."""
    c = np.array(w, dtype=float, copy=True)
    c[..., 1, 0] = amps[..., 0]
    c[..., 2, 0] = amps[..., 1]
    c[..., 0, 1] = amps[..., 2]
    c[..., 0, 2] = amps[..., 3]
    return c


def random_field(domain: Domain, rng: np.random.Generator, decay: float = 0.3,
                 off_special: bool = False) -> SpectralField:
    """Random coefficients decaying like exp(-decay (k + j)); handy for tests and demos."""
    M = domain.N
    s = np.arange(M + 1)[:, None] + np.arange(M + 1)[None, :]
    c = rng.standard_normal((M + 1, M + 1)) * np.exp(-decay * s)
    if off_special:
        c = project_off_special(c)
    return SpectralField(domain, c)


def iter_modes(f: _Field) -> Iterable[tuple[int, int, float]]:
    c = f.coeffs
    for k in range(c.shape[0]):
        for j in range(c.shape[1]):
            yield k, j, float(c[k, j])
