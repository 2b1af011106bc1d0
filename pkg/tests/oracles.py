"""Independent reference computations used by the tests.

Nothing here goes through the package's spectral product: convolutions are
explicit loops over product-to-sum identities, projections are grid
quadratures of directly summed trigonometric series, and the symmetry check
runs a general complex-FFT solver that knows nothing about cosine symmetry.
"""
from __future__ import annotations

import math

import numpy as np

TWO_PI = 2 * math.pi


def brute_product(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Cosine coefficients (0..2N) of the product of two cosine series.

    cos(a) cos(b) = (cos(a - b) + cos(a + b)) / 2 on each axis.
    """
    n = f.shape[0] - 1
    out = np.zeros((2 * n + 1, 2 * n + 1))
    for k1 in range(n + 1):
        for j1 in range(n + 1):
            if f[k1, j1] == 0:
                continue
            for k2 in range(n + 1):
                for j2 in range(n + 1):
                    c = f[k1, j1] * g[k2, j2] / 4
                    for k in (abs(k1 - k2), k1 + k2):
                        for j in (abs(j1 - j2), j1 + j2):
                            out[k, j] += c
    return out


def k1_oracle(d, limit: int) -> float:
    """max over (k, j) outside A with k + j <= limit of (1 + k + j) / (q^2 - q), q = |wavevector|^2."""
    best = 0.0
    for k in range(limit + 1):
        for j in range(limit + 1 - k):
            if (k, j) in {(0, 0), (1, 0), (2, 0), (0, 1), (0, 2)}:
                continue
            q = (TWO_PI * k / d.L1) ** 2 + (TWO_PI * j / d.L2) ** 2
            best = max(best, (1 + k + j) / (q * q - q))
    return best


def trig_grid(coeffs: np.ndarray, L1: float, L2: float, M: int, kind=("cos", "cos")) -> np.ndarray:
    """Direct summation of sum c[k,j] T1(2 pi k x / L1) T2(2 pi j y / L2) on an M x M grid."""
    n = coeffs.shape[0] - 1
    x = np.arange(M) * L1 / M
    y = np.arange(M) * L2 / M
    f1 = np.cos if kind[0] == "cos" else np.sin
    f2 = np.cos if kind[1] == "cos" else np.sin
    X = f1(np.outer(np.arange(n + 1), TWO_PI * x / L1))  # (n+1, M)
    Y = f2(np.outer(np.arange(n + 1), TWO_PI * y / L2))
    return X.T @ coeffs @ Y


def grid_gradient(coeffs: np.ndarray, L1: float, L2: float, M: int):
    """phi_x and phi_y of a cosine series on the grid, by direct summation."""
    n = coeffs.shape[0] - 1
    k = np.arange(n + 1)
    cx = -(TWO_PI * k / L1)[:, None] * coeffs
    cy = -(TWO_PI * k / L2)[None, :] * coeffs
    return trig_grid(cx, L1, L2, M, ("sin", "cos")), trig_grid(cy, L1, L2, M, ("cos", "sin"))


def quad_cos_coeff(values: np.ndarray, k: int, j: int, L1: float, L2: float) -> float:
    """Cosine coefficient (k, j) of gridded values by the rectangle rule (exact for trig polynomials)."""
    M = values.shape[0]
    x = np.arange(M) * L1 / M
    y = np.arange(M) * L2 / M
    w = np.outer(np.cos(TWO_PI * k * x / L1), np.cos(TWO_PI * j * y / L2))
    scale = (2 if k else 1) * (2 if j else 1)
    return scale * float(np.mean(values * w))


def quadrature_forcing(a10, a20, a01, a02, w: np.ndarray, L1: float, L2: float, M: int = 64) -> np.ndarray:
    """The eight forcing scalars in the order F10x, F10y, F20x, F20y, F01x, F01y, F02x, F02y.

    Each is a coefficient of (phi_x)^2 - p^2 (resp. y) where p is the derivative
    of the special-mode part alone: the w-dependent piece of the square.
    """
    n = w.shape[0] - 1
    full = np.array(w, dtype=float, copy=True)
    full[1, 0], full[2, 0], full[0, 1], full[0, 2] = a10, a20, a01, a02
    low = np.zeros_like(full)
    low[1, 0], low[2, 0], low[0, 1], low[0, 2] = a10, a20, a01, a02
    px, py = grid_gradient(full, L1, L2, M)
    qx, qy = grid_gradient(low, L1, L2, M)
    gx, gy = px ** 2 - qx ** 2, py ** 2 - qy ** 2
    out = []
    for k, j in ((1, 0), (2, 0), (0, 1), (0, 2)):
        out += [quad_cos_coeff(gx, k, j, L1, L2), quad_cos_coeff(gy, k, j, L1, L2)]
    assert n >= 2
    return np.array(out)


# --------------------------------------------------------------------------
# general periodic solver on the full complex spectrum


class FullFFTSolver:
    """ETDRK4 for phi_t = sigma phi - P0 |grad phi|^2 with no symmetry assumed.

    Spectrum is kept on |k|, |j| <= N of an M x M grid with M > 3N, so the
    quadratic term computed on the grid and truncated back is alias free.
    """

    def __init__(self, L1: float, L2: float, N: int, dt: float, weights, M: int | None = None):
        self.N, self.M = N, (M or 4 * N)
        assert self.M > 3 * N
        kk = np.fft.fftfreq(self.M, 1.0 / self.M)
        self.kx = (TWO_PI / L1) * kk[:, None] * np.ones((1, self.M))
        self.ky = (TWO_PI / L2) * kk[None, :] * np.ones((self.M, 1))
        self.keep = (np.abs(kk)[:, None] <= N) & (np.abs(kk)[None, :] <= N)
        q = self.kx ** 2 + self.ky ** 2
        self.sigma = q - q * q
        self.c = weights(self.sigma, dt)

    def nonlinear(self, u: np.ndarray) -> np.ndarray:
        ux = np.real(np.fft.ifft2(1j * self.kx * u))
        uy = np.real(np.fft.ifft2(1j * self.ky * u))
        g = np.fft.fft2(ux * ux + uy * uy)
        g[~self.keep] = 0.0
        g[0, 0] = 0.0
        return -g

    def step(self, u: np.ndarray) -> np.ndarray:
        c = self.c
        Nu = self.nonlinear(u)
        a = c["E2"] * u + c["Q"] * Nu
        Na = self.nonlinear(a)
        b = c["E2"] * u + c["Q"] * Na
        Nb = self.nonlinear(b)
        cc = c["E2"] * a + c["Q"] * (2 * Nb - Nu)
        Nc = self.nonlinear(cc)
        out = c["E"] * u + c["f1"] * Nu + 2 * c["f2"] * (Na + Nb) + c["f3"] * Nc
        out[0, 0] = 0.0
        return out

    def grid(self, u: np.ndarray) -> np.ndarray:
        return np.real(np.fft.ifft2(u))

    def from_grid(self, values: np.ndarray) -> np.ndarray:
        u = np.fft.fft2(values)
        u[~self.keep] = 0.0
        return u
