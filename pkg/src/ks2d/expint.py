"""phi-functions of exponential integrators.

phi_0(z) = e^z and phi_{k+1}(z) = (phi_k(z) - 1/k!) / z.  The recurrence loses
everything to cancellation for small |z|, so below ``TAYLOR_RADIUS`` the
truncated series sum_n z^n / (n + k)! is used instead.
"""
from __future__ import annotations

import math

import numpy as np

TAYLOR_RADIUS = 1.0
_TAYLOR_TERMS = 30


def phi_functions(z, kmax: int = 4) -> list[np.ndarray]:
    """[phi_0(z), ..., phi_kmax(z)] elementwise for real z."""
    z = np.asarray(z, dtype=float)
    out = [np.exp(z)]
    for k in range(1, kmax + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            out.append((out[k - 1] - 1.0 / math.factorial(k - 1)) / z)
    small = np.abs(z) < TAYLOR_RADIUS
    if np.any(small):
        zs = z[small]
        for k in range(1, kmax + 1):
            acc = np.full_like(zs, 1.0 / math.factorial(_TAYLOR_TERMS + k))
            for n in range(_TAYLOR_TERMS - 1, -1, -1):
                acc = acc * zs + 1.0 / math.factorial(n + k)
            out[k] = np.array(out[k], copy=True)
            out[k][small] = acc
    return out


def phi(k: int, z):
    return phi_functions(z, max(k, 1))[k]


def etdrk4_coefficients(lin: np.ndarray, dt: float) -> dict[str, np.ndarray]:
    """Cox-Matthews ETDRK4 weights for a diagonal linear part ``lin``."""
    z = lin * dt
    _, p1, p2, p3 = phi_functions(z, 3)
    _, h1 = phi_functions(z / 2, 1)
    return {
        "E": np.exp(z),
        "E2": np.exp(z / 2),
        "Q": 0.5 * dt * h1,
        "f1": dt * (p1 - 3 * p2 + 4 * p3),
        "f2": dt * (p2 - 2 * p3),
        "f3": dt * (4 * p3 - p2),
    }
