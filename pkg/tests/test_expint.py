import math

import mpmath
import numpy as np
import pytest

from ks2d.expint import TAYLOR_RADIUS, etdrk4_coefficients, phi, phi_functions

mpmath.mp.dps = 120


def phi_ref(k: int, z: float) -> float:
    """phi_k(z) = (e^z - sum_{n<k} z^n/n!) / z^k in 120-digit arithmetic."""
    z = mpmath.mpf(z)
    if z == 0:
        return 1.0 / math.factorial(k)
    s = mpmath.exp(z) - sum(z ** n / mpmath.factorial(n) for n in range(k))
    return float(s / z ** k)


# positive arguments stop at 1e2: e^1000 does not exist in double precision
Z = sorted({s * 10.0 ** e for e in range(-12, 4) for s in (1.0, -1.0) if s * 10.0 ** e <= 100}
           | {s * m for m in (0.3, 0.99, 1.0, 1.01, 2.5, 37.0) for s in (1.0, -1.0)} | {0.0})


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_phi_against_mpmath(k):
    vals = phi_functions(np.array(Z), 4)[k]
    for z, v in zip(Z, vals):
        ref = phi_ref(k, z)
        assert v == pytest.approx(ref, rel=2e-14, abs=1e-300), (k, z)


def test_phi_large_negative_is_finite():
    z = np.array([-1e3, -1e6, -1e12])
    for k, v in enumerate(phi_functions(z, 3)):
        assert np.all(np.isfinite(v))
        if k >= 1:
            assert np.all(v > 0)


def test_phi_zero_is_reciprocal_factorial():
    for k in range(5):
        assert phi(k, np.array([0.0]))[0] == pytest.approx(1 / math.factorial(k), rel=1e-15)


def test_branches_agree_at_taylor_radius():
    eps = 1e-9
    inside = phi_functions(np.array([-TAYLOR_RADIUS * (1 - eps)]), 4)
    outside = phi_functions(np.array([-TAYLOR_RADIUS * (1 + eps)]), 4)
    for a, b in zip(inside, outside):
        assert a[0] == pytest.approx(b[0], rel=1e-8)


def test_etdrk4_weights_reduce_to_quadrature_at_zero():
    # lin = 0: E = 1 and the weights are the classical RK4 ones
    w = etdrk4_coefficients(np.zeros(1), 0.3)
    assert w["E"][0] == 1.0
    assert w["f1"][0] == pytest.approx(0.3 / 6, rel=1e-14)
    assert w["f2"][0] == pytest.approx(0.3 / 6, rel=1e-14)
    assert w["f3"][0] == pytest.approx(0.3 / 6, rel=1e-14)
    assert w["Q"][0] == pytest.approx(0.15, rel=1e-14)
