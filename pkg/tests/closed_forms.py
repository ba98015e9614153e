"""Printed closed-form photon moments, kept apart from the engine as test oracles.

Both functions return moments in front of the detectors (no detection loss).
"""
import math


def twin_moments(N, absorption, eta_p, R):
    """Twin beams: (mean1, mean2, var1, var2, cov12)."""
    T = 1.0 - absorption
    c2, c4 = math.cosh(2 * R), math.cosh(4 * R)
    return (
        (T * N + 0.5) * c2 - 0.5,
        (N + 0.5) * c2 - 0.5,
        (T * N + 0.5) ** 2 * c4 - 0.25,
        (N + 0.5) ** 2 * c4 - 0.25,
        T * N * (N + eta_p) * c4,
    )


def squeezed_moments(N, absorption, eta_p, r, R):
    """Squeezed coherent probe: (mean, variance).

    ``r`` is the squeeze magnitude; the printed formulas use a signed gain,
    negative for amplitude squeezing.
    """
    s = -r
    T = 1.0 - absorption
    Tp = eta_p * T
    Ap = 1.0 - Tp
    a2 = N - eta_p * math.sinh(r) ** 2
    sh = math.sinh
    mean = T * a2 * math.exp(2 * R) + Tp * sh(s + R) ** 2 + Ap * sh(R) ** 2
    var = (T * Tp * a2 * math.exp(2 * s + 4 * R) + Tp ** 2 / 2 * sh(2 * (s + R)) ** 2
           + T * Ap * a2 * math.exp(4 * R) + Tp * Ap * sh(s + 2 * R) ** 2
           + Ap ** 2 / 2 * sh(2 * R) ** 2)
    return mean, var


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)
