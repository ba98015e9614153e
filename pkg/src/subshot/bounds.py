"""Cramer-Rao bounds for estimating the absorption of a probe beam.

The count distribution ``W(n | a_eta)`` is parameterized by the *combined*
absorption ``a_eta`` defined through ``1 - a_eta = eta_p * eta_d * (1 - A)``;
preparation and detection losses are folded into it and the bound is scaled
back by ``1 / eta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats


class FisherSumError(RuntimeError):
    """The Fisher-information series could not be evaluated reliably."""


@dataclass(frozen=True)
class EfficiencyBudget:
    """Preparation and detection efficiencies of a measurement."""

    eta_p: float = 1.0
    eta_d: float = 1.0

    def __post_init__(self):
        for name in ("eta_p", "eta_d"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")

    @property
    def eta(self) -> float:
        return self.eta_p * self.eta_d

    @property
    def eps_p2(self) -> float:
        return (1 - self.eta_p) / self.eta_p

    @property
    def eps_d2(self) -> float:
        return (1 - self.eta_d) / self.eta_d

    @property
    def eps2(self) -> float:
        return self.eps_p2 + self.eps_d2

    def a_eta(self, absorption: float) -> float:
        """Combined absorption seen by an ideal detector."""
        return 1.0 - self.eta * (1.0 - absorption)


@dataclass(frozen=True)
class CountDistribution:
    """Photon-count distribution ``pmf(n, a_eta)`` over ``n = 0, 1, 2, ...``.

    ``support`` is the largest possible count when it is finite.
    """

    pmf: Callable[[np.ndarray, float], np.ndarray]
    support: int | None = None
    name: str = ""


def poisson_family(n0: float) -> CountDistribution:
    """Coherent light with ``n0`` photons before all losses."""
    return CountDistribution(lambda n, a: stats.poisson.pmf(n, (1.0 - a) * n0),
                             name=f"poisson(N0={n0})")


def binomial_family(n0: int) -> CountDistribution:
    """Fock state ``|n0>`` thinned by ``1 - a_eta``."""
    n0 = int(n0)
    return CountDistribution(lambda n, a: stats.binom.pmf(n, n0, 1.0 - a), support=n0,
                             name=f"binomial(N0={n0})")


def _derivative_step(a_eta: float) -> float:
    return max(1e-6, 1e-3 * a_eta)


def _pmf_derivative(dist: CountDistribution, n: np.ndarray, a: float, h: float):
    # 5-point stencil when the whole stencil fits in [0, 1], one-sided otherwise
    if a - 2 * h >= 0.0 and a + 2 * h <= 1.0:
        f = [dist.pmf(n, a + k * h) for k in (-2, -1, 1, 2)]
        return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
    if a - 2 * h < 0.0:
        f0, f1, f2 = (dist.pmf(n, a + k * h) for k in (0, 1, 2))
        return (-3 * f0 + 4 * f1 - f2) / (2 * h)
    f0, f1, f2 = (dist.pmf(n, a - k * h) for k in (0, 1, 2))
    return (3 * f0 - 4 * f1 + f2) / (2 * h)


def fisher_information(dist: CountDistribution, a_eta: float, step: float | None = None,
                       block: int = 512, max_terms: int = 10_000_000) -> float:
    """Fisher information of ``dist`` with respect to ``a_eta``.

    Returns ``inf`` when a count with zero probability has a non-zero
    derivative (a deterministic distribution).
    """
    if not 0.0 <= a_eta <= 1.0:
        raise ValueError(f"a_eta must lie in [0, 1], got {a_eta}")
    h = _derivative_step(a_eta) if step is None else step
    total_p = 0.0
    info = 0.0
    start = 0
    while True:
        stop = start + block
        if dist.support is not None:
            stop = min(stop, dist.support + 1)
        n = np.arange(start, stop)
        w = np.asarray(dist.pmf(n, a_eta), dtype=float)
        dw = np.asarray(_pmf_derivative(dist, n, a_eta, h), dtype=float)
        if np.any(w < 0) or not np.all(np.isfinite(w)) or not np.all(np.isfinite(dw)):
            raise FisherSumError(f"invalid probabilities from {dist.name or 'distribution'}")
        live = w > 0
        dead = ~live & (np.abs(dw) > 1e-300)
        if np.any(dead & (np.abs(dw) > 1e-8)):
            return math.inf
        terms = np.zeros_like(w)
        terms[live] = dw[live] ** 2 / w[live]
        info += float(np.sum(terms))
        total_p += float(np.sum(w))
        finished = dist.support is not None and stop > dist.support
        # pmf rounding can keep the running total a few ulps short of 1 - 1e-13,
        # so also accept a block that carries no probability past the bulk
        mass_done = total_p > 1 - 1e-13 or (total_p > 0.5 and float(np.sum(w)) < 1e-16)
        tail_small = mass_done and float(np.sum(terms[-10:])) < 1e-12 * max(info, 1e-300)
        if finished or tail_small:
            break
        start = stop
        if start > max_terms:
            raise FisherSumError("Fisher series did not converge")
    if abs(total_p - 1.0) > 1e-10:
        raise ValueError(f"distribution is not normalized (total probability {total_p!r})")
    return info


def fisher_cr_bound(dist: CountDistribution, budget: EfficiencyBudget, absorption: float,
                    step: float | None = None) -> float:
    """Cramer-Rao bound on the absorption uncertainty from the Fisher series.

    Zero Fisher information gives ``inf`` (no information); a deterministic
    distribution gives ``0.0``.
    """
    info = fisher_information(dist, budget.a_eta(absorption), step=step)
    if info == 0.0:
        return math.inf
    if math.isinf(info):
        return 0.0
    return 1.0 / (budget.eta * math.sqrt(info))


def _check_photons(N: float) -> None:
    if not N > 0:
        raise ValueError(f"mean photon number must be positive, got {N}")


def cr_coherent(N: float, absorption: float, budget: EfficiencyBudget) -> float:
    """Shot-noise bound ``sqrt(T / (eta_d N))`` for ``N`` photons at the object."""
    _check_photons(N)
    if not 0 <= absorption < 1:
        raise ValueError(f"absorption must lie in [0, 1), got {absorption}")
    return math.sqrt((1.0 - absorption) / (budget.eta_d * N))


def cr_fock(N: float, absorption: float, budget: EfficiencyBudget) -> float:
    """Fock-state bound ``sqrt([A + (1 - eta) T] T / (eta_d N))``."""
    _check_photons(N)
    if not 0 <= absorption <= 1:
        raise ValueError(f"absorption must lie in [0, 1], got {absorption}")
    T = 1.0 - absorption
    a_eta = absorption + (1.0 - budget.eta) * T
    if a_eta == 0.0:
        return 0.0
    return math.sqrt(a_eta * T / (budget.eta_d * N))


def quantum_advantage(delta_A: float, N: float, absorption: float, budget: EfficiencyBudget) -> float:
    """Ratio of the shot-noise bound to ``delta_A`` at equal photon number and efficiencies."""
    if not delta_A > 0:
        raise ValueError("delta_A must be positive")
    return cr_coherent(N, absorption, budget) / delta_A
