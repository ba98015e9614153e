"""Validation suites shared by the command line and the test-suite.

Each suite returns a list of :class:`Check` records; a check passes when its
measured deviation stays within its threshold.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oracles
from .optimize import optimize_input_squeezing
from .schemes import (
    RegimeWarning,
    SchemeConfig,
    SqueezedAsymptote,
    TwinAsymptote,
    asymptotic_squeezed,
    asymptotic_twin,
    detected_stats,
    optimal_squeeze_asymptotic,
    squeezed_coherent_uncertainty,
    twin_uncertainty_optimized,
    twin_uncertainty_simple,
)

MOMENT_RTOL = 1e-6
EQUIVALENCE_TOL = 1e-9
NEGATIVE_CONTROL_MIN = 1e-3
ASYMPTOTIC_RTOL = 0.05
MC_SIGMAS = 3.0
EQUIVALENCE_GAINS = (0.1, 0.3, 0.5)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    # "le": value <= threshold passes; "gt": value > threshold passes
    sense: str = "le"

    @property
    def passed(self) -> bool:
        if self.sense == "gt":
            return self.value > self.threshold
        return self.value <= self.threshold

    def line(self) -> str:
        op = "<=" if self.sense == "le" else ">"
        return (f"{'PASS' if self.passed else 'FAIL'}  {self.name}: "
                f"{self.value:.3e} (need {op} {self.threshold:.1e})")


def relative_deviation(a, b) -> float:
    """Largest relative deviation between two ``PhotonStats``."""
    return max(abs(x - y) / max(abs(y), 1e-12) for x, y in zip(a.astuple(), b.astuple()))


# --- Fock oracle -----------------------------------------------------------

def random_fock_configs(seed: int = 0, count: int = 20) -> list[SchemeConfig]:
    """Small configurations (total mean photons <= 10) split evenly between the schemes.

    Twin beams are kept to a few tenths of a photon because the two-mode
    simulator scales with the square of the cutoff.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        A = rng.uniform(0.0, 0.5)
        eta_p, eta_d = rng.uniform(0.7, 1.0), rng.uniform(0.5, 1.0)
        if i % 2 == 0:
            out.append(SchemeConfig("twin-opt", rng.uniform(0.05, 0.4), A, eta_p, eta_d,
                                    R=rng.uniform(0.0, 0.25)))
        else:
            N = rng.uniform(0.5, 8.0)
            r = rng.uniform(0.0, min(1.0, math.asinh(math.sqrt(N / eta_p))))
            out.append(SchemeConfig("squeezed", N, A, eta_p, eta_d, r=r,
                                    R=rng.uniform(0.0, 0.5)))
    return out


def fock_moments(config: SchemeConfig):
    if config.kind.is_twin:
        return oracles.fock_twin_chain(config.N, config.absorption, config.R,
                                       config.eta_p, config.eta_d)
    return oracles.fock_squeezed_chain(config.N, config.absorption, config.r, config.R,
                                       config.eta_p, config.eta_d)


def fock_moment_checks(seed: int = 0, count: int = 20) -> list[Check]:
    checks = []
    for i, cfg in enumerate(random_fock_configs(seed, count)):
        dev = relative_deviation(fock_moments(cfg), detected_stats(cfg).as_float())
        checks.append(Check(f"fock moments #{i} {cfg.kind.value} N={cfg.N:.3g} R={cfg.R:.3g}",
                            dev, MOMENT_RTOL))
    return checks


def amplifier_checks(gains=EQUIVALENCE_GAINS) -> list[Check]:
    checks = [Check(f"amplifier equivalence gain={g}",
                    oracles.verify_amplifier_equivalence(g), EQUIVALENCE_TOL) for g in gains]
    g = gains[-1]
    checks.append(Check(f"amplifier negative control gain={g} offset=pi/4",
                        oracles.verify_amplifier_equivalence(g, phase_offset=math.pi / 4),
                        NEGATIVE_CONTROL_MIN, "gt"))
    return checks


def fock_suite(seed: int = 0) -> list[Check]:
    return fock_moment_checks(seed) + amplifier_checks()


# --- Monte Carlo -----------------------------------------------------------

def mc_reference_config(seed: int = 0, samples: int = 1_000_000) -> oracles.McConfig:
    return oracles.McConfig(n_bar=5.0, absorption=0.1, eta_p=0.9, eta_d=0.9,
                            samples=samples, seed=seed)


def mc_suite(seed: int = 0, samples: int = 1_000_000) -> tuple[list[Check], oracles.McResult]:
    """Empirical spreads against the exact twin-beam values, in Monte Carlo standard errors."""
    mc = mc_reference_config(seed, samples)
    res = oracles.mc_twin_beam(mc)
    cfg = SchemeConfig("twin-opt", mc.N, mc.absorption, mc.eta_p, mc.eta_d)
    exact_simple = twin_uncertainty_simple(cfg).delta_A
    exact_opt = twin_uncertainty_optimized(cfg).delta_A
    checks = [
        Check("mc simple estimator spread [sigmas]",
              abs(res.delta_A_simple - exact_simple) / res.stderr_simple, MC_SIGMAS),
        Check("mc optimized estimator spread [sigmas]",
              abs(res.delta_A_optk - exact_opt) / res.stderr_optk, MC_SIGMAS),
        Check("mc simple estimator bias [sigmas]",
              abs(res.mean_simple - mc.absorption) / res.mean_stderr, MC_SIGMAS),
    ]
    return checks, res


# --- asymptotes ------------------------------------------------------------

ASY_ABSORPTIONS = (1e-6, 1e-5, 1e-4)
ASY_PHOTONS = (1e6, 1e7, 1e8)
ASY_EPS2 = (0.0, 1e-3, 1e-2)
ASY_TWIN_GAINS = (2.5, 3.5, 5.0)
ASY_SQUEEZED_GAINS = (2.5, 3.0)


def regime_grid():
    """``(A, N, eps_p^2, eps_d^2)`` with ``A <= 1e-4``, ``N >= 1e6`` and ``eps^2 <= 1e-2``."""
    for A, N, ep2, ed2 in itertools.product(ASY_ABSORPTIONS, ASY_PHOTONS, ASY_EPS2, ASY_EPS2):
        if ep2 + ed2 <= 1e-2:
            yield A, N, ep2, ed2


def _rel(exact: float, approx: float) -> float:
    return abs(approx - exact) / exact


def asymptotic_deviations() -> dict[str, float]:
    """Worst relative deviation of each closed-form ``(Delta A)^2`` over its regime grid."""
    worst: dict[str, float] = {}

    def rec(name: str, exact: float, approx: float) -> None:
        worst[name] = max(worst.get(name, 0.0), _rel(exact, approx))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        for A, N, ep2, ed2 in regime_grid():
            eta_p, eta_d = 1 / (1 + ep2), 1 / (1 + ed2)
            twin = SchemeConfig("twin-opt", N, A, eta_p, eta_d)
            for R in (0.0,) + ASY_TWIN_GAINS:
                c = twin.with_(R=R)
                simple, opt = (TwinAsymptote.SIMPLE0, TwinAsymptote.OPT0) if R == 0 else \
                    (TwinAsymptote.SIMPLE_R, TwinAsymptote.OPT_R)
                rec(f"twin {simple.value}", twin_uncertainty_simple(c).delta_A ** 2,
                    asymptotic_twin(c, simple))
                rec(f"twin {opt.value}", twin_uncertainty_optimized(c).delta_A ** 2,
                    asymptotic_twin(c, opt))

            sq = SchemeConfig("squeezed", N, A, eta_p, eta_d)
            for r in (1.0, 2.0, optimal_squeeze_asymptotic(N)):
                c = sq.with_(r=r)
                rec("squeezed no-amp", squeezed_coherent_uncertainty(c).delta_A ** 2,
                    asymptotic_squeezed(c, SqueezedAsymptote.NO_AMP))
            rec("squeezed opt-no-amp", optimize_input_squeezing(sq)[1].delta_A ** 2,
                asymptotic_squeezed(sq, SqueezedAsymptote.OPT_NO_AMP))
            for R in ASY_SQUEEZED_GAINS:
                if math.exp(4 * R) > 4 * N / 100:
                    continue
                c = sq.with_(R=R)
                for r in (1.0, optimal_squeeze_asymptotic(N, R)):
                    cr = c.with_(r=r)
                    rec("squeezed strong-amp", squeezed_coherent_uncertainty(cr).delta_A ** 2,
                        asymptotic_squeezed(cr, SqueezedAsymptote.STRONG_AMP))
                rec("squeezed opt-strong-amp", optimize_input_squeezing(c)[1].delta_A ** 2,
                    asymptotic_squeezed(c, SqueezedAsymptote.OPT_STRONG_AMP))
    return worst


def asymptotics_suite() -> list[Check]:
    return [Check(f"asymptote {name}", dev, ASYMPTOTIC_RTOL)
            for name, dev in asymptotic_deviations().items()]


SUITES: dict[str, Callable[..., list[Check]]] = {
    "fock": lambda seed: fock_suite(seed),
    "mc": lambda seed: mc_suite(seed)[0],
    "asymptotics": lambda seed: asymptotics_suite(),
}
