"""Absorption uncertainty of the twin-beam and squeezed-coherent protocols.

Exact values are obtained by propagating the Gaussian state through the full
optical chain and feeding the resulting photon statistics into the linear
estimators. The closed-form asymptotes live next to them in
:func:`asymptotic_twin` and :func:`asymptotic_squeezed` for comparison.

Twin beams (two modes)::

    vacuum -> two_mode_squeezer(r) -> loss(eta_p) x2 -> object loss(1 - A) on beam 1
           -> single_mode_squeezer(R) x2 -> detection loss(eta_d) x2

Squeezed coherent (signal mode only; the reference beam is taken noiseless)::

    vacuum -> single_mode_squeezer(-r) -> loss(eta_p) -> displace(alpha)
           -> object loss(1 - A) -> single_mode_squeezer(R) -> detection loss(eta_d)

``r`` is a squeeze magnitude: the input squeezer reduces amplitude noise while
the output amplifier stretches the amplitude quadrature.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

import mpmath

from . import gaussian_core as gc
from .bounds import EfficiencyBudget, cr_coherent

# digits used for twin-beam evaluations; var1 + var2 - 2 cov cancels ~12 digits at N ~ 1e7
TWIN_DPS = 40


class SchemeKind(str, enum.Enum):
    TWIN_SIMPLE = "twin-simple"
    TWIN_OPTIMIZED = "twin-opt"
    SQUEEZED_COHERENT = "squeezed"

    @property
    def is_twin(self) -> bool:
        return self is not SchemeKind.SQUEEZED_COHERENT


class ConfigError(ValueError):
    """A scheme configuration violates one of its invariants."""


class DegenerateEstimatorError(ArithmeticError):
    """The estimator is undefined (zero reference variance or zero transfer function)."""


class RegimeWarning(UserWarning):
    """An asymptotic formula was evaluated outside the regime it was derived for."""


@dataclass(frozen=True)
class SchemeConfig:
    """Parameters of one measurement scenario.

    ``N`` is the mean photon number at the object. For the twin-beam kinds the
    input gain is derived from ``N`` and ``r`` is ignored; for the
    squeezed-coherent kind ``r`` is the free squeeze magnitude.
    """

    kind: SchemeKind
    N: float
    absorption: float
    eta_p: float = 1.0
    eta_d: float = 1.0
    r: float = 0.0
    R: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if not (math.isfinite(self.N) and self.N > 0):
            raise ConfigError(f"N must be positive, got {self.N}")
        if not 0 <= self.absorption < 1:
            raise ConfigError(f"absorption must lie in [0, 1), got {self.absorption}")
        for name in ("eta_p", "eta_d"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ConfigError(f"{name} must lie in (0, 1], got {v}")
        if not (self.r >= 0 and self.R >= 0 and math.isfinite(self.r) and math.isfinite(self.R)):
            raise ConfigError(f"gains must be finite and non-negative, got r={self.r}, R={self.R}")
        if self.kind is SchemeKind.SQUEEZED_COHERENT and self.alpha2 < 0:
            raise ConfigError(
                f"alpha^2 = N - eta_p sinh^2 r = {self.alpha2:.6g} < 0: "
                f"input squeezing r={self.r} carries more than N={self.N} photons"
            )

    @property
    def transmission(self) -> float:
        return 1.0 - self.absorption

    @property
    def budget(self) -> EfficiencyBudget:
        return EfficiencyBudget(self.eta_p, self.eta_d)

    @property
    def eps_p2(self) -> float:
        return (1 - self.eta_p) / self.eta_p

    @property
    def eps_d2(self) -> float:
        return (1 - self.eta_d) / self.eta_d

    @property
    def eps2(self) -> float:
        return self.eps_p2 + self.eps_d2

    @property
    def input_gain(self) -> float:
        if self.kind.is_twin:
            return math.asinh(math.sqrt(self.N / self.eta_p))
        return self.r

    @property
    def alpha2(self) -> float:
        return self.N - self.eta_p * math.sinh(self.r) ** 2

    def with_(self, **changes) -> "SchemeConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class UncertaintyReport:
    """Result of one scheme evaluation.

    ``details`` holds the detected photon statistics at the precision they were
    computed in (mpmath for twin beams).
    """

    delta_A: float
    Q: float
    transfer_G: float
    details: gc.PhotonStats
    k_opt: float | None = None
    r_opt: float | None = None


# --- field chains ----------------------------------------------------------

def twin_state(config: SchemeConfig, absorption=None, highprec: bool = True) -> gc.GaussianState:
    """Two-mode state in front of the detectors (before detection loss)."""
    if highprec:
        with mpmath.workdps(max(mpmath.mp.dps, TWIN_DPS)):
            return _twin_state(config, absorption, True)
    return _twin_state(config, absorption, False)


def _twin_state(config, absorption, highprec):
    A = config.absorption if absorption is None else absorption
    cast = mpmath.mpf if highprec else float
    N, eta_p, R = cast(config.N), cast(config.eta_p), cast(config.R)
    m = mpmath if highprec else math
    r = m.asinh(m.sqrt(N / eta_p))
    s = gc.vacuum(2, highprec=highprec)
    s = gc.apply(gc.two_mode_squeezer(r), s, [0, 1])
    prep = gc.loss_channel(eta_p)
    s = gc.apply(prep, s, [0])
    s = gc.apply(prep, s, [1])
    s = gc.apply(gc.loss_channel(1 - cast(A)), s, [0])
    amp = gc.single_mode_squeezer(R)
    s = gc.apply(amp, s, [0])
    return gc.apply(amp, s, [1])


def squeezed_state(config: SchemeConfig, absorption=None, highprec: bool = False) -> gc.GaussianState:
    """Signal-mode state in front of the detector (before detection loss)."""
    if highprec:
        with mpmath.workdps(max(mpmath.mp.dps, TWIN_DPS)):
            return _squeezed_state(config, absorption, True)
    return _squeezed_state(config, absorption, False)


def _squeezed_state(config, absorption, highprec):
    A = config.absorption if absorption is None else absorption
    cast = mpmath.mpf if highprec else float
    m = mpmath if highprec else math
    r, R, eta_p = cast(config.r), cast(config.R), cast(config.eta_p)
    alpha2 = cast(config.N) - eta_p * m.sinh(r) ** 2
    s = gc.vacuum(1, highprec=highprec)
    s = gc.apply(gc.single_mode_squeezer(-r), s, [0])
    s = gc.apply(gc.loss_channel(eta_p), s, [0])
    s = gc.displace(s, 0, m.sqrt(alpha2))
    s = gc.apply(gc.loss_channel(1 - cast(A)), s, [0])
    return gc.apply(gc.single_mode_squeezer(R), s, [0])


def detected_stats(config: SchemeConfig, absorption=None, highprec: bool | None = None) -> gc.PhotonStats:
    """Photon statistics registered by the detectors."""
    if config.kind.is_twin:
        hp = True if highprec is None else highprec
        with mpmath.workdps(TWIN_DPS):
            st = gc.photon_moments(twin_state(config, absorption, hp), 0, 1)
            eta_d = mpmath.mpf(config.eta_d) if hp else config.eta_d
            return gc.detected_moments(st, eta_d)
    hp = bool(highprec)
    with mpmath.workdps(TWIN_DPS):
        st = gc.photon_moments(squeezed_state(config, absorption, hp), 0, 0)
        eta_d = mpmath.mpf(config.eta_d) if hp else config.eta_d
        d = gc.detected_moments(st, eta_d)
    # single mode: the detected covariance is the detected variance
    return gc.PhotonStats(d.mean1, d.mean2, d.var1, d.var2, d.var1)


# --- transfer functions ----------------------------------------------------

def transfer_function(config: SchemeConfig) -> float:
    """Analytic ``G = d<n_d1>/dA``."""
    if config.kind.is_twin:
        return -config.eta_d * config.N * math.cosh(2 * config.R)
    r, R = config.r, config.R
    return config.eta_d * (-config.alpha2 * math.exp(2 * R)
                           - config.eta_p * math.sinh(R - r) ** 2
                           + config.eta_p * math.sinh(R) ** 2)


def transfer_function_check(config: SchemeConfig, h: float | None = None) -> float:
    """Relative deviation of the analytic ``G`` from a finite difference of ``<n_d1>``."""
    A = config.absorption
    if h is None:
        h = 1e-6 * max(A, 1e-3)
    with mpmath.workdps(TWIN_DPS):
        def mean(a):
            return detected_stats(config, mpmath.mpf(a), highprec=True).mean1

        if A - h >= 0:
            fd = (mean(A + h) - mean(A - h)) / (2 * h)
        else:
            fd = (mean(A + h) - mean(A)) / h
        G = transfer_function(config)
        return float(abs((fd - G) / G))


# --- exact uncertainties ---------------------------------------------------

def _report(config, delta2, G, stats, k_opt=None) -> UncertaintyReport:
    delta2 = max(delta2, 0)
    dA = float(mpmath.sqrt(delta2)) if isinstance(delta2, mpmath.mpf) else math.sqrt(delta2)
    base = cr_coherent(config.N, config.absorption, config.budget)
    Q = math.inf if dA == 0 else base / dA
    return UncertaintyReport(dA, Q, float(G), stats, None if k_opt is None else float(k_opt))


def _require(config: SchemeConfig, *kinds: SchemeKind) -> None:
    if config.kind not in kinds:
        raise ConfigError(f"expected kind in {[k.value for k in kinds]}, got {config.kind.value}")


def twin_uncertainty_simple(config: SchemeConfig) -> UncertaintyReport:
    """Difference estimator ``(n_d1 - n_d2) / G``."""
    _require(config, SchemeKind.TWIN_SIMPLE, SchemeKind.TWIN_OPTIMIZED)
    G = transfer_function(config)
    with mpmath.workdps(TWIN_DPS):
        st = detected_stats(config)
        d2 = (st.var1 + st.var2 - 2 * st.cov12) / mpmath.mpf(G) ** 2
        return _report(config, d2, G, st)


def twin_uncertainty_optimized(config: SchemeConfig) -> UncertaintyReport:
    """Weighted-difference estimator ``(n_d1 - k n_d2) / G`` at the optimal ``k``."""
    _require(config, SchemeKind.TWIN_OPTIMIZED, SchemeKind.TWIN_SIMPLE)
    G = transfer_function(config)
    with mpmath.workdps(TWIN_DPS):
        st = detected_stats(config)
        if st.var2 == 0:
            raise DegenerateEstimatorError("reference-beam variance is zero")
        k = st.cov12 / st.var2
        d2 = (st.var1 - st.cov12 ** 2 / st.var2) / mpmath.mpf(G) ** 2
        return _report(config, d2, G, st, k_opt=k)


def squeezed_coherent_uncertainty(config: SchemeConfig) -> UncertaintyReport:
    _require(config, SchemeKind.SQUEEZED_COHERENT)
    G = transfer_function(config)
    if G == 0:
        raise DegenerateEstimatorError("transfer function vanishes")
    st = detected_stats(config)
    return _report(config, st.var1 / G ** 2, G, st)


def evaluate(config: SchemeConfig) -> UncertaintyReport:
    """Dispatch on ``config.kind``."""
    if config.kind is SchemeKind.TWIN_SIMPLE:
        return twin_uncertainty_simple(config)
    if config.kind is SchemeKind.TWIN_OPTIMIZED:
        return twin_uncertainty_optimized(config)
    return squeezed_coherent_uncertainty(config)


# --- asymptotic formulas ---------------------------------------------------

class TwinAsymptote(str, enum.Enum):
    SIMPLE0 = "simple0"
    SIMPLE_R = "simpleR"
    OPT0 = "opt0"
    OPT_R = "optR"


class SqueezedAsymptote(str, enum.Enum):
    NO_AMP = "no-amp"
    OPT_NO_AMP = "opt-no-amp"
    STRONG_AMP = "strong-amp"
    OPT_STRONG_AMP = "opt-strong-amp"


def _warn(msg: str) -> None:
    warnings.warn(msg, RegimeWarning, stacklevel=3)


def asymptotic_twin(config: SchemeConfig, variant: TwinAsymptote) -> float:
    """Closed-form ``(Delta A)^2`` of the twin-beam estimators for ``R = 0`` or ``e^{2R} >> 1``."""
    variant = TwinAsymptote(variant)
    A, N, R = config.absorption, config.N, config.R
    eps2 = config.eps2
    if variant in (TwinAsymptote.SIMPLE0, TwinAsymptote.OPT0):
        if R != 0:
            _warn(f"{variant.value} assumes R = 0, got R={R}")
        base = (A + 2 * eps2) / N
        return A * A + base if variant is TwinAsymptote.SIMPLE0 else base
    if math.exp(2 * R) < 100:
        _warn(f"{variant.value} assumes e^(2R) >> 1, got R={R}")
    loss = config.eps_p2 + config.eps_d2 * math.exp(-2 * R)
    inner = (A + 2 * loss) / N
    if variant is TwinAsymptote.SIMPLE_R:
        inner += A * A
    return 2 * inner + 1 / N ** 2


def twin_asymptotic_advantage(config: SchemeConfig) -> float:
    """Limit ``1 / sqrt(2 (A + 2 eps_p^2) + 1/N)`` of the optimized twin-beam advantage at large ``R``."""
    return 1 / math.sqrt(2 * (config.absorption + 2 * config.eps_p2) + 1 / config.N)


def optimal_squeeze_asymptotic(N: float, R: float = 0.0) -> float:
    """Squeeze magnitude minimizing the strong-squeezing asymptote: ``e^{2r} = (4N)^{1/3} e^{8R/3}``."""
    return math.log(4 * N) / 6 + 4 * R / 3


def asymptotic_squeezed(config: SchemeConfig, variant: SqueezedAsymptote) -> float:
    """Closed-form ``(Delta A)^2`` of the squeezed-coherent scheme.

    ``NO_AMP`` and ``STRONG_AMP`` use ``config.r``; the ``OPT_*`` variants are
    evaluated at the asymptotically optimal squeezing.
    """
    variant = SqueezedAsymptote(variant)
    A, N, R, r = config.absorption, config.N, config.R, config.r
    c53 = 3 / (2 ** (5 / 3))
    if variant is SqueezedAsymptote.NO_AMP:
        if R != 0:
            _warn(f"{variant.value} assumes R = 0, got R={R}")
        return (math.exp(-2 * r) + A + config.eps2) / N + math.exp(4 * r) / (8 * N * N)
    if variant is SqueezedAsymptote.OPT_NO_AMP:
        if R != 0:
            _warn(f"{variant.value} assumes R = 0, got R={R}")
        return (A + config.eps2) / N + c53 / N ** (4 / 3)
    if math.exp(2 * R) < 100:
        _warn(f"{variant.value} assumes e^(2R) >> 1, got R={R}")
    loss = config.eps_p2 + config.eps_d2 * math.exp(-2 * R)
    if variant is SqueezedAsymptote.STRONG_AMP:
        denom = N - math.exp(2 * r) / 4
        if denom <= 0:
            raise ConfigError(f"N - e^(2r)/4 = {denom:.6g} <= 0: asymptote has a pole")
        return (math.exp(-2 * r) + A + loss) / denom + math.exp(4 * r - 8 * R) / (8 * denom ** 2)
    if math.exp(4 * R) > 4 * N / 100:
        _warn(f"{variant.value} assumes e^(4R) << 4N, got R={R}")
    return (A + loss) / N + c53 * math.exp(-8 * R / 3) / N ** (4 / 3)
