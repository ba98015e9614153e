"""Gaussian states, Gaussian channels and exact photon-number moments.

Conventions: hbar = 1, quadratures ordered ``(x1, p1, x2, p2, ...)``, vacuum
covariance ``I/2``. A coherent amplitude ``alpha`` (real) sits at
``<x> = sqrt(2) * alpha`` so that ``<n> = alpha**2``.

Every function accepts plain floats or :class:`mpmath.mpf` parameters. Passing
mpf values (or building states with ``highprec=True``) keeps all arithmetic in
mpmath at the current ``mpmath.mp.dps``; this matters when photon-number
statistics are later combined with heavy cancellation (twin beams at
``N ~ 1e7``).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used by the validators in this module."""

    symmetry: float = 1e-12
    uncertainty: float = 1e-9
    complete_positivity: float = 1e-9
    symplectic: float = 1e-10
    cauchy_schwarz: float = 1e-9


TOL = Tolerances()


class PhysicalityError(ValueError):
    """Raised when a state or channel violates a physical constraint."""


# --- numeric helpers -------------------------------------------------------

def _is_mp(*values) -> bool:
    for v in values:
        if isinstance(v, (mpmath.mpf, mpmath.mpc)):
            return True
        if isinstance(v, np.ndarray) and v.dtype == object:
            return True
    return False


def _math(*values):
    return mpmath if _is_mp(*values) else math


def _array(rows, mp: bool) -> np.ndarray:
    if mp:
        return np.array(rows, dtype=object)
    return np.array(rows, dtype=float)


def _to_float(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=float) if a.dtype == object else a


def _zeros(shape, mp: bool) -> np.ndarray:
    if mp:
        out = np.empty(shape, dtype=object)
        out.fill(mpmath.mpf(0))
        return out
    return np.zeros(shape)


def _eye(n: int, mp: bool) -> np.ndarray:
    out = _zeros((n, n), mp)
    one = mpmath.mpf(1) if mp else 1.0
    for i in range(n):
        out[i, i] = one
    return out


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form for ``n_modes`` modes."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _det2(m):
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    n = cov.shape[0] // 2
    if cov.dtype == object and n <= 2:
        # float eigvals loses the small eigenvalues once entries reach ~1e8;
        # one and two modes have closed forms in the symplectic invariants
        with mpmath.workdps(max(mpmath.mp.dps, 50)):
            if n == 1:
                return np.array([float(mpmath.sqrt(_det2(cov)))])
            delta = _det2(cov[:2, :2]) + _det2(cov[2:, 2:]) + 2 * _det2(cov[:2, 2:])
            det = mpmath.det(mpmath.matrix(cov.tolist()))
            hi2 = (delta + mpmath.sqrt(max(delta * delta - 4 * det, 0))) / 2
            return np.array([float(mpmath.sqrt(det / hi2)), float(mpmath.sqrt(hi2))])
    if cov.dtype == object:
        M = mpmath.matrix(symplectic_form(n).tolist()) * mpmath.matrix(cov.tolist()) * 1j
        ev = mpmath.eig(M, left=False, right=False)
        return np.sort(np.array([float(abs(v)) for v in ev]))[::2]
    cov = _to_float(cov)
    ev = np.linalg.eigvals(1j * symplectic_form(n) @ cov)
    return np.sort(np.abs(ev))[::2]


# --- types -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaussianState:
    """Displacement vector and covariance matrix of an ``n_modes`` state."""

    mean: np.ndarray
    cov: np.ndarray
    n_modes: int = field(init=False)

    def __post_init__(self):
        mp = _is_mp(self.mean, self.cov)
        mean = np.array(self.mean, dtype=object if mp else float).reshape(-1)
        cov = np.array(self.cov, dtype=object if mp else float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValueError(f"covariance must be 2n x 2n, got shape {cov.shape}")
        if mean.shape[0] != cov.shape[0]:
            raise ValueError("mean and covariance sizes differ")
        fcov = _to_float(cov)
        if not (np.all(np.isfinite(fcov)) and np.all(np.isfinite(_to_float(mean)))):
            raise PhysicalityError("state has non-finite entries")
        asym = np.max(np.abs(_to_float(cov - cov.T))) if cov.size else 0.0
        if asym > TOL.symmetry * max(1.0, np.max(np.abs(fcov))):
            raise PhysicalityError(f"covariance not symmetric (max asymmetry {asym:.3g})")
        nu = symplectic_eigenvalues(cov)
        if np.min(nu) < 0.5 - TOL.uncertainty * max(1.0, np.max(np.abs(fcov))):
            raise PhysicalityError(
                f"uncertainty relation violated: min symplectic eigenvalue {np.min(nu):.12g}"
            )
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "n_modes", cov.shape[0] // 2)

    @property
    def highprec(self) -> bool:
        return self.cov.dtype == object

    def block(self, i: int, j: int) -> np.ndarray:
        return self.cov[2 * i:2 * i + 2, 2 * j:2 * j + 2]


@dataclass(frozen=True, eq=False)
class GaussianChannel:
    """Affine Gaussian map ``mean -> X mean + shift``, ``cov -> X cov X^T + Y``."""

    X: np.ndarray
    Y: np.ndarray
    shift: np.ndarray | None = None

    def __post_init__(self):
        mp = _is_mp(self.X, self.Y)
        X = np.array(self.X, dtype=object if mp else float)
        Y = np.array(self.Y, dtype=object if mp else float)
        if X.shape[0] % 2 or X.shape[1] % 2 or Y.shape != (X.shape[0], X.shape[0]):
            raise ValueError("channel matrices have inconsistent shapes")
        shift = self.shift
        if shift is None:
            shift = _zeros(X.shape[0], mp)
        shift = np.array(shift, dtype=object if mp else float).reshape(-1)
        if shift.shape[0] != X.shape[0]:
            raise ValueError("shift length does not match channel output size")
        fX, fY = _to_float(X), _to_float(Y)
        if np.max(np.abs(fY - fY.T)) > TOL.symmetry * max(1.0, np.max(np.abs(fY))):
            raise PhysicalityError("noise matrix Y is not symmetric")
        om_out = symplectic_form(X.shape[0] // 2)
        om_in = symplectic_form(X.shape[1] // 2)
        cp = fY + 0.5j * om_out - 0.5j * fX @ om_in @ fX.T
        if np.min(np.linalg.eigvalsh(cp)) < -TOL.complete_positivity * max(1.0, np.max(np.abs(fX)) ** 2):
            raise PhysicalityError("channel is not completely positive")
        for a in (X, Y, shift):
            a.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "shift", shift)

    @property
    def n_in(self) -> int:
        return self.X.shape[1] // 2

    @property
    def n_out(self) -> int:
        return self.X.shape[0] // 2

    def is_symplectic(self, tol: float = TOL.symplectic) -> bool:
        X = _to_float(self.X)
        if X.shape[0] != X.shape[1]:
            return False
        om = symplectic_form(self.n_in)
        return bool(np.max(np.abs(X @ om @ X.T - om)) <= tol * max(1.0, np.max(np.abs(X)) ** 2))

    def conjugated(self, other: np.ndarray) -> "GaussianChannel":
        """Channel ``O . self . O^T`` for an orthogonal symplectic ``O`` (a passive rotation)."""
        O = np.asarray(other)
        return GaussianChannel(O @ self.X @ O.T, O @ self.Y @ O.T, O @ self.shift)


@dataclass(frozen=True)
class PhotonStats:
    """Means, variances and cross-covariance of two photon numbers."""

    mean1: float
    mean2: float
    var1: float
    var2: float
    cov12: float

    def __post_init__(self):
        v1, v2, c = float(self.var1), float(self.var2), float(self.cov12)
        scale = max(1.0, abs(v1), abs(v2))
        if v1 < -TOL.cauchy_schwarz * scale or v2 < -TOL.cauchy_schwarz * scale:
            raise PhysicalityError("negative photon-number variance")
        if c * c > v1 * v2 + TOL.cauchy_schwarz * scale * scale:
            raise PhysicalityError("photon-number covariance violates Cauchy-Schwarz")

    def as_float(self) -> "PhotonStats":
        return PhotonStats(*(float(v) for v in self.astuple()))

    def astuple(self) -> tuple:
        return (self.mean1, self.mean2, self.var1, self.var2, self.cov12)


# --- states ----------------------------------------------------------------

def vacuum(n_modes: int, highprec: bool = False) -> GaussianState:
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    half = mpmath.mpf(1) / 2 if highprec else 0.5
    return GaussianState(_zeros(2 * n_modes, highprec), _eye(2 * n_modes, highprec) * half)


def _check_mode(state: GaussianState, mode: int) -> None:
    if not 0 <= mode < state.n_modes:
        raise IndexError(f"mode {mode} out of range for {state.n_modes}-mode state")


def displace(state: GaussianState, mode: int, alpha) -> GaussianState:
    """Displace ``mode`` by the coherent amplitude ``alpha`` (real or complex)."""
    _check_mode(state, mode)
    re, im = (alpha.real, alpha.imag) if isinstance(alpha, complex) else (alpha, 0)
    m = _math(re, state.mean)
    mean = state.mean.copy()
    mean[2 * mode] = mean[2 * mode] + m.sqrt(2) * re
    if im:
        mean[2 * mode + 1] = mean[2 * mode + 1] + m.sqrt(2) * im
    return GaussianState(mean, state.cov)


# --- channels --------------------------------------------------------------

def single_mode_squeezer(gain, phase=0.0) -> GaussianChannel:
    """Phase-sensitive amplifier stretching the ``x`` quadrature by ``exp(gain)``.

    Heisenberg map ``a -> a cosh g + e^{2i phase} a^+ sinh g``: ``phase`` rotates
    the stretched axis to ``x_phase``; ``gain < 0`` squeezes it instead.
    """
    m = _math(gain, phase)
    mp = m is mpmath
    X = _array([[m.exp(gain), 0], [0, m.exp(-gain)]], mp)
    if phase:
        rot = rotation_matrix(phase)
        X = rot.T @ X @ rot
    return GaussianChannel(X, _zeros((2, 2), mp))


def two_mode_squeezer(gain) -> GaussianChannel:
    """Non-degenerate amplifier: ``a1 -> a1 cosh g + a2^+ sinh g`` and symmetric."""
    m = _math(gain)
    mp = m is mpmath
    c, s = m.cosh(gain), m.sinh(gain)
    X = _array([[c, 0, s, 0],
                [0, c, 0, -s],
                [s, 0, c, 0],
                [0, -s, 0, c]], mp)
    return GaussianChannel(X, _zeros((4, 4), mp))


def loss_channel(eta) -> GaussianChannel:
    """Pure-loss channel of power transmissivity ``eta`` (vacuum admixture ``1 - eta``)."""
    if not 0 < eta <= 1:
        raise ValueError(f"transmissivity must lie in (0, 1], got {eta}")
    m = _math(eta)
    mp = m is mpmath
    one = mpmath.mpf(1) if mp else 1.0
    return GaussianChannel(_eye(2, mp) * m.sqrt(eta), _eye(2, mp) * ((one - eta) / 2))


def rotation_matrix(theta) -> np.ndarray:
    """Quadrature rotation of one mode, ``a -> a exp(-i theta)``."""
    m = _math(theta)
    c, s = m.cos(theta), m.sin(theta)
    return _array([[c, s], [-s, c]], m is mpmath)


def phase_shift(theta) -> GaussianChannel:
    m = _math(theta)
    return GaussianChannel(rotation_matrix(theta), _zeros((2, 2), m is mpmath))


def beamsplitter(transmissivity, phase=0.0) -> GaussianChannel:
    """Two-mode mixer ``a1 -> t a1 + e^{i phase} r a2``, ``a2 -> -e^{-i phase} r a1 + t a2``.

    With ``transmissivity=1/2`` and ``phase=pi/2`` the outputs are
    ``(a1 + i a2)/sqrt 2`` and ``-(a1 - i a2)/sqrt 2 * (-i)``, i.e. the
    ``a_+`` / ``a_-`` modes up to a phase on the second output.
    """
    if not 0 <= transmissivity <= 1:
        raise ValueError(f"transmissivity must lie in [0, 1], got {transmissivity}")
    m = _math(transmissivity, phase)
    mp = m is mpmath
    t = m.sqrt(transmissivity)
    r = m.sqrt(1 - transmissivity)
    cexp = mpmath.exp if mp else cmath.exp
    U = np.array([[t, cexp(1j * phase) * r],
                  [-cexp(-1j * phase) * r, t]], dtype=object if mp else complex)
    return GaussianChannel(passive_symplectic(U), _zeros((4, 4), mp))


def passive_symplectic(U: np.ndarray) -> np.ndarray:
    """Real symplectic matrix of the passive map ``a_i -> sum_j U_ij a_j``."""
    n = U.shape[0]
    mp = U.dtype == object
    S = _zeros((2 * n, 2 * n), mp)
    for i in range(n):
        for j in range(n):
            u = U[i, j]
            re, im = (mpmath.re(u), mpmath.im(u)) if mp else (u.real, u.imag)
            S[2 * i, 2 * j] = re
            S[2 * i, 2 * j + 1] = -im
            S[2 * i + 1, 2 * j] = im
            S[2 * i + 1, 2 * j + 1] = re
    return S


def compose(*channels: GaussianChannel) -> GaussianChannel:
    """Sequential composition; the first argument acts first."""
    X, Y, d = channels[0].X, channels[0].Y, channels[0].shift
    for ch in channels[1:]:
        X = ch.X @ X
        Y = ch.X @ Y @ ch.X.T + ch.Y
        d = ch.X @ d + ch.shift
    return GaussianChannel(X, Y, d)


def apply(channel: GaussianChannel, state: GaussianState, modes: Sequence[int]) -> GaussianState:
    """Apply ``channel`` to the listed ``modes`` of ``state`` (others untouched)."""
    modes = list(modes)
    if len(set(modes)) != len(modes):
        raise ValueError(f"duplicate mode indices {modes}")
    if channel.n_in != len(modes) or channel.n_out != len(modes):
        raise ValueError(f"channel acts on {channel.n_in} modes, got {len(modes)} indices")
    for md in modes:
        _check_mode(state, md)
    mp = state.highprec or _is_mp(channel.X)
    dim = 2 * state.n_modes
    X = _eye(dim, mp)
    Y = _zeros((dim, dim), mp)
    d = _zeros(dim, mp)
    idx = [2 * md + q for md in modes for q in (0, 1)]
    X[np.ix_(idx, idx)] = channel.X
    Y[np.ix_(idx, idx)] = channel.Y
    d[idx] = channel.shift
    mean = X @ state.mean + d
    cov = X @ state.cov @ X.T + Y
    cov = (cov + cov.T) / 2
    return GaussianState(mean, cov)


# --- photon statistics -----------------------------------------------------

def _mode_mean(state: GaussianState, i: int):
    mu = state.mean[2 * i:2 * i + 2]
    b = state.block(i, i)
    return (b[0, 0] + b[1, 1] + mu[0] * mu[0] + mu[1] * mu[1]) / 2 - _half(state)


def _half(state: GaussianState):
    return mpmath.mpf(1) / 2 if state.highprec else 0.5


def _number_cov(state: GaussianState, i: int, j: int):
    mu_i = state.mean[2 * i:2 * i + 2]
    mu_j = state.mean[2 * j:2 * j + 2]
    b = state.block(i, j)
    frob = b[0, 0] ** 2 + b[0, 1] ** 2 + b[1, 0] ** 2 + b[1, 1] ** 2
    val = frob / 2 + mu_i @ b @ mu_j
    if i == j:
        val = val - _half(state) ** 2
    return val


def photon_moments(state: GaussianState, mode_a: int, mode_b: int) -> PhotonStats:
    """Exact photon-number first and second moments of two modes.

    Uses the Gaussian moment identities (vacuum variance 1/2)::

        <n_i>          = (tr s_ii + |mu_i|^2)/2 - 1/2
        var n_i        = tr(s_ii^2)/2 + mu_i^T s_ii mu_i - 1/4
        cov(n_i, n_j)  = |s_ij|_F^2 / 2 + mu_i^T s_ij mu_j      (i != j)

    ``mode_a == mode_b`` returns single-mode statistics with ``cov12 == var``.
    """
    _check_mode(state, mode_a)
    _check_mode(state, mode_b)
    m1 = _mode_mean(state, mode_a)
    m2 = _mode_mean(state, mode_b)
    v1 = _number_cov(state, mode_a, mode_a)
    v2 = _number_cov(state, mode_b, mode_b)
    c = v1 if mode_a == mode_b else _number_cov(state, mode_a, mode_b)
    return PhotonStats(m1, m2, v1, v2, c)


def detected_moments(stats: PhotonStats, eta_d) -> PhotonStats:
    """Photon statistics after ideal counting behind a detector of efficiency ``eta_d``."""
    if not 0 < eta_d <= 1:
        raise ValueError(f"detection efficiency must lie in (0, 1], got {eta_d}")
    eps2 = (1 - eta_d) / eta_d
    e2 = eta_d * eta_d
    return PhotonStats(
        eta_d * stats.mean1,
        eta_d * stats.mean2,
        e2 * (stats.var1 + eps2 * stats.mean1),
        e2 * (stats.var2 + eps2 * stats.mean2),
        e2 * stats.cov12,
    )
