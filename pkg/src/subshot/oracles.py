"""Independent checks of the Gaussian engine.

Two oracles live here:

* a truncated Fock-space density-matrix simulator (one or two modes) used to
  recompute photon-number moments and to check that two equal single-mode
  squeezers equal a two-mode squeezer conjugated by a 50/50 beamsplitter;
* a Monte Carlo photon-counting sampler for the unamplified twin-beam protocol.

Unitaries are built as matrix exponentials of the truncated generators
(``scipy.linalg.expm``, scaling and squaring). Squeezers and displacements are
exponentiated on a padded space and cropped, so the truncation error is
confined to population that actually leaks past the cutoff; that leaked
population shows up as a trace deficit and is never renormalized away.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.special import gammaln

from .gaussian_core import PhotonStats

TAIL_TOL = 1e-10


class CutoffError(RuntimeError):
    """The Fock truncation lost more population than the tail budget allows."""

    def __init__(self, tail: float, budget: float):
        super().__init__(f"truncation tail {tail:.3e} exceeds budget {budget:.1e}; raise the cutoff")
        self.tail = tail
        self.budget = budget


# --- Fock states -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FockState:
    """Density matrix on a truncated product Fock basis (mode 0 is the slow index)."""

    cutoffs: tuple[int, ...]
    rho: np.ndarray
    tail_tol: float = TAIL_TOL

    def __post_init__(self):
        cutoffs = tuple(int(c) for c in self.cutoffs)
        if not 1 <= len(cutoffs) <= 2 or min(cutoffs) < 1:
            raise ValueError(f"need one or two modes with positive cutoffs, got {cutoffs}")
        dim = math.prod(cutoffs)
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (dim, dim):
            raise ValueError(f"density matrix must be {dim}x{dim}, got {rho.shape}")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > 1e-12:
            raise ValueError(f"density matrix not Hermitian (deviation {herm:.2e})")
        tr = float(np.trace(rho).real)
        if tr > 1 + 1e-12:
            raise ValueError(f"trace {tr!r} exceeds 1")
        if 1 - tr > self.tail_tol:
            raise CutoffError(1 - tr, self.tail_tol)
        rho.flags.writeable = False
        object.__setattr__(self, "cutoffs", cutoffs)
        object.__setattr__(self, "rho", rho)

    @property
    def n_modes(self) -> int:
        return len(self.cutoffs)

    @property
    def tail(self) -> float:
        """Population lost past the cutoff."""
        return max(0.0, 1.0 - float(np.trace(self.rho).real))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.rho)[0])

    def photon_distribution(self) -> np.ndarray:
        """Joint photon-number probabilities, shape ``cutoffs``."""
        return np.real(np.diag(self.rho)).reshape(self.cutoffs)

    def _tensor(self) -> np.ndarray:
        return self.rho.reshape(self.cutoffs + self.cutoffs)

    def _from_tensor(self, t: np.ndarray) -> "FockState":
        dim = math.prod(self.cutoffs)
        m = t.reshape(dim, dim)
        return FockState(self.cutoffs, (m + m.conj().T) / 2, self.tail_tol)


def fock_vacuum(cutoffs: tuple[int, ...] | int, tail_tol: float = TAIL_TOL) -> FockState:
    cutoffs = (cutoffs,) if isinstance(cutoffs, int) else tuple(cutoffs)
    dim = math.prod(cutoffs)
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return FockState(cutoffs, rho, tail_tol)


def fock_number_state(n: int, cutoff: int, tail_tol: float = TAIL_TOL) -> FockState:
    if not 0 <= n < cutoff:
        raise ValueError(f"|{n}> does not fit below cutoff {cutoff}")
    rho = np.zeros((cutoff, cutoff), dtype=complex)
    rho[n, n] = 1.0
    return FockState((cutoff,), rho, tail_tol)


# --- operators -------------------------------------------------------------

def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff)), 1).astype(complex)


def _padded_unitary(generator_of, cutoff: int, pad: int) -> np.ndarray:
    big = cutoff + pad
    U = expm(generator_of(annihilation(big)))
    return U[:cutoff, :cutoff]


def _pad(cutoff: int) -> int:
    return max(20, cutoff)


def single_mode_squeezer_unitary(cutoff: int, gain: float, phase: float = 0.0) -> np.ndarray:
    """``exp[(g/2)(e^{2i phase} a^+2 - h.c.)]``, i.e. ``a -> a cosh g + e^{2i phase} a^+ sinh g``."""
    z = gain * np.exp(2j * phase) / 2

    def gen(a):
        ad = a.conj().T
        return z * ad @ ad - np.conj(z) * a @ a

    return _padded_unitary(gen, cutoff, _pad(cutoff))


def displacement_unitary(cutoff: int, alpha: complex) -> np.ndarray:
    def gen(a):
        return alpha * a.conj().T - np.conj(alpha) * a

    return _padded_unitary(gen, cutoff, _pad(cutoff))


def _two_mode_index(cutoffs):
    c0, c1 = cutoffs
    return lambda n0, n1: n0 * c1 + n1


def _scatter(block, inside, flat, rows, cols, vals) -> None:
    keep = np.nonzero(inside)[0]
    sub = block[np.ix_(keep, keep)]
    r, c = np.meshgrid(flat[keep], flat[keep], indexing="ij")
    mask = sub != 0
    rows.append(r[mask])
    cols.append(c[mask])
    vals.append(sub[mask])


def two_mode_squeezer_unitary(cutoffs: tuple[int, int], gain: float) -> np.ndarray:
    """``exp[g (a1^+ a2^+ - a1 a2)]`` assembled block by block in ``n1 - n2``."""
    c0, c1 = cutoffs
    idx = _two_mode_index(cutoffs)
    dim = c0 * c1
    rows_all, cols_all, vals_all = [], [], []
    pad = _pad(max(c0, c1))
    for d in range(-(c1 - 1), c0):
        k0 = max(0, -d)
        length = min(c0 - max(d, 0), c1 - k0) + pad
        ks = np.arange(k0, k0 + length)  # states (k + d, k)
        n0, n1 = ks + d, ks
        # <n0+1, n1+1| a1^+ a2^+ |n0, n1> = sqrt((n0+1)(n1+1))
        off = np.sqrt((n0[:-1] + 1.0) * (n1[:-1] + 1.0))
        G = np.diag(off, -1) - np.diag(off, 1)
        block = expm(gain * G)
        _scatter(block, (n0 < c0) & (n1 < c1), idx(n0, n1), rows_all, cols_all, vals_all)
    return sparse.csr_matrix((np.concatenate(vals_all), (np.concatenate(rows_all),
                              np.concatenate(cols_all))), shape=(dim, dim))


def beamsplitter_unitary(cutoffs: tuple[int, int], transmissivity: float, phase: float) -> np.ndarray:
    """``exp[theta (e^{i phase} a1^+ a2 - h.c.)]`` with ``cos^2 theta = transmissivity``.

    Heisenberg map ``a1 -> t a1 + e^{i phase} r a2``, ``a2 -> -e^{-i phase} r a1 + t a2``.
    Each fixed-total-photon block is exponentiated exactly and then cropped.
    """
    c0, c1 = cutoffs
    idx = _two_mode_index(cutoffs)
    dim = c0 * c1
    theta = math.acos(math.sqrt(transmissivity))
    rows_all, cols_all, vals_all = [], [], []
    for n in range(c0 + c1 - 1):
        n0 = np.arange(n + 1)
        n1 = n - n0
        # <n0+1, n1-1| a1^+ a2 |n0, n1> = sqrt((n0+1) n1)
        up = np.sqrt((n0[:-1] + 1.0) * n1[:-1])
        G = np.zeros((n + 1, n + 1), dtype=complex)
        G[np.arange(1, n + 1), np.arange(n)] = np.exp(1j * phase) * up
        G -= G.conj().T
        block = expm(theta * G)
        _scatter(block, (n0 < c0) & (n1 < c1), idx(n0, n1), rows_all, cols_all, vals_all)
    return sparse.csr_matrix((np.concatenate(vals_all), (np.concatenate(rows_all),
                              np.concatenate(cols_all))), shape=(dim, dim))


# --- channels on FockState -------------------------------------------------

def _apply_local(state: FockState, mode: int, U: np.ndarray) -> FockState:
    t = state._tensor()
    n = state.n_modes
    if n == 1:
        return FockState(state.cutoffs, U @ state.rho @ U.conj().T, state.tail_tol)
    # ket index `mode`, bra index `mode + n`
    t = np.moveaxis(np.tensordot(U, t, axes=(1, mode)), 0, mode)
    t = np.moveaxis(np.tensordot(U.conj(), t, axes=(1, mode + n)), 0, mode + n)
    return state._from_tensor(t)


def _apply_global(state: FockState, U) -> FockState:
    rho = U @ state.rho
    rho = (U.conj() @ rho.T).T
    return FockState(state.cutoffs, (rho + rho.conj().T) / 2, state.tail_tol)


def _check_mode(state: FockState, mode: int) -> None:
    if not 0 <= mode < state.n_modes:
        raise IndexError(f"mode {mode} out of range for {state.n_modes}-mode state")


def fock_apply_single_mode_squeezer(state: FockState, mode: int, gain: float,
                                    phase: float = 0.0) -> FockState:
    _check_mode(state, mode)
    return _apply_local(state, mode, single_mode_squeezer_unitary(state.cutoffs[mode], gain, phase))


def fock_apply_displacement(state: FockState, mode: int, alpha: complex) -> FockState:
    _check_mode(state, mode)
    return _apply_local(state, mode, displacement_unitary(state.cutoffs[mode], alpha))


def fock_apply_two_mode_squeezer(state: FockState, gain: float) -> FockState:
    if state.n_modes != 2:
        raise ValueError("two-mode squeezer needs a two-mode state")
    return _apply_global(state, two_mode_squeezer_unitary(state.cutoffs, gain))


def fock_apply_beamsplitter(state: FockState, transmissivity: float, phase: float = 0.0,
                            inverse: bool = False) -> FockState:
    if state.n_modes != 2:
        raise ValueError("beamsplitter needs a two-mode state")
    U = beamsplitter_unitary(state.cutoffs, transmissivity, phase)
    return _apply_global(state, U.conj().T.tocsr() if inverse else U)


def loss_kraus_weights(cutoff: int, eta: float) -> np.ndarray:
    """``K[k, m] = <m| K_k |m + k> = sqrt(C(m+k, k) eta^m (1-eta)^k)``."""
    m = np.arange(cutoff)[None, :]
    k = np.arange(cutoff)[:, None]
    with np.errstate(divide="ignore"):
        log_w = (gammaln(m + k + 1) - gammaln(m + 1) - gammaln(k + 1)
                 + m * np.log(eta) + k * (np.log1p(-eta) if eta < 1 else -np.inf))
    w = np.exp(0.5 * log_w)
    w[m + k >= cutoff] = 0.0
    return w


def fock_apply_loss(state: FockState, mode: int, eta: float) -> FockState:
    """Pure-loss channel in operator-sum form ``sum_k K_k rho K_k^+``."""
    if not 0 < eta <= 1:
        raise ValueError(f"transmissivity must lie in (0, 1], got {eta}")
    _check_mode(state, mode)
    if eta == 1:
        return state
    c = state.cutoffs[mode]
    n = state.n_modes
    W = loss_kraus_weights(c, eta)
    t = np.moveaxis(state._tensor(), (mode, mode + n), (0, 1))
    out = np.zeros_like(t)
    for k in range(c):
        wk = W[k, : c - k]
        coeff = np.outer(wk, wk).reshape((c - k, c - k) + (1,) * (t.ndim - 2))
        out[: c - k, : c - k] += coeff * t[k:, k:]
    out = np.moveaxis(out, (0, 1), (mode, mode + n))
    return state._from_tensor(out)


# --- statistics ------------------------------------------------------------

def fock_photon_moments(state: FockState, mode_a: int = 0, mode_b: int | None = None) -> PhotonStats:
    """Photon-number moments from number-operator traces (no renormalization)."""
    mode_b = (1 if state.n_modes == 2 else 0) if mode_b is None else mode_b
    _check_mode(state, mode_a)
    _check_mode(state, mode_b)
    P = state.photon_distribution()
    grids = np.meshgrid(*[np.arange(c, dtype=float) for c in state.cutoffs], indexing="ij")
    na, nb = grids[mode_a], grids[mode_b]
    ma, mb = float(np.sum(P * na)), float(np.sum(P * nb))
    va = float(np.sum(P * na * na)) - ma * ma
    vb = float(np.sum(P * nb * nb)) - mb * mb
    cab = float(np.sum(P * na * nb)) - ma * mb
    return PhotonStats(ma, mb, va, vb, cab)


def trace_distance(a: FockState, b: FockState) -> float:
    d = a.rho - b.rho
    # squeezers, beamsplitters and loss never mix total-photon parity, so the
    # difference is usually block diagonal and the two halves can be solved apart
    grids = np.meshgrid(*(np.arange(c) for c in a.cutoffs), indexing="ij")
    odd = (sum(grids).ravel() % 2).astype(bool)
    if not np.any(d[np.ix_(odd, ~odd)]):
        ev = np.concatenate([np.linalg.eigvalsh(d[np.ix_(m, m)]) for m in (odd, ~odd)])
    else:
        ev = np.linalg.eigvalsh(d)
    return 0.5 * float(np.sum(np.abs(ev)))


def thermal_tail(mean: float, cutoff: int) -> float:
    """``P(n >= cutoff)`` of a thermal state with the given mean."""
    return (mean / (mean + 1.0)) ** cutoff if mean > 0 else 0.0


def squeezed_vacuum_tail(mean: float, cutoff: int) -> float:
    """``P(n >= cutoff)`` of a squeezed vacuum with the given mean photon number."""
    if mean <= 0:
        return 0.0
    r = math.asinh(math.sqrt(mean))
    k = np.arange(0, (cutoff + 1) // 2)
    logp = (gammaln(2 * k + 1) - 2 * gammaln(k + 1) - k * math.log(4)
            + 2 * k * math.log(math.tanh(r)) - math.log(math.cosh(r)))
    return max(0.0, 1.0 - float(np.sum(np.exp(logp))))


def choose_cutoff(mean: float, tail_tol: float = TAIL_TOL, max_cutoff: int = 400,
                  margin: int = 4) -> int:
    """Smallest cutoff whose thermal and squeezed-vacuum tails at ``mean`` are below ``tail_tol``, plus ``margin``."""
    c = 1
    while c < max_cutoff and max(thermal_tail(mean, c), squeezed_vacuum_tail(mean, c)) >= tail_tol:
        c += 1
    return min(c + margin, max_cutoff)


def _grow_cutoff(run, cutoff: int, fixed: bool, max_cutoff: int = 400):
    # a measured tail over budget means the guess was too small; grow and retry
    while True:
        try:
            return run(cutoff)
        except CutoffError:
            if fixed or cutoff >= max_cutoff:
                raise
            cutoff = min(max_cutoff, cutoff + max(4, cutoff // 2))


# --- amplifier equivalence -------------------------------------------------

# with the beamsplitter phase pi/2, U_bs^+ (a1^+ a2^+) U_bs = -i (a1^+2 + a2^+2) / 2, so the
# conjugated two-mode squeezer equals equal single-mode squeezers with phase -pi/4
EQUIVALENT_SQUEEZE_PHASE = -math.pi / 4


def amplifier_test_state(cutoff: int) -> FockState:
    """Two-mode squeezed vacuum (``r = 0.3``) with one arm attenuated to 0.9."""
    s = fock_apply_two_mode_squeezer(fock_vacuum((cutoff, cutoff)), 0.3)
    return fock_apply_loss(s, 0, 0.9)


EQUIVALENCE_START, EQUIVALENCE_STEP, EQUIVALENCE_MAX = 40, 10, 80


def verify_amplifier_equivalence(gain: float, cutoff: int | None = None, phase_offset: float = 0.0,
                                 test_state: FockState | None = None) -> float:
    """Trace distance between two ways of amplifying both arms of a twin beam.

    Circuit A: single-mode squeezers of equal gain and phase on both modes.
    Circuit B: 50/50 beamsplitter (phase pi/2), two-mode squeezer, inverse
    beamsplitter. ``phase_offset`` detunes the second squeezer of circuit A as
    a negative control.

    Cropping a state disturbs its coherences by the square root of the lost
    population, so a cutoff that satisfies the population budget can still
    leave a visible distance. Without an explicit ``cutoff`` the cutoff grows
    from 40 in steps of 10 until two successive distances agree to
    ``TAIL_TOL``, and the larger-cutoff value is returned.
    """
    def run(c):
        s = amplifier_test_state(c) if test_state is None else test_state
        a = fock_apply_single_mode_squeezer(s, 0, gain, EQUIVALENT_SQUEEZE_PHASE)
        a = fock_apply_single_mode_squeezer(a, 1, gain, EQUIVALENT_SQUEEZE_PHASE + phase_offset)
        b = fock_apply_beamsplitter(s, 0.5, math.pi / 2)
        b = fock_apply_two_mode_squeezer(b, gain)
        b = fock_apply_beamsplitter(b, 0.5, math.pi / 2, inverse=True)
        return trace_distance(a, b)

    if test_state is not None:
        return run(test_state.cutoffs[0])
    if cutoff is not None:
        return run(cutoff)
    c, prev = EQUIVALENCE_START, None
    while True:
        try:
            d = run(c)
        except CutoffError:
            if c >= EQUIVALENCE_MAX:
                raise
            c += EQUIVALENCE_STEP
            continue
        if prev is not None and abs(d - prev) <= TAIL_TOL:
            return d
        if c >= EQUIVALENCE_MAX:
            raise CutoffError(abs(d - prev) if prev is not None else d, TAIL_TOL)
        prev, c = d, c + EQUIVALENCE_STEP


# --- measurement chains --------------------------------------------------

def fock_twin_chain(N: float, absorption: float, R: float = 0.0, eta_p: float = 1.0,
                    eta_d: float = 1.0, cutoff: int | None = None) -> PhotonStats:
    """Detected twin-beam moments: two-mode squeezed vacuum, losses, equal amplifiers."""
    r = math.asinh(math.sqrt(N / eta_p))

    def run(c):
        s = fock_apply_two_mode_squeezer(fock_vacuum((c, c)), r)
        s = fock_apply_loss(s, 0, eta_p)
        s = fock_apply_loss(s, 1, eta_p)
        s = fock_apply_loss(s, 0, 1 - absorption)
        for mode in (0, 1):
            s = fock_apply_single_mode_squeezer(s, mode, R)
        for mode in (0, 1):
            s = fock_apply_loss(s, mode, eta_d)
        return fock_photon_moments(s, 0, 1)

    guess = choose_cutoff(N / eta_p * math.cosh(2 * R) + math.sinh(R) ** 2)
    return _grow_cutoff(run, guess if cutoff is None else cutoff, cutoff is not None)


def fock_squeezed_chain(N: float, absorption: float, r: float, R: float = 0.0,
                        eta_p: float = 1.0, eta_d: float = 1.0,
                        cutoff: int | None = None) -> PhotonStats:
    """Detected moments of the amplitude-squeezed coherent probe; ``r`` is the squeeze magnitude."""
    alpha2 = N - eta_p * math.sinh(r) ** 2
    if alpha2 < 0:
        raise ValueError("squeezing exceeds the photon budget")

    def run(c):
        s = fock_apply_single_mode_squeezer(fock_vacuum(c), 0, -r)
        s = fock_apply_loss(s, 0, eta_p)
        s = fock_apply_displacement(s, 0, math.sqrt(alpha2))
        s = fock_apply_loss(s, 0, 1 - absorption)
        s = fock_apply_single_mode_squeezer(s, 0, R)
        s = fock_apply_loss(s, 0, eta_d)
        return fock_photon_moments(s, 0, 0)

    m = N * math.exp(2 * R)
    guess = choose_cutoff(math.sinh(r + R) ** 2) + int(m + 8 * math.sqrt(m) * math.exp(r + R))
    return _grow_cutoff(run, guess if cutoff is None else cutoff, cutoff is not None)


# --- Monte Carlo -----------------------------------------------------------

MC_CHUNK = 1 << 16
MC_MIN_SAMPLES = 100


@dataclass(frozen=True)
class McConfig:
    """Unamplified twin-beam photon counting; ``n_bar`` is the mean per beam before any loss."""

    n_bar: float
    absorption: float
    eta_p: float = 1.0
    eta_d: float = 1.0
    samples: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if not self.n_bar > 0:
            raise ValueError("n_bar must be positive")
        if not 0 <= self.absorption < 1:
            raise ValueError("absorption must lie in [0, 1)")
        for name in ("eta_p", "eta_d"):
            if not 0 < getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.samples < MC_MIN_SAMPLES:
            raise ValueError(f"need at least {MC_MIN_SAMPLES} samples for covariance estimation")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def N(self) -> float:
        """Mean photon number at the object."""
        return self.eta_p * self.n_bar


@dataclass(frozen=True)
class McResult:
    delta_A_simple: float
    delta_A_optk: float
    stderr_simple: float
    stderr_optk: float
    mean_simple: float
    mean_stderr: float
    k: float
    counts: tuple[np.ndarray, np.ndarray] = field(repr=False, compare=False)


def _chunk_counts(cfg: McConfig, index: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    seq = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(index,))
    rng = np.random.Generator(np.random.PCG64(seq))
    n = rng.geometric(1.0 / (cfg.n_bar + 1.0), size=size) - 1
    n1 = rng.binomial(n, cfg.eta_p)
    n2 = rng.binomial(n, cfg.eta_p)
    n1 = rng.binomial(n1, 1.0 - cfg.absorption)
    n1 = rng.binomial(n1, cfg.eta_d)
    n2 = rng.binomial(n2, cfg.eta_d)
    return n1, n2


def _std_and_stderr(x: np.ndarray) -> tuple[float, float]:
    d = x - x.mean()
    d2 = d * d
    var = float(d2.mean())
    s = math.sqrt(var)
    # delta method: se(s) = se(s^2) / (2 s)
    se = math.sqrt(float(d2.var()) / len(x)) / (2 * s) if s > 0 else 0.0
    return s, se


def mc_counts(cfg: McConfig, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Detected counts in both beams; chunk ``i`` always uses seed ``(seed, i)``."""
    sizes = [MC_CHUNK] * (cfg.samples // MC_CHUNK)
    if cfg.samples % MC_CHUNK:
        sizes.append(cfg.samples % MC_CHUNK)
    jobs = list(enumerate(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda j: _chunk_counts(cfg, *j), jobs))
    else:
        parts = [_chunk_counts(cfg, *j) for j in jobs]
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def mc_twin_beam(cfg: McConfig, workers: int = 1) -> McResult:
    """Sample both linear estimators and return their empirical spreads."""
    n1, n2 = mc_counts(cfg, workers)
    G = -cfg.eta_d * cfg.N
    x1, x2 = n1.astype(float), n2.astype(float)
    simple = (x1 - x2) / G
    c = np.cov(x1, x2)
    k = float(c[0, 1] / c[1, 1]) if c[1, 1] > 0 else 0.0
    optk = (x1 - k * x2) / G
    s_simple, se_simple = _std_and_stderr(simple)
    s_opt, se_opt = _std_and_stderr(optk)
    return McResult(s_simple, s_opt, se_simple, se_opt, float(simple.mean()),
                    s_simple / math.sqrt(len(simple)), k, (n1, n2))
