import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

import subshot.gaussian_core as gc
from closed_forms import rel
from subshot.oracles import (
    CutoffError,
    FockState,
    McConfig,
    choose_cutoff,
    fock_apply_beamsplitter,
    fock_apply_displacement,
    fock_apply_loss,
    fock_apply_single_mode_squeezer,
    fock_apply_two_mode_squeezer,
    fock_number_state,
    fock_photon_moments,
    fock_squeezed_chain,
    fock_vacuum,
    mc_counts,
    mc_twin_beam,
    trace_distance,
    verify_amplifier_equivalence,
)
from subshot.schemes import SchemeConfig, detected_stats, twin_uncertainty_optimized
from subshot.validation import mc_reference_config, mc_suite


def random_two_mode(cutoff=14):
    s = fock_apply_two_mode_squeezer(fock_vacuum((cutoff, cutoff)), 0.2)
    s = fock_apply_displacement(s, 0, 0.3 + 0.1j)
    return fock_apply_loss(s, 1, 0.7)


def worst_rel(a, b):
    return max(rel(x, y) for x, y in zip(a.astuple(), b.astuple()))


# --- states and truncation -------------------------------------------------

def test_state_validation():
    with pytest.raises(ValueError):
        FockState((3,), np.eye(2))
    with pytest.raises(ValueError):
        FockState((2,), np.array([[1.0, 0.5], [0.0, 0.0]]))
    with pytest.raises(CutoffError) as err:
        FockState((2,), np.diag([0.5, 0.4]))
    assert err.value.tail == pytest.approx(0.1)


def test_cutoff_too_small_reports_tail():
    with pytest.raises(CutoffError) as err:
        fock_apply_single_mode_squeezer(fock_vacuum(6), 0, 1.0)
    assert err.value.tail > 1e-10


def test_choose_cutoff_meets_tail_budget():
    c = choose_cutoff(0.5)
    s = fock_apply_single_mode_squeezer(fock_vacuum(c), 0, math.asinh(math.sqrt(0.5)))
    assert s.tail <= 1e-10


# --- two-mode squeezer --------------------------------------------------

def test_two_mode_squeezer_zero_gain_is_identity():
    s = random_two_mode()
    assert np.allclose(fock_apply_two_mode_squeezer(s, 0.0).rho, s.rho, atol=1e-14)


def test_two_mode_squeezed_vacuum_distribution():
    r = 0.4
    P = fock_apply_two_mode_squeezer(fock_vacuum((30, 30)), r).photon_distribution()
    n = np.arange(30)
    assert np.allclose(np.diag(P), np.tanh(r) ** (2 * n) / np.cosh(r) ** 2, atol=1e-13)
    assert np.max(np.abs(P - np.diag(np.diag(P)))) < 1e-14


def test_two_mode_squeezer_matches_gaussian_engine():
    f = fock_photon_moments(fock_apply_two_mode_squeezer(fock_vacuum((30, 30)), 0.4), 0, 1)
    g = gc.photon_moments(gc.apply(gc.two_mode_squeezer(0.4), gc.vacuum(2), [0, 1]), 0, 1)
    assert worst_rel(f, g) <= 1e-6


# --- single-mode squeezer ------------------------------------------------

def test_single_mode_squeezer_zero_gain_is_identity():
    s = fock_apply_displacement(fock_vacuum(20), 0, 1.0)
    assert np.allclose(fock_apply_single_mode_squeezer(s, 0, 0.0).rho, s.rho, atol=1e-14)


def test_squeezed_vacuum_mean():
    m = fock_photon_moments(fock_apply_single_mode_squeezer(fock_vacuum(40), 0, 0.3))
    assert m.mean1 == pytest.approx(math.sinh(0.3) ** 2, rel=1e-8)


def test_displaced_squeezed_matches_gaussian_engine():
    f = fock_apply_single_mode_squeezer(fock_vacuum(60), 0, 0.4, 0.3)
    f = fock_apply_displacement(f, 0, 1.2 - 0.5j)
    g = gc.apply(gc.single_mode_squeezer(0.4, 0.3), gc.vacuum(1), [0])
    g = gc.displace(g, 0, 1.2 - 0.5j)
    assert worst_rel(fock_photon_moments(f), gc.photon_moments(g, 0, 0)) <= 1e-6


# --- loss --------------------------------------------------------------

def test_loss_unit_transmission_is_identity():
    s = random_two_mode()
    assert fock_apply_loss(s, 0, 1.0) is s


@pytest.mark.parametrize("eta", [0.0, -0.2, 1.1])
def test_loss_rejects_bad_transmission(eta):
    with pytest.raises(ValueError):
        fock_apply_loss(fock_vacuum(4), 0, eta)


@pytest.mark.parametrize("n, eta", [(7, 0.3), (12, 0.85)])
def test_loss_on_number_state_is_binomial(n, eta):
    P = fock_apply_loss(fock_number_state(n, 16), 0, eta).photon_distribution()
    assert np.allclose(P, binom.pmf(np.arange(16), n, eta), atol=1e-14)


def test_twin_beams_with_loss_match_gaussian_engine():
    f = fock_apply_two_mode_squeezer(fock_vacuum((30, 30)), 0.4)
    f = fock_apply_loss(fock_apply_loss(f, 0, 0.6), 1, 0.8)
    g = gc.apply(gc.two_mode_squeezer(0.4), gc.vacuum(2), [0, 1])
    g = gc.apply(gc.loss_channel(0.6), g, [0])
    g = gc.apply(gc.loss_channel(0.8), g, [1])
    assert worst_rel(fock_photon_moments(f, 0, 1), gc.photon_moments(g, 0, 1)) <= 1e-6


@settings(max_examples=10, deadline=None)
@given(eta=st.floats(0.01, 1.0), mode=st.integers(0, 1))
def test_loss_preserves_trace(eta, mode):
    s = random_two_mode()
    out = fock_apply_loss(s, mode, eta)
    assert abs(np.trace(out.rho).real - np.trace(s.rho).real) <= 1e-12


# --- channel invariants ---------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(op=st.sampled_from(["tms", "sms", "bs", "loss", "disp"]),
       x=st.floats(0.0, 0.3))
def test_channels_keep_states_physical(op, x):
    s = random_two_mode(20)
    out = {
        "tms": lambda: fock_apply_two_mode_squeezer(s, x),
        "sms": lambda: fock_apply_single_mode_squeezer(s, 1, x, 0.7),
        "bs": lambda: fock_apply_beamsplitter(s, 1 - x, 1.3),
        "loss": lambda: fock_apply_loss(s, 0, 1 - x),
        "disp": lambda: fock_apply_displacement(s, 1, x * (1 - 1j)),
    }[op]()
    assert np.max(np.abs(out.rho - out.rho.conj().T)) <= 1e-12
    assert out.min_eigenvalue() >= -1e-10


def test_beamsplitter_inverse_undoes_forward():
    # the state must sit well below the cutoff: cropping costs amplitude, not population
    s = random_two_mode(32)
    back = fock_apply_beamsplitter(fock_apply_beamsplitter(s, 0.3, 0.9), 0.3, 0.9, inverse=True)
    assert trace_distance(back, s) < 1e-12


def test_squeezed_chain_matches_gaussian_engine():
    cfg = SchemeConfig("squeezed", 3.0, 0.2, 0.9, 0.8, r=0.5, R=0.3)
    f = fock_squeezed_chain(cfg.N, cfg.absorption, cfg.r, cfg.R, cfg.eta_p, cfg.eta_d)
    assert worst_rel(f, detected_stats(cfg).as_float()) <= 1e-6


# --- amplifier equivalence -------------------------------------------------

def test_equivalence_zero_gain():
    # only the cropped beamsplitter round trip contributes, and it vanishes as the cutoff grows
    assert verify_amplifier_equivalence(0.0) < 1e-11


def test_equivalence_and_negative_control():
    assert verify_amplifier_equivalence(0.3) <= 1e-9
    assert verify_amplifier_equivalence(0.3, phase_offset=math.pi / 4) > 1e-3


def test_equivalence_explicit_cutoff_too_small():
    with pytest.raises(CutoffError):
        verify_amplifier_equivalence(0.5, cutoff=12)


# --- Monte Carlo -----------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(n_bar=0.0), dict(absorption=1.0), dict(eta_d=0.0),
                                dict(samples=99), dict(seed=-1)])
def test_mc_config_validation(kw):
    base = dict(n_bar=5.0, absorption=0.1)
    base.update(kw)
    with pytest.raises(ValueError):
        McConfig(**base)


def test_mc_perfect_correlation_has_zero_spread():
    res = mc_twin_beam(McConfig(n_bar=5.0, absorption=0.0, samples=10_000, seed=3))
    assert res.delta_A_simple == 0.0
    assert res.delta_A_optk == 0.0


def test_mc_deterministic_and_shard_independent():
    cfg = McConfig(n_bar=5.0, absorption=0.1, eta_p=0.9, eta_d=0.9, samples=200_000, seed=9)
    a1, b1 = mc_counts(cfg)
    a2, b2 = mc_counts(cfg, workers=4)
    assert np.array_equal(a1, a2) and np.array_equal(b1, b2)
    other = mc_counts(McConfig(n_bar=5.0, absorption=0.1, eta_p=0.9, eta_d=0.9,
                               samples=200_000, seed=10))[0]
    assert not np.array_equal(a1, other)


def test_mc_optimized_not_worse_than_simple():
    res = mc_twin_beam(McConfig(n_bar=5.0, absorption=0.1, eta_p=0.9, eta_d=0.9,
                                samples=200_000, seed=1))
    assert res.delta_A_optk <= res.delta_A_simple + 3 * res.stderr_simple


def test_mc_reference_point():
    checks, res = mc_suite(seed=7, samples=300_000)
    assert all(c.passed for c in checks), [c.line() for c in checks]
    mc = mc_reference_config(7, 300_000)
    cfg = SchemeConfig("twin-opt", mc.N, mc.absorption, mc.eta_p, mc.eta_d)
    assert res.k == pytest.approx(twin_uncertainty_optimized(cfg).k_opt, rel=0.01)
