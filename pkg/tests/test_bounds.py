import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subshot.bounds import (
    CountDistribution,
    EfficiencyBudget,
    binomial_family,
    cr_coherent,
    cr_fock,
    fisher_cr_bound,
    fisher_information,
    poisson_family,
    quantum_advantage,
)

# N0 x absorption x total efficiency, split evenly between preparation and detection
GRID_N0 = (10, 100, 1000)
GRID_A = (0.01, 0.3, 0.9)
GRID_ETA = (0.5, 0.75, 1.0)


def grid():
    for n0, A, eta in itertools.product(GRID_N0, GRID_A, GRID_ETA):
        yield n0, A, EfficiencyBudget(math.sqrt(eta), math.sqrt(eta))


def photons_at_object(n0, budget):
    return budget.eta_p * n0


def test_budget_derived_quantities():
    b = EfficiencyBudget(0.8, 0.5)
    assert b.eta == pytest.approx(0.4)
    assert b.eps_p2 == pytest.approx(0.25)
    assert b.eps_d2 == pytest.approx(1.0)
    assert b.eps2 == pytest.approx(1.25)
    assert b.a_eta(0.1) == pytest.approx(1 - 0.4 * 0.9)
    assert EfficiencyBudget().a_eta(0.3) == pytest.approx(0.3)


@pytest.mark.parametrize("eta_p, eta_d", [(0.0, 1.0), (1.0, 1.2)])
def test_budget_rejects_bad_efficiency(eta_p, eta_d):
    with pytest.raises(ValueError):
        EfficiencyBudget(eta_p, eta_d)


def test_fisher_poisson_example():
    b = EfficiencyBudget(1.0, 0.9)
    got = fisher_cr_bound(poisson_family(100), b, 0.1)
    assert got == pytest.approx(cr_coherent(100, 0.1, b), rel=1e-6)


def test_fisher_binomial_example():
    b = EfficiencyBudget(1.0, 0.9)
    got = fisher_cr_bound(binomial_family(50), b, 0.1)
    assert got == pytest.approx(cr_fock(50, 0.1, b), rel=1e-6)


def test_uninformative_distribution_gives_infinite_bound():
    flat = CountDistribution(lambda n, a: np.where(n == 3, 1.0, 0.0), support=5)
    assert fisher_cr_bound(flat, EfficiencyBudget(), 0.2) == math.inf


def test_deterministic_distribution_gives_zero_bound():
    # all mass on n = 4 at a = 0, leaking to n = 3 otherwise
    fock = binomial_family(4)
    assert fisher_cr_bound(fock, EfficiencyBudget(), 0.0) == 0.0


def test_unnormalized_distribution_rejected():
    half = CountDistribution(lambda n, a: np.where(n == 0, 0.5, 0.0), support=3)
    with pytest.raises(ValueError):
        fisher_information(half, 0.5)


def test_fisher_grid_poisson_and_binomial():
    worst = 0.0
    for n0, A, b in grid():
        N = photons_at_object(n0, b)
        worst = max(worst,
                    abs(fisher_cr_bound(poisson_family(n0), b, A) / cr_coherent(N, A, b) - 1),
                    abs(fisher_cr_bound(binomial_family(n0), b, A) / cr_fock(N, A, b) - 1))
    assert worst <= 1e-6


def test_cr_coherent_values():
    b = EfficiencyBudget()
    assert cr_coherent(1e7, 0.0, b) == pytest.approx(3.1623e-4, rel=1e-4)
    assert cr_coherent(1e4, 0.5, b) == pytest.approx(7.0711e-3, rel=1e-4)
    assert cr_coherent(100, 0.0, EfficiencyBudget(1.0, 0.5)) == pytest.approx(math.sqrt(1 / 50))


@pytest.mark.parametrize("fn", [cr_coherent, cr_fock])
def test_bounds_reject_nonpositive_photon_number(fn):
    with pytest.raises(ValueError):
        fn(0.0, 0.1, EfficiencyBudget())


def test_cr_fock_values():
    b = EfficiencyBudget()
    assert cr_fock(1e7, 1e-5, b) == pytest.approx(math.sqrt(1e-5 / 1e7) * math.sqrt(1 - 1e-5), rel=1e-12)
    assert cr_fock(1e7, 1e-5, b) == pytest.approx(1.0e-6, rel=1e-4)
    assert cr_fock(100, 0.0, b) == 0.0


def test_cr_fock_against_scaled_down_fisher_sum():
    b = EfficiencyBudget()
    for n0 in (1000, 5000):
        assert fisher_cr_bound(binomial_family(n0), b, 1e-3) == pytest.approx(
            cr_fock(n0, 1e-3, b), rel=1e-6)


def test_cr_fock_small_loss_limit():
    b = EfficiencyBudget(1 - 5e-4, 1 - 5e-4)
    A, N = 1e-3, 1e6
    assert cr_fock(N, A, b) == pytest.approx(math.sqrt((A + b.eps2) / N), rel=0.01)


def test_quantum_advantage_examples():
    b = EfficiencyBudget()
    assert quantum_advantage(cr_coherent(1e5, 0.01, b), 1e5, 0.01, b) == pytest.approx(1.0)
    small = EfficiencyBudget(1 - 1e-4, 1 - 1e-4)
    A, N = 1e-4, 1e7
    q = quantum_advantage(cr_fock(N, A, small), N, A, small)
    assert q == pytest.approx(1 / math.sqrt(A + small.eps2), rel=0.01)
    q0 = quantum_advantage(cr_fock(1e7, 1e-5, b), 1e7, 1e-5, b)
    assert q0 == pytest.approx(316.2, rel=1e-3)
    with pytest.raises(ValueError):
        quantum_advantage(0.0, N, A, b)


@given(N=st.floats(1, 1e9), A=st.floats(0, 0.99), eta_p=st.floats(0.01, 1), eta_d=st.floats(0.01, 1))
def test_fock_never_worse_than_coherent(N, A, eta_p, eta_d):
    b = EfficiencyBudget(eta_p, eta_d)
    fock, coh = cr_fock(N, A, b), cr_coherent(N, A, b)
    assert fock <= coh * (1 + 1e-12)
    if A + (1 - b.eta) * (1 - A) < 1 - 1e-9:
        assert fock < coh


@given(eps2=st.floats(1e-4, 1e-2))
def test_fock_advantage_capped_by_inefficiency(eps2):
    # inefficiency split evenly between preparation and detection, A << eps^2
    eta = 1 / (1 + eps2 / 2)
    b = EfficiencyBudget(eta, eta)
    A, N = 1e-8, 1e9
    q = quantum_advantage(cr_fock(N, A, b), N, A, b)
    assert q == pytest.approx(1 / math.sqrt(A + (1 - b.eta) * (1 - A)), rel=1e-12)
    assert q * math.sqrt(b.eps2) == pytest.approx(1.0, rel=0.015)
    assert q < 1 / math.sqrt(A)
