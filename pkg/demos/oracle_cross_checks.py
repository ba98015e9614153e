"""
Checking the Gaussian engine two independent ways
=================================================

The covariance-matrix engine gives exact photon moments at any photon number.
Two slower oracles recompute them: a truncated Fock-space density matrix
(small photon numbers only) and Monte Carlo photon counting (no amplifier).
"""
import math

from subshot.oracles import (
    McConfig,
    fock_squeezed_chain,
    fock_twin_chain,
    mc_twin_beam,
    verify_amplifier_equivalence,
)
from subshot.schemes import (
    SchemeConfig,
    detected_stats,
    twin_uncertainty_optimized,
    twin_uncertainty_simple,
)

# 1. Fock-space density matrices against the covariance matrix.
for cfg in (SchemeConfig("twin-opt", 0.3, 0.2, 0.9, 0.8, R=0.2),
            SchemeConfig("squeezed", 4.0, 0.1, 0.95, 0.7, r=0.6, R=0.4)):
    if cfg.kind.is_twin:
        fock = fock_twin_chain(cfg.N, cfg.absorption, cfg.R, cfg.eta_p, cfg.eta_d)
    else:
        fock = fock_squeezed_chain(cfg.N, cfg.absorption, cfg.r, cfg.R, cfg.eta_p, cfg.eta_d)
    gauss = detected_stats(cfg).as_float()
    print(cfg.kind.value)
    for name, f, g in zip(("mean1", "mean2", "var1", "var2", "cov12"), fock.astuple(), gauss.astuple()):
        print(f"  {name:6} fock={f:.10f} gaussian={g:.10f}")

# 2. Equal single-mode squeezers on both arms equal a beamsplitter-conjugated
#    two-mode squeezer. Detuning one squeezer by pi/4 breaks the identity.
print("\namplifier equivalence, gain 0.3")
print(f"  matched phases : {verify_amplifier_equivalence(0.3):.2e}")
print(f"  pi/4 detuned   : {verify_amplifier_equivalence(0.3, phase_offset=math.pi / 4):.2e}")

# 3. Photon counting without amplification.
mc = McConfig(n_bar=5.0, absorption=0.1, eta_p=0.9, eta_d=0.9, samples=1_000_000, seed=42)
res = mc_twin_beam(mc)
cfg = SchemeConfig("twin-opt", mc.N, mc.absorption, mc.eta_p, mc.eta_d)
print("\nMonte Carlo, 10^6 twin pairs")
print(f"  simple    {res.delta_A_simple:.5f} +- {res.stderr_simple:.5f}"
      f"  exact {twin_uncertainty_simple(cfg).delta_A:.5f}")
print(f"  optimized {res.delta_A_optk:.5f} +- {res.stderr_optk:.5f}"
      f"  exact {twin_uncertainty_optimized(cfg).delta_A:.5f}")
