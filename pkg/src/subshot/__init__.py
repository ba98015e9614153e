"""Sub-shot-noise absorption measurement with twin beams and squeezed light."""

__version__ = "0.1.0"

from .bounds import EfficiencyBudget, cr_coherent, cr_fock, fisher_cr_bound, quantum_advantage
from .gaussian_core import GaussianChannel, GaussianState, PhotonStats, PhysicalityError
from .optimize import SweepAxis, SweepSpec, optimize_input_squeezing, run_sweep
from .schemes import ConfigError, SchemeConfig, SchemeKind, UncertaintyReport, evaluate

__all__ = [
    "ConfigError",
    "EfficiencyBudget",
    "GaussianChannel",
    "GaussianState",
    "PhotonStats",
    "PhysicalityError",
    "SchemeConfig",
    "SchemeKind",
    "SweepAxis",
    "SweepSpec",
    "UncertaintyReport",
    "cr_coherent",
    "cr_fock",
    "evaluate",
    "fisher_cr_bound",
    "optimize_input_squeezing",
    "quantum_advantage",
    "run_sweep",
]
