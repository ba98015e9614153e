"""Input-squeezing optimization and parameter sweeps."""
from __future__ import annotations

import enum
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .schemes import (
    ConfigError,
    SchemeConfig,
    SchemeKind,
    UncertaintyReport,
    evaluate,
    squeezed_coherent_uncertainty,
)

INV_PHI = (math.sqrt(5) - 1) / 2
PRESCAN_POINTS = 50
R_TOL = 1e-6
# keep alpha^2 >= ALPHA2_MARGIN * N so the transfer function stays away from its degenerate end
ALPHA2_MARGIN = 1e-9
WORKERS_ENV = "SUBSHOT_WORKERS"


class MultimodalWarning(UserWarning):
    """The coarse pre-scan found more than one local minimum."""


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = R_TOL,
                   max_iter: int = 200) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return x, fx


def max_input_squeezing(config: SchemeConfig) -> float:
    """Largest ``r`` leaving ``alpha^2 >= ALPHA2_MARGIN * N``."""
    return math.asinh(math.sqrt(config.N * (1 - ALPHA2_MARGIN) / config.eta_p))


def optimize_input_squeezing(config: SchemeConfig, bracket: tuple[float, float] | None = None
                             ) -> tuple[float, UncertaintyReport]:
    """Squeeze magnitude ``r`` minimizing the squeezed-coherent uncertainty.

    A coarse scan of ``PRESCAN_POINTS`` points selects the bracket around the
    best point (ties go to the smaller ``r``) and golden-section search refines
    it to ``R_TOL``. Several local minima in the scan raise
    :class:`MultimodalWarning`; the best one is still returned.
    """
    if config.kind is not SchemeKind.SQUEEZED_COHERENT:
        raise ConfigError("input squeezing is only free for the squeezed-coherent scheme")
    r_cap = max_input_squeezing(config)
    lo, hi = (0.0, r_cap) if bracket is None else bracket
    lo, hi = max(lo, 0.0), min(hi, r_cap)
    if not hi > lo:
        raise ConfigError(f"empty feasible bracket [{lo}, {hi}] (cap {r_cap:.6g})")

    def objective(r: float) -> float:
        return squeezed_coherent_uncertainty(config.with_(r=r)).delta_A

    grid = np.linspace(lo, hi, PRESCAN_POINTS)
    vals = np.array([objective(r) for r in grid])
    i = int(np.argmin(vals))  # first occurrence: smaller r wins ties
    interior = (vals[1:-1] < vals[:-2]) & (vals[1:-1] < vals[2:])
    if np.count_nonzero(interior) > 1:
        warnings.warn(f"{np.count_nonzero(interior)} local minima in r for {config}",
                      MultimodalWarning, stacklevel=2)
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    r_opt, _ = golden_section(objective, a, b)
    if vals[i] < objective(r_opt):
        r_opt = float(grid[i])
    report = squeezed_coherent_uncertainty(config.with_(r=r_opt))
    return r_opt, _with_r(report, r_opt)


def _with_r(report: UncertaintyReport, r: float) -> UncertaintyReport:
    return UncertaintyReport(report.delta_A, report.Q, report.transfer_G, report.details,
                             report.k_opt, r)


class SweepAxis(str, enum.Enum):
    ETA_D = "eta_d"
    GAIN_R = "R"


@dataclass(frozen=True)
class SweepSpec:
    base: SchemeConfig
    axis: SweepAxis
    grid: tuple[float, ...]
    optimize_r: bool = False

    def __post_init__(self):
        object.__setattr__(self, "axis", SweepAxis(self.axis))
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise ValueError("sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)

    def config_at(self, value: float) -> SchemeConfig:
        try:
            return self.base.with_(**{self.axis.value: value})
        except ConfigError as exc:
            raise ConfigError(f"{self.axis.value}={value!r}: {exc}") from exc


@dataclass(frozen=True)
class SweepRow:
    value: float
    delta_A: float
    Q: float
    r_opt: float | None = None
    k_opt: float | None = None


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepRow, ...] = field(default_factory=tuple)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows], dtype=float)


def evaluate_point(config: SchemeConfig, optimize_r: bool = False) -> UncertaintyReport:
    if optimize_r and config.kind is SchemeKind.SQUEEZED_COHERENT:
        return optimize_input_squeezing(config)[1]
    return evaluate(config)


def _run_point(spec: SweepSpec, value: float) -> SweepRow:
    config = spec.config_at(value)
    try:
        rep = evaluate_point(config, spec.optimize_r)
    except (ConfigError, ArithmeticError) as exc:
        raise type(exc)(f"at {spec.axis.value}={value!r}: {exc}") from exc
    return SweepRow(value, rep.delta_A, rep.Q, rep.r_opt, rep.k_opt)


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return 1


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Evaluate every grid point; rows come back in grid order.

    Parallel runs use processes: the high-precision twin evaluation changes
    mpmath's process-global precision, which threads would share.
    """
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(spec.grid) == 1:
        rows = [_run_point(spec, v) for v in spec.grid]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(spec.grid))) as pool:
            rows = list(pool.map(partial(_run_point, spec), spec.grid))
    return SweepResult(spec, tuple(rows))


def fit_line(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``(slope, intercept)``."""
    slope, intercept = np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)
    return float(slope), float(intercept)
