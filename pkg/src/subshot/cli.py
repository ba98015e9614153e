"""Command-line front end: ``eval``, ``figure``, ``validate`` and ``sweep``.

Every table is written twice, as CSV with ``#`` header comments and as a
JSON mirror carrying the full run manifest. The CSV holds no timestamp so
that repeating a run reproduces it byte for byte.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .optimize import SweepAxis, SweepSpec, evaluate_point, run_sweep
from .schemes import (ConfigError, DegenerateEstimatorError, SchemeConfig, SchemeKind,
                      optimal_squeeze_asymptotic)
from .validation import SUITES, mc_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_N = 1e7
DEFAULT_A = 1e-5
ETA_D_POINTS = 200
R_POINTS = 160
R_MAX = 8.0
FIG2_EPS_P2 = (0.0, 1e-5, 1e-4, 1e-3, 1e-2)
FIG4_EPS_P2 = (0.0, 1e-3, 1e-2)
GAIN_FIG_ETA_D = (0.99, 0.9, 0.5, 0.1)


class UsageError(Exception):
    pass


# --- output ----------------------------------------------------------------

def fmt(value) -> str:
    """Round-trip, locale-independent number formatting."""
    if value is None:
        return ""
    return repr(float(value))


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = time.gmtime(int(epoch)) if epoch else time.gmtime()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", t)


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: dict
    version: str = __version__
    seed: int | None = None
    timestamp: str = field(default_factory=_timestamp)

    def digest(self) -> str:
        """SHA-256 over everything except the timestamp."""
        body = {k: v for k, v in asdict(self).items() if k != "timestamp"}
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class Column:
    name: str
    doc: str


def write_table(path: Path, manifest: RunManifest, columns: Sequence[Column],
                rows: Sequence[Sequence], note: str = "") -> Path:
    """Write ``path`` (CSV) and its JSON mirror; returns the CSV path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# subshot {manifest.version}",
             f"# command: {manifest.command}",
             f"# manifest-sha256: {manifest.digest()}"]
    if note:
        lines.append(f"# {note}")
    lines += [f"# {c.name}: {c.doc}" for c in columns]
    lines.append(",".join(c.name for c in columns))
    lines += [",".join(fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    mirror = {
        "manifest": asdict(manifest),
        "manifest_sha256": manifest.digest(),
        "note": note,
        "columns": [asdict(c) for c in columns],
        "rows": [[None if v is None else float(v) for v in row] for row in rows],
    }
    path.with_suffix(".json").write_text(json.dumps(mirror, indent=1) + "\n", encoding="utf-8")
    return path


def config_dict(cfg: SchemeConfig) -> dict:
    d = asdict(cfg)
    d["kind"] = cfg.kind.value
    return d


def spec_dict(spec: SweepSpec) -> dict:
    return {"base": config_dict(spec.base), "axis": spec.axis.value,
            "grid": list(spec.grid), "optimize_r": spec.optimize_r}


SWEEP_COLUMNS = {
    "delta_A": Column("delta_A", "absorption uncertainty"),
    "Q": Column("Q", "quantum advantage over the coherent-light bound"),
    "k_opt": Column("k_opt", "optimal reference weight (optimized twin estimator)"),
    "r_opt": Column("r_opt", "optimized input squeeze magnitude"),
}
AXIS_COLUMNS = {
    SweepAxis.ETA_D: Column("eta_d", "detection efficiency"),
    SweepAxis.GAIN_R: Column("R", "phase-sensitive amplifier gain"),
}


def sweep_table(spec: SweepSpec, workers: int | None = None, extra=None):
    result = run_sweep(spec, workers)
    names = ["delta_A", "Q"]
    if spec.base.kind is SchemeKind.TWIN_OPTIMIZED:
        names.append("k_opt")
    if spec.optimize_r:
        names.append("r_opt")
    columns = [AXIS_COLUMNS[spec.axis]] + [SWEEP_COLUMNS[n] for n in names]
    rows = [[row.value] + [getattr(row, n) for n in names] for row in result.rows]
    if extra is not None:
        col, fn = extra
        columns.append(col)
        rows = [r + [fn(r[0])] for r in rows]
    return columns, rows


# --- argument parsing ------------------------------------------------------

def _float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return v


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(_float(t) for t in text.split(",") if t.strip())


def _add_config_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--scheme", choices=[k.value for k in SchemeKind], required=required)
    p.add_argument("--N", type=_float, required=required, help="mean photons at the object")
    p.add_argument("--A", type=_float, required=required, help="absorption")
    eff = p.add_mutually_exclusive_group()
    eff.add_argument("--eta-p", type=_float, help="preparation efficiency")
    eff.add_argument("--eps-p2", type=_float, help="preparation inefficiency (1 - eta_p) / eta_p")
    p.add_argument("--eta-d", type=_float, help="detection efficiency")
    p.add_argument("--r", type=_float, help="input squeeze magnitude (squeezed scheme)")
    p.add_argument("--R", type=_float, help="amplifier gain before detection")
    p.add_argument("--optimize-r", action="store_true", help="optimize r (squeezed scheme)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subshot", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"subshot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate one configuration")
    _add_config_flags(p, required=True)
    p.add_argument("--json", action="store_true", help="print only the JSON record")

    p = sub.add_parser("figure", help="regenerate the data behind one figure")
    p.add_argument("name", choices=["fig2", "fig3", "fig4", "fig5"])
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--N", type=_float, default=DEFAULT_N)
    p.add_argument("--A", type=_float, default=DEFAULT_A)
    p.add_argument("--eps-p2", type=_float_list,
                   help="comma-separated preparation inefficiencies (fig2, fig4)")
    p.add_argument("--eta-d", type=_float_list,
                   help="comma-separated detection efficiencies (fig3, fig5)")
    p.add_argument("--points", type=int, help="grid points per curve")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("validate", help="run an oracle suite")
    p.add_argument("suite", choices=sorted(SUITES) + ["all"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, help="also write the Monte Carlo summary here")

    p = sub.add_parser("sweep", help="generic one-axis sweep")
    p.add_argument("--config", type=Path, help="key=value file; flags override it")
    _add_config_flags(p, required=False)
    p.add_argument("--axis", choices=[a.value for a in SweepAxis])
    p.add_argument("--start", type=_float)
    p.add_argument("--stop", type=_float)
    p.add_argument("--num", type=int)
    p.add_argument("--spacing", choices=["lin", "log"])
    p.add_argument("--name")
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--workers", type=int)
    return parser


def _eta_p(ns) -> float:
    if getattr(ns, "eps_p2", None) is not None:
        if ns.eps_p2 < 0:
            raise ConfigError(f"eps_p2 must be >= 0, got {ns.eps_p2}")
        return 1 / (1 + ns.eps_p2)
    return 1.0 if ns.eta_p is None else ns.eta_p


def config_from_args(ns) -> SchemeConfig:
    return SchemeConfig(ns.scheme, ns.N, ns.A, _eta_p(ns),
                        1.0 if ns.eta_d is None else ns.eta_d,
                        r=0.0 if ns.r is None else ns.r,
                        R=0.0 if ns.R is None else ns.R)


# --- commands --------------------------------------------------------------

REPORT_FIELDS = ("delta_A", "Q", "G", "k_opt", "r_opt")


def cmd_eval(ns) -> int:
    cfg = config_from_args(ns)
    if ns.optimize_r and cfg.kind is not SchemeKind.SQUEEZED_COHERENT:
        raise ConfigError("--optimize-r applies to the squeezed scheme only")
    rep = evaluate_point(cfg, ns.optimize_r)
    values = (rep.delta_A, rep.Q, rep.transfer_G, rep.k_opt, rep.r_opt)
    record = {"config": config_dict(cfg), "optimize_r": ns.optimize_r,
              **dict(zip(REPORT_FIELDS, values))}
    if not ns.json:
        print(" ".join(f"{h:>22}" for h in REPORT_FIELDS))
        print(" ".join(f"{fmt(v) or '-':>22}" for v in values))
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def _log_grid(n: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.logspace(-2, 0, n))


def _gain_grid(n: int) -> tuple[float, ...]:
    return tuple(float(v) for v in np.linspace(0.0, R_MAX, n))


def figure_curves(name: str, N: float, A: float, eps_p2=None, eta_d=None, points=None):
    """``(file stem, note, SweepSpec, extra column)`` for every curve of a figure."""
    curves = []
    if name in ("fig2", "fig4"):
        twin = name == "fig2"
        kind = "twin-opt" if twin else "squeezed"
        grid = _log_grid(points or ETA_D_POINTS)
        for e in eps_p2 or (FIG2_EPS_P2 if twin else FIG4_EPS_P2):
            base = SchemeConfig(kind, N, A, eta_p=1 / (1 + e))
            curves.append((f"{name}_eps_p2_{e!r}", f"curve: eps_p2={e!r} R=0",
                           SweepSpec(base, SweepAxis.ETA_D, grid, optimize_r=not twin), None))
    else:
        twin = name == "fig3"
        kind = "twin-opt" if twin else "squeezed"
        grid = _gain_grid(points or R_POINTS)
        for ed in eta_d or GAIN_FIG_ETA_D:
            base = SchemeConfig(kind, N, A, eta_p=1.0, eta_d=ed)
            extra = None
            if not twin:
                extra = (Column("r_asymptote", "large-N optimal squeeze ln(4N)/6 + 4R/3"),
                         lambda R, N=N: optimal_squeeze_asymptotic(N, R))
            curves.append((f"{name}_eta_d_{ed!r}", f"curve: eta_d={ed!r} eps_p2=0",
                           SweepSpec(base, SweepAxis.GAIN_R, grid, optimize_r=not twin), extra))
    return curves


def cmd_figure(ns) -> int:
    curves = figure_curves(ns.name, ns.N, ns.A, ns.eps_p2, ns.eta_d, ns.points)
    for stem, note, spec, extra in curves:
        manifest = RunManifest(f"figure {ns.name}", spec_dict(spec))
        columns, rows = sweep_table(spec, ns.workers, extra)
        path = write_table(ns.out / f"{stem}.csv", manifest, columns, rows, note)
        print(path)
    return EXIT_OK


def cmd_validate(ns) -> int:
    names = sorted(SUITES) if ns.suite == "all" else [ns.suite]
    failed = None
    for name in names:
        if name == "mc":
            checks, res = mc_suite(ns.seed)
            print(f"mc seed={ns.seed}: delta_A simple={fmt(res.delta_A_simple)} "
                  f"optimized={fmt(res.delta_A_optk)} k={fmt(res.k)}")
            if ns.out is not None:
                manifest = RunManifest("validate mc", {"suite": "mc"}, seed=ns.seed)
                cols = [Column("delta_A_simple", "empirical spread, simple estimator"),
                        Column("stderr_simple", "its Monte Carlo standard error"),
                        Column("delta_A_optk", "empirical spread, optimized estimator"),
                        Column("stderr_optk", "its Monte Carlo standard error"),
                        Column("k", "sample-covariance reference weight")]
                row = [res.delta_A_simple, res.stderr_simple, res.delta_A_optk,
                       res.stderr_optk, res.k]
                print(write_table(ns.out / f"validate_mc_seed_{ns.seed}.csv", manifest, cols, [row]))
        else:
            checks = SUITES[name](ns.seed)
        for c in checks:
            print(c.line())
            if not c.passed and failed is None:
                failed = c.name
    if failed is not None:
        print(f"validation failed: {failed}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


SWEEP_KEYS = {"scheme", "N", "A", "eta_p", "eps_p2", "eta_d", "r", "R", "optimize_r",
              "axis", "start", "stop", "num", "spacing", "name"}


def read_sweep_file(path: Path) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[sweep]\n" + path.read_text(encoding="utf-8"))
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    values = dict(parser["sweep"])
    unknown = set(values) - SWEEP_KEYS
    if unknown:
        raise UsageError(f"unknown keys in {path}: {', '.join(sorted(unknown))}")
    return values


def sweep_spec_from_args(ns) -> tuple[SweepSpec, str]:
    file = read_sweep_file(ns.config) if ns.config else {}

    def pick(key, attr=None, conv=str, default=None):
        v = getattr(ns, attr or key, None)
        if v not in (None, False):
            return v
        if key in file:
            try:
                return conv(file[key])
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"bad value for {key}: {file[key]!r}") from exc
        return default

    def flag(text: str) -> bool:
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(text)

    scheme, N, A = pick("scheme"), pick("N", conv=_float), pick("A", conv=_float)
    axis = pick("axis")
    missing = [k for k, v in (("scheme", scheme), ("N", N), ("A", A), ("axis", axis)) if v is None]
    if missing:
        raise UsageError(f"sweep needs {', '.join(missing)} (flag or config file)")
    eps_p2 = pick("eps_p2", conv=_float)
    eta_p = 1 / (1 + eps_p2) if eps_p2 is not None else pick("eta_p", conv=_float, default=1.0)
    base = SchemeConfig(scheme, N, A, eta_p, pick("eta_d", conv=_float, default=1.0),
                        r=pick("r", conv=_float, default=0.0), R=pick("R", conv=_float, default=0.0))
    axis = SweepAxis(axis)
    default_lo, default_hi, default_n, default_sp = (
        (1e-2, 1.0, ETA_D_POINTS, "log") if axis is SweepAxis.ETA_D else (0.0, R_MAX, R_POINTS, "lin"))
    lo, hi = pick("start", conv=_float, default=default_lo), pick("stop", conv=_float, default=default_hi)
    n = pick("num", conv=int, default=default_n)
    spacing = pick("spacing", default=default_sp)
    if n < 1:
        raise UsageError("num must be positive")
    if spacing == "log":
        if lo <= 0 or hi <= 0:
            raise UsageError("log spacing needs positive start and stop")
        grid = np.logspace(math.log10(lo), math.log10(hi), n)
    elif spacing == "lin":
        grid = np.linspace(lo, hi, n)
    else:
        raise UsageError(f"spacing must be lin or log, got {spacing!r}")
    optimize_r = pick("optimize_r", conv=flag, default=False)
    spec = SweepSpec(base, axis, tuple(float(v) for v in grid), optimize_r)
    return spec, pick("name", default=f"sweep_{base.kind.value}_{axis.value}")


def cmd_sweep(ns) -> int:
    spec, name = sweep_spec_from_args(ns)
    manifest = RunManifest("sweep", spec_dict(spec))
    columns, rows = sweep_table(spec, ns.workers)
    print(write_table(ns.out / f"{name}.csv", manifest, columns, rows))
    return EXIT_OK


COMMANDS = {"eval": cmd_eval, "figure": cmd_figure, "validate": cmd_validate, "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return COMMANDS[ns.command](ns)
    except UsageError as exc:
        parser.error(str(exc))
    except (ConfigError, ValueError) as exc:
        print(f"subshot {ns.command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateEstimatorError as exc:
        print(f"subshot {ns.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
