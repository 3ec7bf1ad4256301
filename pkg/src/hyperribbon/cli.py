"""Command-line experiment runner.

Subcommands::

    bounds1d     Taylor/Chebyshev width report for one variable
    bounds2d     total-degree width report for two variables (optionally sampled)
    kink         two-regime decay of sigma_j(VD) at large N
    nonanalytic  algebraic decay for finitely smooth models
    sample       sample a model manifold, project it and certify the enclosure
    project      project an existing cloud and certify the enclosure
    verify       randomised property suites, JSON pass/fail report

Settings come from defaults, then a JSON ``--config`` file, then flags.  The
effective configuration is written to ``run.json`` in the output directory.

Model parameter files (``--params``) are JSON objects::

    {"kind": "expsum", "params": {"amplitudes": [...], "rates": [...]}}
    {"kind": "reaction", "params": {"theta": [t1, t2, t3, t4]}}
    {"kind": "sir", "params": {"beta": b, "gamma": g, "n_tot": n, "i0": i, "r0": 0}}

with an optional ``"activation": {"energies": [...]}`` for two-variable
models.  ``project --params FILE`` evaluates that single model at the grid
nodes, checks its budget and reports where it falls.

Exit codes: 0 success, 1 component error, 2 configuration error,
3 a checked property failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .bounds import (
    TaylorBudget,
    add_truncation_error,
    bound_2d_sv,
    cheb_sv_bound,
    hy_cheb_bound,
    kink_split,
    rho_max,
    supplement_2d_width_bound,
    taylor_error_bound,
    taylor_error_bound_2d,
    taylor_width_bound,
    widths_from_spectrum,
    write_width_csv,
)
from .chebkit import AnalyticBudget, bernstein_rho
from .design import (
    Grid1D,
    Grid2D,
    cheb_design,
    cheb_design_2d,
    nonanalytic_design,
    taylor_design_2d,
    vandermonde_design,
)
from .errors import DegenerateFitError, DomainError, HyperribbonError
from .extreal import fmt_ext
from .manifold import (
    SampleCloud,
    empirical_widths,
    enclosure_check,
    project_cloud,
    read_cloud_csv,
    recheck_cloud,
    sample_cloud,
    write_cloud_csv,
    write_projection_csv,
)
from .models import (
    Activation2D,
    ExpSumModel,
    ReactionModel,
    SIRModel,
    constraint_check,
    constraint_check_2d,
    family_for,
    model_value,
    model_value_2d,
    theory_to_native,
)
from . import plotting, properties
from .spectral import singular_values, slope_fit

EXIT_OK, EXIT_COMPONENT, EXIT_CONFIG, EXIT_PROPERTY = 0, 1, 2, 3

COMMANDS = ("bounds1d", "bounds2d", "kink", "nonanalytic", "sample", "project", "verify")
MODELS = ("expsum", "reaction", "sir")
FORMATS = ("csv", "json", "svg")
DEFAULT_SAMPLES = {"expsum": 42000, "reaction": 24000, "sir": 20000}

_COMMON = {"out", "format", "deterministic", "precision", "seed"}
ALLOWED = {
    "bounds1d": _COMMON | {"C", "R", "M", "rho", "zeta", "N", "grid"},
    "bounds2d": _COMMON | {"C", "R", "rho", "N", "grid", "model", "samples", "workers", "prior",
                           "options", "check_grid"},
    "kink": _COMMON | {"R", "N", "grid"},
    "nonanalytic": _COMMON | {"N", "nu", "grid", "fit_from"},
    "sample": _COMMON | {"C", "R", "M", "rho", "zeta", "N", "grid", "model", "samples", "workers",
                         "prior", "options", "check_grid", "include_order_n"},
    "project": _COMMON | {"C", "R", "N", "grid", "cloud", "params", "check_grid"},
    "verify": _COMMON | {"trials", "eps"},
}
DEFAULTS: dict[str, dict[str, Any]] = {
    "bounds1d": {"C": 1.0, "R": 2.0, "N": 11, "grid": "equispaced", "precision": 60},
    "bounds2d": {"C": 1.0, "R": 2.0, "rho": 4.1, "N": 6, "grid": "tensor:5", "precision": 60,
                 "samples": 2000, "workers": 1},
    "kink": {"R": 2.0, "N": 100, "grid": "equispaced", "precision": 60},
    "nonanalytic": {"N": 60, "nu": [1, 3, 5], "grid": "chebyshev", "precision": 40, "fit_from": 10},
    "sample": {"C": 1.0, "R": 2.0, "N": 11, "grid": "equispaced", "model": "expsum",
               "precision": 60, "workers": 1, "include_order_n": False},
    "project": {"precision": 60},
    "verify": {"trials": 500, "eps": list(properties.DEFAULT_EPS), "precision": 60},
}
for _cmd in COMMANDS:
    DEFAULTS[_cmd].setdefault("seed", 0)
    DEFAULTS[_cmd].setdefault("out", "out")
    DEFAULTS[_cmd].setdefault("format", "csv,json,svg")
    DEFAULTS[_cmd].setdefault("deterministic", False)


class ConfigError(Exception):
    """Invalid or unknown configuration (exit code 2)."""


# -- configuration ---------------------------------------------------------------------


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="JSON file with settings (flags take precedence)")
    g.add_argument("--C", type=float, default=S, help="Taylor budget constant C")
    g.add_argument("--R", type=float, default=S, help="Taylor budget radius R > 1")
    g.add_argument("--M", type=float, default=S, help="bound M on the Bernstein ellipse")
    g.add_argument("--rho", type=float, default=S, help="Bernstein ellipse parameter rho > 1")
    g.add_argument("--zeta", type=float, default=S, help="set rho = zeta + sqrt(zeta^2 + 1)")
    g.add_argument("--N", type=int, default=S, help="number of terms / basis size")
    g.add_argument("--nu", type=_int_list, default=S, help="smoothness orders, e.g. 1,3,5")
    g.add_argument("--grid", default=S,
                   help="equispaced[:K], chebyshev[:K] or tensor:K (K x K equispaced)")
    g.add_argument("--model", choices=MODELS, default=S)
    g.add_argument("--samples", type=int, default=S, help="accepted samples to collect")
    g.add_argument("--seed", type=int, default=S)
    g.add_argument("--precision", type=int, default=S, help="decimal digits for singular values")
    g.add_argument("--out", default=S, help="output directory")
    g.add_argument("--format", default=S, help="comma list from csv,json,svg")
    g.add_argument("--deterministic", action="store_true", default=S,
                   help="strip timestamps so reruns are byte-identical")
    g.add_argument("--trials", type=int, default=S, help="random trials for verify")
    g.add_argument("--eps", type=_float_list, default=S, help="eps values for verify")
    g.add_argument("--workers", type=int, default=S, help="sampler worker processes")
    g.add_argument("--check-grid", dest="check_grid", type=int, default=S,
                   help="budget check points per axis")
    g.add_argument("--include-order-n", dest="include_order_n", action="store_true", default=S,
                   help="also constrain the order-N derivative")
    g.add_argument("--cloud", default=S, help="cloud CSV written by 'sample'")
    g.add_argument("--params", default=S, help="model parameter JSON file")
    g.add_argument("--fit-from", dest="fit_from", type=int, default=S,
                   help="first index of the algebraic slope fit")

    p = argparse.ArgumentParser(prog="hyperribbon", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "bounds1d": "one-variable width report",
        "bounds2d": "two-variable width report",
        "kink": "two-regime singular value decay",
        "nonanalytic": "algebraic decay for finitely smooth models",
        "sample": "sample, project and certify a model manifold",
        "project": "project an existing cloud",
        "verify": "run property suites",
    }
    for cmd in COMMANDS:
        sub.add_parser(cmd, parents=[common], help=helps[cmd])
    return p


def _load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def resolve_config(command: str, cli: dict, file_cfg: dict | None = None) -> dict:
    """Merge defaults < config file < flags, reject unknown keys, validate values."""
    file_cfg = dict(file_cfg or {})
    file_cfg.pop("command", None)
    allowed = ALLOWED[command]
    for source, keys in (("config file", file_cfg), ("flags", cli)):
        unknown = sorted(set(keys) - allowed)
        if unknown:
            raise ConfigError(f"{command}: unknown or inapplicable {source} keys: {', '.join(unknown)}")
    cfg = {**DEFAULTS[command], **file_cfg, **cli}
    return _validate(command, cfg)


def _validate(command: str, cfg: dict) -> dict:
    def need(cond, msg):
        if not cond:
            raise ConfigError(f"{command}: {msg}")

    try:
        for key in ("C", "R", "M", "rho", "zeta"):
            if key in cfg and cfg[key] is not None:
                cfg[key] = float(cfg[key])
        for key in ("N", "samples", "seed", "precision", "trials", "workers", "check_grid", "fit_from"):
            if key in cfg and cfg[key] is not None:
                cfg[key] = int(cfg[key])
        if "nu" in cfg and not isinstance(cfg["nu"], list):
            cfg["nu"] = _int_list(cfg["nu"])
        if "eps" in cfg and not isinstance(cfg["eps"], list):
            cfg["eps"] = _float_list(cfg["eps"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{command}: bad value ({exc})") from exc
    need(cfg.get("C", 1.0) > 0, "C must be positive")
    need(cfg.get("R", 2.0) > 1, "R must exceed 1")
    need(cfg.get("rho") is None or cfg["rho"] > 1, "rho must exceed 1")
    need(cfg.get("zeta") is None or cfg["zeta"] > 0, "zeta must be positive")
    need(cfg.get("M") is None or cfg["M"] > 0, "M must be positive")
    need(not (cfg.get("rho") is not None and cfg.get("zeta") is not None and command != "bounds2d"),
         "give rho or zeta, not both")
    need(cfg.get("N", 2) >= 1, "N must be >= 1")
    need(cfg.get("precision", 60) >= 15, "precision must be >= 15 digits")
    need(cfg.get("samples", 2) >= 1, "samples must be >= 1")
    need(cfg.get("workers", 1) >= 1, "workers must be >= 1")
    need(cfg.get("trials", 1) >= 1, "trials must be >= 1")
    need(cfg.get("check_grid", 2) >= 2, "check_grid must be >= 2")
    need(cfg.get("model", "expsum") in MODELS, f"model must be one of {MODELS}")
    need(all(int(v) >= 0 for v in cfg.get("nu", [])), "nu values must be nonnegative")
    fmts = [f.strip() for f in str(cfg["format"]).split(",") if f.strip()]
    need(fmts and all(f in FORMATS for f in fmts), f"format must be a comma list from {FORMATS}")
    cfg["format"] = ",".join(fmts)
    cfg["deterministic"] = bool(cfg["deterministic"])
    if "grid" in cfg:
        _parse_grid(cfg["grid"], cfg.get("N", 11))  # raises ConfigError
    if command == "project":
        need(("cloud" in cfg) != ("params" in cfg), "give exactly one of --cloud or --params")
    return cfg


def _parse_grid(text_in: str, N: int):
    text = str(text_in).strip().lower()
    kind, _, size = text.partition(":")
    try:
        k = int(size) if size else None
    except ValueError as exc:
        raise ConfigError(f"bad grid size in {text_in!r}") from exc
    if kind == "equispaced":
        return Grid1D.equispaced(k or N)
    if kind == "chebyshev":
        return Grid1D.chebyshev(k or N)
    if kind == "tensor":
        return Grid2D.equispaced(k or 5)
    raise ConfigError(f"unknown grid {text_in!r}; use equispaced[:K], chebyshev[:K] or tensor:K")


# -- helpers --------------------------------------------------------------------------


class _Run:
    """Output directory, format flags and the JSON summary of one command."""

    def __init__(self, command: str, cfg: dict):
        self.command = command
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.formats = set(cfg["format"].split(","))
        self.summary: dict[str, Any] = {"command": command}

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def path(self, name: str) -> Path:
        return self.out / name

    def write_run_json(self):
        with open(self.path("run.json"), "w") as fh:
            json.dump({"command": self.command, "version": __version__, "config": self.cfg}, fh,
                      indent=2, sort_keys=True)
            fh.write("\n")

    def write_summary(self, name="summary.json"):
        if self.wants("json"):
            with open(self.path(name), "w") as fh:
                json.dump(_jsonable(self.summary), fh, indent=2, sort_keys=True)
                fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _opt(v, digits=17):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else fmt_ext(v, digits)


def _say(msg: str):
    print(msg, file=sys.stderr)


def _cheb_rho(cfg) -> float | None:
    if cfg.get("zeta") is not None:
        return bernstein_rho(cfg["zeta"])
    return cfg.get("rho")


def _width_report_1d(spectrum, budget: TaylorBudget, cfg, n_axes: int):
    rep = add_truncation_error(widths_from_spectrum(spectrum, budget.radius), taylor_error_bound(budget))
    bt = [None] + [taylor_width_bound(budget, j) for j in range(2, n_axes + 1)]
    rho = _cheb_rho(cfg)
    bc = [None] * n_axes
    if rho is not None and cfg.get("M") is not None:
        ab = AnalyticBudget(cfg["M"], rho)
        bc = [None] + [hy_cheb_bound(ab, budget.N, j) for j in range(2, min(n_axes, budget.N) + 1)]
        bc += [None] * (n_axes - len(bc))
    return rep.with_columns(bound_taylor=bt, bound_cheb=bc)


def _width_report_2d(spectrum, budget: TaylorBudget, rho: float, n_axes: int):
    n = budget.N * (budget.N + 1) / 2.0
    rep = add_truncation_error(widths_from_spectrum(spectrum, budget.C * math.sqrt(n)),
                               taylor_error_bound_2d(budget))
    bc = [None] + [supplement_2d_width_bound(budget.N, rho, j) for j in range(2, n_axes + 1)]
    return rep.with_columns(bound_cheb=bc)


def _certify(run: _Run, cloud: SampleCloud | np.ndarray, X, report, prefix=""):
    """Project, measure widths, check enclosure; writes outputs and returns the result."""
    proj = project_cloud(cloud, X, run.cfg["precision"])
    n_axes = len(report)
    widths = empirical_widths(proj) if proj.Z.shape[0] >= 2 else np.zeros(proj.Z.shape[1])
    report = report.with_columns(empirical=list(widths[:n_axes]))
    enc = enclosure_check(proj, report)
    ell_y = report.column("ell_y")
    above = [int(j + 1) for j in range(n_axes) if widths[j] > ell_y[j] + 1e-12]
    if run.wants("csv"):
        write_width_csv(run.path(prefix + "widths.csv"), report)
        write_projection_csv(run.path(prefix + "projection.csv"), proj)
    if run.wants("svg"):
        plotting.plot_widths(report, run.path(prefix + "widths.svg"), deterministic=run.cfg["deterministic"])
        if proj.Z.shape[1] >= 2:
            half = np.zeros(2)
            half[: min(2, n_axes)] = report.column("ell_y")[:2] / 2.0
            plotting.plot_scatter(proj.Z, half, run.path(prefix + "scatter.svg"),
                                  deterministic=run.cfg["deterministic"])
    run.summary["enclosure"] = enc.to_dict()
    run.summary["empirical_widths"] = list(widths)
    run.summary["widths_above_ell_y"] = above
    return enc, widths, report


# -- commands ------------------------------------------------------------------------


def cmd_bounds1d(run: _Run) -> int:
    cfg = run.cfg
    b = TaylorBudget(cfg["C"], cfg["R"], cfg["N"])
    grid = _parse_grid(cfg["grid"], b.N)
    if not isinstance(grid, Grid1D):
        raise ConfigError("bounds1d needs a one-dimensional grid")
    X = vandermonde_design(grid, b.R, b.N)
    sv = singular_values(X, cfg["precision"])
    rep = _width_report_1d(sv, b, cfg, len(sv))
    rho = _cheb_rho(cfg)
    cheb_rate = rho if rho is not None else rho_max(b.R)
    spec_c = singular_values(cheb_design(grid, cheb_rate, b.N), cfg["precision"])
    if run.wants("csv"):
        write_width_csv(run.path("widths.csv"), rep)
        _write_table(run.path("spectra.csv"), ["j", "sigma_taylor", "sigma_cheb"],
                     [[j + 1, fmt_ext(sv[j], 17), fmt_ext(spec_c[j], 17)] for j in range(len(sv))])
    if run.wants("svg"):
        plotting.plot_widths(rep, run.path("widths.svg"), guide_rate=rho,
                             deterministic=cfg["deterministic"])
    viol = rep.violations()
    run.summary.update({"N": b.N, "C": b.C, "R": b.R, "radius": b.radius, "err": rep.err,
                        "rho": rho, "cheb_design_rho": cheb_rate,
                        "ell_p": list(rep.column("ell_p")), "ell_y": list(rep.column("ell_y")),
                        "bound_violations": viol})
    return EXIT_PROPERTY if viol else EXIT_OK


def cmd_bounds2d(run: _Run) -> int:
    cfg = run.cfg
    b = TaylorBudget(cfg["C"], cfg["R"], cfg["N"])
    rho = float(cfg["rho"])
    grid = _parse_grid(cfg["grid"], b.N)
    if not isinstance(grid, Grid2D):
        raise ConfigError("bounds2d needs a tensor grid, e.g. tensor:5")
    Xt = taylor_design_2d(grid, b.R, b.N)
    Xc = cheb_design_2d(grid, rho, b.N)
    st = singular_values(Xt, cfg["precision"])
    sc = singular_values(Xc, cfg["precision"])
    rep = _width_report_2d(st, b, rho, len(st))
    sv_bound = [None] + [bound_2d_sv(b.N, rho, j) for j in range(2, len(sc) + 1)]
    sv_viol = [j for j in range(2, len(sc) + 1) if float(sc[j - 1]) > sv_bound[j - 1]]
    run.summary.update({"N": b.N, "n": b.N * (b.N + 1) // 2, "rows": Xt.rows, "rho": rho,
                        "err": rep.err, "radius": rep.r, "sv_bound_violations": sv_viol})
    if run.wants("csv"):
        _write_table(run.path("spectra2d.csv"), ["j", "sigma_taylor", "sigma_cheb", "bound_2d_sv"],
                     [[j + 1, fmt_ext(st[j], 17), fmt_ext(sc[j], 17), _opt(sv_bound[j])]
                      for j in range(len(st))])
    code = EXIT_PROPERTY if sv_viol else EXIT_OK
    if cfg.get("model"):
        cloud = sample_cloud(cfg["model"], cfg.get("prior"), b, grid, cfg["samples"], cfg["seed"],
                             check_grid=cfg.get("check_grid"), workers=cfg["workers"],
                             options=cfg.get("options"))
        _save_cloud(run, cloud)
        enc, _, rep = _certify(run, cloud, Xt, rep)
        if not enc.passed:
            code = EXIT_PROPERTY
    else:
        if run.wants("csv"):
            write_width_csv(run.path("widths.csv"), rep)
        if run.wants("svg"):
            plotting.plot_widths(rep, run.path("widths.svg"), deterministic=cfg["deterministic"])
    return code


def cmd_kink(run: _Run) -> int:
    cfg = run.cfg
    R, N = cfg["R"], cfg["N"]
    grid = _parse_grid(cfg["grid"], N)
    if not isinstance(grid, Grid1D):
        raise ConfigError("kink needs a one-dimensional grid")
    rmax = rho_max(R)
    Xv = vandermonde_design(grid, R, N)
    sv = singular_values(Xv, cfg["precision"])
    sc = singular_values(cheb_design(grid, rmax, N), cfg["precision"])
    n = len(sv)
    bt = [None] + [cheb_sv_bound(N, R, j) for j in range(2, n + 1)]
    bc = [None] + [cheb_sv_bound(N, rmax, j) for j in range(2, n + 1)]
    usable = int(np.count_nonzero(sv.floor_mask()))
    if usable < n:
        _say(f"note: {n - usable} of {n} singular values lie below the {cfg['precision']}-digit "
             "accuracy floor and are excluded from the fit")
    try:
        fit = kink_split(sv, R)
        run.summary["fit"] = {"j_kink": fit.j_kink, "slope_lo": fit.slope_lo, "slope_hi": fit.slope_hi,
                              "sse": fit.sse, "used": fit.used}
    except (DegenerateFitError, DomainError) as exc:
        fit = None
        run.summary["fit"] = {"error": str(exc)}
    windows = {}
    for lo, hi in ((5, 35), (55, 90)):
        if hi <= usable:
            windows[f"{lo}-{hi}"] = slope_fit(sv, lo, hi)
    # double-precision SVD for comparison
    s64 = np.linalg.svd(Xv.entries, compute_uv=False)
    try:
        f64 = kink_split(s64, R)
        run.summary["fit_float64"] = {"j_kink": f64.j_kink, "slope_lo": f64.slope_lo,
                                      "slope_hi": f64.slope_hi, "used": f64.used}
    except (DegenerateFitError, DomainError) as exc:
        run.summary["fit_float64"] = {"error": str(exc)}
    run.summary.update({"N": N, "R": R, "rho_max": rmax, "precision": cfg["precision"],
                        "usable": usable, "window_slopes": windows,
                        "reference_slopes": {"rho_max": -math.log10(rmax), "R": -math.log10(R)}})
    if run.wants("csv"):
        _write_table(run.path("kink.csv"), ["j", "sigma_taylor", "sigma_cheb", "bound_taylor", "bound_cheb"],
                     [[j + 1, fmt_ext(sv[j], 17), fmt_ext(sc[j], 17), _opt(bt[j]), _opt(bc[j])]
                      for j in range(n)])
        _write_table(run.path("kink_float64.csv"), ["j", "sigma_taylor_float64"],
                     [[j + 1, repr(float(v))] for j, v in enumerate(s64)])
    if run.wants("svg"):
        plotting.plot_kink(sv.floats(), sc.floats(), [np.nan if v is None else v for v in bt],
                           [np.nan if v is None else v for v in bc], run.path("kink.svg"),
                           None if fit is None else fit.j_kink, deterministic=cfg["deterministic"])
    return EXIT_OK


def cmd_nonanalytic(run: _Run) -> int:
    cfg = run.cfg
    N = cfg["N"]
    grid = _parse_grid(cfg["grid"], N)
    if not isinstance(grid, Grid1D):
        raise ConfigError("nonanalytic needs a one-dimensional grid")
    lo = cfg["fit_from"]
    if not 1 <= lo < N:
        raise ConfigError(f"fit_from must lie in [1, {N - 1}]")
    spectra, slopes = {}, {}
    for nu in cfg["nu"]:
        sv = singular_values(nonanalytic_design(grid, nu, N), cfg["precision"])
        spectra[nu] = sv
        slopes[nu] = slope_fit(sv, lo, len(sv), mode="algebraic")
    run.summary.update({"N": N, "fit_window": [lo, N],
                        "slopes": {str(k): v for k, v in slopes.items()}})
    if run.wants("csv"):
        nus = list(spectra)
        _write_table(run.path("nonanalytic.csv"), ["j"] + [f"sigma_nu{nu}" for nu in nus],
                     [[j + 1] + [fmt_ext(spectra[nu][j], 17) for nu in nus] for j in range(N)])
    if run.wants("svg"):
        plotting.plot_nonanalytic({nu: s.floats() for nu, s in spectra.items()}, slopes,
                                  run.path("nonanalytic.svg"), deterministic=cfg["deterministic"])
    return EXIT_OK


def _save_cloud(run: _Run, cloud: SampleCloud):
    if run.wants("csv"):
        write_cloud_csv(run.path("cloud.csv"), cloud)
    run.summary["cloud"] = {"kind": cloud.kind, "accepted": cloud.accepted, "attempted": cloud.attempted,
                            "acceptance_rate": cloud.acceptance_rate, "seed": cloud.seed,
                            "min_prediction": float(cloud.predictions.min())}


def _design_for(cloud_grid, budget: TaylorBudget):
    if isinstance(cloud_grid, Grid2D):
        return taylor_design_2d(cloud_grid, budget.R, budget.N)
    return vandermonde_design(cloud_grid, budget.R, budget.N)


def _report_for(sv, budget, cfg, two_d):
    if two_d:
        return _width_report_2d(sv, budget, float(cfg.get("rho") or rho_max(budget.R)), len(sv))
    return _width_report_1d(sv, budget, cfg, len(sv))


def cmd_sample(run: _Run) -> int:
    cfg = run.cfg
    b = TaylorBudget(cfg["C"], cfg["R"], cfg["N"])
    grid = _parse_grid(cfg["grid"], b.N)
    model = cfg["model"]
    target = cfg.get("samples") or DEFAULT_SAMPLES[model]
    cloud = sample_cloud(model, cfg.get("prior"), b, grid, target, cfg["seed"],
                         check_grid=cfg.get("check_grid"), workers=cfg["workers"],
                         include_order_n=cfg["include_order_n"], options=cfg.get("options"))
    _save_cloud(run, cloud)
    X = _design_for(grid, b)
    rep = _report_for(singular_values(X, cfg["precision"]), b, cfg, isinstance(grid, Grid2D))
    enc, widths, _ = _certify(run, cloud, X, rep)
    run.summary["max_width"] = float(widths.max())
    run.summary["max_width_over_CN"] = float(widths.max() / (b.C * b.N))
    return EXIT_OK if enc.passed else EXIT_PROPERTY


def _model_from_params(path) -> tuple[Any, Activation2D | None]:
    try:
        with open(path) as fh:
            data = json.load(fh)
        kind, p = data["kind"], data["params"]
        if kind == "expsum":
            base = ExpSumModel(tuple(p["amplitudes"]), tuple(p["rates"]))
        elif kind == "reaction":
            base = ReactionModel(tuple(p["theta"]))
        elif kind == "sir":
            base = SIRModel(float(p["beta"]), float(p["gamma"]), float(p.get("n_tot", 10.0)),
                            float(p["i0"]), float(p.get("r0", 0.0)), float(p.get("t_init", 0.0)))
        else:
            raise ConfigError(f"unknown model kind {kind!r}")
        ext = Activation2D(base, tuple(data["activation"]["energies"])) if data.get("activation") else None
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"cannot read model parameters from {path}: {exc}") from exc
    return base, ext


def cmd_project(run: _Run) -> int:
    cfg = run.cfg
    if "cloud" in cfg:
        cloud = read_cloud_csv(cfg["cloud"])
        b = TaylorBudget(cfg.get("C", cloud.budget.C), cfg.get("R", cloud.budget.R), cfg.get("N", cloud.budget.N))
        ratios = recheck_cloud(cloud)
        run.summary["recheck"] = {"max_ratio": float(ratios.max()),
                                  "failed": int(np.count_nonzero(~(ratios < 1.0)))}
        X = _design_for(cloud.grid, b)
        rep = _report_for(singular_values(X, cfg["precision"]), b, cfg, cloud.two_d)
        enc, widths, _ = _certify(run, cloud, X, rep)
        run.summary["max_width"] = float(widths.max())
        failed = not enc.passed or run.summary["recheck"]["failed"] > 0
        return EXIT_PROPERTY if failed else EXIT_OK
    base, ext = _model_from_params(cfg["params"])
    b = TaylorBudget(cfg.get("C", 1.0), cfg.get("R", 2.0), cfg.get("N", 6 if ext else 11))
    grid = _parse_grid(cfg.get("grid", "tensor:5" if ext else "equispaced"), b.N)
    if ext is not None:
        if not isinstance(grid, Grid2D):
            raise ConfigError("a model with activation energies needs a tensor grid")
        chk = constraint_check_2d(ext, b, cfg.get("check_grid", 21))
        y = np.array([[model_value_2d(ext, float(theory_to_native(t)), float(theory_to_native(s)))
                       for t, s in grid.nodes]])
    else:
        if not isinstance(grid, Grid1D):
            raise ConfigError("a one-variable model needs a one-dimensional grid")
        chk = constraint_check(base, b, cfg.get("check_grid", 201), extra_t=grid.points)
        y = np.atleast_2d(model_value(base, theory_to_native(np.asarray(grid.points))))
    X = _design_for(grid, b)
    rep = _report_for(singular_values(X, cfg["precision"]), b, cfg, ext is not None)
    enc, _, _ = _certify(run, y, X, rep)
    run.summary["constraint"] = {"passed": chk.passed, "max_ratio": chk.max_ratio, "worst_t": chk.worst_t}
    run.summary["kind"] = family_for(base).kind
    return EXIT_OK if enc.passed and chk.passed else EXIT_PROPERTY


def cmd_verify(run: _Run) -> int:
    cfg = run.cfg
    trials, seed = cfg["trials"], cfg["seed"]
    scale = max(1, round(trials / 500 * 20))
    results = [
        properties.check_thm2(trials, cfg["eps"], seed),
        properties.check_closed_form(precision=cfg["precision"]),
        properties.check_thm1(scale, seed=seed),
        properties.check_taylor_error(scale, seed=seed),
        properties.check_polynomial_enclosure(seed=seed, precision=cfg["precision"]),
        properties.check_adversarial_enclosure(precision=cfg["precision"]),
    ]
    report = {"seed": seed, "trials": trials, "properties": [r.to_dict() for r in results],
              "passed": all(r.passed for r in results)}
    with open(run.path("verify.json"), "w") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(_jsonable({r.name: r.status for r in results}), indent=2))
    if any(r.status == "fail" for r in results):
        return EXIT_PROPERTY
    if any(r.status == "error" for r in results):
        return EXIT_COMPONENT
    return EXIT_OK


HANDLERS = {
    "bounds1d": cmd_bounds1d,
    "bounds2d": cmd_bounds2d,
    "kink": cmd_kink,
    "nonanalytic": cmd_nonanalytic,
    "sample": cmd_sample,
    "project": cmd_project,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    cli = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    try:
        file_cfg = _load_config_file(ns.config) if ns.config else None
        cfg = resolve_config(ns.command, cli, file_cfg)
        run = _Run(ns.command, cfg)
        run.write_run_json()
        code = HANDLERS[ns.command](run)
        run.summary["exit_code"] = code
        run.write_summary()
    except ConfigError as exc:
        _say(f"configuration error: {exc}")
        return EXIT_CONFIG
    except HyperribbonError as exc:
        _say(f"error: {type(exc).__name__}: {exc}")
        return EXIT_COMPONENT
    except (OSError, ValueError, KeyError) as exc:
        _say(f"input error: {type(exc).__name__}: {exc}")
        return EXIT_CONFIG
    if code == EXIT_PROPERTY:
        _say("a checked property failed; see summary.json")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
