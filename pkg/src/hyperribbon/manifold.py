"""Constrained Monte Carlo sampling of model manifolds, projection and enclosure.

Parameters are drawn from simple priors and kept when the model passes the
derivative budget on a dense check grid.  Random numbers come from one
independent stream per block of attempts (seeded by ``(seed, block)``), so a
cloud is fully determined by its seed and configuration no matter how many
worker processes evaluate the blocks.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .bounds import TaylorBudget, WidthReport
from .design import DesignMatrix, Grid1D, Grid2D
from .errors import DimensionMismatch, DomainError, SamplerTimeout
from .extreal import DEFAULT_PRECISION, to_float
from .models import (
    DEFAULT_SPAN,
    FAMILIES,
    constraint_lhs,
    constraint_lhs_2d,
    theory_to_native,
)
from .spectral import SingularSpectrum, left_singular_basis

__all__ = [
    "ParamPrior",
    "SampleCloud",
    "Projection",
    "EnclosureResult",
    "default_priors",
    "sample_cloud",
    "recheck_cloud",
    "project_cloud",
    "empirical_widths",
    "enclosure_check",
    "ellipsoid_membership",
    "write_cloud_csv",
    "read_cloud_csv",
    "write_projection_csv",
]

TIMEOUT_WINDOW = 10_000_000
TIMEOUT_RATE = 1e-6
BLOCK_1D = 4096
BLOCK_2D = 256


@dataclass(frozen=True)
class ParamPrior:
    """Sampling law for one parameter: ``uniform`` or ``loguniform`` on ``[lo, hi]``."""

    law: str
    lo: float
    hi: float

    def __post_init__(self):
        if self.law not in ("uniform", "loguniform"):
            raise DomainError(f"unknown prior law {self.law!r}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.hi < self.lo:
            raise DomainError(f"bad prior bounds [{self.lo}, {self.hi}]")
        if self.law == "loguniform" and self.lo <= 0:
            raise DomainError("loguniform prior needs lo > 0")

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Map uniform variates on [0, 1) onto the prior."""
        if self.law == "uniform":
            return self.lo + (self.hi - self.lo) * u
        a, b = math.log(self.lo), math.log(self.hi)
        return np.exp(a + (b - a) * u)

    @classmethod
    def parse(cls, entry) -> "ParamPrior":
        """Accept a ParamPrior, ``[law, lo, hi]`` or ``{"law":..,"lo":..,"hi":..}``."""
        if isinstance(entry, ParamPrior):
            return entry
        if isinstance(entry, Mapping):
            return cls(str(entry["law"]), float(entry["lo"]), float(entry["hi"]))
        law, lo, hi = entry
        return cls(str(law), float(lo), float(hi))


def default_priors(kind: str, budget: TaylorBudget, two_d: bool = False,
                   n_terms: int = 11) -> dict[str, ParamPrior]:
    """Default priors per model family.

    Exponential amplitudes and rates are log-uniform so that both the
    near-zero curves and the near-constant curves at the top of the budget
    are drawn with reasonable probability.
    """
    top = budget.C * math.sqrt(budget.N)
    if kind == "expsum":
        pri = {f"A_{a}": ParamPrior("loguniform", 1e-6, top) for a in range(n_terms)}
        pri.update({f"lambda_{a}": ParamPrior("loguniform", 1e-4, 10.0) for a in range(n_terms)})
        energies = [f"E_{a}" for a in range(n_terms)]
    elif kind == "reaction":
        pri = {
            "theta_1": ParamPrior("uniform", 0.0, 4.0),
            "theta_2": ParamPrior("uniform", 0.0, 4.0),
            "theta_3": ParamPrior("uniform", 0.0, 4.0),
            "theta_4": ParamPrior("uniform", 0.5, 5.0),
        }
        energies = ["E_1", "E_2", "E_3", "E_4"]
    elif kind == "sir":
        pri = {
            "beta_over_n": ParamPrior("uniform", 0.0, 3.0),
            "gamma": ParamPrior("uniform", 0.0, 3.0),
            "i0": ParamPrior("uniform", 0.0, top),
        }
        energies = ["E_beta", "E_gamma"]
    else:
        raise DomainError(f"unknown model kind {kind!r}")
    if two_d:
        pri.update({name: ParamPrior("uniform", 0.0, 1.0) for name in energies})
    return pri


@dataclass(frozen=True, eq=False)
class SampleCloud:
    """Accepted parameter vectors and their predictions at the grid nodes."""

    kind: str
    grid: Grid1D | Grid2D
    param_names: tuple[str, ...]
    params: np.ndarray
    predictions: np.ndarray
    attempt_ids: np.ndarray
    seed: int
    attempted: int
    budget: TaylorBudget
    priors: tuple[tuple[str, ParamPrior], ...] = ()
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("params", "predictions", "attempt_ids"):
            a = np.array(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.predictions.shape[1:] != (len(self.grid),):
            raise DimensionMismatch("prediction vectors must have one entry per grid node")

    def __len__(self):
        return self.params.shape[0]

    @property
    def accepted(self) -> int:
        return len(self)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempted if self.attempted else 0.0

    @property
    def two_d(self) -> bool:
        return isinstance(self.grid, Grid2D)

    def models(self):
        """Iterate over the accepted models as value objects."""
        fam = _family(self.kind, self.options)
        P = len(fam.param_names())
        for row in self.params:
            yield fam.build(row[:P], row[P:] if self.two_d else None)


def _family(kind: str, options: Mapping):
    if kind not in FAMILIES:
        raise DomainError(f"unknown model kind {kind!r}")
    if kind == "expsum":
        return FAMILIES[kind](int(options.get("n_terms", 11)))
    if kind == "sir":
        return FAMILIES[kind](float(options.get("n_tot", 10.0)), float(options.get("r0", 0.0)),
                              float(options.get("t_init", 0.0)))
    return FAMILIES[kind]()


# -- block evaluation -------------------------------------------------------------------


@dataclass(frozen=True)
class _Task:
    kind: str
    options: dict
    laws: tuple
    budget: TaylorBudget
    grid: Grid1D | Grid2D
    check_grid: int
    span: tuple
    span_s: tuple
    include_order_n: bool
    seed: int
    block_size: int


def _union_with_nodes(check_grid: int, nodes) -> tuple[np.ndarray, np.ndarray]:
    t = np.union1d(np.linspace(-1.0, 1.0, check_grid), np.asarray(nodes, dtype=float))
    return t, np.searchsorted(t, nodes)


def _eval_1d(fam, task: _Task, params):
    b = task.budget
    K = b.N if task.include_order_n else b.N - 1
    limit = b.C ** 2 * b.N
    h = 0.5 * (task.span[1] - task.span[0])
    nodes = np.asarray(task.grid.points)
    t, node_idx = _union_with_nodes(task.check_grid, nodes)
    x = theory_to_native(t, task.span)
    B = params.shape[0]
    preds = np.full((B, nodes.size), np.nan)
    if fam.kind == "sir":
        def reject(jets_i, ti, rows):
            return ~(constraint_lhs(jets_i[..., 0], b.R, h, K) < limit)

        jets, ok = fam.jets(params, x, K, reject=reject)
        preds = jets[:, node_idx, 0]
        return ok, preds
    alive = np.ones(B, dtype=bool)
    # screen on the first point before paying for the full grid
    bounds_ = [0, 1] + list(range(17, x.size, 32)) + [x.size]
    for lo, hi in zip(bounds_[:-1], bounds_[1:]):
        if hi <= lo:
            continue
        rows = np.flatnonzero(alive)
        if not rows.size:
            break
        jets, ok = fam.jets(params[rows], x[lo:hi], K)
        good = ok & np.all(constraint_lhs(jets, b.R, h, K) < limit, axis=1)
        alive[rows[~good]] = False
        sel = (node_idx >= lo) & (node_idx < hi)
        if sel.any():
            preds[rows[:, None], np.flatnonzero(sel)[None, :]] = jets[:, node_idx[sel] - lo, 0]
    return alive, preds


def _eval_2d(fam, task: _Task, params, energies):
    b = task.budget
    K = b.N - 1
    L = K + 1
    n = b.N * (b.N + 1) / 2.0
    limit = b.C ** 2 * n
    hx = 0.5 * (task.span[1] - task.span[0])
    hs = 0.5 * (task.span_s[1] - task.span_s[0])
    if task.grid.factors is None:
        raise DomainError("sampling on a 2-D grid needs a tensor grid")
    tg, sg = task.grid.factors
    t, t_idx = _union_with_nodes(task.check_grid, tg.points)
    s, s_idx = _union_with_nodes(task.check_grid, sg.points)
    x, sn = theory_to_native(t, task.span), theory_to_native(s, task.span_s)
    B = params.shape[0]
    nt, ns = len(tg), len(sg)
    preds = np.full((B, nt * ns), np.nan)
    alive = np.ones(B, dtype=bool)

    def reject(jets_i, ti, rows):
        return ~(constraint_lhs_2d(jets_i, b.R, hx, hs, K) < limit)

    # node s-values first: they double as the cheapest early screen
    order = list(s_idx) + [k for k in range(s.size) if k not in set(s_idx)]
    for k in order:
        rows = np.flatnonzero(alive)
        if not rows.size:
            break
        jets, ok = fam.ring_jets(params[rows], energies[rows], x, sn[k:k + 1], K, L, reject=reject)
        lhs = constraint_lhs_2d(jets[:, 0], b.R, hx, hs, K)
        good = ok & np.all(lhs < limit, axis=1)
        alive[rows[~good]] = False
        hit = np.flatnonzero(s_idx == k)
        for js in hit:
            cols = np.arange(nt) * ns + js
            preds[rows[:, None], cols[None, :]] = jets[:, 0, t_idx, 0, 0]
    return alive, preds


def _run_block(task: _Task, block: int):
    ss = np.random.SeedSequence(task.seed, spawn_key=(block,))
    rng = np.random.Generator(np.random.PCG64(ss))
    u = rng.random((task.block_size, len(task.laws)))
    theta = np.column_stack([p.transform(u[:, i]) for i, p in enumerate(task.laws)])
    fam = _family(task.kind, task.options)
    P = len(fam.param_names())
    with np.errstate(all="ignore"):
        if isinstance(task.grid, Grid2D):
            ok, preds = _eval_2d(fam, task, theta[:, :P], theta[:, P:])
        else:
            ok, preds = _eval_1d(fam, task, theta)
    ok &= np.all(np.isfinite(preds), axis=1)
    ids = block * task.block_size + np.flatnonzero(ok)
    return ids, theta[ok], preds[ok]


def sample_cloud(kind: str, prior: Mapping | None, budget: TaylorBudget, grid: Grid1D | Grid2D,
                 target: int, seed: int, *, check_grid: int | None = None, span=DEFAULT_SPAN,
                 span_s=DEFAULT_SPAN, include_order_n: bool = False, workers: int = 1,
                 block_size: int | None = None, options: Mapping | None = None,
                 max_attempts: int | None = None) -> SampleCloud:
    """Rejection-sample ``target`` parameter vectors that satisfy the budget.

    ``prior`` maps every parameter name (and, on a 2-D grid, every activation
    energy) to a :class:`ParamPrior`; missing entries fall back to
    :func:`default_priors`.  ``options`` carries family settings such as
    ``n_terms`` or ``n_tot``.  The accepted set is ordered by attempt index
    and does not depend on ``workers``.
    """
    if target < 1:
        raise DomainError("target must be >= 1")
    options = dict(options or {})
    two_d = isinstance(grid, Grid2D)
    fam = _family(kind, options)
    names = fam.param_names() + (fam.energy_names() if two_d else [])
    base = default_priors(kind, budget, two_d, int(options.get("n_terms", 11)))
    prior = dict(prior or {})
    unknown = set(prior) - set(names)
    if unknown:
        raise DomainError(f"unknown prior keys for {kind}: {sorted(unknown)}")
    laws = tuple(ParamPrior.parse(prior.get(nm, base.get(nm))) for nm in names)
    if check_grid is None:
        check_grid = 21 if two_d else 201
    if check_grid < 2:
        raise DomainError("check_grid must be >= 2")
    bs = int(block_size or (BLOCK_2D if two_d else BLOCK_1D))
    task = _Task(kind, options, laws, budget, grid, int(check_grid), tuple(span), tuple(span_s),
                 bool(include_order_n), int(seed), bs)

    ids_all, theta_all, preds_all = [], [], []
    accepted, block = 0, 0

    def absorb(res):
        nonlocal accepted
        ids, th, pr = res
        ids_all.append(ids)
        theta_all.append(th)
        preds_all.append(pr)
        accepted += ids.size

    def check_timeout():
        attempts = block * bs
        if max_attempts is not None and attempts >= max_attempts and accepted < target:
            raise SamplerTimeout(f"stopped after {attempts} attempts with {accepted} accepted "
                                 f"(rate {accepted / attempts:.3g})")
        if attempts >= TIMEOUT_WINDOW and accepted / attempts < TIMEOUT_RATE:
            raise SamplerTimeout(f"acceptance rate {accepted / attempts:.3g} below {TIMEOUT_RATE:g} "
                                 f"after {attempts} attempts; prior and budget look mismatched")

    if workers <= 1:
        while accepted < target:
            absorb(_run_block(task, block))
            block += 1
            check_timeout()
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            while accepted < target:
                batch = list(range(block, block + workers))
                for res in pool.map(_run_block, [task] * len(batch), batch):
                    absorb(res)
                block += len(batch)
                check_timeout()

    ids = np.concatenate(ids_all)[:target]
    theta = np.concatenate(theta_all)[:target]
    preds = np.concatenate(preds_all)[:target]
    attempted = int(ids[-1]) + 1
    return SampleCloud(kind, grid, tuple(names), theta, preds, ids, int(seed), attempted, budget,
                       tuple(zip(names, laws)),
                       {**options, "check_grid": int(check_grid), "span": list(span),
                        "span_s": list(span_s), "include_order_n": bool(include_order_n),
                        "block_size": bs})


def recheck_cloud(cloud: SampleCloud, check_grid: int | None = None, chunk: int = 512) -> np.ndarray:
    """Re-evaluate the budget for every sample; returns the max ratio per sample.

    Uses the full check grid for every sample (no early rejection), so it is
    an independent pass over the accepted set.
    """
    opts = cloud.options
    fam = _family(cloud.kind, opts)
    P = len(fam.param_names())
    b = cloud.budget
    cg = int(check_grid or opts.get("check_grid", 21 if cloud.two_d else 201))
    span = tuple(opts.get("span", DEFAULT_SPAN))
    span_s = tuple(opts.get("span_s", DEFAULT_SPAN))
    out = np.empty(len(cloud))
    for lo in range(0, len(cloud), chunk):
        rows = cloud.params[lo:lo + chunk]
        if cloud.two_d:
            tg, sg = cloud.grid.factors
            t, _ = _union_with_nodes(cg, tg.points)
            s, _ = _union_with_nodes(cg, sg.points)
            K = b.N - 1
            jets, ok = fam.ring_jets(rows[:, :P], rows[:, P:], theory_to_native(t, span),
                                     theory_to_native(s, span_s), K, K + 1)
            lhs = constraint_lhs_2d(jets, b.R, 0.5 * (span[1] - span[0]), 0.5 * (span_s[1] - span_s[0]), K)
            ratio = lhs.reshape(rows.shape[0], -1).max(axis=1) / (b.C ** 2 * b.N * (b.N + 1) / 2.0)
        else:
            t, _ = _union_with_nodes(cg, cloud.grid.points)
            K = b.N if opts.get("include_order_n") else b.N - 1
            jets, ok = fam.jets(rows[:, :P], theory_to_native(t, span), K)
            lhs = constraint_lhs(jets, b.R, 0.5 * (span[1] - span[0]), K)
            ratio = lhs.max(axis=1) / (b.C ** 2 * b.N)
        out[lo:lo + chunk] = np.where(ok & np.isfinite(ratio), ratio, np.inf)
    return out


# -- projection and widths ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Projection:
    """Rotated coordinates ``Z = U^T Y`` (one row per sample)."""

    Z: np.ndarray
    U: np.ndarray
    spectrum: SingularSpectrum


def project_cloud(cloud: SampleCloud | np.ndarray, X: DesignMatrix,
                  precision: int = DEFAULT_PRECISION) -> Projection:
    Y = cloud.predictions if isinstance(cloud, SampleCloud) else np.atleast_2d(np.asarray(cloud, float))
    if Y.shape[1] != X.rows:
        raise DimensionMismatch(f"cloud has {Y.shape[1]} nodes, design has {X.rows} rows")
    U, sv = left_singular_basis(X, precision)
    Uf = to_float(U)
    return Projection(Y @ Uf, Uf, sv)


def empirical_widths(Z) -> np.ndarray:
    """``max - min`` of each rotated coordinate."""
    Z = Z.Z if isinstance(Z, Projection) else np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise DomainError("need at least two samples")
    return Z.max(axis=0) - Z.min(axis=0)


@dataclass(frozen=True)
class EnclosureResult:
    passed: bool
    violations: int
    worst_margin: float
    worst_sample: int
    worst_axis: int

    def to_dict(self):
        return asdict(self)


def enclosure_check(Z, report: WidthReport, atol: float = 1e-12) -> EnclosureResult:
    """Check ``|Z_j| <= ell_p(j)/2 + err`` for every sample and axis.

    Axes beyond the report (rank-deficient directions) have ``ell_p = 0``.
    The margin is ``|Z_j| - (ell_p/2 + err)``; positive means outside.
    """
    Z = Z.Z if isinstance(Z, Projection) else np.atleast_2d(np.asarray(Z, dtype=float))
    half = np.zeros(Z.shape[1])
    ell = report.column("ell_p")[: Z.shape[1]]
    half[: ell.size] = ell / 2.0
    margin = np.abs(Z) - (half + report.err)
    k = int(np.argmax(margin))
    i, j = divmod(k, Z.shape[1])
    bad = int(np.count_nonzero(margin > atol * max(1.0, float(np.max(np.abs(Z))))))
    return EnclosureResult(bad == 0, bad, float(margin[i, j]), i, j + 1)


def ellipsoid_membership(Z, spectrum: SingularSpectrum | Sequence, r: float) -> np.ndarray:
    """``sum_j (Z_j / (r sigma_j))^2`` per sample for pure polynomial clouds.

    Components beyond the rank must vanish; they are added as ``inf`` when they
    do not (above round-off).
    """
    Z = Z.Z if isinstance(Z, Projection) else np.atleast_2d(np.asarray(Z, dtype=float))
    sig = spectrum.floats() if isinstance(spectrum, SingularSpectrum) else np.asarray(spectrum, float)
    k = min(sig.size, Z.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.sum((Z[:, :k] / (r * sig[:k])) ** 2, axis=1)
    tail = Z[:, k:]
    if tail.size:
        scale = max(1.0, float(np.max(np.abs(Z))))
        q = np.where(np.all(np.abs(tail) <= 1e-12 * scale, axis=1), q, np.inf)
    return q


# -- persistence ----------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def write_cloud_csv(path, cloud: SampleCloud) -> None:
    """``sample_id,param_1..param_P,y_0..y_{G-1}`` plus ``<path>.json`` with the metadata."""
    P, G = cloud.params.shape[1], cloud.predictions.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id"] + [f"param_{i + 1}" for i in range(P)] + [f"y_{g}" for g in range(G)])
        for k in range(len(cloud)):
            w.writerow([k] + [_fmt(v) for v in cloud.params[k]] + [_fmt(v) for v in cloud.predictions[k]])
    meta = {
        "kind": cloud.kind,
        "param_names": list(cloud.param_names),
        "seed": cloud.seed,
        "accepted": cloud.accepted,
        "attempted": cloud.attempted,
        "acceptance_rate": cloud.acceptance_rate,
        "budget": {"C": cloud.budget.C, "R": cloud.budget.R, "N": cloud.budget.N},
        "prior": {nm: asdict(p) for nm, p in cloud.priors},
        "grid": (list(cloud.grid.points) if isinstance(cloud.grid, Grid1D)
                 else [list(n) for n in cloud.grid.nodes]),
        "grid_kind": cloud.grid.kind if isinstance(cloud.grid, Grid1D) else cloud.grid.arrangement,
        "options": cloud.options,
    }
    with open(os.fspath(path) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_cloud_csv(path) -> SampleCloud:
    with open(os.fspath(path) + ".json") as fh:
        meta = json.load(fh)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    P = sum(1 for h in header if h.startswith("param_"))
    if meta["grid_kind"].startswith("tensor"):
        pts = sorted({n[0] for n in meta["grid"]})
        g1 = Grid1D(tuple(pts), "equispaced")
        grid = Grid2D.tensor(g1)
        if [list(n) for n in grid.nodes] != meta["grid"]:
            grid = Grid2D(tuple(tuple(n) for n in meta["grid"]))
    elif isinstance(meta["grid"][0], list):
        grid = Grid2D(tuple(tuple(n) for n in meta["grid"]))
    else:
        grid = Grid1D(tuple(meta["grid"]), meta["grid_kind"])
    b = meta["budget"]
    return SampleCloud(meta["kind"], grid, tuple(meta["param_names"]), body[:, 1:1 + P], body[:, 1 + P:],
                       np.arange(body.shape[0]), int(meta["seed"]), int(meta["attempted"]),
                       TaylorBudget(b["C"], b["R"], int(b["N"])),
                       tuple((nm, ParamPrior(**p)) for nm, p in meta["prior"].items()),
                       meta["options"])


def write_projection_csv(path, Z) -> None:
    """``sample_id,z_1..z_G``."""
    Z = Z.Z if isinstance(Z, Projection) else np.asarray(Z, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id"] + [f"z_{j + 1}" for j in range(Z.shape[1])])
        for k, row in enumerate(Z):
            w.writerow([k] + [_fmt(v) for v in row])
