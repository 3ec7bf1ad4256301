"""Example models, their exact Taylor jets, and the derivative-budget check.

Models are written in their own (native) variable: time for the exponentials
and SIR, substrate concentration for the reaction model.  The bounds live on
the theory interval ``t in [-1, 1]``, which is mapped affinely onto a native
``span`` (default ``(0, 1)``) so that ``t = -1`` is the start of the
experiment.  Derivatives taken in ``t`` pick up a factor ``h^k`` with
``h = (span[1] - span[0]) / 2``.

All jet engines work in a coefficient ring of truncated series in a second
variable ``s`` (length ``L``); one-variable models use ``L == 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import series
from .bounds import TaylorBudget
from .errors import DomainError, ModelEvaluationError, StepSizeUnderflow

__all__ = [
    "ExpSumModel",
    "ReactionModel",
    "SIRModel",
    "TaylorJet",
    "Activation2D",
    "ConstraintReport",
    "model_value",
    "model_jet",
    "sir_integrate",
    "constraint_check",
    "constraint_lhs",
    "model_value_2d",
    "model_jet_2d",
    "constraint_check_2d",
    "ExpSumFamily",
    "ReactionFamily",
    "SIRFamily",
    "FAMILIES",
    "family_for",
    "theory_to_native",
]

TAYLOR_ORDER = 15
STEP_TOL = 1e-14
MIN_STEP = 1e-12
CONSERVATION_TOL = 1e-10
DEFAULT_SPAN = (0.0, 1.0)

_FACT = np.array([math.factorial(k) for k in range(40)], dtype=float)


@dataclass(frozen=True)
class ExpSumModel:
    """``y(x) = sum_a A_a exp(-lambda_a x)``."""

    amplitudes: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(v) for v in self.amplitudes)
        r = tuple(float(v) for v in self.rates)
        if len(a) != len(r) or not a:
            raise DomainError("amplitudes and rates must be non-empty and of equal length")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "rates", r)


@dataclass(frozen=True)
class ReactionModel:
    """``y(x) = (theta1 x^2 + theta2 x) / (x^2 + theta3 x + theta4)``."""

    theta: tuple[float, float, float, float]

    def __post_init__(self):
        th = tuple(float(v) for v in self.theta)
        if len(th) != 4:
            raise DomainError("reaction model takes exactly four parameters")
        object.__setattr__(self, "theta", th)

    def check_denominator(self, xs) -> None:
        """Raise if the denominator vanishes at any of ``xs``."""
        _, _, t3, t4 = self.theta
        xs = np.asarray(xs, dtype=float)
        den = xs * xs + t3 * xs + t4
        if np.any(np.abs(den) <= 1e-12):
            raise ModelEvaluationError("reaction denominator vanishes on the grid")


@dataclass(frozen=True)
class SIRModel:
    """Infected population ``I(x)`` of the SIR equations, started at ``t_init``."""

    beta: float
    gamma: float
    n_tot: float
    i0: float
    r0: float = 0.0
    t_init: float = 0.0

    def __post_init__(self):
        if not self.n_tot > 0:
            raise DomainError("population must be positive")
        if self.i0 < 0 or self.r0 < 0 or self.i0 + self.r0 > self.n_tot:
            raise DomainError("need 0 <= I0, R0 and I0 + R0 <= N_tot")

    @property
    def s0(self) -> float:
        return self.n_tot - self.i0 - self.r0


@dataclass(frozen=True)
class TaylorJet:
    """Scaled derivatives ``a_k = y^(k)(center) / k!``."""

    center: float
    coeffs: tuple[float, ...]

    def __call__(self, x: float) -> float:
        return float(series.evaluate(np.array(self.coeffs), x - self.center))


@dataclass(frozen=True)
class Activation2D:
    """A base model whose rates are scaled by ``exp(-E s)``.

    ``energies`` has one entry per rate: one per exponential term, four for
    the reaction parameters, ``(E_beta, E_gamma)`` for SIR.
    """

    base: ExpSumModel | ReactionModel | SIRModel
    energies: tuple[float, ...]

    def __post_init__(self):
        e = tuple(float(v) for v in self.energies)
        need = {ExpSumModel: len(getattr(self.base, "rates", ())), ReactionModel: 4, SIRModel: 2}
        n = need[type(self.base)]
        if len(e) != n:
            raise DomainError(f"{type(self.base).__name__} needs {n} activation energies, got {len(e)}")
        if not all(math.isfinite(v) for v in e):
            raise DomainError("activation energies must be finite")
        object.__setattr__(self, "energies", e)


@dataclass(frozen=True)
class ConstraintReport:
    passed: bool
    max_ratio: float
    worst_t: float
    ratios: np.ndarray = field(repr=False)

    def __bool__(self):
        return self.passed


def theory_to_native(t, span=DEFAULT_SPAN):
    lo, hi = span
    return lo + (np.asarray(t, dtype=float) + 1.0) * 0.5 * (hi - lo)


# -- jet engines ------------------------------------------------------------------


def _expsum_engine(A, mu, x, K):
    """Jets of ``sum_a A_a exp(-mu_a x)``: A (B,P), mu (B,P,L), x (T,) -> (B,T,K+1,L)."""
    L = mu.shape[-1]
    x = np.asarray(x, dtype=float)
    E = series.exp(-x[None, None, :, None] * mu[:, :, None, :])
    AE = A[:, :, None, None] * E
    neg = -mu[:, :, None, :]
    out = np.empty((A.shape[0], x.size, K + 1, L))
    pw = None
    for j in range(K + 1):
        term = AE if pw is None else series.mul(pw, AE)
        out[:, :, j, :] = term.sum(axis=1) / _FACT[j]
        pw = neg if pw is None else series.mul(pw, neg)
    return out


def _reaction_engine(th, x, K):
    """Quotient-series jets: th (B,4,L), x (T,) -> jets (B,T,K+1,L), singular mask (B,T)."""
    x0 = np.asarray(x, dtype=float)[None, :, None]
    t1, t2, t3, t4 = (th[:, i, None, :] for i in range(4))
    L = th.shape[-1]
    one = series.const(np.ones(1), L)[None]
    num = [t1 * x0 * x0 + t2 * x0, 2.0 * t1 * x0 + t2, t1 * np.ones_like(x0)]
    d0 = x0 * x0 * one + t3 * x0 + t4
    d1 = 2.0 * x0 * one + t3
    singular = np.abs(d0[..., 0]) <= 1e-12
    d0 = np.where(singular[..., None], np.nan, d0)
    B, T = th.shape[0], x0.shape[1]
    out = np.empty((B, T, K + 1, L))
    for k in range(K + 1):
        acc = num[k] * np.ones((B, T, L)) if k < 3 else np.zeros((B, T, L))
        if k >= 1:
            acc = acc - series.mul(d1 * np.ones((B, T, L)), out[:, :, k - 1, :])
        if k >= 2:
            acc = acc - out[:, :, k - 2, :]
        out[:, :, k, :] = series.div(acc, d0 * np.ones((B, T, L)))
    return out, singular


def _sir_coeffs(b, g, state, order):
    """Taylor coefficients of (S, I, R) to ``order``: b,g (B,L), state (B,3,L) -> (B,3,order+1,L)."""
    B, _, L = state.shape
    S = np.zeros((B, order + 1, L))
    I = np.zeros((B, order + 1, L))
    Rr = np.zeros((B, order + 1, L))
    S[:, 0], I[:, 0], Rr[:, 0] = state[:, 0], state[:, 1], state[:, 2]
    for k in range(order):
        conv = series.mul(I[:, : k + 1], S[:, k::-1]).sum(axis=1)
        inf = series.mul(b, conv)
        rec = series.mul(g, I[:, k])
        S[:, k + 1] = -inf / (k + 1)
        I[:, k + 1] = (inf - rec) / (k + 1)
        Rr[:, k + 1] = rec / (k + 1)
    return np.stack([S, I, Rr], 1)


def _sir_engine(b, g, state0, x_init, xs, K, reject=None, on_underflow="raise",
                order=TAYLOR_ORDER, tol=STEP_TOL, h_min=MIN_STEP):
    """Integrate SIR by Taylor stepping through ascending ``xs``; jets of I at each.

    Returns ``(jets (B,T,K+1,L), states (B,T,3,L), alive (B,))``.  ``reject``
    maps ``(jets_I (b,K+1,L), point_index, rows)`` to a drop mask; dropped rows
    stop integrating and are reported as not alive.
    """
    B, _, L = state0.shape
    xs = np.asarray(xs, dtype=float)
    T = xs.size
    jets = np.full((B, T, K + 1, L), np.nan)
    states = np.full((B, T, 3, L), np.nan)
    alive = np.ones(B, dtype=bool)
    rows = np.arange(B)
    cur = state0.astype(float).copy()
    bb, gg = b.astype(float), g.astype(float)
    n_tot = cur[:, :, 0].sum(axis=1)
    xcur = float(x_init)
    for ti, xt in enumerate(xs):
        if xt < xcur - 1e-15:
            raise DomainError("output points must be ascending and not precede the initial time")
        while xt - xcur > 0 and rows.size:
            remaining = xt - xcur
            coeffs = _sir_coeffs(bb, gg, cur, order)
            scale = np.max(np.abs(cur), axis=(1, 2))
            last = np.max(np.abs(coeffs[:, :, order, :]), axis=(1, 2))
            h = remaining
            ok = last * h ** order < tol * np.maximum(scale, 1e-300)
            while not ok.all():
                h *= 0.5
                if h < h_min:
                    if on_underflow == "raise":
                        raise StepSizeUnderflow(f"Taylor step fell below {h_min:g} at x={xcur:g}")
                    keep = last * h_min ** order < tol * np.maximum(scale, 1e-300)
                    alive[rows[~keep]] = False
                    rows, cur, bb, gg, coeffs = rows[keep], cur[keep], bb[keep], gg[keep], coeffs[keep]
                    scale, last = scale[keep], last[keep]
                    n_tot = n_tot[keep]
                    h = h_min
                    if not rows.size:
                        break
                ok = last * h ** order < tol * np.maximum(scale, 1e-300)
            if not rows.size:
                break
            hp = h ** np.arange(order + 1)
            cur = np.einsum("bckl,k->bcl", coeffs, hp)
            xcur = xcur + h if h < remaining else xt
            total = cur[:, :, 0].sum(axis=1)
            drift = np.abs(total - n_tot) > CONSERVATION_TOL * np.abs(n_tot)
            if drift.any():
                if on_underflow == "raise":
                    raise ModelEvaluationError("SIR conservation drifted beyond tolerance")
                alive[rows[drift]] = False
                keep = ~drift
                rows, cur, bb, gg, n_tot = rows[keep], cur[keep], bb[keep], gg[keep], n_tot[keep]
        xcur = max(xcur, xt)
        if not rows.size:
            break
        jet_i = _sir_coeffs(bb, gg, cur, K)[:, 1]
        jets[rows, ti] = jet_i
        states[rows, ti] = cur
        if reject is not None:
            drop = reject(jet_i, ti, rows)
            if drop.any():
                alive[rows[drop]] = False
                keep = ~drop
                rows, cur, bb, gg, n_tot = rows[keep], cur[keep], bb[keep], gg[keep], n_tot[keep]
    return jets, states, alive


def _sir_state0(model: SIRModel, L=1):
    st = np.zeros((1, 3, L))
    st[0, :, 0] = [model.s0, model.i0, model.r0]
    return st


# -- single-model API ----------------------------------------------------------------


def _jets_1d(model, xs, K):
    """Native-variable jets (T, K+1) of a one-variable model at ascending ``xs``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if isinstance(model, ExpSumModel):
        A = np.array(model.amplitudes)[None]
        mu = np.array(model.rates)[None, :, None]
        return _expsum_engine(A, mu, xs, K)[0, :, :, 0]
    if isinstance(model, ReactionModel):
        model.check_denominator(xs)
        th = np.array(model.theta)[None, :, None]
        return _reaction_engine(th, xs, K)[0][0, :, :, 0]
    if isinstance(model, SIRModel):
        if np.any(np.diff(xs) < 0):
            order = np.argsort(xs, kind="stable")
            out = np.empty((xs.size, K + 1))
            out[order] = _jets_1d(model, xs[order], K)
            return out
        b = np.array([[model.beta / model.n_tot]])
        g = np.array([[model.gamma]])
        jets, _, _ = _sir_engine(b, g, _sir_state0(model), model.t_init, xs, K)
        return jets[0, :, :, 0]
    raise DomainError(f"unsupported model {type(model).__name__}")


def model_value(model, t):
    """Prediction at native ``t`` (scalar or array)."""
    scalar = np.ndim(t) == 0
    if isinstance(model, ReactionModel):
        t1, t2, t3, t4 = model.theta
        x = np.asarray(t, dtype=float)
        model.check_denominator(x)
        out = (t1 * x * x + t2 * x) / (x * x + t3 * x + t4)
        return float(out) if scalar else out
    vals = _jets_1d(model, t, 0)[:, 0]
    return float(vals[0]) if scalar else vals


def model_jet(model, t0: float, K: int) -> TaylorJet:
    if K < 0:
        raise DomainError("jet order must be >= 0")
    if isinstance(model, SIRModel) and t0 < model.t_init:
        raise DomainError("SIR jets are defined from the initial time onward")
    coeffs = _jets_1d(model, [t0], K)[0]
    return TaylorJet(float(t0), tuple(float(c) for c in coeffs))


def sir_integrate(model: SIRModel, times: Sequence[float]) -> list[tuple[float, float, float]]:
    """``(S, I, R)`` at each time, ascending and starting no earlier than ``t_init``."""
    times = np.asarray(times, dtype=float)
    if times.size and (np.any(np.diff(times) < 0) or times[0] < model.t_init):
        raise DomainError("times must be ascending and start at or after the initial time")
    b = np.array([[model.beta / model.n_tot]])
    g = np.array([[model.gamma]])
    _, states, _ = _sir_engine(b, g, _sir_state0(model), model.t_init, times, 0)
    return [tuple(float(v) for v in states[0, k, :, 0]) for k in range(times.size)]


def constraint_lhs(jets, R: float, h: float = 1.0, order: int | None = None) -> np.ndarray:
    """``sum_k (R^k h^k a_k)^2`` over the last axis of native jets ``a_k``."""
    jets = np.asarray(jets, dtype=float)
    K = jets.shape[-1] - 1 if order is None else order
    w = (R * h) ** np.arange(K + 1)
    return np.sum((jets[..., : K + 1] * w) ** 2, axis=-1)


def _orders(budget: TaylorBudget, include_order_n: bool) -> int:
    return budget.N if include_order_n else budget.N - 1


def constraint_check(model, budget: TaylorBudget, check_grid: int = 201,
                     span=DEFAULT_SPAN, include_order_n: bool = False,
                     extra_t: Sequence[float] = ()) -> ConstraintReport:
    """Check ``sum_k (R^k/k! d^k y/dt^k)^2 < C^2 N`` on a grid of theory points.

    The sum runs over ``k = 0..N-1`` (through ``k = N`` with
    ``include_order_n``).  ``extra_t`` adds points such as the sample nodes.
    """
    if check_grid < 2:
        raise DomainError("check_grid must be >= 2")
    t = np.union1d(np.linspace(-1.0, 1.0, check_grid), np.asarray(extra_t, dtype=float))
    xs = theory_to_native(t, span)
    K = _orders(budget, include_order_n)
    h = 0.5 * (span[1] - span[0])
    jets = _jets_1d(model, xs, K)
    ratios = constraint_lhs(jets, budget.R, h) / (budget.C ** 2 * budget.N)
    ratios = np.where(np.isfinite(ratios), ratios, np.inf)
    k = int(np.argmax(ratios))
    return ConstraintReport(bool(ratios[k] < 1.0), float(ratios[k]), float(t[k]), ratios)


# -- two-variable API -----------------------------------------------------------------


def _activation_family(ext: Activation2D):
    fam = family_for(ext.base)
    return fam, fam.params_of(ext.base), np.array(ext.energies, dtype=float)


def model_jet_2d(ext: Activation2D, t0: float, s0: float, K: int) -> np.ndarray:
    """Native mixed Taylor coefficients ``a_jk``, shape ``(K+1, K+1)`` (t order, s order)."""
    fam, params, energies = _activation_family(ext)
    jets, ok = fam.ring_jets(params[None], energies[None], np.array([t0]), np.array([s0]), K, K + 1,
                             on_underflow="raise")
    if not ok.all():
        raise ModelEvaluationError("model could not be evaluated at the requested point")
    return jets[0, 0, 0]


def model_value_2d(ext: Activation2D, t: float, s: float) -> float:
    return float(model_jet_2d(ext, t, s, 0)[0, 0])


def constraint_lhs_2d(jets, R: float, hx: float = 1.0, hs: float = 1.0, order: int | None = None):
    """``sum_{j+k<=order} (R^{j+k} hx^j hs^k a_jk)^2`` over the last two axes."""
    jets = np.asarray(jets, dtype=float)
    K = jets.shape[-2] - 1 if order is None else order
    j = np.arange(jets.shape[-2])[:, None]
    k = np.arange(jets.shape[-1])[None, :]
    w = (R ** (j + k)) * hx ** j * hs ** k
    mask = (j + k) <= K
    return np.sum(np.where(mask, (jets * w) ** 2, 0.0), axis=(-2, -1))


def constraint_check_2d(ext: Activation2D, budget: TaylorBudget, check_grid: int = 21,
                        span=DEFAULT_SPAN, span_s=DEFAULT_SPAN) -> ConstraintReport:
    """Check the mixed-derivative budget ``< C^2 n`` on a ``check_grid^2`` tensor grid."""
    if check_grid < 2:
        raise DomainError("check_grid must be >= 2")
    fam, params, energies = _activation_family(ext)
    g = np.linspace(-1.0, 1.0, check_grid)
    xs, ss = theory_to_native(g, span), theory_to_native(g, span_s)
    K = budget.N - 1
    jets, ok = fam.ring_jets(params[None], energies[None], xs, ss, K, K + 1, on_underflow="raise")
    hx, hs = 0.5 * (span[1] - span[0]), 0.5 * (span_s[1] - span_s[0])
    n = budget.N * (budget.N + 1) / 2.0
    ratios = constraint_lhs_2d(jets[0], budget.R, hx, hs, K) / (budget.C ** 2 * n)  # (S, T)
    ratios = np.where(np.isfinite(ratios), ratios, np.inf).T  # (T, S), t-major
    flat = ratios.reshape(-1)
    k = int(np.argmax(flat))
    return ConstraintReport(bool(flat[k] < 1.0), float(flat[k]), float(g[k // check_grid]), flat)


# -- vectorised families used by the sampler --------------------------------------------


class _Family:
    """Parameter layout plus batched jet evaluation for one model class."""

    kind: str = ""
    n_energies: int = 0

    def param_names(self) -> list[str]:
        raise NotImplementedError

    def energy_names(self) -> list[str]:
        raise NotImplementedError

    def build(self, params, energies=None):
        raise NotImplementedError

    def params_of(self, model) -> np.ndarray:
        raise NotImplementedError

    def ring_jets(self, params, energies, xs, ss, K, L, reject=None, on_underflow="reject"):
        """Jets at native ``xs`` for each ``s0`` in ``ss``: (B, S, T, K+1, L) and ok mask (B,).

        ``energies`` may be ``None`` for one-variable evaluation (then ``ss`` is
        ignored and ``S == 1``, ``L == 1``).
        """
        raise NotImplementedError

    def jets(self, params, xs, K, reject=None):
        """One-variable jets (B, T, K+1) and ok mask (B,)."""
        j, ok = self.ring_jets(params, None, xs, np.zeros(1), K, 1, reject=reject)
        return j[:, 0, :, :, 0], ok


def _flatten_s(params, energies, ss):
    """Repeat rows for each s0: returns (params (B*S,P), energies (B*S,E), s0 (B*S,))."""
    B, S = params.shape[0], len(ss)
    p = np.repeat(params, S, axis=0)
    e = np.repeat(energies, S, axis=0)
    s0 = np.tile(np.asarray(ss, dtype=float), B)
    return p, e, s0


@dataclass
class ExpSumFamily(_Family):
    n_terms: int = 11
    kind: str = "expsum"

    @property
    def n_energies(self):
        return self.n_terms

    def param_names(self):
        return [f"A_{a}" for a in range(self.n_terms)] + [f"lambda_{a}" for a in range(self.n_terms)]

    def energy_names(self):
        return [f"E_{a}" for a in range(self.n_terms)]

    def build(self, params, energies=None):
        m = ExpSumModel(tuple(params[: self.n_terms]), tuple(params[self.n_terms:]))
        return m if energies is None else Activation2D(m, tuple(energies))

    def params_of(self, model):
        return np.array(model.amplitudes + model.rates, dtype=float)

    def ring_jets(self, params, energies, xs, ss, K, L, reject=None, on_underflow="reject"):
        params = np.asarray(params, dtype=float)
        n = self.n_terms
        B = params.shape[0]
        if energies is None:
            out = _expsum_engine(params[:, :n], params[:, n:, None], xs, K)
            return out[:, None], np.all(np.isfinite(out), axis=(1, 2, 3))
        p, e, s0 = _flatten_s(params, np.asarray(energies, dtype=float), ss)
        mu = series.exp_decay(p[:, n:], e, s0[:, None], L)
        out = _expsum_engine(p[:, :n], mu, xs, K).reshape(B, len(ss), len(xs), K + 1, L)
        return out, np.all(np.isfinite(out), axis=(1, 2, 3, 4))


@dataclass
class ReactionFamily(_Family):
    kind: str = "reaction"
    n_energies: int = 4

    def param_names(self):
        return ["theta_1", "theta_2", "theta_3", "theta_4"]

    def energy_names(self):
        return ["E_1", "E_2", "E_3", "E_4"]

    def build(self, params, energies=None):
        m = ReactionModel(tuple(params))
        return m if energies is None else Activation2D(m, tuple(energies))

    def params_of(self, model):
        return np.array(model.theta, dtype=float)

    def ring_jets(self, params, energies, xs, ss, K, L, reject=None, on_underflow="reject"):
        params = np.asarray(params, dtype=float)
        B = params.shape[0]
        if energies is None:
            out, sing = _reaction_engine(params[:, :, None], xs, K)
            if on_underflow == "raise" and sing.any():
                raise ModelEvaluationError("reaction denominator vanishes")
            ok = ~sing.any(axis=1) & np.all(np.isfinite(out), axis=(1, 2, 3))
            return out[:, None], ok
        p, e, s0 = _flatten_s(params, np.asarray(energies, dtype=float), ss)
        th = series.exp_decay(p, e, s0[:, None], L)
        out, sing = _reaction_engine(th, xs, K)
        if on_underflow == "raise" and sing.any():
            raise ModelEvaluationError("reaction denominator vanishes")
        out = out.reshape(B, len(ss), len(xs), K + 1, L)
        ok = ~sing.reshape(B, -1).any(axis=1) & np.all(np.isfinite(out), axis=(1, 2, 3, 4))
        return out, ok


@dataclass
class SIRFamily(_Family):
    """Parameters ``(beta / N_tot, gamma, I0)``; population and ``R0`` fixed."""

    n_tot: float = 10.0
    r0: float = 0.0
    t_init: float = 0.0
    kind: str = "sir"
    n_energies: int = 2

    def param_names(self):
        return ["beta_over_n", "gamma", "i0"]

    def energy_names(self):
        return ["E_beta", "E_gamma"]

    def build(self, params, energies=None):
        b, g, i0 = (float(v) for v in params)
        m = SIRModel(b * self.n_tot, g, self.n_tot, i0, self.r0, self.t_init)
        return m if energies is None else Activation2D(m, tuple(energies))

    def params_of(self, model):
        return np.array([model.beta / model.n_tot, model.gamma, model.i0], dtype=float)

    def ring_jets(self, params, energies, xs, ss, K, L, reject=None, on_underflow="reject"):
        params = np.asarray(params, dtype=float)
        B = params.shape[0]
        if energies is None:
            p, S = params, 1
            b = p[:, 0:1]
            g = p[:, 1:2]
        else:
            p, e, s0 = _flatten_s(params, np.asarray(energies, dtype=float), ss)
            S = len(ss)
            b = series.exp_decay(p[:, 0], e[:, 0], s0, L)
            g = series.exp_decay(p[:, 1], e[:, 1], s0, L)
        rows = p.shape[0]
        if np.any(p[:, 2] < 0) or np.any(p[:, 2] + self.r0 > self.n_tot):
            raise DomainError("need 0 <= I0 and I0 + R0 <= N_tot")
        st = np.zeros((rows, 3, L))
        st[:, 0, 0] = self.n_tot - p[:, 2] - self.r0
        st[:, 1, 0] = p[:, 2]
        st[:, 2, 0] = self.r0
        xs = np.asarray(xs, dtype=float)
        sub_reject = None
        if reject is not None and S == 1:
            sub_reject = reject
        jets, _, alive = _sir_engine(b, g, st, self.t_init, xs, K, reject=sub_reject,
                                     on_underflow=on_underflow)
        jets = jets.reshape(B, S, xs.size, K + 1, L)
        ok = alive.reshape(B, S).all(axis=1) & np.all(np.isfinite(jets), axis=(1, 2, 3, 4))
        return jets, ok


FAMILIES: dict[str, Callable[..., _Family]] = {
    "expsum": ExpSumFamily,
    "reaction": ReactionFamily,
    "sir": SIRFamily,
}


def family_for(model) -> _Family:
    if isinstance(model, ExpSumModel):
        return ExpSumFamily(len(model.amplitudes))
    if isinstance(model, ReactionModel):
        return ReactionFamily()
    if isinstance(model, SIRModel):
        return SIRFamily(model.n_tot, model.r0, model.t_init)
    raise DomainError(f"unsupported model {type(model).__name__}")
