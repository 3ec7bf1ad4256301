"""Truncated power-series arithmetic along the last array axis.

An array of shape ``(..., L)`` holds the Taylor coefficients ``c_0..c_{L-1}``
of a function of one variable.  With ``L == 1`` the operations reduce to
ordinary elementwise arithmetic, which lets the same jet engines serve
one- and two-variable models.
"""

from __future__ import annotations

import functools
import math

import numpy as np


def const(value, L: int) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    out = np.zeros(v.shape + (L,))
    out[..., 0] = v
    return out


@functools.lru_cache(maxsize=None)
def _shift_index(L: int):
    # idx[k, m] = k - m where nonnegative, else L (points at a zero pad)
    k = np.arange(L)[:, None]
    m = np.arange(L)[None, :]
    return np.where(k >= m, k - m, L)


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cauchy product truncated to the common length."""
    L = a.shape[-1]
    if L == 1:
        return a * b
    pad = np.concatenate([b, np.zeros(b.shape[:-1] + (1,))], axis=-1)
    return np.einsum("...m,...km->...k", a, pad[..., _shift_index(L)])


def div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    L = a.shape[-1]
    if L == 1:
        return a / b
    a, b = np.broadcast_arrays(a, b)
    q = np.empty(a.shape)
    for k in range(L):
        acc = a[..., k].copy()
        if k:
            acc -= np.einsum("...m,...m->...", b[..., 1 : k + 1], q[..., k - 1 :: -1])
        q[..., k] = acc / b[..., 0]
    return q


def exp(a: np.ndarray) -> np.ndarray:
    L = a.shape[-1]
    e = np.empty(a.shape)
    e[..., 0] = np.exp(a[..., 0])
    for k in range(1, L):
        m = np.arange(1, k + 1)
        e[..., k] = np.einsum("...m,...m->...", a[..., 1 : k + 1] * m, e[..., k - 1 :: -1]) / k
    return e


def exp_decay(scale, energy, s0, L: int) -> np.ndarray:
    """Coefficients of ``scale * exp(-energy * s)`` about ``s0``."""
    scale = np.asarray(scale, dtype=float)
    energy = np.asarray(energy, dtype=float)
    s0 = np.asarray(s0, dtype=float)
    base = scale * np.exp(-energy * s0)
    k = np.arange(L)
    fact = np.array([math.factorial(int(i)) for i in k], dtype=float)
    return base[..., None] * (-energy[..., None]) ** k / fact


def evaluate(coeffs: np.ndarray, h) -> np.ndarray:
    """Horner evaluation along axis -1 at offset ``h`` (broadcast against leading axes)."""
    out = np.zeros(coeffs.shape[:-1])
    for k in range(coeffs.shape[-1] - 1, -1, -1):
        out = out * h + coeffs[..., k]
    return out
