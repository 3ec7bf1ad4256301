"""Extended-precision reals backed by MPFR (gmpy2).

Precision is specified in significant decimal digits throughout the package.
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .errors import DomainError

DEFAULT_PRECISION = 60
MIN_PRECISION = 15
GUARD_BITS = 8

ExtReal = type(mpfr(0))


def digits_to_bits(digits: int) -> int:
    return int(math.ceil(digits * math.log2(10))) + GUARD_BITS


def check_precision(digits: int) -> int:
    if int(digits) < MIN_PRECISION:
        raise DomainError(f"precision must be >= {MIN_PRECISION} digits, got {digits}")
    return int(digits)


@contextmanager
def working_precision(digits: int):
    """Context in which new MPFR results carry ``digits`` decimal digits."""
    check_precision(digits)
    with gmpy2.context(gmpy2.get_context(), precision=digits_to_bits(digits)):
        yield


def to_ext(a) -> np.ndarray:
    """Object array of MPFR values at the current working precision."""
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    flat_in = arr.reshape(-1)
    flat_out = out.reshape(-1)
    for k, v in enumerate(flat_in):
        flat_out[k] = mpfr(v) if not isinstance(v, ExtReal) else +v
    return out


def to_float(a) -> np.ndarray:
    arr = np.asarray(a, dtype=object)
    return np.array([float(v) for v in arr.reshape(-1)], dtype=float).reshape(arr.shape)


def fmt_ext(x, digits: int) -> str:
    """Scientific notation with ``digits`` significant digits."""
    if not isinstance(x, ExtReal):
        return format(float(x), f".{max(digits - 1, 0)}e")
    if gmpy2.is_zero(x):
        return format(0.0, f".{max(digits - 1, 0)}e")
    if not gmpy2.is_finite(x):
        return str(float(x))
    # gmpy2's __format__ mangles precisions above ~10 digits
    if digits < 2:
        return format(float(x), ".0e")
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    body = mant[0] + ("." + mant[1:] if len(mant) > 1 else "")
    e = exp - 1
    return f"{sign}{body}e{'-' if e < 0 else '+'}{abs(e):02d}"
