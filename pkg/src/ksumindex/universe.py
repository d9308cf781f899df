"""Element arithmetic over Z_p with the Mersenne prime p = 2^61 - 1.

Elements are plain Python ints held in canonical form ``0 <= x < P``.
The ``*_array`` helpers are the numpy counterparts used on hot paths; they
operate on ``uint64`` arrays and never leave 64-bit arithmetic.
"""

from __future__ import annotations

import numpy as np

P = (1 << 61) - 1

_P64 = np.uint64(P)
_MASK30 = np.uint64((1 << 30) - 1)
_MASK31 = np.uint64((1 << 31) - 1)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_S61 = np.uint64(61)
_ONE = np.uint64(1)


def element(value: int) -> int:
    """Validate ``value`` as a canonical element and return it as an int."""
    value = int(value)
    if not 0 <= value < P:
        raise ValueError(f"element {value} outside [0, 2^61 - 1)")
    return value


def add(a: int, b: int) -> int:
    s = a + b
    if s >= P:
        s -= P
    return s


def _reduce(x: int) -> int:
    # x < 2^122
    r = (x >> 61) + (x & P)
    if r >= P:
        r -= P
    return r


def mul_mod(a: int, b: int) -> int:
    return _reduce(a * b)


def sample_element(rng: np.random.Generator) -> int:
    """Draw a uniform element; ``Generator.integers`` rejection-samples exactly."""
    return int(rng.integers(0, P))


def sample_elements(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.integers(0, P, size=size, dtype=np.uint64)


def add_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    s = a + b  # < 2^62, no overflow
    return np.where(s >= _P64, s - _P64, s)


def mul_mod_array(a: int | np.ndarray, x: int | np.ndarray) -> np.ndarray:
    """Elementwise ``a * x mod P`` for canonical inputs, in uint64 only.

    Splits both operands at bit 31 and folds the 2^61 and 2^62 carries
    using 2^61 = 1 (mod P).
    """
    a = np.asarray(a, dtype=np.uint64)
    x = np.asarray(x, dtype=np.uint64)
    a_hi, a_lo = a >> _S31, a & _MASK31
    x_hi, x_lo = x >> _S31, x & _MASK31
    mid = a_hi * x_lo + a_lo * x_hi  # < 2^62
    s = ((a_hi * x_hi) << _ONE) + (mid >> _S30) + ((mid & _MASK30) << _S31) + a_lo * x_lo
    s = (s & _P64) + (s >> _S61)
    return np.where(s >= _P64, s - _P64, s)
