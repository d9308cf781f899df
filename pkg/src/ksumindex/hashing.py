"""The hash family x -> ((a*x + b) mod P) mod M over the 61-bit Mersenne field."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .universe import P, add_array, mul_mod, mul_mod_array


@dataclass(frozen=True)
class PairwiseHash:
    a: int
    b: int
    range_size: int

    def __post_init__(self):
        if not 1 <= self.a < P:
            raise ValueError("multiplier must lie in [1, P)")
        if not 0 <= self.b < P:
            raise ValueError("offset must lie in [0, P)")
        if not 1 <= self.range_size <= P:
            raise ValueError("range size must lie in [1, P]")

    def __call__(self, x: int) -> int:
        return ((mul_mod(self.a, x) + self.b) % P) % self.range_size

    def eval_array(self, x: np.ndarray) -> np.ndarray:
        y = add_array(mul_mod_array(self.a, x), np.uint64(self.b))
        return y % np.uint64(self.range_size)


def eval(h: PairwiseHash, x: int) -> int:  # noqa: A001 - mirrors the operation name
    return h(x)


def sample(rng: np.random.Generator, range_size: int) -> PairwiseHash:
    if not 1 <= range_size <= P:
        raise ValueError(f"range size {range_size} outside [1, P]")
    a = int(rng.integers(1, P))
    b = int(rng.integers(0, P))
    return PairwiseHash(a, b, range_size)


def collision_rate(x: int, y: int, range_size: int, trials: int,
                   rng: np.random.Generator) -> float:
    """Fraction of ``trials`` freshly drawn hashes that send x and y to one bucket."""
    if x == y:
        raise ValueError("collision rate needs distinct inputs")
    if trials < 1:
        raise ValueError("trials must be positive")
    if not 1 <= range_size <= P:
        raise ValueError(f"range size {range_size} outside [1, P]")
    a = rng.integers(1, P, size=trials, dtype=np.uint64)
    b = rng.integers(0, P, size=trials, dtype=np.uint64)
    m = np.uint64(range_size)
    hx = add_array(mul_mod_array(a, x), b) % m
    hy = add_array(mul_mod_array(a, y), b) % m
    return float(np.count_nonzero(hx == hy)) / trials
