"""Hellman-style chain tables with a heavy-image table for inverting f: [N] -> [N].

A table walks ``x -> R(f(x))`` from evenly strided starts, where ``R`` is a
per-table rerandomizing hash, and stores ``endpoint -> start``.  Images of
largest in-degree are stored outright in the heavy table; chains stop as
soon as ``f(x)`` is heavy, so no chain step ever passes through one.

Two query paths share one contract: :meth:`Inverter.invert` is a plain
scalar walk, :meth:`Inverter.invert_batch` runs the same walk for many
targets in a compiled loop.  They agree on candidates and step counts.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels, hashing
from .hashing import PairwiseHash

# Per-invert f-evaluation cap is C_T * r * t; also bounds r * t <= C_T * T_budget.
C_T = 3

PARAMS_WORDS = 6
TABLE_HEADER_WORDS = 3  # rerandomizer (a, b) + entry count


class Mode(str, enum.Enum):
    GENERAL = "general"
    RANDOM = "random"


def iroot_ceil(x: int, k: int) -> int:
    """Smallest integer t >= 1 with t**k >= x."""
    if x <= 1:
        return 1
    t = max(1, int(round(x ** (1.0 / k))))
    while t ** k < x:
        t += 1
    while t > 1 and (t - 1) ** k >= x:
        t -= 1
    return t


def time_budget(n: int, delta: float) -> int:
    # round() absorbs float noise such as 4096**0.75 = 512.0000000000001
    return max(1, math.ceil(round(n ** delta, 9)))


@dataclass(frozen=True)
class InversionParams:
    N: int
    T_budget: int
    mode: Mode
    m: int
    t: int
    r: int
    q: int

    @classmethod
    def for_budget(cls, N: int, T_budget: int, mode: Mode | str) -> "InversionParams":
        mode = Mode(mode)
        t = iroot_ceil(T_budget, 3 if mode is Mode.GENERAL else 2)
        r = -(-T_budget // t)
        m = -(-N // (r * t))
        q = m * r if mode is Mode.GENERAL else 0
        return cls(N, T_budget, mode, m, t, r, q)

    @property
    def step_cap(self) -> int:
        return C_T * self.r * self.t

    @property
    def target_space(self) -> float:
        """(N^3/T)^(1/3) in general mode, (N^2/T)^(1/2) in random mode."""
        if self.mode is Mode.GENERAL:
            return (self.N ** 3 / self.T_budget) ** (1 / 3)
        return (self.N ** 2 / self.T_budget) ** 0.5


def derive_params(N: int, n: int, k: int, delta: float, mode: Mode | str) -> InversionParams:
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if N != n ** (k - 1):
        raise ValueError("N must equal n^(k-1)")
    return InversionParams.for_budget(N, time_budget(n, delta), mode)


def table_rng(seed: int, table: int) -> np.random.Generator:
    """Rerandomizer stream for one table; depends only on (seed, table)."""
    return np.random.default_rng([seed, table])


@dataclass(frozen=True, eq=False)
class ChainTable:
    rerandomizer: PairwiseHash
    ends: np.ndarray  # sorted
    starts: np.ndarray
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        ends = np.asarray(self.ends, dtype=np.uint64)
        starts = np.asarray(self.starts, dtype=np.uint64)
        if ends.size > 1 and np.any(ends[1:] < ends[:-1]):
            order = np.argsort(ends, kind="stable")
            ends, starts = ends[order], starts[order]
        object.__setattr__(self, "ends", ends)
        object.__setattr__(self, "starts", starts)

    def __len__(self):
        return len(self.ends)

    def get(self, end: int) -> int | None:
        if self._index is None:
            object.__setattr__(self, "_index", dict(zip(self.ends.tolist(), self.starts.tolist())))
        return self._index.get(end)


@dataclass(frozen=True, eq=False)
class Inverter:
    params: InversionParams
    tables: tuple[ChainTable, ...]
    heavy_keys: np.ndarray  # sorted images
    heavy_vals: np.ndarray  # one preimage each
    seed: int = 0
    _heavy: dict = field(default=None, repr=False, compare=False)

    @property
    def heavy(self) -> dict[int, int]:
        if self._heavy is None:
            object.__setattr__(self, "_heavy",
                               dict(zip(self.heavy_keys.tolist(), self.heavy_vals.tolist())))
        return self._heavy

    def invert(self, f: Callable, y: int) -> tuple[list[int], int]:
        """Candidate preimages of ``y`` and the number of f-evaluations spent.

        Every candidate satisfies ``f(x) == y``.  A heavy ``y`` is answered from
        the heavy table alone.  The walk stops once ``params.step_cap``
        evaluations are spent; the list may be empty even if ``y`` has preimages.
        """
        if not 0 <= y < self.params.N:
            raise ValueError(f"target {y} outside [0, {self.params.N})")
        heavy = self.heavy
        if y in heavy:
            return [heavy[y]], 0
        t, cap = self.params.t, self.params.step_cap
        steps = 0
        found: list[int] = []
        for table in self.tables:
            rr = table.rerandomizer
            z = rr(y)
            for j in range(t):
                start = table.get(z)
                if start is not None:
                    x = start
                    hit = False
                    for _ in range(t - j):
                        if steps >= cap:
                            return found, steps
                        v = f(x)
                        steps += 1
                        if v == y:
                            found.append(x)
                            hit = True
                            break
                        if v in heavy:
                            break
                        x = rr(v)
                    if hit:
                        break
                if j == t - 1:
                    break
                if steps >= cap:
                    return found, steps
                v = f(z)
                steps += 1
                if v in heavy:
                    break
                z = rr(v)
        return found, steps

    def invert_batch(self, f, ys: np.ndarray, sums: np.ndarray | None = None):
        """Run :meth:`invert` for many targets at once.

        Returns ``(witness, steps)``: per target, the first candidate in
        :meth:`invert` order (restricted to candidates whose g-sum equals
        ``sums[i]`` when ``sums`` is given), or -1; and the exact step count
        :meth:`invert` would report.  ``f`` must expose ``kernel_args()``
        (:class:`TableFunction` or ``SumFunction``); other callables fall
        back to the scalar walk.
        """
        ys = np.ascontiguousarray(ys, dtype=np.uint64)
        witness = np.full(ys.shape[0], -1, dtype=np.int64)
        steps = np.zeros(ys.shape[0], dtype=np.int64)
        if not hasattr(f, "kernel_args"):
            if sums is not None:
                raise TypeError("sum filtering needs a kernel-capable function")
            for i, y in enumerate(ys.tolist()):
                cands, steps[i] = self.invert(f, y)
                if cands:
                    witness[i] = cands[0]
            return witness, steps
        kind, table, lists, n, fa, fb = f.kernel_args()
        if sums is None:
            sums_arr, use_sums = np.zeros(1, dtype=np.uint64), False
        else:
            if kind != _kernels.SUM:
                raise TypeError("sum filtering needs a sum function")
            sums_arr, use_sums = np.ascontiguousarray(sums, dtype=np.uint64), True
        ta, tb, base, masks, ends, starts, hk, hv, hmask = self._flat_tables()
        _kernels.invert_lanes(
            ys, sums_arr, use_sums, kind, table, lists, np.uint64(n), np.uint64(fa),
            np.uint64(fb), np.uint64(self.params.N), hk, hv, hmask,
            ta, tb, base, masks, ends, starts, self.params.t, self.params.step_cap,
            witness, steps)
        return witness, steps

    def _flat_tables(self):
        flat = self.__dict__.get("_flat")
        if flat is None:
            ta = np.array([tb.rerandomizer.a for tb in self.tables], dtype=np.uint64)
            tb_ = np.array([tb.rerandomizer.b for tb in self.tables], dtype=np.uint64)
            offsets = np.zeros(len(self.tables) + 1, dtype=np.int64)
            offsets[1:] = np.cumsum([len(tb) for tb in self.tables])
            ends = np.concatenate([tb.ends for tb in self.tables] or [np.zeros(0, np.uint64)])
            starts = np.concatenate([tb.starts for tb in self.tables] or [np.zeros(0, np.uint64)])
            ends, starts, base, masks = _kernels.build_slots(
                ends.astype(np.uint64), starts.astype(np.uint64), offsets)
            hk, hv, _, hmask = _kernels.build_slots(
                self.heavy_keys.astype(np.uint64), self.heavy_vals.astype(np.uint64),
                np.array([0, len(self.heavy_keys)], dtype=np.int64))
            flat = (ta, tb_, base, masks, ends, starts, hk, hv, hmask[0])
            object.__setattr__(self, "_flat", flat)
        return flat

    def stored_words(self) -> int:
        return (PARAMS_WORDS + 1 + 2 * len(self.heavy_keys)
                + sum(TABLE_HEADER_WORDS + 2 * len(tb) for tb in self.tables))

    def to_words(self) -> list[int]:
        p = self.params
        words = [p.N, p.T_budget, p.m, p.t, p.r, p.q, len(self.heavy_keys)]
        for y, x in zip(self.heavy_keys.tolist(), self.heavy_vals.tolist()):
            words += (y, x)
        for tb in self.tables:
            words += (tb.rerandomizer.a, tb.rerandomizer.b, len(tb))
            for e, s in zip(tb.ends.tolist(), tb.starts.tolist()):
                words += (e, s)
        return words

    def same_structure(self, other: "Inverter") -> bool:
        return self.params == other.params and self.to_words() == other.to_words()


class TableFunction:
    """A function on [0, N) given by its value table."""

    def __init__(self, values):
        self.values = np.ascontiguousarray(values, dtype=np.uint64)

    def __len__(self):
        return len(self.values)

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return self.values[x.astype(np.int64)]
        return int(self.values[x])

    def kernel_args(self):
        return _kernels.TABLE, self.values, _NO_LISTS, 1, 0, 0


_NO_LISTS = np.zeros((1, 1), dtype=np.uint64)


def chain_starts(N: int, m: int, r: int = 1, table: int = 0, rotation: int = 0) -> np.ndarray:
    """Starts of one table: every r-th point of an even m*r-stride over [N].

    Table i takes the points i, i+r, i+2r, ... of the stride, so no two tables
    share a start; the whole stride is rotated by ``rotation`` (mod N).
    """
    total = m * r
    if total * N < 1 << 63:
        j = np.arange(m, dtype=np.int64) * r + table
        return ((j * N // total + rotation) % N).astype(np.uint64)
    return np.array([((j * r + table) * N // total + rotation) % N for j in range(m)],
                    dtype=np.uint64)


def heavy_images(f: Callable, N: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Images whose in-degree exceeds N // q, each with its smallest preimage.

    At most q images qualify, and every image left out has in-degree at
    most N // q.  Ties at the capacity boundary go to the smaller image.
    """
    if q <= 0 or N == 0:
        empty = np.zeros(0, dtype=np.uint64)
        return empty, empty
    fv = np.asarray(f(np.arange(N, dtype=np.uint64)), dtype=np.int64)
    counts = np.bincount(fv, minlength=N)
    heavy = np.flatnonzero(counts > N // q)
    if heavy.size > q:
        order = np.lexsort((heavy, -counts[heavy]))[:q]
        heavy = np.sort(heavy[order])
    is_heavy = np.zeros(N, dtype=bool)
    is_heavy[heavy] = True
    where = np.flatnonzero(is_heavy[fv])  # ascending, so first hit is the smallest
    keys, first = np.unique(fv[where], return_index=True)
    return keys.astype(np.uint64), where[first].astype(np.uint64)


def walk_chains(f: Callable, rr: PairwiseHash, starts: np.ndarray, t: int,
                is_heavy: np.ndarray) -> np.ndarray:
    """Where each chain from ``starts`` stops: after t steps or at a heavy f(x)."""
    if hasattr(f, "kernel_args"):
        kind, table, lists, n, fa, fb = f.kernel_args()
        return _kernels.walk_chains(kind, table, lists, np.uint64(n), np.uint64(fa),
                                    np.uint64(fb), np.uint64(rr.range_size), is_heavy,
                                    np.uint64(rr.a), np.uint64(rr.b), starts, t)
    x = starts.copy()
    active = np.arange(len(x))
    for _ in range(t):
        if active.size == 0:
            break
        v = np.asarray(f(x[active]), dtype=np.uint64)
        go = ~is_heavy[v.astype(np.int64)]
        active = active[go]
        x[active] = rr.eval_array(v[go])
    return x


def build(f: Callable, params: InversionParams, seed: int) -> Inverter:
    heavy_keys, heavy_vals = heavy_images(f, params.N, params.q)
    is_heavy = np.zeros(params.N, dtype=bool)
    is_heavy[heavy_keys.astype(np.int64)] = True
    tables = []
    for i in range(params.r):
        starts = chain_starts(params.N, params.m, params.r, i, seed % params.N)
        rr = hashing.sample(table_rng(seed, i), params.N)
        x = walk_chains(f, rr, starts, params.t, is_heavy)
        # a shared endpoint keeps the start of the lowest-numbered chain
        ends, first = np.unique(x, return_index=True)
        tables.append(ChainTable(rr, ends, starts[first]))
    return Inverter(params, tuple(tables), heavy_keys, heavy_vals, seed)


def empty_inverter(N: int) -> Inverter:
    params = InversionParams(N, 1, Mode.RANDOM, 0, 1, 0, 0)
    empty = np.zeros(0, dtype=np.uint64)
    return Inverter(params, (), empty, empty)
