"""Instances, the tuple/code bijection, the sum function g and the composed f = h o g.

An instance holds k-1 lists of n elements each.  Index tuples
``(i_1, ..., i_{k-1})`` are flattened to integer codes in ``[0, N)`` with
``N = n**(k-1)`` (mixed radix, least-significant index first), so every
function handed to the inverter acts on ``[0, N)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .hashing import PairwiseHash
from .universe import P, add, add_array, element, sample_elements

SUM_KIND = 1  # matches _kernels.SUM
_NO_TABLE = np.zeros(1, dtype=np.uint64)

# N must be a valid hash range (<= P) and a valid int64 code bound.
MAX_DOMAIN = P


class InstanceFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class Instance:
    k: int
    n: int
    lists: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if len(self.lists) != self.k - 1:
            raise ValueError(f"expected {self.k - 1} lists, got {len(self.lists)}")
        if self.n ** (self.k - 1) > MAX_DOMAIN:
            raise ValueError("n^(k-1) does not fit the code domain")
        frozen = []
        for lst in self.lists:
            arr = np.array([element(v) for v in lst] if not isinstance(lst, np.ndarray) else lst,
                           dtype=np.uint64)
            if arr.shape != (self.n,):
                raise ValueError(f"every list must hold exactly n={self.n} elements")
            if arr.size and int(arr.max()) >= P:
                raise ValueError("list element outside [0, P)")
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "lists", tuple(frozen))

    @classmethod
    def from_lists(cls, lists: Sequence[Sequence[int]]) -> "Instance":
        lists = [list(lst) for lst in lists]
        return cls(k=len(lists) + 1, n=len(lists[0]), lists=tuple(lists))

    @classmethod
    def random(cls, n: int, k: int, rng: np.random.Generator) -> "Instance":
        lists = tuple(sample_elements(rng, n) for _ in range(k - 1))
        return cls(k=k, n=n, lists=lists)

    @property
    def N(self) -> int:  # noqa: N802
        return self.n ** (self.k - 1)

    @property
    def stacked(self) -> np.ndarray:
        """The lists as one (k-1, n) array."""
        arr = self.__dict__.get("_stacked")
        if arr is None:
            arr = np.ascontiguousarray(np.stack(self.lists))
            object.__setattr__(self, "_stacked", arr)
        return arr

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.k, self.n) == (other.k, other.n) and all(
            np.array_equal(a, b) for a, b in zip(self.lists, other.lists))

    def __hash__(self):
        return hash((self.k, self.n, tuple(a.tobytes() for a in self.lists)))


def encode(t: Sequence[int], n: int) -> int:
    code = 0
    for j in reversed(range(len(t))):
        if not 0 <= t[j] < n:
            raise ValueError(f"index {t[j]} outside [0, {n})")
        code = code * n + t[j]
    return code


def decode(code: int, n: int, k: int) -> tuple[int, ...]:
    if not 0 <= code < n ** (k - 1):
        raise ValueError(f"code {code} outside [0, {n}^{k - 1})")
    out = []
    for _ in range(k - 1):
        code, i = divmod(code, n)
        out.append(i)
    return tuple(out)


def eval_g(inst: Instance, t: Sequence[int]) -> int:
    total = 0
    for lst, i in zip(inst.lists, t):
        total = add(total, int(lst[i]))
    return total


def g_array(inst: Instance, codes: np.ndarray) -> np.ndarray:
    """Vectorized g over flat codes."""
    rem = np.asarray(codes, dtype=np.uint64)
    n = np.uint64(inst.n)
    total = np.zeros(rem.shape, dtype=np.uint64)
    for lst in inst.lists:
        total = add_array(total, lst[rem % n])
        rem = rem // n
    return total


def all_sums(inst: Instance) -> np.ndarray:
    """g at every code, indexed by code."""
    return g_array(inst, np.arange(inst.N, dtype=np.uint64))


class SumFunction:
    """f(code) = h(g(decode(code))), callable on ints or uint64 arrays."""

    def __init__(self, inst: Instance, h: PairwiseHash):
        if h.range_size != inst.N:
            raise ValueError("hash range must equal N")
        self.inst = inst
        self.h = h

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return self.h.eval_array(g_array(self.inst, x))
        return self.h(eval_g(self.inst, decode(int(x), self.inst.n, self.inst.k)))

    def kernel_args(self):
        return SUM_KIND, _NO_TABLE, self.inst.stacked, self.inst.n, self.h.a, self.h.b


def eval_f(inst: Instance, h: PairwiseHash, code: int) -> int:
    if h.range_size != inst.N:
        raise ValueError("hash range must equal N")
    return h(eval_g(inst, decode(code, inst.n, inst.k)))


@dataclass(frozen=True)
class Sumset:
    """Distinct sums (sorted), the smallest witness code of each, and multiplicities."""

    inst: Instance
    sums: np.ndarray
    witness_codes: np.ndarray
    counts: np.ndarray

    def __len__(self):
        return len(self.sums)

    def witness(self, z: int) -> tuple[int, ...] | None:
        i = int(np.searchsorted(self.sums, np.uint64(z)))
        if i < len(self.sums) and int(self.sums[i]) == z:
            return decode(int(self.witness_codes[i]), self.inst.n, self.inst.k)
        return None

    def contains(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.uint64)
        pos = np.searchsorted(self.sums, values).clip(max=max(len(self.sums) - 1, 0))
        return self.sums[pos] == values

    def as_dict(self) -> dict[int, tuple[tuple[int, ...], int]]:
        return {int(z): (decode(int(c), self.inst.n, self.inst.k), int(m))
                for z, c, m in zip(self.sums, self.witness_codes, self.counts)}


def enumerate_sumset(inst: Instance) -> Sumset:
    sums, first, counts = np.unique(all_sums(inst), return_index=True, return_counts=True)
    return Sumset(inst, sums, first.astype(np.uint64), counts)


def oracle_query(inst: Instance, c: int) -> tuple[int, ...] | None:
    """Reference answer by a full scan of all N sums."""
    hits = np.flatnonzero(all_sums(inst) == np.uint64(c))
    if hits.size == 0:
        return None
    return decode(int(hits[0]), inst.n, inst.k)


def format_instance(inst: Instance) -> str:
    lines = [f"{inst.n} {inst.k} {P}"]
    lines += [" ".join(str(int(v)) for v in lst) for lst in inst.lists]
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    lines = text.splitlines()
    if not lines:
        raise InstanceFormatError("empty instance", 1)
    try:
        n, k, p = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise InstanceFormatError("expected 'n k p'", 1) from None
    if p != P:
        raise InstanceFormatError(f"unsupported modulus {p}; only 2^61-1", 1)
    if n < 1 or k < 2:
        raise InstanceFormatError("need n >= 1 and k >= 2", 1)
    if len(lines) < k:
        raise InstanceFormatError(f"expected {k - 1} lists, found {len(lines) - 1}", len(lines))
    lists = []
    for lineno in range(2, k + 1):
        toks = lines[lineno - 1].split()
        if len(toks) != n:
            raise InstanceFormatError(f"expected {n} values, found {len(toks)}", lineno)
        try:
            vals = [int(tok) for tok in toks]
        except ValueError:
            raise InstanceFormatError("non-integer value", lineno) from None
        if any(not 0 <= v < P for v in vals):
            raise InstanceFormatError("value outside [0, p)", lineno)
        lists.append(vals)
    if any(line.strip() for line in lines[k:]):
        raise InstanceFormatError("unexpected trailing content", k + 1)
    try:
        return Instance(k=k, n=n, lists=tuple(lists))
    except ValueError as exc:
        raise InstanceFormatError(str(exc), 1) from None


def read_instance(path: str | Path) -> Instance:
    return parse_instance(Path(path).read_text())


def write_instance(inst: Instance, path: str | Path) -> None:
    Path(path).write_text(format_instance(inst))
