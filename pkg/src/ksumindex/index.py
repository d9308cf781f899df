"""The kSUM-Indexing structure: L hashed sum functions, one inverter each.

Preprocessing draws ``h_1..h_L``, builds an inverter for every
``f_l = h_l o g`` and then runs the real query path on every element of
the sumset.  If any sum is missed the whole draw is discarded and redone
with a fresh seed; after ``max_retries`` misses at one L, L grows by one.
The structure handed back has therefore been checked on every sum.

Queries never report a false "yes": every candidate code is decoded and
its sum compared with the query before it is returned as a witness.
"""

from __future__ import annotations

import enum
import logging
import math
import struct
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import hashing
from .hashing import PairwiseHash
from .inverter import (PARAMS_WORDS, ChainTable, InversionParams, Inverter, Mode,
                       build, derive_params, empty_inverter, time_budget)
from .sumfn import Instance, Sumset, SumFunction, decode, enumerate_sumset
from .universe import P

log = logging.getLogger(__name__)

MAGIC = int.from_bytes(b"KSIX\0\0\0\0", "little")
VERSION = 1
HEADER_WORDS = 8  # magic, version, n, k, p, delta, mode, L
_MODE_CODES = {Mode.GENERAL: 0, Mode.RANDOM: 1}


class FormatErrorCode(enum.IntEnum):
    BAD_MAGIC = 1
    BAD_VERSION = 2
    TRUNCATED = 3
    CORRUPT = 4


class IndexFormatError(ValueError):
    def __init__(self, code: FormatErrorCode, message: str):
        self.code = code
        super().__init__(f"{code.name.lower()}: {message}")


def initial_hash_count(n: int) -> int:
    return math.ceil(2 * math.log2(max(n, 2)))


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


@dataclass
class BuildStats:
    retries: int = 0
    escalations: int = 0
    verified: bool = False
    stored_words: int = 0
    seconds: float = 0.0
    singleton_counts: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class QueryResult:
    found: bool
    witness: tuple[int, ...] | None
    steps: int

    def __bool__(self):
        return self.found


@dataclass(frozen=True, eq=False)
class KSumIndex:
    instance: Instance
    delta: float
    mode: Mode
    hashes: tuple[PairwiseHash, ...]
    inverters: tuple[Inverter, ...]
    stats: BuildStats = field(default_factory=BuildStats)

    def __post_init__(self):
        if len(self.hashes) != len(self.inverters) or not self.hashes:
            raise ValueError("need L >= 1 hashes and as many inverters")

    @property
    def L(self) -> int:  # noqa: N802
        return len(self.hashes)

    def f(self, ell: int) -> SumFunction:
        return SumFunction(self.instance, self.hashes[ell])

    def query(self, c: int) -> QueryResult:
        inst = self.instance
        steps = 0
        for h, inv in zip(self.hashes, self.inverters):
            cands, used = inv.invert(SumFunction(inst, h), h(c))
            steps += used
            for code in cands:
                t = decode(code, inst.n, inst.k)
                if _sum_of(inst, t) == c:
                    return QueryResult(True, t, steps)
        return QueryResult(False, None, steps)

    def query_batch(self, cs: Sequence[int] | np.ndarray):
        """Vectorized :meth:`query`: (found mask, witness codes or -1, steps)."""
        cs = np.asarray(cs, dtype=np.uint64)
        witness = np.full(cs.shape, -1, dtype=np.int64)
        steps = np.zeros(cs.shape, dtype=np.int64)
        pending = np.arange(cs.size)
        inst = self.instance
        for h, inv in zip(self.hashes, self.inverters):
            if pending.size == 0:
                break
            sub = cs[pending]
            w, s = inv.invert_batch(SumFunction(inst, h), h.eval_array(sub), sums=sub)
            steps[pending] += s
            ok = w >= 0
            witness[pending[ok]] = w[ok]
            pending = pending[~ok]
        return witness >= 0, witness, steps

    def verify(self, sumset: Sumset | None = None) -> bool:
        return not self.failures(sumset, limit=1)

    def failures(self, sumset: Sumset | None = None, limit: int | None = None) -> list[int]:
        """Sums the query path misses (at most ``limit`` of them)."""
        sumset = enumerate_sumset(self.instance) if sumset is None else sumset
        found, _, _ = self.query_batch(sumset.sums)
        missed = sumset.sums[~found]
        return [int(z) for z in missed[:limit]]

    def space_words(self) -> int:
        inst = self.instance
        return (HEADER_WORDS + (inst.k - 1) * inst.n
                + sum(2 + inv.stored_words() for inv in self.inverters))

    def serialize(self) -> bytes:
        words = self._words()
        return struct.pack(f"<{len(words)}Q", *words)

    def _words(self) -> list[int]:
        inst = self.instance
        words = [MAGIC, VERSION, inst.n, inst.k, P,
                 struct.unpack("<Q", struct.pack("<d", self.delta))[0],
                 _MODE_CODES[self.mode], self.L]
        for lst in inst.lists:
            words += lst.tolist()
        for h, inv in zip(self.hashes, self.inverters):
            words += (h.a, h.b)
            words += inv.to_words()
        return words

    def with_inverters(self, inverters: Sequence[Inverter]) -> "KSumIndex":
        return replace(self, inverters=tuple(inverters))

    def hollowed(self) -> "KSumIndex":
        """A copy whose inverters hold nothing (test fixture)."""
        return self.with_inverters([empty_inverter(self.instance.N)] * self.L)


def _sum_of(inst: Instance, t: tuple[int, ...]) -> int:
    total = 0
    for lst, i in zip(inst.lists, t):
        total = (total + int(lst[i])) % P
    return total


def _build_once(inst: Instance, delta: float, mode: Mode, L: int, seed: int) -> KSumIndex:
    params = derive_params(inst.N, inst.n, inst.k, delta, mode)
    hashes, inverters = [], []
    for ell in range(L):
        h = hashing.sample(np.random.default_rng([seed, 0, ell]), inst.N)
        hashes.append(h)
        inverters.append(build(SumFunction(inst, h), params, derive_seed(seed, 1, ell)))
    return KSumIndex(inst, delta, mode, tuple(hashes), tuple(inverters))


def singleton_fraction(sums: np.ndarray, h: PairwiseHash) -> float:
    """Share of the given distinct sums that no other sum joins in h's bucket."""
    if len(sums) == 0:
        return 1.0
    return singleton_count(sums, h) / len(sums)


def singleton_count(sums: np.ndarray, h: PairwiseHash) -> int:
    buckets = h.eval_array(np.asarray(sums, dtype=np.uint64))
    _, counts = np.unique(buckets, return_counts=True)
    return int(np.count_nonzero(counts == 1))


def preprocess(inst: Instance, delta: float, mode: Mode | str = Mode.GENERAL,
               seed: int = 0, max_retries: int = 3) -> KSumIndex:
    """Build an index that answers every sum of ``inst``; loops until it does."""
    mode = Mode(mode)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if max_retries < 1:
        raise ValueError("max_retries must be positive")
    started = time.perf_counter()
    sumset = enumerate_sumset(inst)
    L = initial_hash_count(inst.n)
    attempt = failed_here = escalations = 0
    while True:
        idx = _build_once(inst, delta, mode, L, derive_seed(seed, attempt))
        missed = idx.failures(sumset, limit=1)
        if not missed:
            break
        attempt += 1
        failed_here += 1
        log.info("attempt %d with L=%d missed sum %d; reseeding", attempt, L, missed[0])
        if failed_here >= max_retries:
            L += 1
            failed_here = 0
            escalations += 1
            log.info("raising L to %d", L)
    stats = BuildStats(
        retries=attempt, escalations=escalations, verified=True,
        stored_words=idx.space_words(), seconds=time.perf_counter() - started,
        singleton_counts=[singleton_count(sumset.sums, h) for h in idx.hashes])
    return replace(idx, stats=stats)


class _Reader:
    def __init__(self, data: bytes):
        if len(data) % 8:
            raise IndexFormatError(FormatErrorCode.TRUNCATED, "length is not a whole number of words")
        self.words = np.frombuffer(data, dtype="<u8")
        self.pos = 0

    def take(self, count: int) -> np.ndarray:
        if count < 0 or self.pos + count > len(self.words):
            raise IndexFormatError(FormatErrorCode.TRUNCATED,
                                   f"needed {count} words at offset {self.pos}")
        out = self.words[self.pos:self.pos + count]
        self.pos += count
        return out.astype(np.uint64)

    def one(self) -> int:
        return int(self.take(1)[0])


def _pairs(reader: _Reader, count: int, bound: int, what: str):
    flat = reader.take(2 * count)
    keys, vals = flat[0::2].copy(), flat[1::2].copy()
    if count and (int(keys.max()) >= bound or int(vals.max()) >= bound):
        raise IndexFormatError(FormatErrorCode.CORRUPT, f"{what} entry outside [0, {bound})")
    return keys, vals


def _sorted_pairs(keys: np.ndarray, vals: np.ndarray):
    if keys.size > 1 and np.any(keys[1:] < keys[:-1]):
        order = np.argsort(keys, kind="stable")
        return keys[order], vals[order]
    return keys, vals


def deserialize(data: bytes) -> KSumIndex:
    magic = MAGIC.to_bytes(8, "little")
    if data[:8] != magic[:len(data[:8])]:
        raise IndexFormatError(FormatErrorCode.BAD_MAGIC, "missing KSIX magic")
    r = _Reader(data)
    r.take(1)
    version = r.one()
    if version != VERSION:
        raise IndexFormatError(FormatErrorCode.BAD_VERSION, f"version {version}, expected {VERSION}")
    n, k, p, delta_bits, mode_code, L = (int(w) for w in r.take(6))
    corrupt = FormatErrorCode.CORRUPT
    if p != P:
        raise IndexFormatError(corrupt, f"modulus {p}")
    if mode_code not in (0, 1) or L < 1 or n < 1 or not 2 <= k <= 64 or n ** (k - 1) > P:
        raise IndexFormatError(corrupt, "bad header fields")
    delta = struct.unpack("<d", struct.pack("<Q", delta_bits))[0]
    if not 0 < delta < 1:
        raise IndexFormatError(corrupt, f"delta {delta} outside (0, 1)")
    mode = Mode.GENERAL if mode_code == 0 else Mode.RANDOM
    lists = []
    for _ in range(k - 1):
        lst = r.take(n)
        if n and int(lst.max()) >= P:
            raise IndexFormatError(corrupt, "list element outside [0, P)")
        lists.append(lst.copy())
    inst = Instance(k=k, n=n, lists=tuple(lists))
    N = inst.N
    hashes, inverters = [], []
    try:
        for _ in range(L):
            a, b = r.one(), r.one()
            hashes.append(PairwiseHash(a, b, N))
            pN, T, m, t, rr, q = (int(w) for w in r.take(PARAMS_WORDS))
            params = InversionParams(N, T, mode, m, t, rr, q)
            # walk length and step cap come from these words, so they must be
            # exactly what the header's (n, delta, mode) produce
            if pN != N or params != InversionParams.for_budget(N, time_budget(n, delta), mode):
                raise IndexFormatError(corrupt, "inverter parameters do not match the header")
            hcount = r.one()
            if hcount > q:
                raise IndexFormatError(corrupt, "heavy table larger than q")
            hk, hv = _sorted_pairs(*_pairs(r, hcount, N, "heavy"))
            tables = []
            for _ in range(rr):
                ta, tb, count = r.one(), r.one(), r.one()
                if count > params.m:
                    raise IndexFormatError(corrupt, "chain table larger than m")
                ends, starts = _sorted_pairs(*_pairs(r, count, N, "endpoint"))
                tables.append(ChainTable(PairwiseHash(ta, tb, N), ends, starts))
            inverters.append(Inverter(params, tuple(tables), hk, hv))
    except ValueError as exc:
        if isinstance(exc, IndexFormatError):
            raise
        raise IndexFormatError(corrupt, str(exc)) from None
    if r.pos != len(r.words):
        raise IndexFormatError(corrupt, f"{len(r.words) - r.pos} trailing words")
    return KSumIndex(inst, delta, mode, tuple(hashes), tuple(inverters))
