"""Compiled per-lane inversion walk used by ``Inverter.invert_batch``.

The loop body mirrors ``Inverter.invert`` statement for statement; the two
are checked against each other in the test suite.  All arithmetic stays in
uint64 (numba promotes mixed signed/unsigned to float, so every constant is
typed explicitly).
"""

import numba as nb
import numpy as np

_P = np.uint64((1 << 61) - 1)
_M30 = np.uint64((1 << 30) - 1)
_M31 = np.uint64((1 << 31) - 1)
_U0 = np.uint64(0)
_U1 = np.uint64(1)
_U30 = np.uint64(30)
_U31 = np.uint64(31)
_U61 = np.uint64(61)
_SMALL_MOD = np.uint64(1 << 10)
_BIG_MOD = np.uint64(1 << 32)

# f kinds
TABLE = 0
SUM = 1


@nb.njit(cache=True, inline="always")
def _mulmod(a, x):
    a_hi = a >> _U31
    a_lo = a & _M31
    x_hi = x >> _U31
    x_lo = x & _M31
    mid = a_hi * x_lo + a_lo * x_hi
    s = ((a_hi * x_hi) << _U1) + (mid >> _U30) + ((mid & _M30) << _U31) + a_lo * x_lo
    s = (s & _P) + (s >> _U61)
    if s >= _P:
        s -= _P
    return s


@nb.njit(cache=True, inline="always")
def _mod(y, m, inv_m):
    """y % m for y < 2^61.  For m >= 2^10 and m < 2^32 the float quotient is
    off by at most 2, so a short integer correction makes it exact."""
    if m < _SMALL_MOD or m >= _BIG_MOD:
        return y % m
    q = np.int64(np.float64(y) * inv_m)
    rem = np.int64(y) - q * np.int64(m)
    mi = np.int64(m)
    while rem < 0:
        rem += mi
    while rem >= mi:
        rem -= mi
    return np.uint64(rem)


@nb.njit(cache=True, inline="always")
def _hash(a, b, m, inv_m, x):
    y = _mulmod(a, x) + b
    if y >= _P:
        y -= _P
    return _mod(y, m, inv_m)


@nb.njit(cache=True, inline="always")
def _g(lists, n, x):
    total = _U0
    if x < _BIG_MOD:
        # 32-bit division is several times cheaper than 64-bit
        rem32 = np.uint32(x)
        n32 = np.uint32(n)
        for j in range(lists.shape[0]):
            q = rem32 // n32
            total += lists[j, rem32 - q * n32]
            if total >= _P:
                total -= _P
            rem32 = q
        return total
    rem = x
    for j in range(lists.shape[0]):
        total += lists[j, rem % n]
        if total >= _P:
            total -= _P
        rem //= n
    return total


@nb.njit(cache=True, inline="always")
def _f(kind, table, lists, n, fa, fb, N, inv_N, x):
    if kind == TABLE:
        return table[x]
    return _hash(fa, fb, N, inv_N, _g(lists, n, x))


EMPTY = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_U32 = np.uint64(32)


@nb.njit(cache=True, inline="always")
def _slot(x, mask):
    return np.int64(((x * _GOLDEN) >> _U32) & mask)


@nb.njit(cache=True)
def build_slots(keys, vals, offsets):
    """Open-addressing tables for the sorted segments keys[offsets[i]:offsets[i+1]].

    Each segment gets a power-of-two block at least twice its size.  Later
    duplicates overwrite earlier ones, as a dict built from the pairs would.
    Binary search is branch-heavy and mispredicts on every probe; a hash
    probe is almost always a single load.
    """
    nseg = offsets.shape[0] - 1
    base = np.zeros(nseg + 1, dtype=np.int64)
    mask = np.zeros(nseg, dtype=np.uint64)
    for i in range(nseg):
        cap = 1
        while cap < 2 * (offsets[i + 1] - offsets[i]):
            cap <<= 1
        base[i + 1] = base[i] + cap
        mask[i] = np.uint64(cap - 1)
    skeys = np.full(base[nseg], EMPTY, dtype=np.uint64)
    svals = np.zeros(base[nseg], dtype=np.uint64)
    for i in range(nseg):
        for e in range(offsets[i], offsets[i + 1]):
            x = keys[e]
            pos = _slot(x, mask[i])
            while skeys[base[i] + pos] != EMPTY and skeys[base[i] + pos] != x:
                pos = (pos + 1) & np.int64(mask[i])
            skeys[base[i] + pos] = x
            svals[base[i] + pos] = vals[e]
    return skeys, svals, base, mask


@nb.njit(cache=True, inline="always")
def _find(skeys, base, mask, x):
    """Slot holding key x in the block at base, or -1."""
    pos = _slot(x, mask)
    m = np.int64(mask)
    while True:
        k = skeys[base + pos]
        if k == x:
            return base + pos
        if k == EMPTY:
            return -1
        pos = (pos + 1) & m


@nb.njit(cache=True)
def invert_lanes(ys, sums, use_sums, kind, table, lists, n, fa, fb, N,
                 heavy_keys, heavy_vals, heavy_mask, ta, tb, base, masks, ends, starts,
                 t, cap, witness, steps):
    r = ta.shape[0]
    inv_N = 1.0 / np.float64(N)
    for lane in range(ys.shape[0]):
        y = ys[lane]
        hp = _find(heavy_keys, 0, heavy_mask, y)
        if hp >= 0:
            x = heavy_vals[hp]
            if (not use_sums) or _g(lists, n, x) == sums[lane]:
                witness[lane] = np.int64(x)
            steps[lane] = 0
            continue
        s = 0
        capped = False
        for i in range(r):
            a = ta[i]
            b = tb[i]
            lo = base[i]
            mi = masks[i]
            z = _hash(a, b, N, inv_N, y)
            for j in range(t):
                ep = _find(ends, lo, mi, z)
                if ep >= 0:
                    x = starts[ep]
                    hit = False
                    for _ in range(t - j):
                        if s >= cap:
                            capped = True
                            break
                        v = _f(kind, table, lists, n, fa, fb, N, inv_N, x)
                        s += 1
                        if v == y:
                            if witness[lane] < 0 and ((not use_sums) or _g(lists, n, x) == sums[lane]):
                                witness[lane] = np.int64(x)
                            hit = True
                            break
                        if _find(heavy_keys, 0, heavy_mask, v) >= 0:
                            break
                        x = _hash(a, b, N, inv_N, v)
                    if capped or hit:
                        break
                if j == t - 1:
                    break
                if s >= cap:
                    capped = True
                    break
                v = _f(kind, table, lists, n, fa, fb, N, inv_N, z)
                s += 1
                if _find(heavy_keys, 0, heavy_mask, v) >= 0:
                    break
                z = _hash(a, b, N, inv_N, v)
            if capped:
                break
        steps[lane] = s


@nb.njit(cache=True)
def walk_chains(kind, table, lists, n, fa, fb, N, is_heavy, a, b, starts, t):
    """Final position of each chain x -> R(f(x)) after t steps or at a heavy f(x)."""
    inv_N = 1.0 / np.float64(N)
    out = starts.copy()
    for c in range(starts.shape[0]):
        x = starts[c]
        for _ in range(t):
            v = _f(kind, table, lists, n, fa, fb, N, inv_N, x)
            if is_heavy[v]:
                break
            x = _hash(a, b, N, inv_N, v)
        out[c] = x
    return out
