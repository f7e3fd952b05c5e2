"""Exact counting kernels behind N_k and the correlation sums.

Two independent integer methods:

* popcount: the set as packed 64-bit words, extended periodically past q so
  that a cyclic shift by h is a plain bit-offset window. N_k(h) is the
  popcount of the AND of k windows.
* difference: the sorted member list, extended by whole periods. N_2 for
  h <= H comes from tabulating member differences up to H, and sums of N_k
  over a box come from counting chains of members with bounded steps.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .sets import ResidueSet

_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


class BudgetExceeded(RuntimeError):
    """An exhaustive computation would exceed its work budget."""


# -- popcount path --------------------------------------------------------------------

class PackedBits:
    """Membership of x mod q for x in [0, q + extra), as uint64 words."""

    def __init__(self, s: ResidueSet, extra: int):
        self.q = s.q
        self.extra = extra
        total = s.q + extra
        if extra <= s.q:
            mask = np.concatenate([s.mask, s.mask[:extra]])
        else:
            mask = np.tile(s.mask, -(-total // s.q))[:total]
        raw = np.packbits(mask, bitorder="little")
        pad = (-len(raw)) % 8 + 8  # one spare word for unaligned reads
        raw = np.concatenate([raw, np.zeros(pad, dtype=np.uint8)])
        self.words = raw.view("<u8").astype(np.uint64)
        self.nwords = -(-s.q // 64)
        tail = s.q % 64
        self.tail_mask = _ONES if tail == 0 else np.uint64((1 << tail) - 1)

    def window(self, start: int) -> np.ndarray:
        """Bits [start, start + q) realigned to bit 0."""
        if not 0 <= start <= self.extra:
            raise ValueError(f"window offset {start} outside [0, {self.extra}]")
        w, b = divmod(start, 64)
        lo = self.words[w:w + self.nwords]
        if b:
            hi = self.words[w + 1:w + 1 + self.nwords]
            out = (lo >> np.uint64(b)) | (hi << np.uint64(64 - b))
        else:
            out = lo.copy()
        out[-1] &= self.tail_mask
        return out

    def count_and(self, shifts: Sequence[int]) -> int:
        acc = self.window(shifts[0])
        for h in shifts[1:]:
            acc &= self.window(h)
        return int(np.bitwise_count(acc).sum(dtype=np.int64))


def n2_profile_popcount(s: ResidueSet, H: int) -> np.ndarray:
    """N_2(h) for h = 0..H by shifted-window popcount (cost ~ H * q / 64)."""
    pb = PackedBits(s, H)
    base = pb.window(0)
    out = np.empty(H + 1, dtype=np.int64)
    out[0] = s.count
    for h in range(1, H + 1):
        out[h] = int(np.bitwise_count(base & pb.window(h)).sum(dtype=np.int64))
    return out


def count_popcount(s: ResidueSet, shifts: Sequence[int]) -> int:
    shifts = sorted({h % s.q for h in shifts} | {0})
    return PackedBits(s, shifts[-1]).count_and(shifts)


# -- difference path ------------------------------------------------------------------

def _extended(s: ResidueSet, span: int) -> np.ndarray:
    """Members followed by their translates by q, 2q, ... reaching past q + span."""
    x = s.elements
    copies = 2 + span // s.q
    return (x[None, :] + s.q * np.arange(copies, dtype=np.int64)[:, None]).ravel()


def n2_profile_difference(s: ResidueSet, H: int) -> np.ndarray:
    """N_2(h) for h = 0..H by tabulating member differences up to H."""
    m = s.count
    out = np.zeros(H + 1, dtype=np.int64)
    out[0] = m
    if m == 0:
        return out
    x = s.elements
    ext = _extended(s, H)
    for off in range(1, len(ext) - m + 1):
        d = ext[off:off + m] - x
        keep = d[d <= H]
        if len(keep) == 0:
            break
        out += np.bincount(keep, minlength=H + 1)
    out[0] = m
    return out


def count_membership(s: ResidueSet, shifts: Sequence[int]) -> int:
    """N_k by testing t + h_i for every member t (cost ~ |set| * k * log)."""
    x = s.elements
    ok = np.ones(len(x), dtype=bool)
    for h in {h % s.q for h in shifts} - {0}:
        y = (x + h) % s.q
        i = np.searchsorted(x, y)
        i[i == len(x)] = 0
        ok &= x[i] == y
    return int(ok.sum())


def chain_sum(s: ResidueSet, bounds: Sequence[int]) -> int:
    """Sum of N_k(h) over integer h with 0 < h_i - h_{i-1} <= bounds[i-1].

    Counts chains t = y_0 < y_1 < ... < y_{k-1} of (periodically extended)
    members with y_i - y_{i-1} <= bounds[i-1] and t ranging over one period.
    """
    m = s.count
    if m == 0 or any(b < 1 for b in bounds):
        return 0
    ext = _extended(s, int(sum(bounds)))
    big = m * math.prod(bounds) >= 2**62
    c = np.ones(len(ext), dtype=object if big else np.int64)
    for b in reversed(bounds):
        prefix = np.concatenate([np.zeros(1, dtype=c.dtype), np.cumsum(c)])
        hi = np.searchsorted(ext, ext + b, side="right")
        c = prefix[hi] - prefix[np.arange(1, len(ext) + 1)]
    return int(c[:m].sum())
