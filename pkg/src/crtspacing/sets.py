"""Residue sets modulo q, the per-prime families, and CRT composition.

A :class:`ResidueSet` is immutable. It is stored either as a packed bitmap
over ``[0, q)`` (dense sets) or as a sorted array of residues (sparse sets);
the other view is derived lazily and cached.
"""

from __future__ import annotations

import math
import struct
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import arith

DEFAULT_CAP = 2**31
DENSE_THRESHOLD = Fraction(1, 64)
MAGIC = b"CRSP"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQB")
_CHUNK = 1 << 22

FAMILIES = (
    "units", "squares", "dth_powers", "poly_image", "curve",
    "interval", "multiples", "bernoulli", "explicit",
)
# Families defined prime by prime; composite moduli go through the CRT.
LOCAL_FAMILIES = frozenset({"squares", "dth_powers", "poly_image", "curve"})


class CapExceeded(ValueError):
    """Raised when a CRT product is too large to materialise."""


# -- seeded membership draws ----------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def mix_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed: s <- mix64(s ^ part + golden)."""
    s = np.zeros(1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for part in parts:
            s = _mix64((s ^ np.uint64(part % 2**64)) + _GOLDEN)
    return int(s[0])


def uniform_draws(seed: int, labels: np.ndarray) -> np.ndarray:
    """One uint64 draw per label, independent of evaluation order.

    draw(label) = mix64(mix64(seed) + (label + 1) * golden), i.e. SplitMix64
    positioned at stream index ``label + 1``.
    """
    key = np.uint64(mix_seed(seed))
    lab = np.asarray(labels, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(key + (lab + np.uint64(1)) * _GOLDEN)


def draw_threshold(probability: float | Fraction) -> np.uint64:
    """uint64 t with P(draw < t) = floor(prob * 2**64) / 2**64."""
    prob = Fraction(probability)
    if not 0 <= prob <= 1:
        raise ValueError(f"probability out of range: {probability}")
    return np.uint64(min(2**64 - 1, math.floor(prob * 2**64)))


def bernoulli_mask(seed: int, labels: np.ndarray, probability: float | Fraction) -> np.ndarray:
    if Fraction(probability) == 1:
        return np.ones(len(labels), dtype=bool)
    return uniform_draws(seed, labels) < draw_threshold(probability)


# -- family descriptors -------------------------------------------------------------

@dataclass(frozen=True)
class FamilySpec:
    """Which generator produced a set, with its parameters."""

    kind: str
    d: int = 2
    coeffs: tuple[int, ...] = ()
    a: int = 0
    b: int = 0
    n: int = 0
    m: int = 1
    density: float = 1.0
    sigma: float = 2.0
    seed: int = 0
    members: tuple[int, ...] = field(default=(), repr=False)

    _KEYS = {
        "units": (), "squares": (), "dth_powers": ("d",),
        "poly_image": ("coeffs",), "curve": ("a", "b"), "interval": ("n",),
        "multiples": ("m", "density", "seed"), "bernoulli": ("sigma", "seed"),
        "explicit": ("members",),
    }

    def __post_init__(self):
        if self.kind not in FAMILIES:
            raise ValueError(f"unknown family {self.kind!r}; expected one of {FAMILIES}")
        if self.kind == "dth_powers" and self.d < 1:
            raise ValueError("dth_powers needs d >= 1")
        if self.kind == "poly_image":
            if len(self.coeffs) < 2 or self.coeffs[-1] == 0:
                raise ValueError("poly_image needs degree >= 1 with nonzero leading coefficient")
        if self.kind == "interval" and self.n < 0:
            raise ValueError("interval needs n >= 0")
        if self.kind == "multiples" and (self.m < 1 or not 0 < self.density <= 1):
            raise ValueError("multiples needs m >= 1 and 0 < density <= 1")
        if self.kind == "bernoulli" and not self.sigma >= 1:
            raise ValueError("bernoulli needs sigma >= 1")

    @classmethod
    def units(cls):
        return cls("units")

    @classmethod
    def squares(cls):
        return cls("squares")

    @classmethod
    def dth_powers(cls, d: int):
        return cls("dth_powers", d=d)

    @classmethod
    def poly_image(cls, coeffs: Sequence[int]):
        return cls("poly_image", coeffs=tuple(int(c) for c in coeffs))

    @classmethod
    def curve(cls, a: int, b: int):
        return cls("curve", a=a, b=b)

    @classmethod
    def interval(cls, n: int):
        return cls("interval", n=n)

    @classmethod
    def multiples(cls, m: int, density: float = 1.0, seed: int = 0):
        return cls("multiples", m=m, density=density, seed=seed)

    @classmethod
    def bernoulli(cls, sigma: float, seed: int):
        return cls("bernoulli", sigma=sigma, seed=seed)

    @classmethod
    def explicit(cls, members: Iterable[int]):
        return cls("explicit", members=tuple(sorted({int(x) for x in members})))

    def to_dict(self) -> dict:
        full = asdict(self)
        out = {"kind": self.kind}
        for key in self._KEYS[self.kind]:
            value = full[key]
            out[key] = list(value) if isinstance(value, tuple) else value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FamilySpec":
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kw)


EXPLICIT = FamilySpec("explicit")


# -- the set type -------------------------------------------------------------------

class ResidueSet:
    """An immutable subset of Z/qZ."""

    __slots__ = ("q", "count", "family", "_bits", "_members", "__dict__")

    def __init__(self, q: int, *, bits: np.ndarray | None = None,
                 members: np.ndarray | None = None, count: int | None = None,
                 family: FamilySpec = EXPLICIT):
        if (bits is None) == (members is None):
            raise ValueError("give exactly one of bits or members")
        if q < 1:
            raise ValueError("modulus must be positive")
        self.q = int(q)
        self.family = family
        self._bits = bits
        self._members = members
        if bits is not None:
            bits = np.ascontiguousarray(bits, dtype=np.uint8)
            if len(bits) != (q + 7) // 8:
                raise ValueError("bitmap length does not match modulus")
            tail = q % 8
            if tail and bits[-1] >> tail:
                raise ValueError("bitmap has bits set beyond q")
            self._bits = bits
            pop = int(np.bitwise_count(bits).sum())
        else:
            members = np.ascontiguousarray(members, dtype=np.int64)
            if len(members) and (members[0] < 0 or members[-1] >= q):
                raise ValueError("members must lie in [0, q)")
            if np.any(np.diff(members) <= 0):
                raise ValueError("members must be strictly increasing")
            self._members = members
            pop = len(members)
        if count is not None and count != pop:
            raise ValueError(f"count {count} does not match membership ({pop})")
        self.count = pop

    # construction helpers
    @classmethod
    def from_mask(cls, mask: np.ndarray, family: FamilySpec = EXPLICIT,
                  representation: str = "auto") -> "ResidueSet":
        mask = np.asarray(mask, dtype=bool)
        q = len(mask)
        if _choose_dense(int(mask.sum()), q, representation):
            out = cls(q, bits=np.packbits(mask, bitorder="little"), family=family)
            out.__dict__["mask"] = mask
            return out
        return cls(q, members=np.flatnonzero(mask).astype(np.int64), family=family)

    @classmethod
    def from_members(cls, q: int, members: Iterable[int] | np.ndarray,
                     family: FamilySpec = EXPLICIT, representation: str = "auto") -> "ResidueSet":
        arr = np.unique(np.asarray(list(members) if not isinstance(members, np.ndarray)
                                   else members, dtype=np.int64) % q)
        if _choose_dense(len(arr), q, representation):
            mask = np.zeros(q, dtype=bool)
            mask[arr] = True
            return cls.from_mask(mask, family, "dense")
        return cls(q, members=arr, family=family)

    @property
    def is_dense(self) -> bool:
        return self._bits is not None

    @property
    def representation(self) -> str:
        return "dense" if self.is_dense else "sparse"

    @cached_property
    def mask(self) -> np.ndarray:
        """Unpacked boolean membership array of length q."""
        if self._bits is not None:
            return np.unpackbits(self._bits, count=self.q, bitorder="little").astype(bool)
        out = np.zeros(self.q, dtype=bool)
        out[self._members] = True
        return out

    @cached_property
    def elements(self) -> np.ndarray:
        """Sorted int64 array of members."""
        if self._members is not None:
            return self._members
        return np.flatnonzero(self.mask).astype(np.int64)

    @cached_property
    def bits(self) -> np.ndarray:
        if self._bits is not None:
            return self._bits
        return np.packbits(self.mask, bitorder="little")

    def __contains__(self, x: int) -> bool:
        x %= self.q
        if self._bits is not None:
            return bool((self._bits[x >> 3] >> (x & 7)) & 1)
        i = np.searchsorted(self._members, x)
        return bool(i < len(self._members) and self._members[i] == x)

    def __len__(self) -> int:
        return self.count

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResidueSet):
            return NotImplemented
        return self.q == other.q and self.count == other.count and \
            np.array_equal(self.elements, other.elements)

    def __repr__(self) -> str:
        return f"ResidueSet(q={self.q}, count={self.count}, {self.representation}, {self.family.kind})"

    @property
    def density(self) -> Fraction:
        return Fraction(self.count, self.q)

    # serialisation
    def to_bytes(self) -> bytes:
        flag = 0 if self.is_dense else 1
        head = _HEADER.pack(MAGIC, FORMAT_VERSION, self.q, self.count, flag)
        if flag == 0:
            return head + self._bits.tobytes()
        return head + self._members.astype("<u8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ResidueSet":
        if len(data) < _HEADER.size:
            raise ValueError("truncated CRSP header")
        magic, version, q, count, flag = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported CRSP version {version}")
        payload = memoryview(data)[_HEADER.size:]
        if flag == 0:
            if len(payload) != (q + 7) // 8:
                raise ValueError("bitmap payload has wrong length")
            return cls(q, bits=np.frombuffer(payload, dtype=np.uint8).copy(), count=count)
        if flag == 1:
            if len(payload) != 8 * count:
                raise ValueError("residue list payload has wrong length")
            members = np.frombuffer(payload, dtype="<u8").astype(np.int64)
            return cls(q, members=members, count=count)
        raise ValueError(f"unknown representation flag {flag}")

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "ResidueSet":
        return cls.from_bytes(Path(path).read_bytes())


def _choose_dense(count: int, q: int, representation: str) -> bool:
    if representation == "dense":
        return True
    if representation == "sparse":
        return False
    if representation != "auto":
        raise ValueError(f"unknown representation {representation!r}")
    return Fraction(count, q) > DENSE_THRESHOLD


# -- generators ---------------------------------------------------------------------

def _poly_eval_mod(coeffs: Sequence[int], y: np.ndarray, p: int) -> np.ndarray:
    """Horner evaluation mod p; p < 2**31 keeps int64 products exact."""
    acc = np.zeros_like(y, dtype=np.int64)
    for c in reversed(coeffs):
        acc = (acc * y + (c % p)) % p
    return acc


def _prime_mask(family: FamilySpec, p: int) -> np.ndarray:
    if p >= 2**31:
        raise CapExceeded(f"per-prime generation needs p < 2**31, got {p}")
    y = np.arange(p, dtype=np.int64)
    mask = np.zeros(p, dtype=bool)
    kind = family.kind
    if kind == "units":
        mask[1:] = True
    elif kind == "squares":
        mask[y[1:] * y[1:] % p] = True
    elif kind == "dth_powers":
        mask[arith.powmod_array(y[1:], family.d, p)] = True
    elif kind == "poly_image":
        mask[_poly_eval_mod(family.coeffs, y, p)] = True
    elif kind == "curve":
        a, b = family.a, family.b
        if (4 * a**3 + 27 * b**2) % p == 0:
            raise ValueError(f"curve y^2 = x^3 + {a}x + {b} is singular mod {p}")
        squares0 = np.zeros(p, dtype=bool)
        squares0[y * y % p] = True
        rhs = (y * y % p * y + a * y + b) % p
        mask = squares0[rhs]
    else:
        raise ValueError(f"family {kind} is not defined prime by prime")
    return mask


def _global_mask(family: FamilySpec, q: int) -> np.ndarray:
    kind = family.kind
    if kind == "units":
        return np.gcd(np.arange(q, dtype=np.int64), q) == 1
    if kind == "interval":
        if family.n > q:
            raise ValueError("interval longer than the modulus")
        mask = np.zeros(q, dtype=bool)
        mask[np.arange(1, family.n + 1) % q] = True
        return mask
    if kind == "multiples":
        # multiples of m in [1, q], reduced mod q (q itself maps to 0)
        xs = np.arange(family.m, q + 1, family.m, dtype=np.int64) % q
        keep = bernoulli_mask(family.seed, xs, family.density)
        mask = np.zeros(q, dtype=bool)
        mask[xs[keep]] = True
        return mask
    if kind == "bernoulli":
        mask = np.empty(q, dtype=bool)
        prob = 1 / Fraction(family.sigma)
        for start in range(0, q, _CHUNK):
            labels = np.arange(start, min(q, start + _CHUNK), dtype=np.int64)
            mask[start:start + len(labels)] = bernoulli_mask(family.seed, labels, prob)
        return mask
    if kind == "explicit":
        mask = np.zeros(q, dtype=bool)
        mask[np.asarray(family.members, dtype=np.int64) % q] = True
        return mask
    raise ValueError(f"family {kind} needs a prime modulus")


def gen_prime_set(family: FamilySpec, p: int) -> ResidueSet:
    """The family's set modulo a prime p."""
    if not arith.is_prime(p):
        raise ValueError(f"{p} is not prime")
    if family.kind in LOCAL_FAMILIES or family.kind == "units":
        return ResidueSet.from_mask(_prime_mask(family, p), family)
    return ResidueSet.from_mask(_global_mask(family, p), family)


def generate(family: FamilySpec, q: int, cap: int = DEFAULT_CAP) -> ResidueSet:
    """The family's set modulo q.

    Prime-local families require squarefree q and are composed from their
    per-prime sets; the others are generated on Z/qZ directly.
    """
    if q > cap:
        raise CapExceeded(f"q = {q} exceeds the materialisation cap {cap}; "
                          "use components(...) with the CRT-multiplicative path")
    if family.kind in LOCAL_FAMILIES:
        return crt_compose(components(family, q), cap=cap, family=family)
    return ResidueSet.from_mask(_global_mask(family, q), family)


def components(family: FamilySpec, q: int) -> list[ResidueSet]:
    """Per-prime sets of a prime-local family for squarefree q."""
    f = arith.factorize(q)
    if not f.squarefree:
        raise ValueError(f"{q} is not squarefree")
    return [gen_prime_set(family, p) for p in f.primes]


def crt_compose(parts: Sequence[ResidueSet], cap: int = DEFAULT_CAP,
                family: FamilySpec | None = None) -> ResidueSet:
    """x is in the result iff x mod q_i is in parts[i] for every i."""
    if not parts:
        raise ValueError("need at least one component")
    moduli = [s.q for s in parts]
    if not arith.pairwise_coprime(moduli):
        raise ValueError(f"component moduli {moduli} are not pairwise coprime")
    q = math.prod(moduli)
    if q > cap:
        raise CapExceeded(f"CRT product {q} exceeds the materialisation cap {cap}; "
                          "use count_tuples_crt / correlation with components instead")
    family = family or (parts[0].family if len(parts) == 1 else EXPLICIT)
    if len(parts) == 1:
        s = parts[0]
        return ResidueSet(s.q, bits=s._bits, members=s._members, family=family)
    count = math.prod(s.count for s in parts)
    if _choose_dense(count, q, "auto"):
        mask = np.empty(q, dtype=bool)
        for start in range(0, q, _CHUNK):
            idx = np.arange(start, min(q, start + _CHUNK), dtype=np.int64)
            block = np.ones(len(idx), dtype=bool)
            for s in parts:
                block &= s.mask[idx % s.q]
            mask[start:start + len(idx)] = block
        return ResidueSet.from_mask(mask, family, "dense")
    # sparse: lift the member lists pairwise, x = a + M * ((b - a) / M mod m)
    acc, M = np.zeros(1, dtype=np.int64), 1
    for s in parts:
        m = s.q
        inv = pow(M, -1, m) if m > 1 else 0
        t = (s.elements[None, :] - acc[:, None]) % m * inv % m
        acc = (acc[:, None] + M * t).ravel()
        M *= m
    acc.sort()
    return ResidueSet(q, members=acc, family=family)


def stats(s: ResidueSet) -> tuple[float, float]:
    """(r_q, s_q) = (|set| / q, q / |set|)."""
    if s.count == 0:
        raise ValueError("statistics of an empty set are undefined")
    return s.count / s.q, s.q / s.count
