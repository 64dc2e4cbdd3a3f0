"""Pairwise-independent hash families {0,1}^ell -> [k].

Two families behind one interface:

* ``gf2-affine`` -- h(x) = A.x xor v over GF(2), codomain size k = 2^j.
  Exactly pairwise independent; used wherever lemmas are checked
  bit-for-bit (the whole family is enumerable at ell <= 3).
* ``affine-mod-prime`` -- h(x) = ((a.x + b) mod p) mod k for a fixed
  prime p >= max(2^ell, 2^40 * k).  Works for arbitrary k >= 1 and is
  within bias 2k/p + (k/p)^2 of exact pairwise independence, which is
  negligible against desk-scale sampling error.  Used on the protocol
  path where k = ceil((1+eps)^j) is rarely a power of two.

The codomain [k] is represented 0-indexed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .bits import check_ell, parity, parity_u32, to_hex, from_hex

GF2_AFFINE = "gf2-affine"
AFFINE_MOD_PRIME = "affine-mod-prime"

# Mersenne primes large enough for every desk-scale (ell, k).
_PRIMES = ((1 << 61) - 1, (1 << 89) - 1, (1 << 127) - 1)


def _choose_prime(ell: int, k: int) -> int:
    need = max(1 << ell, (1 << 40) * k)
    for p in _PRIMES:
        if p >= need:
            return p
    raise ValueError(f"no configured prime covers ell={ell}, k={k}")


@dataclass(frozen=True)
class HashFn:
    """A sampled member of one of the two families."""

    family: str
    ell: int
    k: int
    # gf2-affine parameters: rows[i] is the GF(2) mask producing output
    # bit j-1-i (row 0 is the most significant output bit); shift is v.
    rows: tuple[int, ...] | None = None
    shift: int | None = None
    # affine-mod-prime parameters.
    a: int | None = None
    b: int | None = None
    p: int | None = None

    def eval(self, x: int) -> int:
        if self.family == GF2_AFFINE:
            y = 0
            for row in self.rows:
                y = (y << 1) | parity(row & x)
            return y ^ self.shift
        return ((self.a * x + self.b) % self.p) % self.k

    __call__ = eval

    def eval_many(self, xs) -> np.ndarray:
        """Vectorized eval for int arrays (falls back to a scalar loop)."""
        arr = np.asarray(xs, dtype=np.int64)
        if arr.size == 0:
            return arr.copy()
        if self.family == GF2_AFFINE:
            y = np.zeros(arr.shape, dtype=np.int64)
            u = arr.astype(np.uint32)
            for row in self.rows:
                y = (y << 1) | parity_u32(u & np.uint32(row))
            return y ^ self.shift
        if self.p == _PRIMES[0]:
            return self._eval_many_m61(arr)
        return np.fromiter((self.eval(int(x)) for x in arr), dtype=np.int64, count=arr.size)

    def _eval_many_m61(self, arr: np.ndarray) -> np.ndarray:
        # (a*x + b) mod (2^61 - 1) in uint64 pieces: split a = a_hi 2^24 + a_lo,
        # reduce a_hi*x*2^24 with 2^61 = 1 (mod p); x < 2^24 keeps products in range.
        m61 = np.uint64(self.p)
        x = arr.astype(np.uint64)
        a_hi = np.uint64(self.a >> 24)
        a_lo = np.uint64(self.a & ((1 << 24) - 1))
        t = a_hi * x
        term = (t >> np.uint64(37)) + ((t & np.uint64((1 << 37) - 1)) << np.uint64(24))
        tot = term + a_lo * x + np.uint64(self.b)
        tot = (tot & m61) + (tot >> np.uint64(61))
        tot = (tot & m61) + (tot >> np.uint64(61))
        tot = np.where(tot >= m61, tot - m61, tot)
        return (tot % np.uint64(self.k)).astype(np.int64)

    def to_json_dict(self) -> dict:
        d = {"family": self.family, "ell": self.ell, "k": self.k}
        if self.family == GF2_AFFINE:
            d["rows"] = [to_hex(r, self.ell) for r in self.rows]
            d["shift"] = self.shift
        else:
            d["a"] = self.a
            d["b"] = self.b
            d["p"] = self.p
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "HashFn":
        if d["family"] == GF2_AFFINE:
            return cls(
                family=GF2_AFFINE,
                ell=d["ell"],
                k=d["k"],
                rows=tuple(from_hex(r) for r in d["rows"]),
                shift=d["shift"],
            )
        return cls(
            family=AFFINE_MOD_PRIME, ell=d["ell"], k=d["k"], a=d["a"], b=d["b"], p=d["p"]
        )


def sample_hash(family: str, ell: int, k: int, rng: np.random.Generator) -> HashFn:
    """Draw a member uniformly from the requested family."""
    check_ell(ell)
    if k < 1:
        raise ValueError("k must be >= 1")
    if family == GF2_AFFINE:
        if k & (k - 1):
            raise ValueError(f"gf2-affine needs a power-of-two k, got {k}")
        j = k.bit_length() - 1
        rows = tuple(int(rng.integers(1 << ell)) for _ in range(j))
        shift = int(rng.integers(k))
        return HashFn(family=GF2_AFFINE, ell=ell, k=k, rows=rows, shift=shift)
    if family == AFFINE_MOD_PRIME:
        p = _choose_prime(ell, k)
        a = _uniform_below(p, rng)
        b = _uniform_below(p, rng)
        return HashFn(family=AFFINE_MOD_PRIME, ell=ell, k=k, a=a, b=b, p=p)
    raise ValueError(f"unknown hash family {family!r}")


def _uniform_below(p: int, rng: np.random.Generator) -> int:
    """Uniform int in [0, p) for p beyond the 64-bit draw range."""
    if p <= 1 << 63:
        return int(rng.integers(p))
    nbits = p.bit_length()
    nbytes = (nbits + 7) // 8
    mask = (1 << nbits) - 1
    while True:
        v = int.from_bytes(rng.bytes(nbytes), "big") & mask
        if v < p:
            return v


def eval_hash(h: HashFn, x: int) -> int:
    return h.eval(x)


def preimage_in_set(h: HashFn, y: int, s: Iterable[int]) -> list[int]:
    """Exact filtered subset {x in S : h(x) = y}, sorted."""
    return [x for x in sorted(s) if h.eval(x) == y]


def pairwise_bias_bound(h: HashFn) -> float:
    """Worst-case deviation of pair probabilities from 1/k^2.

    Zero for gf2-affine (exact family); the analytic 2k/p + (k/p)^2
    bound for affine-mod-prime.
    """
    if h.family == GF2_AFFINE:
        return 0.0
    r = h.k / h.p
    return 2 * r + r * r


def enumerate_family(family: str, ell: int, k: int) -> Iterator[HashFn]:
    """Yield every member of a finite family (gf2-affine only).

    The family has 2^(j*(ell+1)) members; callers should keep ell <= 3.
    """
    if family != GF2_AFFINE:
        raise ValueError("only the gf2-affine family is enumerable")
    if k & (k - 1):
        raise ValueError(f"gf2-affine needs a power-of-two k, got {k}")
    j = k.bit_length() - 1
    n_rows = 1 << (ell * j)
    for packed in range(n_rows):
        rows = tuple((packed >> (ell * i)) & ((1 << ell) - 1) for i in range(j))
        for shift in range(k):
            yield HashFn(family=GF2_AFFINE, ell=ell, k=k, rows=rows, shift=shift)


def family_size(family: str, ell: int, k: int) -> int:
    if family != GF2_AFFINE:
        raise ValueError("only the gf2-affine family is enumerable")
    j = k.bit_length() - 1
    return (1 << (ell * j)) * k


def identity_hash(ell: int) -> HashFn:
    """The identity member of gf2-affine with k = 2^ell (handy in tests)."""
    rows = tuple(1 << (ell - 1 - i) for i in range(ell))
    return HashFn(family=GF2_AFFINE, ell=ell, k=1 << ell, rows=rows, shift=0)
