"""Bit-vector helpers shared across the protocol modules.

Bit strings of length ell are represented as Python ints in [0, 2**ell);
bit i of the string is the coefficient of 2**i.  GF(2) inner products are
popcount parities of ANDed ints.
"""

from __future__ import annotations

import hashlib

import numpy as np

# Support sets and Walsh-Hadamard transforms are Theta(2**ell).
ELL_CAP = 24

_POP16 = np.unpackbits(
    np.arange(1 << 16, dtype=np.uint16).view(np.uint8).reshape(-1, 2), axis=1
).sum(axis=1)
PARITY16 = (_POP16 & 1).astype(np.uint8)


def parity(v: int) -> int:
    """GF(2) parity of an int's bits."""
    return v.bit_count() & 1


def dot2(a: int, b: int) -> int:
    """GF(2) inner product of two bit vectors."""
    return (a & b).bit_count() & 1


def parity_u32(vals: np.ndarray) -> np.ndarray:
    """Vectorized bit parity for arrays of ints < 2**32."""
    v = np.asarray(vals, dtype=np.uint32)
    return PARITY16[v & 0xFFFF] ^ PARITY16[v >> 16]


def check_ell(ell: int, cap: int = ELL_CAP) -> None:
    if not 1 <= ell <= cap:
        raise ValueError(f"ell={ell} outside supported range [1, {cap}]")


def to_bytes(x: int, ell: int) -> bytes:
    return int(x).to_bytes((ell + 7) // 8, "big")


def to_hex(x: int, ell: int) -> str:
    return to_bytes(x, ell).hex()


def from_hex(s: str) -> int:
    return int.from_bytes(bytes.fromhex(s), "big") if s else 0


def wht(vec: np.ndarray) -> np.ndarray:
    """In-place-style Walsh-Hadamard transform, exact over int64.

    out[d] = sum_x (-1)^(d.x) vec[x].  Length must be a power of two.
    Entries stay integers throughout; no rounding happens here.
    """
    v = np.array(vec, dtype=np.int64, copy=True)
    n = v.shape[0]
    if n & (n - 1):
        raise ValueError("WHT length must be a power of two")
    h = 1
    while h < n:
        v = v.reshape(-1, 2, h)
        a = v[:, 0, :].copy()
        b = v[:, 1, :].copy()
        v[:, 0, :] = a + b
        v[:, 1, :] = a - b
        v = v.reshape(n)
        h *= 2
    return v


def rng_from_key(*parts: bytes | int | str) -> np.random.Generator:
    """Deterministic RNG derived from a tuple of values via SHA-256.

    Used by replayable classical provers: the same key always yields the
    same stream, independent streams for distinct keys.
    """
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, int):
            p = p.to_bytes(16, "big", signed=True)
        elif isinstance(p, str):
            p = p.encode()
        h.update(len(p).to_bytes(4, "big"))
        h.update(p)
    seed = int.from_bytes(h.digest(), "big")
    return np.random.default_rng(seed)
