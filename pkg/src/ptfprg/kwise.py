"""k-wise independent discretized samples and their near-Gaussian conversion.

The classical construction: a seed is read as k coefficients of a random
polynomial of degree k-1 over GF(2^m); output word i is the top M bits of the
polynomial evaluated at the i-th field element.  Any k output words are then
jointly uniform on [0, 2^M)^k.  Words are turned into near-Gaussians through
the Box-Muller transform, two words per output coordinate, so a vector whose
words are 2k-wise independent has k-wise independent near-Gaussian
coordinates.

The field GF(2^m) uses a fixed irreducible polynomial per m (table below,
m <= 64) so that the integer expansion layer is bit-exact across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KWiseSpec",
    "KWiseSeed",
    "IRREDUCIBLE",
    "field_width",
    "seed_length",
    "gaussian_word_spec",
    "gaussian_seed_length",
    "expand",
    "expand_batch",
    "to_near_gaussian",
    "kwise_gaussian_vector",
    "kwise_gaussian_batch",
    "gf_mul",
    "enumerate_seeds",
]

# Lexicographically smallest low-weight irreducible polynomial of each degree,
# stored with the leading bit included (e.g. 0x13 = x^4 + x + 1).
IRREDUCIBLE = {
    1: 0x3, 2: 0x7, 3: 0xB, 4: 0x13, 5: 0x25, 6: 0x43, 7: 0x83, 8: 0x11B,
    9: 0x203, 10: 0x409, 11: 0x805, 12: 0x1009, 13: 0x201B, 14: 0x4021,
    15: 0x8003, 16: 0x1002B, 17: 0x20009, 18: 0x40009, 19: 0x80027,
    20: 0x100009, 21: 0x200005, 22: 0x400003, 23: 0x800021, 24: 0x100001B,
    25: 0x2000009, 26: 0x400001B, 27: 0x8000027, 28: 0x10000003,
    29: 0x20000005, 30: 0x40000003, 31: 0x80000009, 32: 0x10000008D,
    33: 0x200000401, 34: 0x400000081, 35: 0x800000005, 36: 0x1000000201,
    37: 0x2000000053, 38: 0x4000000063, 39: 0x8000000011, 40: 0x10000000039,
    41: 0x20000000009, 42: 0x40000000081, 43: 0x80000000059,
    44: 0x100000000021, 45: 0x20000000001B, 46: 0x400000000003,
    47: 0x800000000021, 48: 0x100000000002D, 49: 0x2000000000201,
    50: 0x400000000001D, 51: 0x800000000004B, 52: 0x10000000000009,
    53: 0x20000000000047, 54: 0x40000000000201, 55: 0x80000000000081,
    56: 0x100000000000095, 57: 0x200000000000011, 58: 0x400000000080001,
    59: 0x800000000000095, 60: 0x1000000000000003, 61: 0x2000000000000027,
    62: 0x4000000020000001, 63: 0x8000000000000003, 64: 0x1000000000000001B,
}

_TABLE_MAX_M = 16  # exp/log tables kept up to 2^16 entries


@dataclass
class KWiseSpec:
    """Independence parameter k, coordinate count n, bits per word M.

    M must be even (and >= 2) wherever words feed the Box-Muller pair
    conversion; the raw integer expansion accepts any M >= 1, which the
    exhaustive uniformity checks at M = 1 rely on.
    """

    k: int
    n: int
    M: int

    def __post_init__(self):
        if self.k < 1 or self.n < 1 or self.M < 1:
            raise ValueError(f"invalid spec k={self.k} n={self.n} M={self.M}")
        if field_width(self) > 64:
            raise ValueError(f"field width {field_width(self)} exceeds the m <= 64 table")


@dataclass
class KWiseSeed:
    """Seed bits, most-significant-first, packed into an int."""

    bits: int
    nbits: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.nbits:
            raise ValueError("seed bits do not fit the declared length")

    @classmethod
    def from_hex(cls, s, nbits):
        return cls(int(s, 16), nbits)

    def to_hex(self):
        width = (self.nbits + 3) // 4
        return format(self.bits, f"0{width}x")


def field_width(spec: KWiseSpec) -> int:
    """m = max(M, ceil(log2 n)): wide enough for n points and M output bits."""
    return max(spec.M, (max(spec.n, 2) - 1).bit_length())


def seed_length(spec: KWiseSpec) -> int:
    """Seed bits consumed by expand: k words of m bits."""
    return spec.k * field_width(spec)


def gaussian_word_spec(spec: KWiseSpec) -> KWiseSpec:
    """Word-level spec behind a k-wise Gaussian vector.

    Each Gaussian coordinate consumes two words, so k-wise independent
    coordinates need 2k-wise independent words over 2n positions.
    """
    return KWiseSpec(k=2 * spec.k, n=2 * spec.n, M=spec.M)


def gaussian_seed_length(spec: KWiseSpec) -> int:
    return seed_length(gaussian_word_spec(spec))


# -- GF(2^m) -----------------------------------------------------------------

def gf_mul(a: int, b: int, m: int) -> int:
    """Carry-less multiply mod the degree-m irreducible (scalar, exact)."""
    red = IRREDUCIBLE[m]
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a >> m:
            a ^= red
    return r


class _GFVec:
    """Vectorized GF(2^m) multiplication by constants, for m <= 64.

    For m <= 16, sentinel-extended exp/log tables make a constant multiply
    two gathers and an add with no masking or modulo: log(0) is stored as
    the sentinel 2q, and the exp table is zero-padded out to 4q, so any
    operand or constant equal to zero lands in the zero region.  Larger m
    uses a shift-and-reduce loop on uint64 arrays (exact up to m = 63;
    m = 64 falls back to scalar arithmetic).
    """

    def __init__(self, m):
        self.m = m
        self.red = IRREDUCIBLE[m]
        self.q = (1 << m) - 1
        self.exp3 = self.log_s = None
        if m <= _TABLE_MAX_M:
            self._build_tables()

    def _build_tables(self):
        m, q = self.m, self.q
        log_s = np.full(q + 1, 2 * q, dtype=np.int32)  # sentinel for 0
        exp3 = np.zeros(4 * q + 2, dtype=np.uint32)
        if m == 1:
            log_s[1] = 0
            exp3[0] = 1
            self.exp3, self.log_s = exp3, log_s
            return
        for gen in range(2, 1 << m):
            v = 1
            ok = True
            log_s[1:] = 2 * q
            for i in range(q):
                if log_s[v] != 2 * q:
                    ok = False
                    break
                log_s[v] = i
                exp3[i] = v
                v = gf_mul(v, gen, m)
            if ok and v == 1:
                exp3[q : 2 * q] = exp3[:q]
                self.exp3, self.log_s = exp3, log_s
                return
        raise RuntimeError(f"no generator found for GF(2^{self.m})")

    def log_const(self, c: int) -> int:
        """Table index of a constant; zero maps to the sentinel."""
        return int(self.log_s[c])

    def mul_const(self, a: np.ndarray, c: int) -> np.ndarray:
        """Elementwise a[i] * c in GF(2^m); a is an unsigned integer array."""
        if self.exp3 is not None:
            return self.exp3[self.log_s[a] + self.log_const(c)].astype(a.dtype)
        if c == 0:
            return np.zeros_like(a)
        if self.m > 63:  # reduction polynomial would not fit a uint64
            return np.array([gf_mul(int(v), c, self.m) for v in a.ravel()],
                            dtype=np.uint64).reshape(a.shape)
        out = np.zeros_like(a)
        acc = a.astype(np.uint64).copy()
        red = np.uint64(self.red)
        top = np.uint64(1) << np.uint64(self.m)
        cc = c
        while cc:
            if cc & 1:
                out ^= acc
            cc >>= 1
            acc <<= np.uint64(1)
            hi = (acc & top) != 0
            acc[hi] ^= red
        return out


_GFVEC_CACHE = {}


def _gfvec(m):
    gv = _GFVEC_CACHE.get(m)
    if gv is None:
        gv = _GFVEC_CACHE[m] = _GFVec(m)
    return gv


# -- expansion ---------------------------------------------------------------

def _split_coeffs(seed: KWiseSeed, spec: KWiseSpec):
    m = field_width(spec)
    need = seed_length(spec)
    if seed.nbits != need:
        raise ValueError(f"seed length {seed.nbits} != required {need}")
    mask = (1 << m) - 1
    return [(seed.bits >> (m * (spec.k - 1 - j))) & mask for j in range(spec.k)]


def expand(seed: KWiseSeed, spec: KWiseSpec):
    """n words in [0, 2^M): top M bits of the seed polynomial at points 0..n-1.

    The seed encodes coefficients c_0..c_{k-1} of sum_j c_j x^j; evaluations
    of a random degree-(k-1) polynomial at distinct field elements are k-wise
    independent and uniform.
    """
    m = field_width(spec)
    coeffs = _split_coeffs(seed, spec)
    shift = m - spec.M
    out = []
    for point in range(spec.n):
        acc = 0
        for c in reversed(coeffs):  # Horner, highest degree first
            acc = gf_mul(acc, point, m) ^ c
        out.append(acc >> shift)
    return out


def _contribution_tables(gv, spec, _cache={}):
    """T[j][c, i] = c * x_i^j over GF(2^m), as uint16 lookup tables.

    One spec's tables are kept at a time (they can run to ~100 MB for the
    widest generator configurations).
    """
    key = (gv.m, spec.k, spec.n)
    got = _cache.get(key)
    if got is None:
        logpow = np.empty((spec.k, spec.n), dtype=np.int32)
        for i in range(spec.n):
            p = 1
            for j in range(spec.k):
                logpow[j, i] = gv.log_const(p)
                p = gf_mul(p, i, gv.m)
        all_logs = gv.log_s[np.arange(gv.q + 1)]
        got = [gv.exp3[all_logs[:, None] + logpow[j][None, :]].astype(np.uint16)
               for j in range(spec.k)]
        _cache.clear()
        _cache[key] = got
    return got


def expand_batch(coeffs: np.ndarray, spec: KWiseSpec) -> np.ndarray:
    """Vectorized expand for a (S, k) array of coefficient words.

    word[s, i] = XOR_j coeffs[s, j] * x_i^j over GF(2^m), truncated to the
    top M bits.  For m <= 16 each coefficient contributes through one table
    gather; larger fields fall back to Horner with vector multiplies.
    """
    m = field_width(spec)
    if coeffs.shape[1] != spec.k:
        raise ValueError("coefficient array has wrong width")
    gv = _gfvec(m)
    S = coeffs.shape[0]
    if gv.exp3 is not None:
        tables = _contribution_tables(gv, spec)
        acc = np.zeros((S, spec.n), dtype=np.uint16)
        for j in range(spec.k):
            acc ^= tables[j][coeffs[:, j]]
        return (acc >> np.uint16(m - spec.M)).astype(np.uint64)
    out = np.empty((S, spec.n), dtype=np.uint64)
    for point in range(spec.n):
        acc = np.zeros(S, dtype=np.uint64)
        for j in range(spec.k - 1, -1, -1):  # Horner, highest first
            acc = gv.mul_const(acc, point) ^ coeffs[:, j].astype(np.uint64)
        out[:, point] = acc >> np.uint64(m - spec.M)
    return out


# -- Box-Muller --------------------------------------------------------------

def to_near_gaussian(words, M):
    """Box-Muller on consecutive word pairs.

    Words are rescaled to (0, 1] as (u+1)/2^M (avoiding log 0); the pair
    (u1, u2) maps to (r cos(2 pi u2), r sin(2 pi u2)) with r = sqrt(-2 ln u1).
    Output length equals input length; marginals converge to N(0,1) as M
    grows, with discretization error Theta(2^{-M/2}).
    """
    w = np.asarray(words, dtype=np.float64)
    if w.ndim == 0 or w.shape[-1] % 2:
        raise ValueError("even number of words required")
    u = (w + 1.0) * 2.0 ** (-M)
    u1 = u[..., 0::2]
    u2 = u[..., 1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * math.pi * u2
    out = np.empty_like(w)
    out[..., 0::2] = r * np.cos(ang)
    out[..., 1::2] = r * np.sin(ang)
    return out


def kwise_gaussian_vector(seed: KWiseSeed, spec: KWiseSpec) -> np.ndarray:
    """n near-Gaussians, any spec.k of them jointly independent.

    Two words per coordinate (the expand layer runs at 2k, 2n); each
    coordinate keeps the cosine branch of its own Box-Muller pair.
    """
    if spec.M < 2 or spec.M % 2:
        raise ValueError("Box-Muller conversion requires even M >= 2")
    words = expand(seed, gaussian_word_spec(spec))
    z = to_near_gaussian(np.asarray(words, dtype=np.float64), spec.M)
    return z[0::2]


def kwise_gaussian_batch(coeffs: np.ndarray, spec: KWiseSpec) -> np.ndarray:
    """Vectorized kwise_gaussian_vector: (S, 2k) coefficient words -> (S, n)."""
    if spec.M < 2 or spec.M % 2:
        raise ValueError("Box-Muller conversion requires even M >= 2")
    words = expand_batch(coeffs, gaussian_word_spec(spec))
    z = to_near_gaussian(words, spec.M)
    return z[:, 0::2]


def enumerate_seeds(spec: KWiseSpec):
    """All seeds for a spec, for exhaustive uniformity checks (tiny params)."""
    nb = seed_length(spec)
    for bits in range(1 << nb):
        yield KWiseSeed(bits, nb)
