"""Vectorized modular arithmetic and negacyclic NTT over word-sized primes.

All residue vectors are numpy uint64 arrays. Products that would overflow
64 bits go through Shoup multiplication (precomputed floor(w<<64 / q)
constants, high words via 32-bit limb splitting) when one operand is
fixed, and through Python-int object arithmetic otherwise. Primes must be
below 2^62 so that sums of two residues stay clear of the wrap point.
"""

from __future__ import annotations

import numpy as np

_M32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)

# Deterministic Miller-Rabin witness set for n < 2^64.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test for 64-bit integers."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def find_ntt_primes(bits: int, count: int, two_n: int, skip: tuple[int, ...] = ()) -> list[int]:
    """Smallest `count` primes q > 2^bits with q = 1 (mod two_n).

    Searching upward from 2^bits keeps rescale ratios close to 1 and
    guarantees q exceeds a scale of 2^bits, as the parameter invariants
    require.
    """
    found: list[int] = []
    k = (1 << bits) // two_n + 1
    while len(found) < count:
        q = k * two_n + 1
        if q not in skip and q not in found and is_prime(q):
            found.append(q)
        k += 1
    return found


def _find_2nth_root(q: int, two_n: int) -> int:
    """Primitive two_n-th root of unity mod q (requires two_n | q-1)."""
    if (q - 1) % two_n != 0:
        raise ValueError(f"{two_n} does not divide q-1 for q={q}")
    cofactor = (q - 1) // two_n
    n = two_n // 2
    for x in range(2, q):
        r = pow(x, cofactor, q)
        # two_n is a power of two, so r^n == -1 pins the order to two_n.
        if pow(r, n, q) == q - 1:
            return r
    raise ValueError(f"no primitive {two_n}-th root mod {q}")


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def mulhi64(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """High 64 bits of the 128-bit product, elementwise."""
    a_lo = a & _M32
    a_hi = a >> _S32
    b_lo = b & _M32
    b_hi = b >> _S32
    t = a_lo * b_lo
    t1 = a_hi * b_lo + (t >> _S32)
    t2 = a_lo * b_hi + (t1 & _M32)
    return a_hi * b_hi + (t1 >> _S32) + (t2 >> _S32)


def shoup_constant(w, q: int):
    """floor(w << 64 / q) for a fixed multiplier (scalar or array)."""
    if isinstance(w, np.ndarray):
        return ((w.astype(object) << 64) // q).astype(np.uint64)
    return np.uint64((int(w) << 64) // q)


def shoup_mul(a: np.ndarray, w, w_shoup, q: np.uint64) -> np.ndarray:
    """a * w mod q with w fixed and w_shoup = floor(w<<64/q).

    Valid for any a < 2^64; the quotient estimate is off by at most one,
    so the raw result lands in [0, 2q) and one conditional subtract
    finishes the reduction.
    """
    hi = mulhi64(a, w_shoup)
    r = a * w - hi * q
    return np.where(r >= q, r - q, r)


def mulmod(a: np.ndarray, b, q: int) -> np.ndarray:
    """Generic a * b mod q via object arithmetic (both operands varying)."""
    if isinstance(b, np.ndarray):
        r = (a.astype(object) * b.astype(object)) % int(q)
    else:
        r = (a.astype(object) * int(b)) % int(q)
    return r.astype(np.uint64)


def addmod(a: np.ndarray, b: np.ndarray, q: np.uint64) -> np.ndarray:
    r = a + b
    return np.where(r >= q, r - q, r)


def submod(a: np.ndarray, b: np.ndarray, q: np.uint64) -> np.ndarray:
    r = a + (q - b)
    return np.where(r >= q, r - q, r)


class PrimeNtt:
    """Negacyclic NTT context for one prime q = 1 (mod 2n).

    forward() maps natural-order coefficients to the bit-reversed
    evaluation order; inverse() undoes it. Pointwise products in the
    transformed domain correspond to multiplication in Z_q[X]/(X^n + 1).
    """

    def __init__(self, q: int, n: int):
        if n & (n - 1) != 0:
            raise ValueError("ring degree must be a power of two")
        if not is_prime(q) or (q - 1) % (2 * n) != 0:
            raise ValueError(f"q={q} is not an NTT prime for degree {n}")
        self.q = np.uint64(q)
        self.q_int = q
        self.n = n

        psi = _find_2nth_root(q, 2 * n)
        ipsi = pow(psi, q - 2, q)
        rev = _bit_reverse_indices(n)
        pows = np.empty(n, dtype=np.uint64)
        ipows = np.empty(n, dtype=np.uint64)
        acc = 1
        iacc = 1
        for i in range(n):
            pows[i] = acc
            ipows[i] = iacc
            acc = acc * psi % q
            iacc = iacc * ipsi % q
        self.psi_br = pows[rev].copy()
        self.ipsi_br = ipows[rev].copy()
        self.psi_br_shoup = shoup_constant(self.psi_br, q)
        self.ipsi_br_shoup = shoup_constant(self.ipsi_br, q)
        n_inv = pow(n, q - 2, q)
        self.n_inv = np.uint64(n_inv)
        self.n_inv_shoup = shoup_constant(n_inv, q)

    def forward(self, a: np.ndarray) -> np.ndarray:
        q = self.q
        out = np.ascontiguousarray(a, dtype=np.uint64).copy()
        n = self.n
        t = n
        m = 1
        while m < n:
            t >>= 1
            blk = out.reshape(m, 2, t)
            s = self.psi_br[m:2 * m, None]
            ss = self.psi_br_shoup[m:2 * m, None]
            u = blk[:, 0, :]
            v = shoup_mul(blk[:, 1, :], s, ss, q)
            s0 = addmod(u, v, q)
            s1 = submod(u, v, q)
            blk[:, 0, :] = s0
            blk[:, 1, :] = s1
            m <<= 1
        return out

    def inverse(self, a: np.ndarray) -> np.ndarray:
        q = self.q
        out = np.ascontiguousarray(a, dtype=np.uint64).copy()
        n = self.n
        t = 1
        m = n
        while m > 1:
            h = m >> 1
            blk = out.reshape(h, 2, t)
            s = self.ipsi_br[h:2 * h, None]
            ss = self.ipsi_br_shoup[h:2 * h, None]
            u = blk[:, 0, :]
            v = blk[:, 1, :]
            s0 = addmod(u, v, q)
            d = u + (q - v)  # lazy, < 2q; shoup_mul tolerates it
            s1 = shoup_mul(d, s, ss, q)
            blk[:, 0, :] = s0
            blk[:, 1, :] = s1
            t <<= 1
            m = h
        return shoup_mul(out, self.n_inv, self.n_inv_shoup, q)


class StackedNtt:
    """Transforms several prime rows in one pass.

    Stacking the per-prime twiddle tables lets every butterfly stage run
    as a single broadcast operation over a (rows, n) matrix, which cuts
    the Python-level overhead roughly in proportion to the row count.
    """

    def __init__(self, contexts: tuple[PrimeNtt, ...]):
        self.n = contexts[0].n
        self.q = np.array([c.q for c in contexts], dtype=np.uint64)
        self.psi_br = np.stack([c.psi_br for c in contexts])
        self.psi_br_shoup = np.stack([c.psi_br_shoup for c in contexts])
        self.ipsi_br = np.stack([c.ipsi_br for c in contexts])
        self.ipsi_br_shoup = np.stack([c.ipsi_br_shoup for c in contexts])
        self.n_inv = np.array([c.n_inv for c in contexts],
                              dtype=np.uint64)[:, None]
        self.n_inv_shoup = np.array([c.n_inv_shoup for c in contexts],
                                    dtype=np.uint64)[:, None]

    def forward(self, mat: np.ndarray) -> np.ndarray:
        n = self.n
        rows = mat.shape[0]
        out = np.ascontiguousarray(mat, dtype=np.uint64).copy()
        q = self.q[:, None, None]
        t = n
        m = 1
        while m < n:
            t >>= 1
            blk = out.reshape(rows, m, 2, t)
            s = self.psi_br[:, m:2 * m, None]
            ss = self.psi_br_shoup[:, m:2 * m, None]
            u = blk[:, :, 0, :]
            v = shoup_mul(blk[:, :, 1, :], s, ss, q)
            s0 = addmod(u, v, q)
            s1 = submod(u, v, q)
            blk[:, :, 0, :] = s0
            blk[:, :, 1, :] = s1
            m <<= 1
        return out

    def inverse(self, mat: np.ndarray) -> np.ndarray:
        n = self.n
        rows = mat.shape[0]
        out = np.ascontiguousarray(mat, dtype=np.uint64).copy()
        q = self.q[:, None, None]
        t = 1
        m = n
        while m > 1:
            h = m >> 1
            blk = out.reshape(rows, h, 2, t)
            s = self.ipsi_br[:, h:2 * h, None]
            ss = self.ipsi_br_shoup[:, h:2 * h, None]
            u = blk[:, :, 0, :]
            v = blk[:, :, 1, :]
            s0 = addmod(u, v, q)
            d = u + (q - v)
            s1 = shoup_mul(d, s, ss, q)
            blk[:, :, 0, :] = s0
            blk[:, :, 1, :] = s1
            t <<= 1
            m = h
        return shoup_mul(out, self.n_inv, self.n_inv_shoup, self.q[:, None])
