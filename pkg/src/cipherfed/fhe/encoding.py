"""Slot encoding via the canonical embedding.

A real vector of up to N/2 values is interpolated into an integer
polynomial whose evaluations at the 2N-th roots of unity zeta^(5^j)
reproduce the scaled inputs. Using the 5^j orbit (rather than plain
ascending odd exponents) makes Galois automorphisms X -> X^(5^r) act as
cyclic slot rotations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CapacityError, DomainError, LevelError
from .nttmath import addmod, shoup_constant, shoup_mul, submod
from .params import EncryptionParams
from .poly import COEFF, RingPoly, from_signed_coeffs, ntt_forward, ntt_inverse


@dataclass(frozen=True)
class Plaintext:
    poly: RingPoly
    scale: float
    level: int

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("plaintext scale must be positive")
        if not 0 <= self.level <= self.poly.params.max_level:
            raise LevelError(f"level {self.level} outside the modulus chain")


def _slot_spectrum(values: np.ndarray, params: EncryptionParams) -> np.ndarray:
    """Place slot values (and conjugates) on the length-2N spectrum."""
    two_n = 2 * params.ring_degree
    spec = np.zeros(two_n, dtype=np.complex128)
    idx = np.asarray(params.rot_group[:values.size], dtype=np.int64)
    spec[idx] = values
    spec[two_n - idx] = np.conj(values)
    return spec


def encode(values, params: EncryptionParams, level: int | None = None,
           scale: float | None = None) -> Plaintext:
    """Encode real values into a plaintext at the given level.

    Shorter inputs are zero-padded to the slot count. Decoding the result
    recovers the inputs to within ~2^-30 at the default scale of 2^40.
    """
    if level is None:
        level = params.max_level
    if not 0 <= level <= params.max_level:
        raise LevelError(f"level {level} outside the modulus chain")
    scale = params.scale if scale is None else scale
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size > params.slot_count:
        raise CapacityError(
            f"{vals.size} values exceed the {params.slot_count}-slot capacity")
    if vals.size and not np.all(np.isfinite(vals)):
        raise DomainError("cannot encode non-finite values")

    spec = _slot_spectrum(vals * scale, params)
    coeffs = np.fft.fft(spec)[:params.ring_degree].real / params.ring_degree
    rounded = np.round(coeffs)
    if np.any(np.abs(rounded) > 2 ** 62):
        raise DomainError("encoded coefficients overflow the RNS word size")
    poly = from_signed_coeffs(rounded.astype(np.int64), params,
                              tuple(range(level + 1)))
    return Plaintext(poly=ntt_forward(poly), scale=scale, level=level)


def encode_scalar(c: float, params: EncryptionParams, level: int | None = None,
                  scale: float | None = None) -> Plaintext:
    """Encode one scalar broadcast to every slot (used by weighted sums)."""
    return encode(np.full(params.slot_count, float(c)), params, level, scale)


def decode(pt: Plaintext, count: int) -> np.ndarray:
    """First `count` slot values of a plaintext, scale divided out."""
    params = pt.poly.params
    if count > params.slot_count:
        raise CapacityError(
            f"count {count} exceeds the {params.slot_count}-slot capacity")
    poly = pt.poly if pt.poly.domain_tag == COEFF else ntt_inverse(pt.poly)
    coeffs = _centered_float_coeffs(poly)
    return _evaluate_slots(coeffs, params, count) / pt.scale


def _center(residues: np.ndarray, q: int) -> np.ndarray:
    v = residues.astype(np.int64)
    return np.where(v > q // 2, v - q, v)


_GARNER_CACHE: dict[tuple[int, ...], list] = {}


def _garner_constants(primes: tuple[int, ...]) -> list:
    """Per-k fixed multipliers (with Shoup tables) for the mixed-radix
    reconstruction below."""
    consts = _GARNER_CACHE.get(primes)
    if consts is None:
        consts = []
        for k in range(1, len(primes)):
            qk = primes[k]
            radixes = []
            radix = 1
            for j in range(k):
                radixes.append((np.uint64(radix), shoup_constant(radix, qk)))
                radix = radix * primes[j] % qk
            inv = pow(radix, qk - 2, qk)
            consts.append((radixes, np.uint64(inv), shoup_constant(inv, qk)))
        _GARNER_CACHE[primes] = consts
    return consts


def _centered_float_coeffs(poly: RingPoly) -> np.ndarray:
    """Centered CRT reconstruction via Garner's mixed-radix digits.

    Digit k is reduced mod prime k, so every step stays in word
    arithmetic; the final float64 combination is exact to ~2^-50
    relative, far inside the decoding noise budget.
    """
    primes = poly.primes
    consts = _garner_constants(primes)
    digits = [_center(poly.residues[0], primes[0])]
    for k in range(1, len(primes)):
        qk = primes[k]
        qk64 = np.uint64(qk)
        radixes, inv, inv_shoup = consts[k - 1]
        # acc = sum_{j<k} digits[j] * prod_{i<j} q_i, reduced mod qk
        acc = np.zeros(poly.params.ring_degree, dtype=np.uint64)
        for j in range(k):
            r, r_shoup = radixes[j]
            term = shoup_mul(np.mod(digits[j], qk).astype(np.uint64),
                             r, r_shoup, qk64)
            acc = addmod(acc, term, qk64)
        diff = submod(poly.residues[k], acc, qk64)
        digits.append(_center(shoup_mul(diff, inv, inv_shoup, qk64), qk))
    out = digits[-1].astype(np.float64)
    for k in range(len(primes) - 2, -1, -1):
        out = out * float(primes[k]) + digits[k].astype(np.float64)
    return out


def _evaluate_slots(coeffs: np.ndarray, params: EncryptionParams,
                    count: int) -> np.ndarray:
    two_n = 2 * params.ring_degree
    evals = np.fft.ifft(coeffs, n=two_n) * two_n
    rot = params.rot_group
    idx = np.asarray(rot[:count], dtype=np.int64)
    return evals[idx].real if count else np.zeros(0)
