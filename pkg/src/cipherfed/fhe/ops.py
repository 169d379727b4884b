"""Homomorphic operations: encrypt, decrypt, addition, plaintext
multiplication, rescaling, and slot rotation.

Ciphertexts are (c0, c1) pairs in the NTT domain. Only the operations the
encrypted weighted-average pipeline needs are provided; there is no
ciphertext-ciphertext multiplication and no bootstrapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AlignmentError, DomainError, LevelError, ParameterError
from .encoding import Plaintext
from .keys import KeyMaterial, PublicMaterial, ShoupPoly
from .nttmath import shoup_constant, shoup_mul
from .params import EncryptionParams
from .poly import (NTT, RingPoly, ntt_forward, ntt_inverse, sample_gaussian,
                   sample_ternary)

SCALE_MATCH_RTOL = 2.0 ** -30


@dataclass(frozen=True)
class Ciphertext:
    c0: RingPoly
    c1: RingPoly
    scale: float
    level: int

    def __post_init__(self):
        if self.c0.domain_tag != self.c1.domain_tag:
            raise DomainError("ciphertext halves in different domains")
        if self.c0.prime_indices != self.c1.prime_indices:
            raise AlignmentError("ciphertext halves on different bases")
        if len(self.c0.prime_indices) != self.level + 1:
            raise LevelError("active prime count does not match level")

    @property
    def params(self) -> EncryptionParams:
        return self.c0.params


def _public_part(keys) -> PublicMaterial:
    return keys.public if isinstance(keys, KeyMaterial) else keys


def _mul_fixed(p: RingPoly, fixed: ShoupPoly, rows: tuple[int, ...]) -> RingPoly:
    """Pointwise product with a fixed (Shoup-precomputed) polynomial,
    using the key rows whose basis indices are `rows`."""
    out = np.empty_like(p.residues)
    for i, idx in enumerate(p.prime_indices):
        pos = fixed.poly.prime_indices.index(idx)
        q = np.uint64(fixed.poly.primes[pos])
        out[i] = shoup_mul(p.residues[i], fixed.poly.residues[pos],
                           fixed.shoup[pos], q)
    return RingPoly(p.params, p.prime_indices, out, NTT)


def encrypt(pt: Plaintext, keys, rng_seed: int = 0) -> Ciphertext:
    """Public-key encryption; deterministic in rng_seed."""
    pub = _public_part(keys)
    params = pub.params
    if pt.poly.params != params:
        raise ParameterError("plaintext was encoded under different parameters")
    basis = tuple(range(pt.level + 1))
    rng = np.random.default_rng(np.random.SeedSequence([rng_seed, 0xE2C]))
    v = ntt_forward(sample_ternary(params, basis, rng))
    e0 = ntt_forward(sample_gaussian(params, basis, rng))
    e1 = ntt_forward(sample_gaussian(params, basis, rng))
    c0 = _mul_fixed(v, pub.pk0, basis).add(e0).add(pt.poly)
    c1 = _mul_fixed(v, pub.pk1, basis).add(e1)
    return Ciphertext(c0=c0, c1=c1, scale=pt.scale, level=pt.level)


def decrypt(ct: Ciphertext, keys: KeyMaterial) -> Plaintext:
    """c0 + c1*s at the ciphertext's level and scale."""
    if not isinstance(keys, KeyMaterial):
        raise ParameterError("decryption requires full key material")
    if keys.params != ct.params:
        raise ParameterError("ciphertext and keys use different parameters")
    basis = ct.c0.prime_indices
    m = ct.c0.add(_mul_fixed(ct.c1, keys.secret_key, basis))
    return Plaintext(poly=m, scale=ct.scale, level=ct.level)


def add_ct(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    if a.level != b.level:
        raise AlignmentError(f"level mismatch: {a.level} vs {b.level}")
    if abs(a.scale - b.scale) > SCALE_MATCH_RTOL * a.scale:
        raise AlignmentError(f"scale mismatch: {a.scale} vs {b.scale}")
    return Ciphertext(c0=a.c0.add(b.c0), c1=a.c1.add(b.c1),
                      scale=a.scale, level=a.level)


def mul_plain(ct: Ciphertext, pt: Plaintext) -> Ciphertext:
    """Slotwise ciphertext * plaintext; scales multiply. Follow with
    rescale() to bring the scale back down."""
    if ct.level != pt.level:
        raise AlignmentError(f"level mismatch: {ct.level} vs {pt.level}")
    return Ciphertext(c0=ct.c0.mul_pointwise(pt.poly),
                      c1=ct.c1.mul_pointwise(pt.poly),
                      scale=ct.scale * pt.scale, level=ct.level)


def _div_round_drop(p: RingPoly, drop_index: int) -> RingPoly:
    """Exact rounded division by the basis prime at drop_index; that
    prime leaves the basis. Input and output are NTT-domain."""
    params = p.params
    full = params.modulus_chain + (params.key_switch_prime,)
    q_drop = full[drop_index]
    pos = p.prime_indices.index(drop_index)
    ntts = params.ntts
    dropped = ntts[drop_index].inverse(p.residues[pos]).astype(np.int64)
    dropped = np.where(dropped > q_drop // 2, dropped - q_drop, dropped)

    keep = tuple(i for i in p.prime_indices if i != drop_index)
    out = np.empty((len(keep), params.ring_degree), dtype=np.uint64)
    for row, idx in enumerate(keep):
        qj = full[idx]
        qq = np.uint64(qj)
        corr = ntts[idx].forward(np.mod(dropped, qj).astype(np.uint64))
        src = p.residues[p.prime_indices.index(idx)]
        diff = src + (qq - corr)
        diff = np.where(diff >= qq, diff - qq, diff)
        inv = pow(q_drop % qj, qj - 2, qj)
        out[row] = shoup_mul(diff, np.uint64(inv), shoup_constant(inv, qj), qq)
    return RingPoly(params, keep, out, NTT)


def rescale(ct: Ciphertext) -> Ciphertext:
    """Drop the top chain prime: level decreases by one and the scale is
    divided by exactly that prime."""
    if ct.level < 1:
        raise LevelError("cannot rescale at level 0: modulus chain exhausted")
    drop = ct.level
    q_drop = ct.params.modulus_chain[drop]
    return Ciphertext(c0=_div_round_drop(ct.c0, drop),
                      c1=_div_round_drop(ct.c1, drop),
                      scale=ct.scale / q_drop, level=ct.level - 1)


def rotate(ct: Ciphertext, step: int, keys) -> Ciphertext:
    """Cyclic left shift of the slot vector by `step`.

    Requires the Galois key for the reduced step; step 0 is the identity
    and needs no key.
    """
    pub = _public_part(keys)
    params = ct.params
    step = int(step) % params.slot_count
    if step == 0:
        return ct
    gkey = pub.galois_key(step)

    two_n = 2 * params.ring_degree
    g = pow(5, step, two_n)
    c0_auto = ntt_inverse(ct.c0).automorphism(g)
    c1_auto = ntt_inverse(ct.c1).automorphism(g)

    active = ct.c0.prime_indices
    special = len(params.modulus_chain)
    ext = active + (special,)
    full = params.modulus_chain + (params.key_switch_prime,)
    ntts = params.ntts

    acc_b = None
    acc_a = None
    for digit_pos, digit_idx in enumerate(active):
        qi = full[digit_idx]
        d = c1_auto.residues[digit_pos].astype(np.int64)
        d = np.where(d > qi // 2, d - qi, d)
        rows = np.empty((len(ext), params.ring_degree), dtype=np.uint64)
        for row, idx in enumerate(ext):
            rows[row] = ntts[idx].forward(np.mod(d, full[idx]).astype(np.uint64))
        d_ext = RingPoly(params, ext, rows, NTT)
        term_b = _mul_fixed(d_ext, gkey.ks_b[digit_idx], ext)
        term_a = _mul_fixed(d_ext, gkey.ks_a[digit_idx], ext)
        acc_b = term_b if acc_b is None else acc_b.add(term_b)
        acc_a = term_a if acc_a is None else acc_a.add(term_a)

    ks0 = _div_round_drop(acc_b, special)
    ks1 = _div_round_drop(acc_a, special)
    c0 = ntt_forward(c0_auto).add(ks0)
    return Ciphertext(c0=c0, c1=ks1, scale=ct.scale, level=ct.level)
