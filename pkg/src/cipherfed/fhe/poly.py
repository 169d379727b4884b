"""RNS polynomials over Z_q[X]/(X^N + 1).

A RingPoly holds one uint64 residue row per active prime. The active
basis is described by indices into the parameter set's full prime list
(modulus chain + key-switch prime), so level drops and key material can
share one representation. Values are immutable by convention: operations
return new polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ParameterError
from .nttmath import addmod, mulmod, submod
from .params import EncryptionParams

GAUSSIAN_STDDEV = 3.2

COEFF = "coeff"
NTT = "ntt"


@dataclass(frozen=True)
class RingPoly:
    params: EncryptionParams
    prime_indices: tuple[int, ...]
    residues: np.ndarray  # shape (len(prime_indices), ring_degree), uint64
    domain_tag: str

    def __post_init__(self):
        if self.residues.shape != (len(self.prime_indices), self.params.ring_degree):
            raise ParameterError("residue matrix shape does not match basis")
        if self.domain_tag not in (COEFF, NTT):
            raise DomainError(f"unknown domain tag {self.domain_tag!r}")

    @property
    def primes(self) -> tuple[int, ...]:
        full = self.params.modulus_chain + (self.params.key_switch_prime,)
        return tuple(full[i] for i in self.prime_indices)

    def _check_compatible(self, other: "RingPoly") -> None:
        if self.params is not other.params and self.params != other.params:
            raise ParameterError("polynomials from different parameter sets")
        if self.prime_indices != other.prime_indices:
            raise DomainError("active prime sets differ")
        if self.domain_tag != other.domain_tag:
            raise DomainError(
                f"domain mismatch: {self.domain_tag} vs {other.domain_tag}")

    def add(self, other: "RingPoly") -> "RingPoly":
        self._check_compatible(other)
        out = np.empty_like(self.residues)
        for i, q in enumerate(self.primes):
            out[i] = addmod(self.residues[i], other.residues[i], np.uint64(q))
        return RingPoly(self.params, self.prime_indices, out, self.domain_tag)

    def sub(self, other: "RingPoly") -> "RingPoly":
        self._check_compatible(other)
        out = np.empty_like(self.residues)
        for i, q in enumerate(self.primes):
            out[i] = submod(self.residues[i], other.residues[i], np.uint64(q))
        return RingPoly(self.params, self.prime_indices, out, self.domain_tag)

    def neg(self) -> "RingPoly":
        out = np.empty_like(self.residues)
        for i, q in enumerate(self.primes):
            qq = np.uint64(q)
            r = self.residues[i]
            out[i] = np.where(r == 0, r, qq - r)
        return RingPoly(self.params, self.prime_indices, out, self.domain_tag)

    def mul_pointwise(self, other: "RingPoly") -> "RingPoly":
        """Slotwise product; both operands must be in the NTT domain."""
        self._check_compatible(other)
        if self.domain_tag != NTT:
            raise DomainError("pointwise product requires NTT domain")
        out = np.empty_like(self.residues)
        for i, q in enumerate(self.primes):
            out[i] = mulmod(self.residues[i], other.residues[i], q)
        return RingPoly(self.params, self.prime_indices, out, NTT)

    def mul_scalar(self, c: int) -> "RingPoly":
        out = np.empty_like(self.residues)
        for i, q in enumerate(self.primes):
            out[i] = mulmod(self.residues[i], int(c) % q, q)
        return RingPoly(self.params, self.prime_indices, out, self.domain_tag)

    def automorphism(self, g: int) -> "RingPoly":
        """Apply X -> X^g (g odd). Coefficient domain only."""
        if self.domain_tag != COEFF:
            raise DomainError("automorphism requires coefficient domain")
        n = self.params.ring_degree
        two_n = 2 * n
        k = np.arange(n, dtype=np.int64)
        dest = (k * (g % two_n)) % two_n
        sign_flip = dest >= n
        dest = np.where(sign_flip, dest - n, dest)
        out = np.empty_like(self.residues)
        for i, q in enumerate(self.primes):
            qq = np.uint64(q)
            row = self.residues[i]
            vals = np.where(sign_flip, np.where(row == 0, row, qq - row), row)
            tgt = np.empty_like(row)
            tgt[dest] = vals
            out[i] = tgt
        return RingPoly(self.params, self.prime_indices, out, COEFF)

    def drop_primes(self, keep: tuple[int, ...]) -> "RingPoly":
        """Restrict to a sub-basis (rows are selected, not recomputed)."""
        pos = [self.prime_indices.index(i) for i in keep]
        return RingPoly(self.params, tuple(keep),
                        np.ascontiguousarray(self.residues[pos]), self.domain_tag)


def ntt_forward(p: RingPoly) -> RingPoly:
    """Coefficient domain -> NTT (evaluation) domain."""
    if p.domain_tag != COEFF:
        raise DomainError("ntt_forward expects a coefficient-domain polynomial")
    ctx = p.params.stacked_ntt(p.prime_indices)
    return RingPoly(p.params, p.prime_indices, ctx.forward(p.residues), NTT)


def ntt_inverse(p: RingPoly) -> RingPoly:
    """NTT domain -> coefficient domain."""
    if p.domain_tag != NTT:
        raise DomainError("ntt_inverse expects an NTT-domain polynomial")
    ctx = p.params.stacked_ntt(p.prime_indices)
    return RingPoly(p.params, p.prime_indices, ctx.inverse(p.residues), COEFF)


def from_signed_coeffs(values: np.ndarray, params: EncryptionParams,
                       prime_indices: tuple[int, ...]) -> RingPoly:
    """Build a coefficient-domain polynomial from signed int64 coefficients."""
    full = params.modulus_chain + (params.key_switch_prime,)
    res = np.empty((len(prime_indices), params.ring_degree), dtype=np.uint64)
    for row, idx in enumerate(prime_indices):
        res[row] = np.mod(values, full[idx]).astype(np.uint64)
    return RingPoly(params, prime_indices, res, COEFF)


def sample_ternary(params: EncryptionParams, prime_indices: tuple[int, ...],
                   rng: np.random.Generator) -> RingPoly:
    v = rng.integers(-1, 2, params.ring_degree).astype(np.int64)
    return from_signed_coeffs(v, params, prime_indices)


def sample_gaussian(params: EncryptionParams, prime_indices: tuple[int, ...],
                    rng: np.random.Generator,
                    stddev: float = GAUSSIAN_STDDEV) -> RingPoly:
    v = np.round(rng.normal(0.0, stddev, params.ring_degree)).astype(np.int64)
    return from_signed_coeffs(v, params, prime_indices)


def sample_uniform(params: EncryptionParams, prime_indices: tuple[int, ...],
                   rng: np.random.Generator) -> RingPoly:
    """Uniform element of the RNS ring (independent uniform residues are
    exactly uniform mod the product, by CRT)."""
    full = params.modulus_chain + (params.key_switch_prime,)
    res = np.empty((len(prime_indices), params.ring_degree), dtype=np.uint64)
    for row, idx in enumerate(prime_indices):
        res[row] = rng.integers(0, full[idx], params.ring_degree,
                                dtype=np.uint64)
    return RingPoly(params, prime_indices, res, COEFF)


def zero_poly(params: EncryptionParams, prime_indices: tuple[int, ...],
              domain_tag: str = COEFF) -> RingPoly:
    res = np.zeros((len(prime_indices), params.ring_degree), dtype=np.uint64)
    return RingPoly(params, prime_indices, res, domain_tag)
