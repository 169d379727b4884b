"""Binary serialization for ciphertexts, keys, and weight vectors.

All integers little-endian. Every artifact starts with a 4-byte magic and
the 8-byte parameter digest, so a reader can reject material from a
different parameter set before touching the payload. Polynomials are
stored in the NTT domain. See docs/protocol.md for the exact layouts.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import FormatError, ParameterError
from .keys import GaloisKey, KeyMaterial, PublicMaterial, ShoupPoly
from .ops import Ciphertext
from .params import EncryptionParams
from .poly import NTT, RingPoly

MAGIC_CIPHERTEXT = b"CKV1"
MAGIC_SECRET_KEY = b"CKS1"
MAGIC_PUBLIC_KEY = b"CKP1"
MAGIC_GALOIS_KEYS = b"CKG1"
MAGIC_FLOAT_VECTOR = b"CKF1"

_MAGICS = {MAGIC_CIPHERTEXT: "ciphertext", MAGIC_SECRET_KEY: "secret key",
           MAGIC_PUBLIC_KEY: "public key", MAGIC_GALOIS_KEYS: "galois keys",
           MAGIC_FLOAT_VECTOR: "float vector"}


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated artifact")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt)))


def _check_header(r: _Reader, magic: bytes, params: EncryptionParams) -> None:
    got = r.take(4)
    if got != magic:
        kind = _MAGICS.get(got)
        if kind is not None:
            raise FormatError(
                f"expected {_MAGICS[magic]} but found {kind} artifact")
        raise FormatError(f"unknown magic bytes {got!r}")
    if r.take(8) != params.digest:
        raise ParameterError("artifact was produced under different "
                             "encryption parameters (digest mismatch)")


def _poly_bytes(p: RingPoly) -> bytes:
    rows = [struct.pack("<B", len(p.prime_indices))]
    rows.append(np.ascontiguousarray(p.residues, dtype="<u8").tobytes())
    return b"".join(rows)


def _read_poly(r: _Reader, params: EncryptionParams) -> RingPoly:
    (count,) = r.unpack("B")
    n_chain = len(params.modulus_chain)
    if count > n_chain + 1:
        raise FormatError(f"poly claims {count} primes, basis has {n_chain + 1}")
    raw = r.take(count * params.ring_degree * 8)
    res = np.frombuffer(raw, dtype="<u8").reshape(count, params.ring_degree)
    return RingPoly(params, tuple(range(count)),
                    np.ascontiguousarray(res, dtype=np.uint64), NTT)


def serialize_ciphertext(ct: Ciphertext) -> bytes:
    out = [MAGIC_CIPHERTEXT, ct.params.digest,
           struct.pack("<Bd", ct.level, ct.scale)]
    out.append(_poly_bytes(ct.c0))
    out.append(_poly_bytes(ct.c1))
    return b"".join(out)


def deserialize_ciphertext(data: bytes, params: EncryptionParams) -> Ciphertext:
    r = _Reader(data)
    _check_header(r, MAGIC_CIPHERTEXT, params)
    level, scale = r.unpack("Bd")
    c0 = _read_poly(r, params)
    c1 = _read_poly(r, params)
    return Ciphertext(c0=c0, c1=c1, scale=scale, level=level)


def serialize_secret_key(keys: KeyMaterial) -> bytes:
    return b"".join([MAGIC_SECRET_KEY, keys.params.digest,
                     _poly_bytes(keys.secret_key.poly)])


def serialize_public_key(pub: PublicMaterial) -> bytes:
    return b"".join([MAGIC_PUBLIC_KEY, pub.params.digest,
                     _poly_bytes(pub.pk0.poly), _poly_bytes(pub.pk1.poly)])


def serialize_galois_keys(pub: PublicMaterial) -> bytes:
    out = [MAGIC_GALOIS_KEYS, pub.params.digest,
           struct.pack("<H", len(pub.galois_keys))]
    for step in sorted(pub.galois_keys):
        gk = pub.galois_keys[step]
        out.append(struct.pack("<HB", step, len(gk.ks_b)))
        for b, a in zip(gk.ks_b, gk.ks_a):
            out.append(_poly_bytes(b.poly))
            out.append(_poly_bytes(a.poly))
    return b"".join(out)


def deserialize_public_material(public_data: bytes, params: EncryptionParams,
                                galois_data: bytes | None = None) -> PublicMaterial:
    r = _Reader(public_data)
    _check_header(r, MAGIC_PUBLIC_KEY, params)
    pk0 = ShoupPoly.wrap(_read_poly(r, params))
    pk1 = ShoupPoly.wrap(_read_poly(r, params))
    galois: dict[int, GaloisKey] = {}
    if galois_data is not None:
        g = _Reader(galois_data)
        _check_header(g, MAGIC_GALOIS_KEYS, params)
        (count,) = g.unpack("H")
        for _ in range(count):
            step, digits = g.unpack("HB")
            ks_b = []
            ks_a = []
            for _ in range(digits):
                ks_b.append(ShoupPoly.wrap(_read_poly(g, params)))
                ks_a.append(ShoupPoly.wrap(_read_poly(g, params)))
            galois[step] = GaloisKey(step=step, ks_b=tuple(ks_b),
                                     ks_a=tuple(ks_a))
    return PublicMaterial(params=params, pk0=pk0, pk1=pk1, galois_keys=galois)


def deserialize_key_material(secret_data: bytes, public_data: bytes,
                             params: EncryptionParams,
                             galois_data: bytes | None = None) -> KeyMaterial:
    r = _Reader(secret_data)
    _check_header(r, MAGIC_SECRET_KEY, params)
    secret = ShoupPoly.wrap(_read_poly(r, params))
    pub = deserialize_public_material(public_data, params, galois_data)
    return KeyMaterial(public=pub, secret_key=secret)


def serialize_float_vector(values: np.ndarray) -> bytes:
    v = np.ascontiguousarray(values, dtype="<f8").ravel()
    return b"".join([MAGIC_FLOAT_VECTOR, struct.pack("<I", v.size), v.tobytes()])


def deserialize_float_vector(data: bytes) -> np.ndarray:
    r = _Reader(data)
    if r.take(4) != MAGIC_FLOAT_VECTOR:
        raise FormatError("not a float vector artifact")
    (count,) = r.unpack("I")
    raw = r.take(count * 8)
    return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def peek_kind(data: bytes) -> str:
    """Human-readable artifact kind from the magic bytes."""
    magic = data[:4]
    kind = _MAGICS.get(magic)
    if kind is None:
        raise FormatError(f"unknown magic bytes {magic!r}")
    return kind
