"""Client-side federation steps: local training, quantize-and-encrypt,
and decryption of the aggregated global model."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..fhe.encoding import decode, encode
from ..fhe.keys import KeyMaterial
from ..fhe.ops import Ciphertext, decrypt, encrypt
from ..model import HybridModel, flatten_weights, unflatten_weights
from .quantize import QuantizationSpec, quantize


def derive_seed(*parts: int) -> int:
    """Stable 63-bit seed from a tuple of integers (round, client, tag)."""
    h = hashlib.sha256(struct.pack(f"<{len(parts)}q", *parts)).digest()
    return int.from_bytes(h[:8], "little") >> 1


@dataclass(frozen=True)
class ClientUpdate:
    """Quantized, encrypted weight vector plus the client's sample count."""
    client_id: int
    chunks: tuple[Ciphertext, ...]
    sample_count: int
    round_index: int
    param_count: int


@dataclass(frozen=True)
class PlainUpdate:
    """Unencrypted counterpart used by the comparison arm."""
    client_id: int
    values: np.ndarray
    sample_count: int
    round_index: int


def chunk_count_for(param_count: int, slot_count: int) -> int:
    return -(-param_count // slot_count)


def encrypt_model(model: HybridModel, spec: QuantizationSpec, keys,
                  client_id: int, sample_count: int, round_index: int,
                  rng_seed: int = 0) -> ClientUpdate:
    """Flatten -> quantize -> chunk into slot-sized vectors -> encrypt."""
    params = keys.params
    weights = quantize(flatten_weights(model), spec)
    slots = params.slot_count
    chunks = []
    for i, start in enumerate(range(0, weights.size, slots)):
        pt = encode(weights[start:start + slots], params)
        chunks.append(encrypt(pt, keys, rng_seed=derive_seed(rng_seed, i)))
    return ClientUpdate(client_id=client_id, chunks=tuple(chunks),
                        sample_count=sample_count, round_index=round_index,
                        param_count=weights.size)


def plain_update(model: HybridModel, spec: QuantizationSpec, client_id: int,
                 sample_count: int, round_index: int) -> PlainUpdate:
    """Quantized but unencrypted update for the plaintext arm."""
    return PlainUpdate(client_id=client_id,
                       values=quantize(flatten_weights(model), spec),
                       sample_count=sample_count, round_index=round_index)


def decrypt_and_load(agg_chunks, keys: KeyMaterial,
                     template: HybridModel) -> HybridModel:
    """Decrypt the aggregated chunks and load them into a model with the
    template's architecture."""
    params = keys.params
    slots = params.slot_count
    need = template.param_count
    if len(agg_chunks) * slots < need:
        raise ShapeError(
            f"{len(agg_chunks)} chunks of {slots} slots cannot hold "
            f"{need} parameters")
    pieces = []
    remaining = need
    for ct in agg_chunks:
        take = min(slots, remaining)
        pieces.append(decode(decrypt(ct, keys), take))
        remaining -= take
        if remaining == 0:
            break
    return unflatten_weights(template, np.concatenate(pieces))
