"""Server-side aggregation over encrypted updates.

This module is the server's entire capability surface: it imports no
decryption routine and no secret-bearing type, and it rejects key
material that carries more than the public part. Aggregation computes
the sample-count-weighted sum chunk by chunk, with a single rescale
after the additions.
"""

from __future__ import annotations

import numpy as np

from ..errors import AlignmentError, ParameterError, ProtocolError
from ..fhe.encoding import encode_scalar
from ..fhe.keys import PublicMaterial
from ..fhe.ops import Ciphertext, add_ct, mul_plain, rescale


def _require_public(material) -> PublicMaterial:
    if not isinstance(material, PublicMaterial):
        raise ParameterError(
            "server aggregation accepts public material only; got "
            f"{type(material).__name__}")
    return material


def _check_updates(updates) -> None:
    if not updates:
        raise ProtocolError("no client updates to aggregate")
    rnd = updates[0].round_index
    n_chunks = len(updates[0].chunks) if hasattr(updates[0], "chunks") else None
    seen = set()
    for u in updates:
        if u.round_index != rnd:
            raise ProtocolError(
                f"client {u.client_id} sent round {u.round_index}, "
                f"expected {rnd}")
        if u.client_id in seen:
            raise ProtocolError(f"duplicate update from client {u.client_id}")
        seen.add(u.client_id)
        if n_chunks is not None and len(u.chunks) != n_chunks:
            raise AlignmentError(
                f"client {u.client_id} sent {len(u.chunks)} chunks, "
                f"expected {n_chunks}")


def aggregation_weights(updates) -> list[float]:
    total = sum(u.sample_count for u in updates)
    return [u.sample_count / total for u in updates]


def aggregate(updates, material: PublicMaterial) -> list[Ciphertext]:
    """Weighted encrypted sum: S = sum_k E(w_k) * (n_k / n_total),
    rescaled once at the end. The result sits one level below the
    inputs."""
    public = _require_public(material)
    _check_updates(updates)
    updates = sorted(updates, key=lambda u: u.client_id)
    weights = aggregation_weights(updates)
    params = public.params
    level = updates[0].chunks[0].level

    out = []
    for chunk_idx in range(len(updates[0].chunks)):
        acc = None
        for w, u in zip(weights, updates):
            coef = encode_scalar(w, params, level=level)
            term = mul_plain(u.chunks[chunk_idx], coef)
            acc = term if acc is None else add_ct(acc, term)
        out.append(rescale(acc))
    return out


def aggregate_plain(updates) -> np.ndarray:
    """The same weighted sum on unencrypted update vectors."""
    _check_updates(updates)
    updates = sorted(updates, key=lambda u: u.client_id)
    weights = aggregation_weights(updates)
    acc = np.zeros_like(updates[0].values)
    for w, u in zip(weights, updates):
        if u.values.shape != acc.shape:
            raise AlignmentError(
                f"client {u.client_id} sent {u.values.shape} values")
        acc = acc + w * u.values
    return acc


class FederationCoordinator:
    """Server side of the wire protocol, driven over abstract channels.

    State is limited to public material, the round plan, and collected
    metric rows; decryption never happens here. Raises ProtocolError on
    any malformed or out-of-order message, after telling every client to
    abort.
    """

    def __init__(self, expected_clients: int, rounds: int, mode: str,
                 material: PublicMaterial | None = None, sink=None,
                 convergence_delta: float | None = None):
        if mode == "fhe":
            self.material = _require_public(material)
        else:
            self.material = None
        self.expected_clients = expected_clients
        self.rounds = rounds
        self.mode = mode
        self.sink = sink
        self.convergence_delta = convergence_delta
        self.history: list[dict] = []

    def _abort_all(self, channels, reason: str) -> None:
        from .transport import MSG_ABORT, Message
        for ch in channels:
            try:
                ch.send(Message(MSG_ABORT, 0, reason.encode("utf-8")))
            except Exception:
                pass

    def run(self, channels) -> list[dict]:
        try:
            return self._run(channels)
        except ProtocolError:
            self._abort_all(channels, "server aborted: protocol error")
            raise

    def _run(self, channels) -> list[dict]:
        from .transport import (CONVERGED_REASON, MSG_ABORT, MSG_GLOBAL,
                                MSG_JOIN, MSG_METRICS, MSG_UPDATE, Message,
                                decode_join, decode_metrics, decode_update,
                                encode_global)
        if len(channels) != self.expected_clients:
            raise ProtocolError(
                f"{len(channels)} channels for {self.expected_clients} clients")
        by_id = {}
        for ch in channels:
            msg = ch.recv()
            if msg.mtype != MSG_JOIN:
                raise ProtocolError(f"expected JOIN, got type {msg.mtype}")
            cid, _count = decode_join(msg.payload)
            if cid in by_id:
                raise ProtocolError(f"duplicate JOIN from client {cid}")
            by_id[cid] = ch
        if sorted(by_id) != list(range(self.expected_clients)):
            raise ProtocolError(f"client ids {sorted(by_id)} do not cover "
                                f"0..{self.expected_clients - 1}")

        params = self.material.params if self.material is not None else None
        prev_loss = None
        for r in range(self.rounds):
            updates = []
            for cid in sorted(by_id):
                msg = by_id[cid].recv()
                if msg.mtype == MSG_ABORT:
                    raise ProtocolError(
                        f"client {cid} aborted round {r}: "
                        f"{msg.payload.decode('utf-8', 'replace')}")
                if msg.mtype != MSG_UPDATE:
                    raise ProtocolError(
                        f"client {cid}: expected UPDATE, got type {msg.mtype}")
                if msg.round_index != r:
                    raise ProtocolError(
                        f"client {cid} sent round {msg.round_index}, "
                        f"server is at round {r}")
                updates.append(decode_update(msg.payload, r, params))

            if self.mode == "fhe":
                agg = aggregate(updates, self.material)
            else:
                agg = aggregate_plain(updates)
            payload = encode_global(agg)
            for cid in sorted(by_id):
                by_id[cid].send(Message(MSG_GLOBAL, r, payload))

            rows = []
            for cid in sorted(by_id):
                msg = by_id[cid].recv()
                if msg.mtype != MSG_METRICS:
                    raise ProtocolError(
                        f"client {cid}: expected METRICS, got {msg.mtype}")
                rows.append(decode_metrics(msg.payload))
            gmsg = by_id[0].recv()
            if gmsg.mtype != MSG_METRICS:
                raise ProtocolError("expected global METRICS row")
            # rows already arrive in client-id order; global row goes last
            rows.append(decode_metrics(gmsg.payload))
            self.history.extend(rows)
            if self.sink is not None:
                for row in rows:
                    self.sink.write(row)

            g_loss = rows[-1].get("test_loss")
            if (self.convergence_delta is not None and prev_loss is not None
                    and g_loss is not None
                    and abs(prev_loss - g_loss) < self.convergence_delta
                    and r < self.rounds - 1):
                self._abort_all(channels, CONVERGED_REASON)
                # clients are already training the next round and will
                # emit one UPDATE and one METRICS before they see the
                # abort; drain those so nobody blocks on a full buffer
                for ch in channels:
                    for _ in range(2):
                        try:
                            ch.recv(timeout=120.0)
                        except Exception:
                            break
                break
            prev_loss = g_loss
        return self.history
