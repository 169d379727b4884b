"""Transport-backed federation runners.

The same training computation as the direct path in rounds.py, but every
update, global model, and metrics row crosses a byte channel. Because
serialization is lossless, a run's metrics are identical across the
direct, loopback, and socket paths for the same seeds.
"""

from __future__ import annotations

import socket
import threading

from ..errors import ProtocolError
from ..fhe.keys import KeyMaterial
from ..model import HybridModel, evaluate, unflatten_weights
from .client import decrypt_and_load
from .metrics import MetricsSink, metrics_row
from .rounds import RoundConfig, _clock, _train_one_client
from .server import FederationCoordinator
from .transport import (CONVERGED_REASON, MSG_ABORT, MSG_GLOBAL, MSG_JOIN,
                        MSG_METRICS, MSG_UPDATE, Message, SocketChannel,
                        decode_global, encode_join, encode_metrics,
                        encode_update, loopback_pair)


def run_transport_client(channel, client_id: int, dataset, test_data,
                         initial_model: HybridModel, config: RoundConfig,
                         keys, mode: str) -> HybridModel:
    """Client worker: JOIN, then per round train / UPDATE / METRICS,
    receive GLOBAL, decrypt and load. Client 0 additionally evaluates the
    global model on the test split and reports the global metrics row."""
    clock = _clock(config)
    channel.send(Message(MSG_JOIN, 0,
                         encode_join(client_id, len(dataset))))
    model = initial_model
    for r in range(config.rounds):
        t0 = clock()
        upd, train_loss, train_acc = _train_one_client(
            model, dataset.features, dataset.labels, config, r, client_id,
            mode, keys)
        wall = (clock() - t0) * 1000.0
        channel.send(Message(MSG_UPDATE, r, encode_update(upd)))
        row = metrics_row(r, f"client_{client_id}", train_loss=train_loss,
                          train_acc=train_acc, wall_ms=wall)
        channel.send(Message(MSG_METRICS, r, encode_metrics(row)))

        msg = channel.recv()
        if msg.mtype == MSG_ABORT:
            reason = msg.payload.decode("utf-8", "replace")
            if reason == CONVERGED_REASON:
                return model
            raise ProtocolError(f"server aborted: {reason}")
        if msg.mtype != MSG_GLOBAL or msg.round_index != r:
            raise ProtocolError(f"client {client_id}: unexpected message "
                                f"type {msg.mtype} round {msg.round_index}")
        agg = decode_global(msg.payload,
                            keys.params if keys is not None else None)
        if mode == "fhe":
            model = decrypt_and_load(agg, keys, model)
        else:
            model = unflatten_weights(model, agg)

        if client_id == 0:
            test_acc, test_loss = evaluate(model, test_data.features,
                                           test_data.labels)
            grow = metrics_row(r, "global", test_loss=test_loss,
                               test_acc=test_acc,
                               wall_ms=(clock() - t0) * 1000.0)
            channel.send(Message(MSG_METRICS, r, encode_metrics(grow)))
    return model


def _run_with_channels(initial_model, config, client_datasets, test_data,
                       keys, mode, sink, server_channels, client_channels):
    material = keys.public if isinstance(keys, KeyMaterial) else keys
    coordinator = FederationCoordinator(
        expected_clients=config.client_count, rounds=config.rounds,
        mode=mode, material=material if mode == "fhe" else None, sink=sink,
        convergence_delta=config.convergence_delta)

    server_error = []
    results: dict[int, HybridModel] = {}
    client_errors: dict[int, Exception] = {}

    def server_body():
        try:
            coordinator.run(server_channels)
        except Exception as exc:  # surfaced after joins
            server_error.append(exc)

    def client_body(k):
        try:
            results[k] = run_transport_client(
                client_channels[k], k, client_datasets[k], test_data,
                initial_model, config, keys, mode)
        except Exception as exc:
            client_errors[k] = exc

    server_thread = threading.Thread(target=server_body, daemon=True)
    client_threads = [threading.Thread(target=client_body, args=(k,),
                                       daemon=True)
                      for k in range(config.client_count)]
    server_thread.start()
    for t in client_threads:
        t.start()
    server_thread.join(timeout=600.0)
    if server_error:
        # unblock clients stuck in send/recv before collecting them
        for ch in server_channels:
            ch.close()
    for t in client_threads:
        t.join(timeout=120.0)

    if server_error:
        exc = server_error[0]
        raise exc if isinstance(exc, ProtocolError) \
            else ProtocolError(f"server failed: {exc}")
    for k in sorted(client_errors):
        exc = client_errors[k]
        raise exc if isinstance(exc, ProtocolError) \
            else ProtocolError(f"client {k} failed: {exc}")
    if config.rounds == 0:
        return initial_model, coordinator.history
    return results[0], coordinator.history


def run_loopback_federation(initial_model, config: RoundConfig,
                            client_datasets, test_data, keys,
                            mode: str = "fhe",
                            sink: MetricsSink | None = None):
    """Full protocol over in-process queue channels."""
    pairs = [loopback_pair() for _ in range(config.client_count)]
    server_side = [p[0] for p in pairs]
    client_side = [p[1] for p in pairs]
    return _run_with_channels(initial_model, config, client_datasets,
                              test_data, keys, mode, sink, server_side,
                              client_side)


def run_socket_federation(initial_model, config: RoundConfig,
                          client_datasets, test_data, keys,
                          mode: str = "fhe",
                          sink: MetricsSink | None = None,
                          host: str = "127.0.0.1"):
    """Full protocol over TCP stream sockets on the loopback interface."""
    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    listener.bind((host, 0))
    listener.listen(config.client_count)
    port = listener.getsockname()[1]
    listener.settimeout(30.0)

    client_socks = []
    server_socks = []
    try:
        for _ in range(config.client_count):
            client_socks.append(socket.create_connection((host, port),
                                                         timeout=30.0))
        for _ in range(config.client_count):
            conn, _addr = listener.accept()
            server_socks.append(conn)
    finally:
        listener.close()

    # connections may be accepted out of order; identity comes from JOIN
    server_side = [SocketChannel(s) for s in server_socks]
    client_side = [SocketChannel(s) for s in client_socks]
    try:
        return _run_with_channels(initial_model, config, client_datasets,
                                  test_data, keys, mode, sink, server_side,
                                  client_side)
    finally:
        for ch in server_side + client_side:
            ch.close()
