"""Federated round execution: parallel local training, weighted
aggregation (encrypted or plaintext), decryption, redistribution, and
the loop to convergence."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..errors import ConfigError, ProtocolError
from ..fhe.keys import KeyMaterial
from ..model import HybridModel, TrainingConfig, evaluate, train_epochs, unflatten_weights
from . import server
from .client import (decrypt_and_load, derive_seed, encrypt_model,
                     plain_update)
from .metrics import MetricsSink, metrics_row
from .quantize import QuantizationSpec

MODES = ("fhe", "plaintext")


@dataclass(frozen=True)
class RoundConfig:
    """Federation hyperparameters for one run."""
    client_count: int
    rounds: int
    sample_counts: tuple[int, ...]
    learning_rate: float
    batch_size: int = 32
    epochs_per_round: int = 1
    base_seed: int = 0
    convergence_delta: float | None = None
    quantization: QuantizationSpec = field(default_factory=QuantizationSpec)
    deterministic_timing: bool = False

    def __post_init__(self):
        if self.client_count < 1:
            raise ConfigError("client_count must be >= 1")
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        counts = tuple(int(c) for c in self.sample_counts)
        object.__setattr__(self, "sample_counts", counts)
        if len(counts) != self.client_count:
            raise ConfigError("sample_counts must list one entry per client")
        if any(c < 1 for c in counts):
            raise ConfigError("every client needs at least one sample")
        total = sum(counts)
        if abs(sum(c / total for c in counts) - 1.0) > 1e-12:
            raise ConfigError("aggregation weights failed to normalize")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs_per_round < 0:
            raise ConfigError("epochs_per_round must be >= 0")
        if (self.convergence_delta is not None
                and not self.convergence_delta > 0):
            raise ConfigError("convergence_delta must be positive when set")

    @staticmethod
    def for_datasets(client_datasets, rounds, learning_rate, **kw) -> "RoundConfig":
        return RoundConfig(client_count=len(client_datasets), rounds=rounds,
                           sample_counts=tuple(len(d) for d in client_datasets),
                           learning_rate=learning_rate, **kw)


def _clock(config: RoundConfig):
    if config.deterministic_timing:
        return lambda: 0.0
    return time.perf_counter


def _train_one_client(global_model, features, labels, config: RoundConfig,
                      round_index: int, client_id: int, mode: str, keys):
    seed = derive_seed(config.base_seed, round_index, client_id, 1)
    tcfg = TrainingConfig(learning_rate=config.learning_rate,
                          batch_size=config.batch_size,
                          epochs_per_round=config.epochs_per_round,
                          rng_seed=seed)
    local = train_epochs(global_model, features, labels, tcfg)
    train_acc, train_loss = evaluate(local, features, labels)
    n_k = config.sample_counts[client_id]
    if mode == "fhe":
        upd = encrypt_model(local, config.quantization, keys,
                            client_id=client_id, sample_count=n_k,
                            round_index=round_index,
                            rng_seed=derive_seed(config.base_seed, round_index,
                                                 client_id, 2))
    else:
        upd = plain_update(local, config.quantization, client_id, n_k,
                           round_index)
    return upd, train_loss, train_acc


def run_round(global_model: HybridModel, config: RoundConfig, client_datasets,
              test_data, keys, round_index: int, mode: str = "fhe",
              pqc_hook=None):
    """One federation round. Every client trains from the same incoming
    global model; a failed client aborts the round with a protocol error
    naming it. Returns (new global model, metric rows)."""
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    if len(client_datasets) != config.client_count:
        raise ConfigError(f"{len(client_datasets)} datasets for "
                          f"{config.client_count} clients")
    for k, ds in enumerate(client_datasets):
        if len(ds) != config.sample_counts[k]:
            raise ConfigError(f"client {k} dataset size {len(ds)} does not "
                              f"match configured {config.sample_counts[k]}")
    clock = _clock(config)
    rows = []
    round_start = clock()

    def work(k):
        ds = client_datasets[k]
        t0 = clock()
        upd, loss, acc = _train_one_client(
            global_model, ds.features, ds.labels, config, round_index, k,
            mode, keys)
        wall = (clock() - t0) * 1000.0
        return upd, metrics_row(round_index, f"client_{k}", train_loss=loss,
                                train_acc=acc, wall_ms=wall)

    updates = []
    with ThreadPoolExecutor(max_workers=config.client_count) as pool:
        futures = [pool.submit(work, k) for k in range(config.client_count)]
        for k, fut in enumerate(futures):
            try:
                upd, row = fut.result()
            except Exception as exc:
                raise ProtocolError(f"client {k} failed during round "
                                    f"{round_index}: {exc}") from exc
            updates.append(upd)
            rows.append(row)

    if mode == "fhe":
        public = keys.public if isinstance(keys, KeyMaterial) else keys
        agg = server.aggregate(updates, public)
        new_model = decrypt_and_load(agg, keys, global_model)
    else:
        vec = server.aggregate_plain(updates)
        new_model = unflatten_weights(global_model, vec)

    if pqc_hook is not None:
        new_model = pqc_hook(new_model)

    test_acc, test_loss = evaluate(new_model, test_data.features,
                                   test_data.labels)
    rows.append(metrics_row(round_index, "global", test_loss=test_loss,
                            test_acc=test_acc,
                            wall_ms=(clock() - round_start) * 1000.0))
    return new_model, rows


def run_federated_training(initial_model: HybridModel, config: RoundConfig,
                           client_datasets, test_data, keys,
                           mode: str = "fhe", sink: MetricsSink | None = None,
                           pqc_hook=None):
    """Loop run_round for config.rounds rounds, or stop early when the
    global test loss moves less than convergence_delta. In plaintext
    mode the aggregation is the same weighted sum without encryption.
    Returns (final model, all metric rows)."""
    model = initial_model
    history = []
    prev_loss = None
    for r in range(config.rounds):
        model, rows = run_round(model, config, client_datasets, test_data,
                                keys, round_index=r, mode=mode,
                                pqc_hook=pqc_hook)
        history.extend(rows)
        if sink is not None:
            for row in rows:
                sink.write(row)
        g_loss = rows[-1]["test_loss"]
        if (config.convergence_delta is not None and prev_loss is not None
                and abs(prev_loss - g_loss) < config.convergence_delta):
            break
        prev_loss = g_loss
    return model, history
