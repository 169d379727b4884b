"""Federation orchestration: quantize-encrypt-aggregate-decrypt rounds
over pluggable transports."""

from .client import ClientUpdate, PlainUpdate, decrypt_and_load, encrypt_model
from .metrics import MetricsSink, metrics_row
from .quantize import QuantizationSpec, quantize
from .rounds import RoundConfig, run_federated_training, run_round
from .server import aggregate, aggregate_plain

__all__ = ["ClientUpdate", "PlainUpdate", "decrypt_and_load", "encrypt_model",
           "MetricsSink", "metrics_row", "QuantizationSpec", "quantize",
           "RoundConfig", "run_federated_training", "run_round",
           "aggregate", "aggregate_plain"]
