"""cipherfed: federated training of hybrid quantum-classical classifiers
whose model updates travel under CKKS-style homomorphic encryption.

The pipeline: each client trains a small dense+quantum classifier
locally, quantizes and encrypts its weights, and ships them to a server
that computes the sample-weighted average directly on ciphertexts. The
decrypted global model seeds the next round.

SECURITY NOTE: encryption parameters target correctness demonstrations
and reproducible tests, not audited security levels.
"""

__version__ = "0.1.0"

from . import data, fhe, model, qsim
from .federation.rounds import RoundConfig, run_federated_training

__all__ = ["data", "fhe", "model", "qsim", "RoundConfig",
           "run_federated_training", "__version__"]
