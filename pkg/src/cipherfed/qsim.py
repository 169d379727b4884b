"""Exact statevector simulation of the variational circuit family used
by the hybrid classifier: RX angle embedding, per-layer parameterized
rotations, a CNOT entangling ring, and Pauli-Z readout.

Expectations are computed exactly (no shot sampling), so gradients and
training runs are deterministic. States carry at most MAX_QUBITS qubits
to bound the 2^n amplitude array.

Internally every routine works on a batch of states shaped
(batch, 2^n); the public single-sample API wraps batch size 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

MAX_QUBITS = 12
AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state on `qubit_count` qubits."""
    amplitudes: np.ndarray
    qubit_count: int

    def __post_init__(self):
        if self.qubit_count < 1 or self.qubit_count > MAX_QUBITS:
            raise ShapeError(f"qubit count must be in [1, {MAX_QUBITS}]")
        if self.amplitudes.shape != (2 ** self.qubit_count,):
            raise ShapeError("amplitude length must be 2^qubit_count")

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


@dataclass(frozen=True)
class PqcArchitecture:
    """Layer template: one parameterized rotation per qubit per layer
    (axis taken from `axes`), then a CNOT ring control i -> (i+1) mod n.
    Single-qubit circuits have no entangler."""
    qubit_count: int
    depth: int
    axes: tuple[tuple[str, ...], ...] = ()
    readout: tuple[int, ...] = ()

    def __post_init__(self):
        if self.depth < 1:
            raise ShapeError("depth must be >= 1")
        if not 1 <= self.qubit_count <= MAX_QUBITS:
            raise ShapeError(f"qubit count must be in [1, {MAX_QUBITS}]")
        axes = self.axes or tuple(("X",) * self.qubit_count
                                  for _ in range(self.depth))
        if len(axes) != self.depth or any(len(row) != self.qubit_count
                                          for row in axes):
            raise ShapeError("axes grid must be depth x qubit_count")
        for row in axes:
            for ax in row:
                if ax not in AXES:
                    raise ShapeError(f"unknown rotation axis {ax!r}")
        object.__setattr__(self, "axes", axes)
        readout = self.readout or tuple(range(self.qubit_count))
        if not readout or any(not 0 <= r < self.qubit_count for r in readout):
            raise ShapeError("readout qubits must be a non-empty subset")
        object.__setattr__(self, "readout", tuple(readout))


@dataclass(frozen=True)
class PqcParams:
    """Rotation angles, shape depth x qubit_count, radians."""
    angles: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.angles)):
            raise ShapeError("angles must be finite")

    @staticmethod
    def random(arch: PqcArchitecture, rng: np.random.Generator) -> "PqcParams":
        return PqcParams(rng.uniform(-np.pi, np.pi,
                                     (arch.depth, arch.qubit_count)))


def _check_angles(arch: PqcArchitecture, params: PqcParams) -> np.ndarray:
    a = np.asarray(params.angles, dtype=np.float64)
    if a.shape != (arch.depth, arch.qubit_count):
        raise ShapeError(f"angles shape {a.shape} does not match "
                         f"({arch.depth}, {arch.qubit_count})")
    return a


# --- batched kernels ------------------------------------------------------

def _batch_zero(batch: int, n: int) -> np.ndarray:
    amps = np.zeros((batch, 2 ** n), dtype=np.complex128)
    amps[:, 0] = 1.0
    return amps


def _batch_rotate(amps: np.ndarray, n: int, qubit: int, axis: str,
                  angles) -> np.ndarray:
    """Apply exp(-i*angle/2 * sigma_axis) on one qubit; `angles` is a
    scalar or a per-batch-element vector."""
    b = amps.shape[0]
    half = np.broadcast_to(np.asarray(angles, dtype=np.float64) / 2.0, (b,))
    c = np.cos(half)[:, None]
    s = np.sin(half)[:, None]
    view = amps.reshape(b, 2 ** qubit, 2, 2 ** (n - qubit - 1))
    a0 = view[:, :, 0, :].reshape(b, -1)
    a1 = view[:, :, 1, :].reshape(b, -1)
    if axis == "X":
        n0 = c * a0 - 1j * s * a1
        n1 = -1j * s * a0 + c * a1
    elif axis == "Y":
        n0 = c * a0 - s * a1
        n1 = s * a0 + c * a1
    else:  # Z
        phase_lo = (c - 1j * s)
        phase_hi = (c + 1j * s)
        n0 = phase_lo * a0
        n1 = phase_hi * a1
    out = amps.copy()
    ov = out.reshape(b, 2 ** qubit, 2, 2 ** (n - qubit - 1))
    ov[:, :, 0, :] = n0.reshape(b, 2 ** qubit, -1)
    ov[:, :, 1, :] = n1.reshape(b, 2 ** qubit, -1)
    return out


def _batch_cnot(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    b = amps.shape[0]
    idx = np.arange(2 ** n)
    c_bit = (idx >> (n - 1 - control)) & 1
    flipped = idx ^ (1 << (n - 1 - target))
    perm = np.where(c_bit == 1, flipped, idx)
    return amps[:, perm]


def _batch_z_expect(amps: np.ndarray, n: int, qubit: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    sign = 1.0 - 2.0 * ((idx >> (n - 1 - qubit)) & 1)
    return np.sum((np.abs(amps) ** 2) * sign, axis=1)


def _batch_embed(features: np.ndarray, n: int) -> np.ndarray:
    amps = _batch_zero(features.shape[0], n)
    for qubit in range(n):
        amps = _batch_rotate(amps, n, qubit, "X", features[:, qubit])
    return amps


def _batch_layers(amps: np.ndarray, arch: PqcArchitecture,
                  angles: np.ndarray) -> np.ndarray:
    n = arch.qubit_count
    for layer in range(arch.depth):
        for qubit in range(n):
            amps = _batch_rotate(amps, n, qubit, arch.axes[layer][qubit],
                                 angles[:, layer, qubit])
        if n >= 2:
            for qubit in range(n):
                amps = _batch_cnot(amps, n, qubit, (qubit + 1) % n)
    return amps


def run_pqc_batch(features: np.ndarray, arch: PqcArchitecture,
                  angles: np.ndarray) -> np.ndarray:
    """Z expectations for a feature batch.

    features: (batch, qubit_count); angles: (depth, qubit_count) shared,
    or (batch, depth, qubit_count) per element. Returns
    (batch, len(readout)).
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != arch.qubit_count:
        raise ShapeError(f"features must be (batch, {arch.qubit_count})")
    a = np.asarray(angles, dtype=np.float64)
    if a.ndim == 2:
        a = np.broadcast_to(a, (feats.shape[0],) + a.shape)
    amps = _batch_embed(feats, arch.qubit_count)
    amps = _batch_layers(amps, arch, a)
    out = np.stack([_batch_z_expect(amps, arch.qubit_count, r)
                    for r in arch.readout], axis=1)
    return out


# --- public single-state API ----------------------------------------------

def embed(features, qubit_count: int) -> StateVector:
    """Angle embedding: tensor product of RX(feature_i)|0>."""
    f = np.asarray(features, dtype=np.float64).ravel()
    if f.size != qubit_count:
        raise ShapeError(f"{f.size} features for {qubit_count} qubits")
    amps = _batch_embed(f[None, :], qubit_count)[0]
    return StateVector(amplitudes=amps, qubit_count=qubit_count)


def apply_rotation(state: StateVector, qubit: int, axis: str,
                   angle: float) -> StateVector:
    if not 0 <= qubit < state.qubit_count:
        raise ShapeError(f"qubit {qubit} out of range")
    if axis not in AXES:
        raise ShapeError(f"unknown rotation axis {axis!r}")
    amps = _batch_rotate(state.amplitudes[None, :], state.qubit_count,
                         qubit, axis, float(angle))[0]
    return StateVector(amplitudes=amps, qubit_count=state.qubit_count)


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    n = state.qubit_count
    if control == target:
        raise ShapeError("control and target must differ")
    if not (0 <= control < n and 0 <= target < n):
        raise ShapeError("qubit index out of range")
    amps = _batch_cnot(state.amplitudes[None, :], n, control, target)[0]
    return StateVector(amplitudes=amps, qubit_count=n)


def expectation_z(state: StateVector, qubit: int) -> float:
    if not 0 <= qubit < state.qubit_count:
        raise ShapeError(f"qubit {qubit} out of range")
    return float(_batch_z_expect(state.amplitudes[None, :],
                                 state.qubit_count, qubit)[0])


def run_pqc(features, arch: PqcArchitecture, params: PqcParams) -> np.ndarray:
    """Readout Z expectations for one feature vector, each in [-1, 1]."""
    angles = _check_angles(arch, params)
    f = np.asarray(features, dtype=np.float64).ravel()
    if f.size != arch.qubit_count:
        raise ShapeError(f"{f.size} features for {arch.qubit_count} qubits")
    return run_pqc_batch(f[None, :], arch, angles)[0]


def grad_angles_batch(features: np.ndarray, arch: PqcArchitecture,
                      angles: np.ndarray) -> np.ndarray:
    """Parameter-shift derivatives of every readout w.r.t. every angle.

    Returns (batch, depth, qubit_count, len(readout)):
    d<Z_r> / d angle[l, q] per batch element.
    """
    feats = np.asarray(features, dtype=np.float64)
    b = feats.shape[0]
    out = np.empty((b, arch.depth, arch.qubit_count, len(arch.readout)))
    for layer in range(arch.depth):
        for qubit in range(arch.qubit_count):
            shift = np.zeros_like(angles)
            shift[layer, qubit] = np.pi / 2
            plus = run_pqc_batch(feats, arch, angles + shift)
            minus = run_pqc_batch(feats, arch, angles - shift)
            out[:, layer, qubit, :] = (plus - minus) / 2.0
    return out


def grad_features_batch(features: np.ndarray, arch: PqcArchitecture,
                        angles: np.ndarray) -> np.ndarray:
    """Parameter-shift derivatives w.r.t. the embedding angles.

    Returns (batch, qubit_count, len(readout)). Valid because the
    embedding gates are RX rotations, so the same +-pi/2 rule applies.
    """
    feats = np.asarray(features, dtype=np.float64)
    b = feats.shape[0]
    out = np.empty((b, arch.qubit_count, len(arch.readout)))
    for qubit in range(arch.qubit_count):
        shift = np.zeros_like(feats)
        shift[:, qubit] = np.pi / 2
        plus = run_pqc_batch(feats + shift, arch, angles)
        minus = run_pqc_batch(feats - shift, arch, angles)
        out[:, qubit, :] = (plus - minus) / 2.0
    return out


def param_shift_grad(features, arch: PqcArchitecture, params: PqcParams,
                     readout_weights) -> np.ndarray:
    """Gradient of sum_j w_j <Z_j> w.r.t. every variational angle, via
    the exact +-pi/2 parameter-shift rule. Shape depth x qubit_count."""
    angles = _check_angles(arch, params)
    w = np.asarray(readout_weights, dtype=np.float64).ravel()
    if w.size != len(arch.readout):
        raise ShapeError(f"{w.size} readout weights for "
                         f"{len(arch.readout)} readout qubits")
    f = np.asarray(features, dtype=np.float64).ravel()
    if f.size != arch.qubit_count:
        raise ShapeError(f"{f.size} features for {arch.qubit_count} qubits")
    per_readout = grad_angles_batch(f[None, :], arch, angles)[0]
    return per_readout @ w
