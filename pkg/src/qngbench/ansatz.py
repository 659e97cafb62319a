"""Layered RealAmplitude circuits: RY rotation layers alternating with CNOT
entangling layers, preparing real-amplitude states U(theta)|0...0>.

Parameter convention: the rotation gate for parameter value ``a`` is
``RY(2a)`` (gate angle twice the parameter). Parameter indices are assigned
layer-major, qubit-minor: rotation layer L, qubit q holds parameter
``L * n_qubits + q``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevector import (
    Statevector,
    apply_cnot_inplace,
    apply_ry_inplace,
)


@dataclass(frozen=True)
class RotationLayer:
    """One RY gate per qubit; ``first_param`` is the qubit-0 parameter index."""

    first_param: int


@dataclass(frozen=True)
class EntanglingLayer:
    """Fixed CNOT pattern, applied pair by pair in listed order."""

    pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Ansatz:
    n_qubits: int
    layers: tuple[RotationLayer | EntanglingLayer, ...]
    p: int

    def rotation_layers(self):
        return [l for l in self.layers if isinstance(l, RotationLayer)]

    def layer_of_param(self, k: int) -> int:
        """Index (among rotation layers) of the layer carrying parameter k."""
        if not 0 <= k < self.p:
            raise ValueError(f"parameter index {k} out of range [0, {self.p})")
        return k // self.n_qubits

    def qubit_of_param(self, k: int) -> int:
        if not 0 <= k < self.p:
            raise ValueError(f"parameter index {k} out of range [0, {self.p})")
        return k % self.n_qubits


def _entangling_pairs(n_qubits: int, entanglement: str):
    if entanglement == "linear":
        return tuple((i, i + 1) for i in range(n_qubits - 1))
    if entanglement == "full":
        return tuple(
            (i, j) for i in range(n_qubits) for j in range(i + 1, n_qubits)
        )
    raise ValueError(f"unknown entanglement pattern {entanglement!r}")


def real_amplitude(
    n_qubits: int, n_rotation_layers: int, entanglement: str = "linear"
) -> Ansatz:
    """Build the alternating RY / CNOT ansatz.

    The circuit starts and ends with a rotation layer, with one entangling
    layer between consecutive rotation layers. ``linear`` entanglement is
    CNOT(i, i+1) down the register; ``full`` is CNOT(i, j) for all i < j
    (control on the lower index).
    """
    if n_qubits < 1:
        raise ValueError(f"need at least one qubit, got {n_qubits}")
    if n_rotation_layers < 1:
        raise ValueError(
            f"need at least one rotation layer, got {n_rotation_layers}"
        )
    pairs = _entangling_pairs(n_qubits, entanglement)
    layers: list[RotationLayer | EntanglingLayer] = []
    for layer_idx in range(n_rotation_layers):
        if layer_idx > 0:
            layers.append(EntanglingLayer(pairs))
        layers.append(RotationLayer(first_param=layer_idx * n_qubits))
    return Ansatz(
        n_qubits=n_qubits,
        layers=tuple(layers),
        p=n_qubits * n_rotation_layers,
    )


def _check_theta(a: Ansatz, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != a.p:
        raise ValueError(
            f"parameter vector has length {theta.shape[0]}, expected {a.p}"
        )
    return theta


def prepare_raw(a: Ansatz, theta: np.ndarray) -> np.ndarray:
    """U(theta)|0...0> as a writable raw amplitude array (internal)."""
    n = a.n_qubits
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    for layer in a.layers:
        if isinstance(layer, RotationLayer):
            off = layer.first_param
            for q in range(n):
                apply_ry_inplace(amps, n, q, 2.0 * theta[off + q])
        else:
            for control, target in layer.pairs:
                apply_cnot_inplace(amps, n, control, target)
    return amps


def prepare_state(a: Ansatz, theta) -> Statevector:
    """Prepare |phi(theta)> = U(theta)|0...0>."""
    theta = _check_theta(a, theta)
    return Statevector(a.n_qubits, prepare_raw(a, theta))


def prepare_prefix_raw(a: Ansatz, theta: np.ndarray, up_to_parameter: int) -> np.ndarray:
    """State after all gates strictly preceding the rotation gate carrying
    parameter ``up_to_parameter`` (raw array; ``up_to_parameter == p`` gives
    the full circuit)."""
    n = a.n_qubits
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    for layer in a.layers:
        if isinstance(layer, RotationLayer):
            off = layer.first_param
            for q in range(n):
                if off + q == up_to_parameter:
                    return amps
                apply_ry_inplace(amps, n, q, 2.0 * theta[off + q])
        else:
            for control, target in layer.pairs:
                apply_cnot_inplace(amps, n, control, target)
    return amps


def prepare_state_prefix(a: Ansatz, theta, up_to_parameter: int) -> Statevector:
    """Prefix of the circuit up to (excluding) one rotation gate."""
    theta = _check_theta(a, theta)
    if not 0 <= up_to_parameter <= a.p:
        raise ValueError(
            f"prefix index {up_to_parameter} out of range [0, {a.p}]"
        )
    return Statevector(a.n_qubits, prepare_prefix_raw(a, theta, up_to_parameter))


def rotation_prefix_states(a: Ansatz, theta: np.ndarray) -> list[np.ndarray]:
    """Raw state immediately before each rotation layer, in one pass.

    Used by the metric code: entry L is the state on which layer L's
    generator covariances are evaluated.
    """
    n = a.n_qubits
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    prefixes = []
    for layer in a.layers:
        if isinstance(layer, RotationLayer):
            prefixes.append(amps.copy())
            off = layer.first_param
            for q in range(n):
                apply_ry_inplace(amps, n, q, 2.0 * theta[off + q])
        else:
            for control, target in layer.pairs:
                apply_cnot_inplace(amps, n, control, target)
    return prefixes
