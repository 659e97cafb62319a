"""Dense statevector simulation for the gate set used by RealAmplitude circuits.

Conventions
-----------
* Qubit 0 is the TOP wire of a circuit diagram and the MOST significant bit
  of the basis index: for n qubits, basis state ``|q0 q1 ... q_{n-1}>`` has
  index ``q0 * 2^(n-1) + q1 * 2^(n-2) + ... + q_{n-1}``.
* ``RY(theta) = exp(-i * theta/2 * Y)``, i.e. the 2x2 real rotation
  ``[[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]``.
* Gates act in O(2^n) time on strided amplitude slices; no 2^n x 2^n
  matrices are ever materialized.

All public operations are pure: amplitudes of a returned `Statevector` are
frozen (read-only) and every gate application returns a fresh state.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

_NORM_TOL = 1e-8

_RY = lambda theta: np.array(
    [[np.cos(theta / 2), -np.sin(theta / 2)],
     [np.sin(theta / 2), np.cos(theta / 2)]]
)
_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
_Y = np.array([[0.0, -1j], [1j, 0.0]])


class Statevector:
    """Normalized pure state of ``n_qubits`` qubits.

    Parameters
    ----------
    n_qubits : int
        Number of qubits, >= 1.
    amplitudes : array_like
        Complex vector of length ``2**n_qubits`` with unit norm.
    """

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, n_qubits: int, amplitudes):
        if n_qubits < 1:
            raise ValueError(f"need at least one qubit, got {n_qubits}")
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 1 << n_qubits:
            raise ValueError(
                f"amplitude vector has length {amps.shape[0]}, "
                f"expected {1 << n_qubits} for {n_qubits} qubits"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state is not normalized: |psi| = {norm!r}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "n_qubits", n_qubits)
        object.__setattr__(self, "amplitudes", amps)

    def __setattr__(self, name, value):
        raise AttributeError("Statevector is immutable")

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        """The all-zeros computational basis state |0...0>."""
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, bits: str) -> "Statevector":
        """Computational basis state from a bit string, qubit 0 first."""
        if len(bits) != n_qubits or any(b not in "01" for b in bits):
            raise ValueError(f"bad bit string {bits!r} for {n_qubits} qubits")
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(n_qubits, amps)

    def __repr__(self):
        return f"Statevector(n_qubits={self.n_qubits})"


@dataclass(frozen=True)
class Gate:
    """One gate from the supported set: ry, cnot, h, y, cy (controlled-Y).

    ``target`` is the acted-on qubit; ``control`` is set for cnot/cy only;
    ``angle`` is set for ry only (full gate angle, not the half angle).
    """

    kind: str
    target: int
    control: int | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in ("ry", "cnot", "h", "y", "cy"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "ry" and self.angle is None:
            raise ValueError("ry gate needs an angle")
        if self.kind in ("cnot", "cy"):
            if self.control is None:
                raise ValueError(f"{self.kind} gate needs a control qubit")
            if self.control == self.target:
                raise ValueError("control and target must differ")
        elif self.control is not None:
            raise ValueError(f"{self.kind} gate takes no control qubit")

    @classmethod
    def ry(cls, target: int, angle: float) -> "Gate":
        return cls("ry", target, angle=angle)

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls("cnot", target, control=control)

    @classmethod
    def h(cls, target: int) -> "Gate":
        return cls("h", target)

    @classmethod
    def y(cls, target: int) -> "Gate":
        return cls("y", target)

    @classmethod
    def cy(cls, control: int, target: int) -> "Gate":
        return cls("cy", target, control=control)


# ---------------------------------------------------------------------------
# in-place kernels on raw amplitude arrays (shared with ansatz / metric code)

def apply_1q_inplace(amps: np.ndarray, n: int, q: int, m: np.ndarray) -> None:
    """Apply a 2x2 matrix to qubit q of a writable length-2^n array."""
    t = amps.reshape(1 << q, 2, -1)
    a0 = t[:, 0, :].copy()
    a1 = t[:, 1, :]
    t[:, 0, :] = m[0, 0] * a0 + m[0, 1] * a1
    t[:, 1, :] = m[1, 0] * a0 + m[1, 1] * a1


def apply_ry_inplace(amps: np.ndarray, n: int, q: int, angle: float) -> None:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    t = amps.reshape(1 << q, 2, -1)
    a0 = t[:, 0, :].copy()
    a1 = t[:, 1, :]
    t[:, 0, :] = c * a0 - s * a1
    t[:, 1, :] = s * a0 + c * a1


def apply_cnot_inplace(amps: np.ndarray, n: int, control: int, target: int) -> None:
    v = np.moveaxis(amps.reshape([2] * n), (control, target), (0, 1))
    tmp = v[1, 0].copy()
    v[1, 0] = v[1, 1]
    v[1, 1] = tmp


def apply_cy_inplace(amps: np.ndarray, n: int, control: int, target: int) -> None:
    v = np.moveaxis(amps.reshape([2] * n), (control, target), (0, 1))
    a0 = v[1, 0].copy()
    v[1, 0] = -1j * v[1, 1]
    v[1, 1] = 1j * a0


def apply_gate_inplace(amps: np.ndarray, n: int, gate: Gate) -> None:
    if not 0 <= gate.target < n:
        raise ValueError(f"target {gate.target} out of range for {n} qubits")
    if gate.control is not None and not 0 <= gate.control < n:
        raise ValueError(f"control {gate.control} out of range for {n} qubits")
    if gate.kind == "ry":
        apply_ry_inplace(amps, n, gate.target, gate.angle)
    elif gate.kind == "cnot":
        apply_cnot_inplace(amps, n, gate.control, gate.target)
    elif gate.kind == "h":
        apply_1q_inplace(amps, n, gate.target, _H)
    elif gate.kind == "y":
        apply_1q_inplace(amps, n, gate.target, _Y)
    else:  # cy
        apply_cy_inplace(amps, n, gate.control, gate.target)


# ---------------------------------------------------------------------------
# public operations

def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    """Return the state after the unitary action of ``gate``."""
    amps = state.amplitudes.copy()
    apply_gate_inplace(amps, state.n_qubits, gate)
    return Statevector(state.n_qubits, amps)


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b> with conjugation on the first argument."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(
            f"qubit counts differ: {a.n_qubits} vs {b.n_qubits}"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fubini_study_distance(a: Statevector, b: Statevector) -> float:
    """arccos sqrt(<a|b><b|a>), the geodesic distance between pure states.

    The radicand is clamped to [0, 1] against round-off; the result lies
    in [0, pi/2] and ignores global phases on either argument.
    """
    ov = inner_product(a, b)
    radicand = min(max((ov * ov.conjugate()).real, 0.0), 1.0)
    return float(np.arccos(np.sqrt(radicand)))


@functools.lru_cache(maxsize=4096)
def _pauli_perm_phase(n: int, pauli: str):
    """Index permutation and source phases so that P psi = (phase*psi)[perm].

    For the tensor-product Pauli P, P|b> = phase[b] |b XOR flip| with
    flip collecting the X/Y positions; components follow by linearity.
    """
    idx = np.arange(1 << n)
    flip = 0
    sign = np.ones(1 << n)
    n_y = 0
    for q, letter in enumerate(pauli):
        bitpos = n - 1 - q
        if letter == "I":
            continue
        if letter in ("X", "Y"):
            flip |= 1 << bitpos
        if letter in ("Y", "Z"):
            sign = sign * (1 - 2 * ((idx >> bitpos) & 1))
        if letter == "Y":
            n_y += 1
    phase = (1j ** n_y) * sign
    perm = idx ^ flip
    perm.flags.writeable = False
    phase.flags.writeable = False
    return perm, phase


def _validate_pauli(pauli: str, n: int) -> None:
    if len(pauli) != n:
        raise ValueError(
            f"Pauli string {pauli!r} has length {len(pauli)}, expected {n}"
        )
    bad = set(pauli) - set("IXYZ")
    if bad:
        raise ValueError(f"invalid Pauli letter(s) {sorted(bad)} in {pauli!r}")


def pauli_action(amps: np.ndarray, n: int, pauli: str) -> np.ndarray:
    """P|psi> as a new raw amplitude array (internal helper)."""
    perm, phase = _pauli_perm_phase(n, pauli)
    return (phase * amps)[perm]


def pauli_expectation_raw(amps: np.ndarray, n: int, pauli: str) -> float:
    """<psi|P|psi> on a raw amplitude array, with Hermiticity check."""
    val = np.vdot(amps, pauli_action(amps, n, pauli))
    if abs(val.imag) > 1e-12:
        raise ValueError(
            f"expectation of {pauli!r} has imaginary residue {val.imag:g}"
        )
    return float(val.real)


def pauli_expectation(state: Statevector, pauli: str) -> float:
    """Expectation value <state|P|state> of a Pauli string observable."""
    _validate_pauli(pauli, state.n_qubits)
    return pauli_expectation_raw(state.amplitudes, state.n_qubits, pauli)
