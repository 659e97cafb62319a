"""Euclidean gradients (parameter-shift rule) and the Fubini-Study metric.

Three routes to the metric F[i][j] = Re <d_i phi | d_j phi> of a
RealAmplitude circuit (the Berry-connection term vanishes because all
amplitudes are real):

* within-rotation-layer entries: generator covariances
  <K_i K_j> - <K_i><K_j> on the state just before that layer, with
  K_i = Y on the parameter's qubit (gate convention RY(2a), so the
  derivative generator is Y without a 1/2 factor);
* cross-layer entries: an ancilla Hadamard-test circuit (ancilla prepared
  in |+>, controlled-Y inserted before parameter i's rotation layer and
  after parameter j's, H on the ancilla, ancilla Z expectation), simulated
  on n+1 qubits;
* `metric_oracle`: direct statevector derivatives, the reference
  implementation the circuit paths are tested against.

Every simulated-circuit expectation is charged to an `EvalLedger` so
optimizer runs can account for their QPU-call budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import (
    Ansatz,
    EntanglingLayer,
    RotationLayer,
    _check_theta,
    prepare_raw,
    rotation_prefix_states,
)
from .hamiltonian import EXACT, ExpectationEstimator, PauliHamiltonian, energy_raw
from .statevector import (
    _H,
    apply_1q_inplace,
    apply_cnot_inplace,
    apply_cy_inplace,
    apply_ry_inplace,
    pauli_action,
)

_SHIFT = np.pi / 4  # parameter-shift offset for the RY(2a) convention


@dataclass
class EvalLedger:
    """Aggregated count of simulated-circuit evaluations.

    ``energy_evals`` counts Hamiltonian expectation estimations (cost
    evaluations); ``metric_evals`` counts metric-entry circuit estimations.
    A single optimizer run owns one ledger; parallel experiment runs each
    own their own, so plain integer fields suffice.
    """

    energy_evals: int = 0
    metric_evals: int = 0

    def add_energy(self, k: int = 1) -> None:
        self.energy_evals += k

    def add_metric(self, k: int = 1) -> None:
        self.metric_evals += k

    @property
    def total(self) -> int:
        return self.energy_evals + self.metric_evals


@dataclass(frozen=True)
class MetricMatrix:
    """Real symmetric p x p Fubini-Study metric and how it was built."""

    F: np.ndarray
    mode: str  # identity | block_diagonal | full

    def __post_init__(self):
        f = np.asarray(self.F, dtype=float)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise ValueError(f"metric must be square, got shape {f.shape}")
        asym = np.abs(f - f.T).max() if f.size else 0.0
        if asym > 1e-10:
            raise ValueError(f"metric asymmetry {asym:g} exceeds 1e-10")
        f = f.copy()
        f.flags.writeable = False
        object.__setattr__(self, "F", f)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.F, dtype=dtype)

    @property
    def p(self) -> int:
        return self.F.shape[0]


def ansatz_energy(
    a: Ansatz,
    h: PauliHamiltonian,
    theta: np.ndarray,
    est: ExpectationEstimator = EXACT,
    ledger: EvalLedger | None = None,
) -> float:
    """Cost f(theta) = <phi(theta)|H|phi(theta)>; one ledgered energy eval."""
    if a.n_qubits != h.n_qubits:
        raise ValueError(
            f"ansatz has {a.n_qubits} qubits, Hamiltonian {h.n_qubits}"
        )
    if ledger is not None:
        ledger.add_energy()
    return energy_raw(h, prepare_raw(a, theta), est)


def parameter_shift_gradient(
    a: Ansatz,
    h: PauliHamiltonian,
    theta,
    est: ExpectationEstimator = EXACT,
    ledger: EvalLedger | None = None,
) -> np.ndarray:
    """Euclidean gradient via the two-point shift rule, 2p energy evals.

    With gate angle twice the parameter, the generator squares to the
    identity and df/dtheta_i = f(theta + pi/4 e_i) - f(theta - pi/4 e_i)
    exactly (in exact mode).
    """
    theta = _check_theta(a, theta)
    g = np.empty(a.p)
    for i in range(a.p):
        shifted = theta.copy()
        shifted[i] = theta[i] + _SHIFT
        f_plus = ansatz_energy(a, h, shifted, est, ledger)
        shifted[i] = theta[i] - _SHIFT
        f_minus = ansatz_energy(a, h, shifted, est, ledger)
        g[i] = f_plus - f_minus
    return g


# ---------------------------------------------------------------------------
# metric construction

def _layer_blocks(
    a: Ansatz,
    theta: np.ndarray,
    est: ExpectationEstimator,
    ledger: EvalLedger | None,
    out: np.ndarray,
) -> None:
    """Fill the within-rotation-layer blocks of `out` via covariances."""
    n = a.n_qubits
    prefixes = rotation_prefix_states(a, theta)
    for layer, prefix in zip(a.rotation_layers(), prefixes):
        off = layer.first_param
        singles = np.empty(n)
        for q in range(n):
            pauli = "I" * q + "Y" + "I" * (n - q - 1)
            singles[q] = est.expectation_raw(prefix, n, pauli)
            if ledger is not None:
                ledger.add_metric()
        for q in range(n):
            out[off + q, off + q] = 1.0 - singles[q] ** 2
        for q1 in range(n):
            for q2 in range(q1 + 1, n):
                pauli = "".join(
                    "Y" if q in (q1, q2) else "I" for q in range(n)
                )
                cov = est.expectation_raw(prefix, n, pauli)
                if ledger is not None:
                    ledger.add_metric()
                val = cov - singles[q1] * singles[q2]
                out[off + q1, off + q2] = val
                out[off + q2, off + q1] = val


def _hadamard_test_entry(
    a: Ansatz,
    theta: np.ndarray,
    param_i: int,
    param_j: int,
    est: ExpectationEstimator,
) -> float:
    """Re <d_i phi | d_j phi> for parameters in distinct rotation layers.

    Simulated on n+1 qubits with the ancilla on the extra (last) wire.
    Gates after parameter j's rotation layer cancel from the ancilla
    expectation and are skipped; the entry still counts as one circuit.
    """
    n = a.n_qubits
    nn = n + 1
    anc = n
    layer_i = a.layer_of_param(param_i)
    layer_j = a.layer_of_param(param_j)
    qi = a.qubit_of_param(param_i)
    qj = a.qubit_of_param(param_j)

    amps = np.zeros(1 << nn, dtype=complex)
    amps[0] = 1.0
    apply_1q_inplace(amps, nn, anc, _H)
    rot_idx = 0
    for layer in a.layers:
        if isinstance(layer, RotationLayer):
            if rot_idx == layer_i:
                apply_cy_inplace(amps, nn, anc, qi)
            off = layer.first_param
            for q in range(n):
                apply_ry_inplace(amps, nn, q, 2.0 * theta[off + q])
            if rot_idx == layer_j:
                apply_cy_inplace(amps, nn, anc, qj)
                break
            rot_idx += 1
        else:
            for control, target in layer.pairs:
                apply_cnot_inplace(amps, nn, control, target)
    apply_1q_inplace(amps, nn, anc, _H)
    return est.expectation_raw(amps, nn, "I" * n + "Z")


def full_fubini_metric(
    a: Ansatz,
    theta,
    est: ExpectationEstimator = EXACT,
    ledger: EvalLedger | None = None,
) -> MetricMatrix:
    """All p^2 metric entries: covariance blocks plus ancilla circuits."""
    theta = _check_theta(a, theta)
    out = np.zeros((a.p, a.p))
    _layer_blocks(a, theta, est, ledger, out)
    n = a.n_qubits
    for i in range(a.p):
        for j in range(i + 1, a.p):
            if i // n == j // n:
                continue  # same layer, already filled
            val = _hadamard_test_entry(a, theta, i, j, est)
            if ledger is not None:
                ledger.add_metric()
            out[i, j] = val
            out[j, i] = val
    return MetricMatrix(out, "full")


def block_diagonal_metric(
    a: Ansatz,
    theta,
    est: ExpectationEstimator = EXACT,
    ledger: EvalLedger | None = None,
) -> MetricMatrix:
    """Within-layer blocks only; cross-layer entries set to zero."""
    theta = _check_theta(a, theta)
    out = np.zeros((a.p, a.p))
    _layer_blocks(a, theta, est, ledger, out)
    return MetricMatrix(out, "block_diagonal")


def identity_metric(p: int) -> MetricMatrix:
    """Euclidean fallback: F = I, turning QNGD into plain SGD."""
    return MetricMatrix(np.eye(p), "identity")


def compute_metric(
    a: Ansatz,
    theta,
    mode: str,
    est: ExpectationEstimator = EXACT,
    ledger: EvalLedger | None = None,
) -> MetricMatrix:
    if mode == "identity":
        return identity_metric(a.p)
    if mode == "block_diagonal":
        return block_diagonal_metric(a, theta, est, ledger)
    if mode == "full":
        return full_fubini_metric(a, theta, est, ledger)
    raise ValueError(f"unknown metric mode {mode!r}")


def metric_eval_count(a: Ansatz, mode: str) -> int:
    """Deterministic number of circuit evaluations one metric call costs."""
    n = a.n_qubits
    n_layers = len(a.rotation_layers())
    within = n_layers * (n + n * (n - 1) // 2)
    if mode == "identity":
        return 0
    if mode == "block_diagonal":
        return within
    if mode == "full":
        cross = a.p * (a.p - 1) // 2 - n_layers * (n * (n - 1) // 2)
        return within + cross
    raise ValueError(f"unknown metric mode {mode!r}")


def metric_oracle(a: Ansatz, theta) -> MetricMatrix:
    """Metric from exact statevector derivatives (reference path).

    |d_i phi> is obtained by re-simulating the circuit with parameter i's
    rotation followed by its generator: d/da e^{-iaY} = -iY e^{-iaY}. The
    full geometric tensor G_ij = <d_i|d_j> - <d_i|phi><phi|d_j> is then
    assembled densely and its real part returned.
    """
    theta = _check_theta(a, theta)
    n = a.n_qubits
    phi = prepare_raw(a, theta)
    derivs = np.empty((a.p, 1 << n), dtype=complex)
    y_strings = [
        "I" * q + "Y" + "I" * (n - q - 1) for q in range(n)
    ]
    for i in range(a.p):
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1.0
        for layer in a.layers:
            if isinstance(layer, RotationLayer):
                off = layer.first_param
                for q in range(n):
                    apply_ry_inplace(amps, n, q, 2.0 * theta[off + q])
                    if off + q == i:
                        amps = -1j * pauli_action(amps, n, y_strings[q])
            else:
                for control, target in layer.pairs:
                    apply_cnot_inplace(amps, n, control, target)
        derivs[i] = amps
    overlaps = derivs.conj() @ derivs.T
    berry = derivs.conj() @ phi
    g = overlaps - np.outer(berry, berry.conj())
    f = g.real
    return MetricMatrix((f + f.T) / 2.0, "full")


def pseudo_invert(F, eps: float) -> np.ndarray:
    """Eigen-inverse of a symmetric matrix, zeroing eigenvalues <= eps.

    Eigenspaces at or below the threshold are projected out entirely, which
    suppresses the large steps a near-singular metric would otherwise
    cause. The result is symmetric but deliberately not a Moore-Penrose
    inverse on the discarded subspace.
    """
    if eps <= 0:
        raise ValueError(f"threshold must be positive, got {eps}")
    f = np.asarray(F, dtype=float)
    asym = np.abs(f - f.T).max() if f.size else 0.0
    if asym > 1e-8:
        raise ValueError(f"matrix asymmetry {asym:g} exceeds 1e-8")
    vals, vecs = np.linalg.eigh((f + f.T) / 2.0)
    inv_vals = np.where(vals > eps, 1.0, 0.0) / np.where(vals > eps, vals, 1.0)
    return (vecs * inv_vals) @ vecs.T
