"""Pauli-sum Hamiltonians: expectation values, dense spectra, file loading.

A Hamiltonian is a weighted sum of Pauli strings acting on n qubits,

    H = sum_k c_k P_k,   P_k in {I, X, Y, Z}^n,  c_k real.

Expectation values come in two flavors: ``exact`` (term-by-term dense
contraction) and ``shots`` (simulated measurement sampling of each term in
its diagonalizing basis, seeded and reproducible).
"""

from __future__ import annotations

import functools

import numpy as np

from .statevector import (
    Statevector,
    _pauli_perm_phase,
    _validate_pauli,
    apply_1q_inplace,
    _H,
)

_DENSE_QUBIT_GUARD = 12
_HERMITIAN_TOL = 1e-10

_SDG = np.array([[1.0, 0.0], [0.0, -1j]])

_PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliHamiltonian:
    """Immutable weighted sum of Pauli strings on a fixed qubit count.

    Terms are canonicalized on construction: duplicate strings are merged
    by summing coefficients and exact-zero terms are dropped.

    Parameters
    ----------
    terms : iterable of (float, str)
        Coefficient / Pauli-string pairs, e.g. ``[(0.4, "ZI"), (0.2, "XX")]``.
        All strings must share one length, which fixes ``n_qubits``.
    """

    __slots__ = ("n_qubits", "terms")

    def __init__(self, terms):
        terms = list(terms)
        if not terms:
            raise ValueError("Hamiltonian needs at least one term")
        n = len(terms[0][1])
        merged: dict[str, float] = {}
        for coeff, pauli in terms:
            if not np.isfinite(coeff):
                raise ValueError(f"non-finite coefficient {coeff!r} for {pauli!r}")
            _validate_pauli(pauli, n)
            merged[pauli] = merged.get(pauli, 0.0) + float(coeff)
        kept = tuple(
            (c, p) for p, c in merged.items() if c != 0.0
        )
        if not kept:
            raise ValueError("all terms cancelled; empty Hamiltonian")
        object.__setattr__(self, "n_qubits", n)
        object.__setattr__(self, "terms", kept)

    def __setattr__(self, name, value):
        raise AttributeError("PauliHamiltonian is immutable")

    def __repr__(self):
        body = " + ".join(f"{c:+g}*{p}" for c, p in self.terms)
        return f"PauliHamiltonian({self.n_qubits}q: {body})"

    def weight(self) -> float:
        """Sum of absolute coefficients (scale for shot-noise bounds)."""
        return float(sum(abs(c) for c, _ in self.terms))


class ExpectationEstimator:
    """Expectation-value backend: exact contraction or finite-shot sampling.

    ``shots == 0`` selects exact mode. In shots mode each Pauli term is
    rotated into its diagonal basis, measured ``shots`` times via a
    multinomial draw, and averaged; the estimator owns a seeded RNG, so a
    fresh estimator with the same seed reproduces the same sample sequence.
    """

    def __init__(self, shots: int = 0, seed: int = 0):
        if shots < 0:
            raise ValueError(f"shot count must be >= 0, got {shots}")
        self.shots = int(shots)
        self.seed = int(seed)
        self._rng = np.random.Generator(np.random.PCG64(seed)) if shots else None

    @property
    def mode(self) -> str:
        return "shots" if self.shots else "exact"

    def expectation_raw(self, amps: np.ndarray, n: int, pauli: str) -> float:
        """<psi|P|psi> on a raw amplitude array, exact or sampled."""
        if self.shots == 0:
            perm, phase = _pauli_perm_phase(n, pauli)
            return float(np.vdot(amps, (phase * amps)[perm]).real)
        return self._sample_term(amps, n, pauli)

    def expectation(self, state: Statevector, pauli: str) -> float:
        _validate_pauli(pauli, state.n_qubits)
        return self.expectation_raw(state.amplitudes, state.n_qubits, pauli)

    def _sample_term(self, amps: np.ndarray, n: int, pauli: str) -> float:
        mask = 0
        rotated = None
        for q, letter in enumerate(pauli):
            if letter == "I":
                continue
            mask |= 1 << (n - 1 - q)
            if letter in ("X", "Y"):
                if rotated is None:
                    rotated = amps.copy()
                if letter == "Y":
                    apply_1q_inplace(rotated, n, q, _SDG)
                apply_1q_inplace(rotated, n, q, _H)
        if mask == 0:
            return 1.0  # identity string: no measurement needed
        if rotated is None:
            rotated = amps
        probs = np.abs(rotated) ** 2
        probs = probs / probs.sum()
        counts = self._rng.multinomial(self.shots, probs)
        return float(np.dot(counts, _parity_eigenvalues(n, mask)) / self.shots)


EXACT = ExpectationEstimator()


@functools.lru_cache(maxsize=1024)
def _parity_eigenvalues(n: int, mask: int) -> np.ndarray:
    """(-1)^popcount(b & mask) over all basis indices b."""
    b = np.arange(1 << n) & mask
    parity = np.zeros(1 << n, dtype=np.int64)
    while mask:
        parity ^= b & 1
        b >>= 1
        mask >>= 1
    eig = 1.0 - 2.0 * parity
    eig.flags.writeable = False
    return eig


def energy_raw(
    h: PauliHamiltonian, amps: np.ndarray, est: ExpectationEstimator = EXACT
) -> float:
    """<psi|H|psi> on a raw amplitude array (internal fast path)."""
    n = h.n_qubits
    total = 0.0
    if est.shots == 0:
        for coeff, pauli in h.terms:
            perm, phase = _pauli_perm_phase(n, pauli)
            total += coeff * np.vdot(amps, (phase * amps)[perm]).real
    else:
        for coeff, pauli in h.terms:
            total += coeff * est._sample_term(amps, n, pauli)
    return float(total)


def energy(
    h: PauliHamiltonian, state: Statevector, est: ExpectationEstimator = EXACT
) -> float:
    """Energy <state|H|state>, exact or shot-sampled per the estimator."""
    if state.n_qubits != h.n_qubits:
        raise ValueError(
            f"state has {state.n_qubits} qubits, Hamiltonian {h.n_qubits}"
        )
    return energy_raw(h, state.amplitudes, est)


def dense_matrix(h: PauliHamiltonian) -> np.ndarray:
    """Hermitian 2^n x 2^n matrix sum_k c_k P_k via Kronecker products."""
    if h.n_qubits > _DENSE_QUBIT_GUARD:
        raise ValueError(
            f"dense matrix limited to {_DENSE_QUBIT_GUARD} qubits, "
            f"got {h.n_qubits}"
        )
    dim = 1 << h.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, pauli in h.terms:
        m = _PAULI_1Q[pauli[0]]
        for letter in pauli[1:]:
            m = np.kron(m, _PAULI_1Q[letter])
        out += coeff * m
    return out


def exact_ground_energy(h: PauliHamiltonian) -> float:
    """Smallest eigenvalue of the dense Hamiltonian matrix."""
    m = dense_matrix(h)
    residue = np.abs(m - m.conj().T).max()
    if residue > _HERMITIAN_TOL:
        raise ValueError(f"non-Hermitian residue {residue:g}")
    return float(np.linalg.eigvalsh(m)[0])


def spectrum(h: PauliHamiltonian) -> np.ndarray:
    """All eigenvalues of the dense Hamiltonian matrix, ascending."""
    m = dense_matrix(h)
    residue = np.abs(m - m.conj().T).max()
    if residue > _HERMITIAN_TOL:
        raise ValueError(f"non-Hermitian residue {residue:g}")
    return np.linalg.eigvalsh(m)


def load_pauli_file(path) -> PauliHamiltonian:
    """Parse a Pauli-term text file into a Hamiltonian.

    Format: one term per line, ``coefficient WHITESPACE pauli_letters``
    (e.g. ``0.4 ZI``). ``#`` starts a comment; blank lines are ignored.
    The qubit count is inferred from the first term and enforced for the
    rest. Parse errors report the offending line number.
    """
    terms = []
    n = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(
                    f"{path}:{lineno}: expected 'coefficient pauli', got {raw.rstrip()!r}"
                )
            coeff_str, pauli = parts
            try:
                coeff = float(coeff_str)
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: bad coefficient {coeff_str!r}"
                ) from None
            pauli = pauli.upper()
            if n is None:
                n = len(pauli)
            try:
                _validate_pauli(pauli, n)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            terms.append((coeff, pauli))
    if not terms:
        raise ValueError(f"{path}: no terms")
    return PauliHamiltonian(terms)
