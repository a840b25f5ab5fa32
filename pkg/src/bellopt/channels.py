"""Noise channels: Kraus operators for the quantum models, column-stochastic
post-processing matrices for the detector models, and placement grammar that
attaches them to a network.

Gamma conventions follow the visibility relations gamma = (3/4)(1-v) for the
qubit depolarizing channel and gamma = (15/16)(1-v) for the two-qubit source
depolarizing channel.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass

import numpy as np

from .network import Topology
from .qmath import ATOL_INPUT, CNOT, I2, SIGMA_X, SIGMA_Y, SIGMA_Z, kron

_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2.0)
_PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2.0)
_PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2.0)
_PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2.0)
BELL_BASIS = (_PHI_PLUS, _PHI_MINUS, _PSI_PLUS, _PSI_MINUS)

FAULT_ENV = "BELLOPT_INJECT_FAULT"


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"noise parameter {gamma} outside [0, 1]")
    return gamma


def _maybe_fault(name: str, kraus: list[np.ndarray]) -> list[np.ndarray]:
    # Test hook: corrupts one channel family so the verification suite can
    # demonstrate that an injected fault is caught.
    if os.environ.get(FAULT_ENV) == name:
        return [k * 1.01 for k in kraus]
    return kraus


def depolarizing_qubit(gamma: float) -> list[np.ndarray]:
    """Qubit depolarizing channel; gamma=3/4 fully mixes any input."""
    gamma = _check_gamma(gamma)
    return _maybe_fault("depolarizing_qubit", [
        np.sqrt(1 - gamma) * I2,
        np.sqrt(gamma / 3) * SIGMA_X,
        np.sqrt(gamma / 3) * SIGMA_Y,
        np.sqrt(gamma / 3) * SIGMA_Z,
    ])


def depolarizing_source(gamma: float) -> list[np.ndarray]:
    """Two-qubit depolarizing channel: 16 Pauli-product Kraus operators."""
    gamma = _check_gamma(gamma)
    ops = [np.sqrt(1 - gamma) * np.eye(4, dtype=complex)]
    paulis = (I2, SIGMA_X, SIGMA_Y, SIGMA_Z)
    for i, j in itertools.product(range(4), repeat=2):
        if i == j == 0:
            continue
        ops.append(np.sqrt(gamma / 15) * kron(paulis[i], paulis[j]))
    return _maybe_fault("depolarizing_source", ops)


def dephasing(gamma: float) -> list[np.ndarray]:
    """Qubit dephasing: off-diagonal terms decay by sqrt(1-gamma)."""
    gamma = _check_gamma(gamma)
    k0 = np.diag([1.0, np.sqrt(1 - gamma)]).astype(complex)
    k1 = np.diag([0.0, np.sqrt(gamma)]).astype(complex)
    return _maybe_fault("dephasing", [k0, k1])


def dephasing_ancilla_unitary(gamma: float) -> np.ndarray:
    """Two-qubit unitary (system, ancilla) realizing dephasing by a controlled
    rotation of the ancilla about y with theta = 2*asin(sqrt(gamma))."""
    gamma = _check_gamma(gamma)
    theta = 2 * np.arcsin(np.sqrt(gamma))
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    cry = np.eye(4, dtype=complex)
    cry[2:, 2:] = np.array([[c, -s], [s, c]])
    return cry


def amplitude_damping(gamma: float) -> list[np.ndarray]:
    """Qubit amplitude damping: energy decay toward |0>, which it preserves."""
    gamma = _check_gamma(gamma)
    k0 = np.diag([1.0, np.sqrt(1 - gamma)]).astype(complex)
    k1 = np.zeros((2, 2), dtype=complex)
    k1[0, 1] = np.sqrt(gamma)
    return _maybe_fault("amplitude_damping", [k0, k1])


def amplitude_damping_ancilla_unitary(gamma: float) -> np.ndarray:
    """Two-qubit unitary (system, ancilla) realizing amplitude damping: the
    dephasing controlled-rotation followed by a CNOT from the ancilla."""
    cry = dephasing_ancilla_unitary(gamma)
    cnot_back = np.eye(4, dtype=complex)[:, [0, 3, 2, 1]]  # control = ancilla
    return cnot_back @ cry


def colored_affine(rho: np.ndarray, gamma: float) -> np.ndarray:
    """Affine definition of the colored-noise channel: keep rho with weight
    1-gamma, otherwise emit the uniform mixture on the psi+/psi- subspace."""
    gamma = _check_gamma(gamma)
    psi_mix = np.outer(_PSI_PLUS, _PSI_PLUS.conj()) + np.outer(_PSI_MINUS, _PSI_MINUS.conj())
    return (1 - gamma) * rho + (gamma / 2) * psi_mix * np.trace(rho)


def _colored_printed_kraus(gamma: float) -> list[np.ndarray]:
    ops = [np.sqrt(1 - gamma) * np.eye(4, dtype=complex)]
    r = np.sqrt(gamma / 2)
    ops.append(r * np.outer(_PSI_PLUS, _PHI_PLUS.conj()))
    ops.append(r * np.outer(_PSI_MINUS, _PHI_MINUS.conj()))
    ops.append(r * np.outer(_PSI_PLUS, _PSI_PLUS.conj()))
    ops.append(r * np.outer(_PSI_PLUS, _PSI_MINUS.conj()))
    return ops


def choi_kraus(apply_map, dim: int, atol: float = 1e-12) -> list[np.ndarray]:
    """Kraus operators from the eigendecomposition of a channel's Choi matrix.

    `apply_map` maps a dim x dim matrix to a dim x dim matrix and must be
    completely positive and trace preserving.
    """
    choi = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            choi += np.kron(e, apply_map(e))
    vals, vecs = np.linalg.eigh(choi)
    kraus = []
    for lam, vec in zip(vals, vecs.T):
        if lam < -1e-9:
            raise ValueError(f"map is not completely positive (Choi eigenvalue {lam})")
        if lam > atol:
            # an eigenvector lives in H_in (x) H_out; column i of the Kraus
            # operator is the output block for input |i>
            kraus.append(np.sqrt(lam) * vec.reshape(dim, dim).T)
    return kraus


def colored_noise(gamma: float) -> list[np.ndarray]:
    """Two-qubit colored noise (depolarization onto the psi subspace).

    The textbook Kraus list is completeness-checked first; it undershoots
    sum K^t K = I for gamma > 0, so the operators are rebuilt from the Choi
    matrix of the affine map, which is taken as normative.
    """
    gamma = _check_gamma(gamma)
    printed = _colored_printed_kraus(gamma)
    comp = sum(k.conj().T @ k for k in printed)
    if np.allclose(comp, np.eye(4), atol=ATOL_INPUT):
        return _maybe_fault("colored", printed)
    rebuilt = choi_kraus(lambda x: colored_affine(x, gamma), 4)
    return _maybe_fault("colored", rebuilt)


def white_noise_detector(gamma: float) -> np.ndarray:
    """Detector white noise: with probability gamma the output bit is uniform."""
    gamma = _check_gamma(gamma)
    return (1 - gamma) * np.eye(2) + (gamma / 2) * np.ones((2, 2))


def biased_detector(gamma: float) -> np.ndarray:
    """Biased detector error: with probability gamma the +1 outcome is forced."""
    gamma = _check_gamma(gamma)
    return (1 - gamma) * np.eye(2) + gamma * np.array([[1.0, 1.0], [0.0, 0.0]])


# ---------------------------------------------------------------------------
# Placement grammar: attach channels to qubits, sources, or detectors.
# ---------------------------------------------------------------------------

QUBIT_MODELS = {
    "depolarizing_qubit": depolarizing_qubit,
    "dephasing": dephasing,
    "amplitude_damping": amplitude_damping,
}
# channels that admit a one-ancilla system-environment circuit
ANCILLA_REALIZATIONS = {
    "dephasing": dephasing_ancilla_unitary,
    "amplitude_damping": amplitude_damping_ancilla_unitary,
}
SOURCE_MODELS = {
    "depolarizing_source": depolarizing_source,
    "colored": colored_noise,
}
DETECTOR_MODELS = {
    "white_noise_detector": white_noise_detector,
    "biased_detector": biased_detector,
}


@dataclass(frozen=True)
class QuantumNoise:
    """A Kraus channel bound to specific register qubits.

    Either a named model with its gamma, or an explicit operator list via
    `kraus_ops` (name then only labels the channel).
    """

    name: str
    gamma: float
    targets: tuple[int, ...]
    kraus_ops: tuple = None

    def kraus(self) -> list[np.ndarray]:
        if self.kraus_ops is not None:
            return list(self.kraus_ops)
        if self.name in QUBIT_MODELS:
            return QUBIT_MODELS[self.name](self.gamma)
        return SOURCE_MODELS[self.name](self.gamma)


@dataclass(frozen=True)
class DetectorNoise:
    """A 2x2 post-processing map bound to one node's binary outcome."""

    name: str
    gamma: float
    node: int

    def matrix(self) -> np.ndarray:
        return DETECTOR_MODELS[self.name](self.gamma)


@dataclass(frozen=True)
class NoiseModel:
    quantum: tuple[QuantumNoise, ...] = ()
    detector: tuple[DetectorNoise, ...] = ()

    @property
    def is_noiseless_circuit(self) -> bool:
        """True when the quantum part of the simulation stays pure."""
        return not self.quantum

    def describe(self) -> str:
        parts = [f"{c.name}(gamma={c.gamma:g})@q{list(c.targets)}" for c in self.quantum]
        parts += [f"{c.name}(gamma={c.gamma:g})@node{c.node}" for c in self.detector]
        return " + ".join(parts) if parts else "noiseless"


NOISELESS = NoiseModel()


def _gammas_for(placement, count: int, gamma) -> list[tuple[int, float]]:
    """Resolve a placement spec into (element index, gamma) pairs."""
    if isinstance(placement, (list, tuple)):
        elements = [int(e) for e in placement]
    elif placement == "single":
        elements = [0]
    elif placement == "uniform":
        elements = list(range(count))
    else:
        raise ValueError(f"unknown placement {placement!r}; use 'single', 'uniform', or an index list")
    for e in elements:
        if not 0 <= e < count:
            raise ValueError(f"placement index {e} out of range (count {count})")
    gammas = [float(gamma)] * len(elements) if np.isscalar(gamma) else [float(g) for g in gamma]
    if len(gammas) != len(elements):
        raise ValueError(f"expected {len(elements)} gamma values, got {len(gammas)}")
    for g in gammas:
        _check_gamma(g)
    return list(zip(elements, gammas))


def build_noise_model(topology: Topology, model: str, placement="uniform", gamma: float = 0.0) -> NoiseModel:
    """Attach a named noise model to a network.

    Placements: 'single' (first qubit / source / detector), 'uniform' (all of
    them, same gamma), or an explicit index list (gamma may then be a list).
    """
    if model in ("none", "noiseless"):
        return NOISELESS
    if model in QUBIT_MODELS:
        pairs = _gammas_for(placement, topology.num_qubits, gamma)
        chans = tuple(QuantumNoise(model, g, (q,)) for q, g in pairs)
        return NoiseModel(quantum=chans)
    if model in SOURCE_MODELS:
        pairs = _gammas_for(placement, len(topology.sources), gamma)
        chans = tuple(QuantumNoise(model, g, topology.sources[i].qubits) for i, g in pairs)
        return NoiseModel(quantum=chans)
    if model in DETECTOR_MODELS:
        pairs = _gammas_for(placement, len(topology.nodes), gamma)
        return NoiseModel(detector=tuple(DetectorNoise(model, g, j) for j, g in pairs))
    known = sorted({**QUBIT_MODELS, **SOURCE_MODELS, **DETECTOR_MODELS})
    raise ValueError(f"unknown noise model {model!r}; known: {', '.join(known)}")
