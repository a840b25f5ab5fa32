"""Dense complex linear algebra and qubit-register state primitives.

Qubit ordering convention: qubit index 0 is the most significant bit of a
computational-basis index, so the basis state |q0 q1 ... q(N-1)> corresponds
to the integer q0*2^(N-1) + q1*2^(N-2) + ... + q(N-1).

All operations are pure functions on immutable values; nothing mutates a
state in place.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

ATOL_INPUT = 1e-8   # tolerance when validating caller-supplied operators
ATOL_CHECK = 1e-10  # tolerance for internal self-consistency checks

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
PAULIS = (I2, SIGMA_X, SIGMA_Y, SIGMA_Z)


def kron(*mats: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices, first factor most significant."""
    if not mats:
        raise ValueError("kron requires at least one matrix")
    return reduce(np.kron, mats)


def is_unitary(u: np.ndarray, atol: float = ATOL_INPUT) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol)


def is_hermitian(m: np.ndarray, atol: float = ATOL_INPUT) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, atol=atol)


@dataclass(frozen=True, eq=False)
class Ket:
    """Pure state over an ordered qubit register."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got shape {amps.shape}"
            )

    def validate(self, atol: float = ATOL_CHECK) -> None:
        norm = np.sum(np.abs(self.amplitudes) ** 2)
        if abs(norm - 1.0) > atol:
            raise ValueError(f"ket is not normalized: |psi|^2 = {norm}")

    @classmethod
    def zero(cls, num_qubits: int) -> "Ket":
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.num_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Mixed state over an ordered qubit register: trace-one Hermitian PSD matrix."""

    num_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        dim = 2**self.num_qubits
        if mat.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got shape {mat.shape}")

    def validate(self, atol: float = ATOL_CHECK) -> None:
        tr = np.trace(self.matrix)
        if abs(tr - 1.0) > atol:
            raise ValueError(f"trace is {tr}, expected 1")
        if not is_hermitian(self.matrix, atol=atol):
            raise ValueError("matrix is not Hermitian")
        eigs = np.linalg.eigvalsh(self.matrix)
        if eigs.min() < -atol:
            raise ValueError(f"negative eigenvalue {eigs.min()}")

    @classmethod
    def zero(cls, num_qubits: int) -> "DensityMatrix":
        return Ket.zero(num_qubits).density()

    @classmethod
    def from_pure(cls, amplitudes: np.ndarray) -> "DensityMatrix":
        amps = np.asarray(amplitudes, dtype=complex)
        n = int(np.log2(amps.size))
        return Ket(n, amps).density()


# ---------------------------------------------------------------------------
# Raw array kernels. These skip validation and are the hot path for the
# simulator; the public wrappers below validate their inputs once.
# ---------------------------------------------------------------------------

def _unitary_on_rho(rho: np.ndarray, op: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """rho -> (op on targets) rho (op on targets)^dagger, for any square op."""
    k = len(targets)
    t = rho.reshape((2,) * (2 * n))
    opk = op.reshape((2,) * (2 * k))
    t = np.tensordot(opk, t, axes=(list(range(k, 2 * k)), list(targets)))
    t = np.moveaxis(t, range(k), targets)
    col_axes = [n + q for q in targets]
    t = np.tensordot(opk.conj(), t, axes=(list(range(k, 2 * k)), col_axes))
    t = np.moveaxis(t, range(k), col_axes)
    return t.reshape(2**n, 2**n)


def _kraus_on_rho(rho: np.ndarray, kraus: list[np.ndarray], targets: tuple[int, ...], n: int) -> np.ndarray:
    out = np.zeros_like(rho)
    for op in kraus:
        out += _unitary_on_rho(rho, op, targets, n)
    return out


def _unitary_on_ket(psi: np.ndarray, op: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    k = len(targets)
    t = psi.reshape((2,) * n)
    opk = op.reshape((2,) * (2 * k))
    t = np.tensordot(opk, t, axes=(list(range(k, 2 * k)), list(targets)))
    t = np.moveaxis(t, range(k), targets)
    return t.reshape(-1)


def _partial_trace_rho(rho: np.ndarray, keep: tuple[int, ...], n: int) -> np.ndarray:
    """Reduced density matrix on `keep`, preserving the given qubit order."""
    traced = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    perm = list(keep) + traced + [n + q for q in keep] + [n + q for q in traced]
    t = np.transpose(t, perm)
    dk, dt = 2 ** len(keep), 2 ** len(traced)
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def _permute_qubits_rho(rho: np.ndarray, perm: tuple[int, ...], n: int) -> np.ndarray:
    """Relabel qubits: output qubit q is input qubit perm[q]."""
    t = rho.reshape((2,) * (2 * n))
    axes = list(perm) + [n + q for q in perm]
    return np.transpose(t, axes).reshape(2**n, 2**n)


# ---------------------------------------------------------------------------
# Public, validated operations.
# ---------------------------------------------------------------------------

def _check_targets(targets, num_qubits: int, op_dim: int) -> tuple[int, ...]:
    targets = tuple(int(q) for q in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits: {targets}")
    for q in targets:
        if not 0 <= q < num_qubits:
            raise ValueError(f"target qubit {q} out of range for {num_qubits} qubits")
    if op_dim != 2 ** len(targets):
        raise ValueError(f"operator dimension {op_dim} does not match {len(targets)} target qubits")
    return targets


def apply_unitary(state: DensityMatrix, u: np.ndarray, targets) -> DensityMatrix:
    """Conjugate the state by a unitary embedded on the target qubits."""
    u = np.asarray(u, dtype=complex)
    targets = _check_targets(targets, state.num_qubits, u.shape[0])
    if not is_unitary(u):
        raise ValueError("operator is not unitary")
    out = _unitary_on_rho(state.matrix, u, targets, state.num_qubits)
    return DensityMatrix(state.num_qubits, out)


def apply_kraus(state: DensityMatrix, kraus, targets) -> DensityMatrix:
    """Apply an operator-sum channel sum_i K_i rho K_i^dagger on the target qubits."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    if not kraus:
        raise ValueError("empty Kraus list")
    targets = _check_targets(targets, state.num_qubits, kraus[0].shape[0])
    dim = kraus[0].shape[0]
    comp = sum(k.conj().T @ k for k in kraus)
    if not np.allclose(comp, np.eye(dim), atol=ATOL_INPUT):
        raise ValueError("Kraus operators do not satisfy completeness sum K^t K = I")
    out = _kraus_on_rho(state.matrix, kraus, targets, state.num_qubits)
    return DensityMatrix(state.num_qubits, out)


def partial_trace(state: DensityMatrix, keep) -> DensityMatrix:
    """Trace out every qubit not in `keep`; kept qubits preserve their order."""
    keep = tuple(int(q) for q in keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    for q in keep:
        if not 0 <= q < state.num_qubits:
            raise ValueError(f"qubit {q} out of range")
    if len(set(keep)) != len(keep):
        raise ValueError(f"duplicate qubits in keep: {keep}")
    out = _partial_trace_rho(state.matrix, keep, state.num_qubits)
    return DensityMatrix(len(keep), out)


def eig3_sym_desc(r: np.ndarray) -> tuple[float, float, float]:
    """Eigenvalues of a real symmetric 3x3 matrix, sorted descending."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got {r.shape}")
    if not np.allclose(r, r.T, atol=ATOL_CHECK):
        raise ValueError("matrix is not symmetric")
    vals = np.linalg.eigvalsh(r)[::-1]
    return float(vals[0]), float(vals[1]), float(vals[2])
