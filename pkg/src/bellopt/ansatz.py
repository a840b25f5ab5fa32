"""Parameterized gate library and the preparation/measurement layers that
assemble a network ansatz.

Every parameter is the angle of a single Pauli-type rotation except inside
the arbitrary M-qubit unitary for M >= 3, which uses a Pauli-basis matrix
exponential and is therefore flagged non-shiftable for gradient purposes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .network import InputWiring, Node, Source, SettingsLayout, Topology
from .qmath import CNOT, HADAMARD, I2, SIGMA_X, SIGMA_Y, SIGMA_Z, kron

RY = "ry"
RZ = "rz"
ROT3 = "rot3"
GATE_HADAMARD = "hadamard"
GATE_CNOT = "cnot"
GATE_PAULI_X = "pauli_x"
ARB_STATE_PREP = "arb_state_prep"
ARB_UNITARY = "arb_unitary"
BELL_PHI_PLUS = "bell_phi_plus"
BELL_PSI_PLUS = "bell_psi_plus"
MAX_ENTANGLED = "max_entangled"
NONMAX_ENTANGLED = "nonmax_entangled"
LOCAL_RY = "local_ry"
LOCAL_ROT = "local_rot"


def rot_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rot_z(theta: float) -> np.ndarray:
    return np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)])


def rot3(params) -> np.ndarray:
    """General qubit rotation R_z(p0) R_y(p1) R_z(p2)."""
    return rot_z(params[0]) @ rot_y(params[1]) @ rot_z(params[2])


def _param_count(kind: str, num_targets: int) -> int:
    m = num_targets
    return {
        RY: 1,
        RZ: 1,
        ROT3: 3,
        GATE_HADAMARD: 0,
        GATE_CNOT: 0,
        GATE_PAULI_X: 0,
        ARB_STATE_PREP: 2 ** (m + 1) - 2,
        ARB_UNITARY: 2 ** (2 * m) - 1,
        BELL_PHI_PLUS: 0,
        BELL_PSI_PLUS: 0,
        MAX_ENTANGLED: 3,
        NONMAX_ENTANGLED: 2,
        LOCAL_RY: m,
        LOCAL_ROT: 3 * m,
    }[kind]


@dataclass(frozen=True)
class GateSpec:
    """One parameterized gate acting on an absolute-index qubit tuple."""

    kind: str
    targets: tuple[int, ...]
    param_count: int = field(init=False)
    shiftable: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "param_count", _param_count(self.kind, len(self.targets)))
        shiftable = not (self.kind == ARB_UNITARY and len(self.targets) >= 3)
        object.__setattr__(self, "shiftable", shiftable)
        if self.kind in (GATE_CNOT, BELL_PHI_PLUS, BELL_PSI_PLUS, MAX_ENTANGLED, NONMAX_ENTANGLED):
            if len(self.targets) != 2:
                raise ValueError(f"{self.kind} acts on exactly two qubits")
        if self.kind in (RY, RZ, ROT3, GATE_HADAMARD, GATE_PAULI_X) and len(self.targets) != 1:
            raise ValueError(f"{self.kind} acts on exactly one qubit")


def _embed_direct(op: np.ndarray, targets: tuple[int, ...], m: int) -> np.ndarray:
    """Embed a gate on local qubit indices `targets` into an m-qubit unitary."""
    k = len(targets)
    t = op.reshape((2,) * (2 * k))
    full = np.eye(2**m, dtype=complex).reshape((2,) * (2 * m))
    out = np.tensordot(t, full, axes=(list(range(k, 2 * k)), list(targets)))
    out = np.moveaxis(out, range(k), targets)
    return out.reshape(2**m, 2**m)


def _gray_controls(ell: int) -> list[int]:
    """Control qubit sequence for a Gray-code rotation cascade on ell controls."""
    if ell == 0:
        return []
    controls = []
    for step in range(1, 2**ell + 1):
        prev = (step - 1) ^ ((step - 1) >> 1)
        cur = (step % (2**ell)) ^ ((step % (2**ell)) >> 1)
        flipped_bit = (prev ^ cur).bit_length() - 1
        controls.append(ell - 1 - flipped_bit)
    return controls


def _rotation_cascade(m: int, params: np.ndarray, rot) -> np.ndarray:
    """Multiplexed-rotation tree over m qubits, one plain rotation per parameter.

    Level ell applies 2^ell rotations on qubit ell interleaved with CNOTs from
    the qubits above it (Gray-code control order); the parameter-to-state map
    spans the same set as abstract uniformly-controlled rotations.
    """
    u = np.eye(2**m, dtype=complex)
    idx = 0
    for ell in range(m):
        controls = _gray_controls(ell)
        for step in range(2**ell):
            u = _embed_direct(rot(params[idx]), (ell,), m) @ u
            idx += 1
            if controls:
                u = _embed_direct(CNOT, (controls[step], ell), m) @ u
    return u


def arb_state_prep_unitary(m: int, params) -> np.ndarray:
    """Unitary preparing an arbitrary m-qubit pure state from |0...0>.

    Uses a rotation-about-y tree for the amplitudes followed by a
    rotation-about-z tree for the relative phases; parameter count is
    2^(m+1) - 2 and the map onto pure states is surjective.
    """
    params = np.asarray(params, dtype=float)
    expected = 2 ** (m + 1) - 2
    if params.shape != (expected,):
        raise ValueError(f"arbitrary {m}-qubit preparation takes {expected} parameters")
    half = 2**m - 1
    u_amp = _rotation_cascade(m, params[:half], rot_y)
    u_phase = _rotation_cascade(m, params[half:], rot_z)
    return u_phase @ u_amp


_XX = kron(SIGMA_X, SIGMA_X)
_YY = kron(SIGMA_Y, SIGMA_Y)
_ZZ = kron(SIGMA_Z, SIGMA_Z)


def _exp_pauli_string(angle: float, pauli: np.ndarray) -> np.ndarray:
    # exp(-i angle P / 2) for P with P^2 = I
    return np.cos(angle / 2) * np.eye(pauli.shape[0]) - 1j * np.sin(angle / 2) * pauli


def arb_unitary(m: int, params) -> np.ndarray:
    """Arbitrary m-qubit unitary (up to global phase) on 2^(2m)-1 parameters.

    m=1: general rotation. m=2: canonical two-qubit decomposition, local
    rotations around a commuting XX/YY/ZZ core (each parameter remains a
    plain Pauli-string rotation). m>=3: Pauli-basis exponential.
    """
    params = np.asarray(params, dtype=float)
    expected = 2 ** (2 * m) - 1
    if params.shape != (expected,):
        raise ValueError(f"arbitrary {m}-qubit unitary takes {expected} parameters")
    if m == 1:
        return rot3(params)
    if m == 2:
        pre = kron(rot3(params[9:12]), rot3(params[12:15]))
        core = (
            _exp_pauli_string(params[6], _XX)
            @ _exp_pauli_string(params[7], _YY)
            @ _exp_pauli_string(params[8], _ZZ)
        )
        post = kron(rot3(params[0:3]), rot3(params[3:6]))
        return post @ core @ pre
    strings = [kron(*ops) for ops in itertools.product(qmath.PAULIS, repeat=m)][1:]
    h = sum(p * s for p, s in zip(params, strings))
    w, v = np.linalg.eigh(h / 2)
    return (v * np.exp(-1j * w)) @ v.conj().T


def gate_unitary(g: GateSpec, params) -> np.ndarray:
    """Unitary of dimension 2^len(targets) for the gate at the given parameters."""
    params = np.asarray(params, dtype=float)
    if params.shape != (g.param_count,):
        raise ValueError(f"{g.kind} takes {g.param_count} parameters, got {params.shape}")
    m = len(g.targets)
    if g.kind == RY:
        return rot_y(params[0])
    if g.kind == RZ:
        return rot_z(params[0])
    if g.kind == ROT3:
        return rot3(params)
    if g.kind == GATE_HADAMARD:
        return HADAMARD
    if g.kind == GATE_CNOT:
        return CNOT
    if g.kind == GATE_PAULI_X:
        return SIGMA_X
    if g.kind == BELL_PHI_PLUS:
        return CNOT @ kron(HADAMARD, I2)
    if g.kind == BELL_PSI_PLUS:
        return CNOT @ kron(HADAMARD, SIGMA_X)
    if g.kind == MAX_ENTANGLED:
        return kron(rot3(params), I2) @ CNOT @ kron(HADAMARD, I2)
    if g.kind == NONMAX_ENTANGLED:
        return CNOT @ kron(rot_z(params[1]) @ rot_y(params[0]), I2)
    if g.kind == LOCAL_RY:
        return kron(*[rot_y(p) for p in params]) if m > 1 else rot_y(params[0])
    if g.kind == LOCAL_ROT:
        blocks = [rot3(params[3 * i : 3 * i + 3]) for i in range(m)]
        return kron(*blocks) if m > 1 else blocks[0]
    if g.kind == ARB_STATE_PREP:
        return arb_state_prep_unitary(m, params)
    if g.kind == ARB_UNITARY:
        return arb_unitary(m, params)
    raise ValueError(f"unknown gate kind {g.kind!r}")


# ---------------------------------------------------------------------------
# Named preparation and measurement layers.
# ---------------------------------------------------------------------------

PREPARATION_ANSATZES = {
    "none": None,
    "phi_plus_state_preparation": BELL_PHI_PLUS,
    "psi_plus_state_preparation": BELL_PSI_PLUS,
    "maximally_entangled_state_preparation": MAX_ENTANGLED,
    "nonmaximally_entangled_state_preparation": NONMAX_ENTANGLED,
    "arbitrary_state_preparation": ARB_STATE_PREP,
}
PREPARATION_ALIASES = {
    "phi_plus": "phi_plus_state_preparation",
    "psi_plus": "psi_plus_state_preparation",
    "max_entangled": "maximally_entangled_state_preparation",
    "nonmax_entangled": "nonmaximally_entangled_state_preparation",
    "arbitrary": "arbitrary_state_preparation",
}

MEASUREMENT_ANSATZES = {
    "local_ry_measurement": LOCAL_RY,
    "arbitrary_local_qubit_measurement": LOCAL_ROT,
    "arbitrary_projective_measurement": ARB_UNITARY,
}
MEASUREMENT_ALIASES = {
    "local_ry": "local_ry_measurement",
    "local_rot": "arbitrary_local_qubit_measurement",
    "arbitrary": "arbitrary_projective_measurement",
}


def _resolve(name: str, table: dict, aliases: dict, role: str) -> str:
    key = aliases.get(name, name)
    if key not in table:
        known = sorted(set(table) | set(aliases))
        raise ValueError(f"unknown {role} ansatz {name!r}; known: {', '.join(known)}")
    return key


def prep_gates_for(name: str, source: Source) -> tuple[GateSpec, ...]:
    kind = PREPARATION_ANSATZES[_resolve(name, PREPARATION_ANSATZES, PREPARATION_ALIASES, "preparation")]
    if kind is None:
        return ()
    if kind in (BELL_PHI_PLUS, BELL_PSI_PLUS, MAX_ENTANGLED, NONMAX_ENTANGLED) and len(source.qubits) != 2:
        raise ValueError(f"{name} needs a two-qubit source, got {source.qubits}")
    return (GateSpec(kind, source.qubits),)


def meas_gates_for(name: str, node: Node) -> tuple[GateSpec, ...]:
    kind = MEASUREMENT_ANSATZES[_resolve(name, MEASUREMENT_ANSATZES, MEASUREMENT_ALIASES, "measurement")]
    return (GateSpec(kind, node.qubits),)


@dataclass(frozen=True)
class NetworkAnsatz:
    """Topology plus preparation/measurement gates and optional fixed sources.

    `source_states[i]`, when not None, is a density matrix that replaces the
    gate-based preparation of source i (its gate list must then be empty).
    """

    topology: Topology
    wiring: InputWiring
    prep_gates: tuple[tuple[GateSpec, ...], ...]
    meas_gates: tuple[tuple[GateSpec, ...], ...]
    source_states: tuple[np.ndarray | None, ...] = None
    layout: SettingsLayout = field(init=False)

    def __post_init__(self):
        if self.source_states is None:
            object.__setattr__(self, "source_states", (None,) * len(self.topology.sources))
        if len(self.prep_gates) != len(self.topology.sources):
            raise ValueError("one preparation gate list per source required")
        if len(self.meas_gates) != len(self.topology.nodes):
            raise ValueError("one measurement gate list per node required")
        for src, gates, state in zip(self.topology.sources, self.prep_gates, self.source_states):
            for g in gates:
                if not set(g.targets) <= set(src.qubits):
                    raise ValueError(f"preparation gate {g.kind} leaves source {src.id} qubits")
            if state is not None:
                if gates:
                    raise ValueError(f"source {src.id} has both a fixed state and gates")
                dim = 2 ** len(src.qubits)
                if np.asarray(state).shape != (dim, dim):
                    raise ValueError(f"fixed state for source {src.id} must be {dim}x{dim}")
        for node, gates in zip(self.topology.nodes, self.meas_gates):
            for g in gates:
                if not set(g.targets) <= set(node.qubits):
                    raise ValueError(f"measurement gate {g.kind} leaves node {node.id} qubits")
        source_counts = tuple(sum(g.param_count for g in gates) for gates in self.prep_gates)
        node_counts = tuple(sum(g.param_count for g in gates) for gates in self.meas_gates)
        arities = tuple(self.wiring.slot_arities[s] for s in self.wiring.node_slots)
        object.__setattr__(self, "layout", SettingsLayout(source_counts, node_counts, arities))

    @property
    def num_settings(self) -> int:
        return self.layout.total

    def all_shiftable(self) -> bool:
        gates = itertools.chain(*self.prep_gates, *self.meas_gates)
        return all(g.shiftable or g.param_count == 0 for g in gates)


def make_ansatz(
    topology: Topology,
    wiring: InputWiring,
    prep: str | list[str] = "phi_plus",
    meas: str | list[str] = "local_ry",
    source_states=None,
) -> NetworkAnsatz:
    """Assemble an ansatz from named layers.

    `prep`/`meas` may be a single name applied everywhere or one name per
    source/node. `source_states` optionally fixes some sources to explicit
    density matrices (use prep name "none" for those slots).
    """
    n_src, n_node = len(topology.sources), len(topology.nodes)
    prep_names = [prep] * n_src if isinstance(prep, str) else list(prep)
    meas_names = [meas] * n_node if isinstance(meas, str) else list(meas)
    if len(prep_names) != n_src:
        raise ValueError(f"expected {n_src} preparation names, got {len(prep_names)}")
    if len(meas_names) != n_node:
        raise ValueError(f"expected {n_node} measurement names, got {len(meas_names)}")
    prep_gates = tuple(prep_gates_for(nm, s) for nm, s in zip(prep_names, topology.sources))
    meas_gates = tuple(meas_gates_for(nm, a) for nm, a in zip(meas_names, topology.nodes))
    states = None
    if source_states is not None:
        states = tuple(None if s is None else np.asarray(s, dtype=complex) for s in source_states)
    return NetworkAnsatz(topology, wiring, prep_gates, meas_gates, states)


def hardware_ansatz(topology: Topology, wiring: InputWiring) -> NetworkAnsatz:
    """Bell-pair sources plus one free rotation about y per qubit per input."""
    return make_ansatz(topology, wiring, prep="phi_plus", meas="local_ry")
