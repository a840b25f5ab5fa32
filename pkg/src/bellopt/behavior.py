"""Executes a network ansatz under a noise model: outcome distributions, the
behavior matrix, parity correlators, and optional shot-sampled estimates.

Pipeline per network input: prepare sources -> apply Kraus noise -> apply
measurement rotations -> computational-basis readout -> XOR-reduce each
node's bits to one +/-1 outcome -> apply detector post-processing maps.

Bit 0 maps to outcome +1 and bit 1 to outcome -1, so a multi-qubit node's
outcome is the product of its per-qubit outcomes.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .ansatz import (
    LOCAL_ROT,
    LOCAL_RY,
    ROT3,
    RY,
    NetworkAnsatz,
    _embed_direct as _embed_unitary,
    gate_unitary,
    rot3,
    rot_y,
)
from .channels import ANCILLA_REALIZATIONS, NOISELESS, NoiseModel
from .network import SettingsSlice, SettingsVector, slice_settings
from .qmath import (
    _kraus_on_rho,
    _permute_qubits_rho,
    _unitary_on_ket,
    _unitary_on_rho,
)

_PREP_CACHE_MAX = 128
_OBS_CACHE_MAX = 4096


@dataclass(frozen=True)
class Behavior:
    """Column-stochastic conditional distribution over joint node outcomes."""

    inputs: tuple[tuple[int, ...], ...]
    node_ids: tuple[str, ...]
    matrix: np.ndarray  # shape (2^m, num_inputs)

    def validate(self, atol: float = 1e-9) -> None:
        if np.any(self.matrix < -atol) or np.any(self.matrix > 1 + atol):
            raise ValueError("behavior entries outside [0, 1]")
        sums = self.matrix.sum(axis=0)
        if not np.allclose(sums, 1.0, atol=atol):
            raise ValueError(f"behavior columns do not sum to 1: {sums}")

    def to_csv(self) -> str:
        """Inputs as column headers, outcome bitstrings as row labels."""
        out = io.StringIO()
        headers = ["outcome"] + ["x=" + "".join(map(str, x)) for x in self.inputs]
        out.write(",".join(headers) + "\n")
        m = len(self.node_ids)
        for a in range(self.matrix.shape[0]):
            label = format(a, f"0{m}b")
            row = [label] + [f"{p:.12g}" for p in self.matrix[a]]
            out.write(",".join(row) + "\n")
        return out.getvalue()


@dataclass(frozen=True)
class CorrelatorTable:
    """Full-parity correlator <prod_j O_j> for every network input."""

    inputs: tuple[tuple[int, ...], ...]
    values: np.ndarray

    def __getitem__(self, x) -> float:
        return float(self.values[self.inputs.index(tuple(x))])

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {x: float(v) for x, v in zip(self.inputs, self.values)}


def _parity_signs(m: int) -> np.ndarray:
    a = np.arange(2**m)
    counts = np.zeros(2**m, dtype=int)
    for b in range(m):
        counts += (a >> b) & 1
    return np.where(counts % 2 == 0, 1.0, -1.0)


class Evaluator:
    """Caches the topology bookkeeping and the post-noise state so repeated
    evaluations at shared preparation settings only redo the measurements.

    Two simulator modes: the default density-matrix mode applies channels in
    operator-sum form; the statevector mode is used for noiseless circuits and
    (mode="auto") for noise models made of channels that carry a one-ancilla
    circuit realization, in which case each channel becomes a unitary on
    (target, ancilla) and the environment is marginalized at readout.
    """

    def __init__(self, ansatz: NetworkAnsatz, noise: NoiseModel = NOISELESS,
                 shots: int | None = None, shots_seed: int = 0, mode: str = "auto"):
        self.ansatz = ansatz
        self.noise = noise
        self.shots = shots
        self._shot_rng = np.random.default_rng(shots_seed) if shots is not None else None
        if mode not in ("auto", "mixed", "ancilla"):
            raise ValueError(f"unknown simulator mode {mode!r}")
        topo = ansatz.topology
        self.n = topo.num_qubits
        self.m = len(topo.nodes)
        self.inputs = tuple(ansatz.wiring.inputs())
        self.node_inputs = tuple(ansatz.wiring.node_inputs(x) for x in self.inputs)
        for chan in noise.quantum:
            for q in chan.targets:
                if not 0 <= q < self.n:
                    raise ValueError(f"noise channel {chan.name} targets qubit {q} outside register")
            ops = chan.kraus()
            dim = 2 ** len(chan.targets)
            comp = sum(k.conj().T @ k for k in ops)
            if not np.allclose(comp, np.eye(dim), atol=1e-8):
                raise ValueError(f"channel {chan.name} violates Kraus completeness")
        for chan in noise.detector:
            if not 0 <= chan.node < self.m:
                raise ValueError(f"detector noise on unknown node {chan.node}")
            mat = chan.matrix()
            if not np.allclose(mat.sum(axis=0), 1.0, atol=1e-10) or np.any(mat < -1e-10):
                raise ValueError(f"detector map {chan.name} is not column-stochastic")
        gate_prepared = all(s is None for s in ansatz.source_states)
        ancilla_ok = gate_prepared and all(
            chan.name in ANCILLA_REALIZATIONS and len(chan.targets) == 1
            for chan in noise.quantum
        )
        if mode == "ancilla" and not ancilla_ok:
            raise ValueError("ancilla mode needs gate-prepared sources and one-qubit "
                             "channels with a circuit realization")
        use_ancillas = bool(noise.quantum) and ancilla_ok and mode in ("auto", "ancilla")
        if mode == "auto" and topo.num_qubits + len(noise.quantum) > 14:
            use_ancillas = False  # keep the register within the supported size
        self.num_ancillas = len(noise.quantum) if use_ancillas else 0
        self.pure = (noise.is_noiseless_circuit and gate_prepared) or use_ancillas
        self.sim_qubits = topo.num_qubits + self.num_ancillas
        # map each basis state z to its joint node-outcome index (m bits)
        z = np.arange(2**self.n)
        idx = np.zeros(2**self.n, dtype=int)
        for j, node in enumerate(topo.nodes):
            bits = np.zeros(2**self.n, dtype=int)
            for q in node.qubits:
                bits ^= (z >> (self.n - 1 - q)) & 1
            idx |= bits << (self.m - 1 - j)
        self._node_index = idx
        self._parity = _parity_signs(self.m)
        self._detector_mats = [None] * self.m
        for chan in noise.detector:
            mat = chan.matrix()
            prev = self._detector_mats[chan.node]
            self._detector_mats[chan.node] = mat if prev is None else mat @ prev
        # affine action of post-processing on a +/-1 outcome: <a'> = alpha + beta <a>
        self._detector_affine = []
        for mat in self._detector_mats:
            if mat is None:
                self._detector_affine.append((0.0, 1.0))
            else:
                d_plus = mat[0, 0] - mat[1, 0]
                d_minus = mat[0, 1] - mat[1, 1]
                self._detector_affine.append(((d_plus + d_minus) / 2, (d_plus - d_minus) / 2))
        self._kraus = [(chan.kraus(), chan.targets) for chan in noise.quantum]
        self._node_parity_diag = [
            _parity_signs(len(node.qubits)) for node in topo.nodes
        ]
        self._einsum_spec = self._contraction_spec()
        self._einsum_path = None
        self._obs_cache: dict = {}
        self._prep_cache: dict[bytes, np.ndarray] = {}
        layout = ansatz.layout
        self.param_owner: list[tuple] = [None] * layout.total
        for i in range(len(topo.sources)):
            r = layout.source_range(i)
            for k in range(r.start, r.stop):
                self.param_owner[k] = ("source", i)
        for j in range(self.m):
            for v in range(layout.node_arities[j]):
                r = layout.node_range(j, v)
                for k in range(r.start, r.stop):
                    self.param_owner[k] = ("node", j, v)

    # -- preparation ------------------------------------------------------

    def _initial_state(self) -> np.ndarray:
        sources = self.ansatz.topology.sources
        states = self.ansatz.source_states
        if all(s is None for s in states):
            rho = np.zeros((2**self.n, 2**self.n), dtype=complex)
            rho[0, 0] = 1.0
            return rho
        blocks = []
        for src, fixed in zip(sources, states):
            dim = 2 ** len(src.qubits)
            if fixed is None:
                b = np.zeros((dim, dim), dtype=complex)
                b[0, 0] = 1.0
                blocks.append(b)
            else:
                blocks.append(fixed)
        rho = blocks[0]
        for b in blocks[1:]:
            rho = np.kron(rho, b)
        built_order = [q for src in sources for q in src.qubits]
        perm = tuple(built_order.index(q) for q in range(self.n))
        return _permute_qubits_rho(rho, perm, self.n)

    def _prepared_state(self, source_params: tuple[np.ndarray, ...]) -> np.ndarray:
        """Post-noise state shared by every measurement; cached on phi."""
        key = b"".join(p.tobytes() for p in source_params)
        cached = self._prep_cache.get(key)
        if cached is not None:
            return cached
        if self.pure:
            state = np.zeros(2**self.sim_qubits, dtype=complex)
            state[0] = 1.0
            for gates, params in zip(self.ansatz.prep_gates, source_params):
                off = 0
                for g in gates:
                    u = gate_unitary(g, params[off : off + g.param_count])
                    state = _unitary_on_ket(state, u, g.targets, self.sim_qubits)
                    off += g.param_count
            for i, chan in enumerate(self.noise.quantum):
                u = ANCILLA_REALIZATIONS[chan.name](chan.gamma)
                state = _unitary_on_ket(state, u, (chan.targets[0], self.n + i), self.sim_qubits)
        else:
            state = self._initial_state()
            for gates, params in zip(self.ansatz.prep_gates, source_params):
                off = 0
                for g in gates:
                    u = gate_unitary(g, params[off : off + g.param_count])
                    state = _unitary_on_rho(state, u, g.targets, self.n)
                    off += g.param_count
            for kraus, targets in self._kraus:
                state = _kraus_on_rho(state, kraus, targets, self.n)
        if len(self._prep_cache) >= _PREP_CACHE_MAX:
            self._prep_cache.clear()
        self._prep_cache[key] = state
        return state

    # -- measurement ------------------------------------------------------

    def _readout_probs(self, state: np.ndarray, node_params: tuple[np.ndarray, ...]) -> np.ndarray:
        """Distribution over the 2^N system basis states (environment qubits,
        if any, are marginalized out)."""
        for gates, params in zip(self.ansatz.meas_gates, node_params):
            off = 0
            for g in gates:
                u = gate_unitary(g, params[off : off + g.param_count])
                if self.pure:
                    state = _unitary_on_ket(state, u, g.targets, self.sim_qubits)
                else:
                    state = _unitary_on_rho(state, u, g.targets, self.n)
                off += g.param_count
        if self.pure:
            probs = np.abs(state) ** 2
            if self.num_ancillas:
                probs = probs.reshape(2**self.n, -1).sum(axis=1)
            return probs
        return np.real(np.diag(state))

    def _node_distribution(self, probs: np.ndarray) -> np.ndarray:
        dist = np.bincount(self._node_index, weights=probs, minlength=2**self.m)
        if any(mat is not None for mat in self._detector_mats):
            t = dist.reshape((2,) * self.m)
            for j, mat in enumerate(self._detector_mats):
                if mat is not None:
                    t = np.moveaxis(np.tensordot(mat, t, axes=(1, j)), 0, j)
            dist = t.reshape(-1)
        return dist

    def _slice(self, theta: np.ndarray, x: tuple[int, ...]) -> SettingsSlice:
        sv = SettingsVector(self.ansatz.layout, theta)
        return slice_settings(sv, self.ansatz.wiring, x)

    # -- public evaluation ------------------------------------------------

    def probs(self, theta: np.ndarray, x: tuple[int, ...]) -> np.ndarray:
        """Raw readout distribution over the 2^N basis states for input x."""
        s = self._slice(theta, x)
        state = self._prepared_state(s.source_params)
        return self._readout_probs(state, s.node_params)

    def _node_observable(self, j: int, params: np.ndarray) -> np.ndarray:
        """Parity observable U^t (diag +/-1) U of node j after post-processing,
        in the node's local basis. Measurement gates are node-local, so the
        full readout parity is the tensor product of these blocks."""
        key = (j, params.tobytes())
        cached = self._obs_cache.get(key)
        if cached is not None:
            return cached
        gates = self.ansatz.meas_gates[j]
        qubits = self.ansatz.topology.nodes[j].qubits
        mj = len(qubits)
        if len(gates) == 1 and gates[0].kind in (LOCAL_RY, LOCAL_ROT, RY, ROT3) and gates[0].targets == qubits:
            # rotate-then-read per qubit: the observable is a product of
            # R^t sigma_z R blocks, built without forming the 2^M unitary
            step = 1 if gates[0].kind in (LOCAL_RY, RY) else 3
            w = None
            for i in range(mj):
                p = params[step * i : step * (i + 1)]
                r = rot_y(p[0]) if step == 1 else rot3(p)
                block = r.conj().T @ np.array([[1, 0], [0, -1]], dtype=complex) @ r
                w = block if w is None else np.kron(w, block)
        else:
            u = np.eye(2**mj, dtype=complex)
            local = {q: i for i, q in enumerate(qubits)}
            off = 0
            for g in gates:
                gu = gate_unitary(g, params[off : off + g.param_count])
                targets = tuple(local[q] for q in g.targets)
                u = _embed_unitary(gu, targets, mj) @ u
                off += g.param_count
            w = u.conj().T @ (self._node_parity_diag[j][:, None] * u)
        alpha, beta = self._detector_affine[j]
        if alpha != 0.0 or beta != 1.0:
            w = alpha * np.eye(2**mj) + beta * w
        if len(self._obs_cache) >= _OBS_CACHE_MAX:
            self._obs_cache.clear()
        self._obs_cache[key] = w
        return w

    def _node_observables(self, node_params: tuple[np.ndarray, ...]) -> list[np.ndarray]:
        return [self._node_observable(j, p) for j, p in enumerate(node_params)]

    def _contraction_spec(self) -> str:
        """Einsum subscripts for Tr[rho (W_1 x ... x W_m)] with W_j on its
        node's qubits: rho[r, c] contracts with each W_j[c_block, r_block]."""
        letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
        row = letters[: self.n]
        col = letters[self.n : 2 * self.n]
        terms = [row + col]
        for node in self.ansatz.topology.nodes:
            terms.append("".join(col[q] for q in node.qubits) + "".join(row[q] for q in node.qubits))
        return ",".join(terms) + "->"

    def correlator(self, theta: np.ndarray, x: tuple[int, ...]) -> float:
        """Expected parity of the joint outcomes, by direct contraction of the
        prepared state with the per-node measurement observables. In shot mode
        the readout distribution is sampled before the parity average."""
        s = self._slice(theta, x)
        state = self._prepared_state(s.source_params)
        if self.shots is not None:
            probs = self._readout_probs(state, s.node_params)
            counts = self._shot_rng.multinomial(self.shots, np.clip(probs, 0, None) / probs.sum())
            dist = self._node_distribution(counts / self.shots)
            return float(self._parity @ dist)
        obs = self._node_observables(s.node_params)
        nodes = self.ansatz.topology.nodes
        if self.pure:
            phi = state
            for node, w in zip(nodes, obs):
                phi = _unitary_on_ket(phi, w, node.qubits, self.sim_qubits)
            return float(np.real(np.vdot(state, phi)))
        tensors = [state.reshape((2,) * (2 * self.n))]
        tensors += [w.reshape((2,) * (2 * len(nd.qubits))) for w, nd in zip(obs, nodes)]
        if self._einsum_path is None:
            self._einsum_path = np.einsum_path(self._einsum_spec, *tensors, optimize="greedy")[0]
        val = np.einsum(self._einsum_spec, *tensors, optimize=self._einsum_path)
        return float(np.real(val))

    def correlators(self, theta: np.ndarray) -> np.ndarray:
        return np.array([self.correlator(theta, x) for x in self.inputs])

    def correlators_partial(self, theta: np.ndarray, indices, base: np.ndarray) -> np.ndarray:
        """Recompute only the listed input columns, reusing `base` elsewhere."""
        out = base.copy()
        for i in indices:
            out[i] = self.correlator(theta, self.inputs[i])
        return out

    def affected_inputs(self, k: int) -> list[int]:
        """Input columns whose circuit uses flat parameter k."""
        owner = self.param_owner[k]
        if owner[0] == "source":
            return list(range(len(self.inputs)))
        _, j, v = owner
        return [i for i, ni in enumerate(self.node_inputs) if ni[j] == v]

    def behavior(self, theta: np.ndarray, shots: int | None = None, seed=None) -> Behavior:
        cols = []
        for i, x in enumerate(self.inputs):
            s = self._slice(theta, x)
            state = self._prepared_state(s.source_params)
            probs = self._readout_probs(state, s.node_params)
            if shots is not None:
                probs = sample_shots(probs, shots, None if seed is None else seed + i)
            cols.append(self._node_distribution(probs))
        mat = np.column_stack(cols)
        node_ids = tuple(a.id for a in self.ansatz.topology.nodes)
        return Behavior(self.inputs, node_ids, mat)


# ---------------------------------------------------------------------------
# Functional surface.
# ---------------------------------------------------------------------------

def simulate_probs(ansatz: NetworkAnsatz, settings_slice: SettingsSlice, noise: NoiseModel = NOISELESS) -> np.ndarray:
    """Readout distribution over the 2^N basis states for one input's settings."""
    ev = Evaluator(ansatz, noise)
    state = ev._prepared_state(settings_slice.source_params)
    return ev._readout_probs(state, settings_slice.node_params)


def behavior_matrix(ansatz: NetworkAnsatz, settings, noise: NoiseModel = NOISELESS,
                    shots: int | None = None, seed=None) -> Behavior:
    """One column of joint node-outcome probabilities per network input."""
    theta = settings.values if isinstance(settings, SettingsVector) else np.asarray(settings, dtype=float)
    return Evaluator(ansatz, noise).behavior(theta, shots=shots, seed=seed)


def correlators(behavior: Behavior) -> CorrelatorTable:
    """Expected parity of the joint +/-1 outcomes, one entry per input."""
    m = len(behavior.node_ids)
    signs = _parity_signs(m)
    vals = signs @ behavior.matrix
    if np.any(np.abs(vals) > 1 + 1e-9):
        raise ValueError("correlator outside [-1, 1]; behavior is not a distribution")
    return CorrelatorTable(behavior.inputs, vals)


def sample_shots(probs: np.ndarray, shots: int, seed=None) -> np.ndarray:
    """Empirical distribution from a multinomial draw; reproducible by seed."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    probs = np.asarray(probs, dtype=float)
    total = probs.sum()
    if not np.isclose(total, 1.0, atol=1e-9):
        raise ValueError(f"probabilities sum to {total}, expected 1")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, np.clip(probs, 0, None) / max(total, 1e-300))
    return counts / shots
