"""Network topology (sources, measurement nodes, qubit assignment), input
wiring, and the canonical flat layout of the trainable settings vector.

A settings vector concatenates, in order: one parameter block per source,
then for each node one block per input value of that node. Slicing for a
specific network input picks every source block plus each node's block for
the input value wired to it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Source:
    id: str
    qubits: tuple[int, ...]


@dataclass(frozen=True)
class Node:
    id: str
    qubits: tuple[int, ...]
    input_arity: int = 2


@dataclass(frozen=True)
class Topology:
    num_qubits: int
    sources: tuple[Source, ...]
    nodes: tuple[Node, ...]

    def __post_init__(self):
        all_source = [q for s in self.sources for q in s.qubits]
        all_node = [q for a in self.nodes for q in a.qubits]
        if len(set(all_source)) != len(all_source):
            raise ValueError("sources share qubits")
        if len(set(all_node)) != len(all_node):
            raise ValueError("nodes share qubits")
        full = set(range(self.num_qubits))
        if set(all_source) != full or set(all_node) != full:
            raise ValueError("source and node qubit sets must each cover the register")


@dataclass(frozen=True)
class InputWiring:
    """Maps the network input tuple onto per-node inputs.

    The network input is a tuple over `slot_arities`; node j reads the slot
    `node_slots[j]`. Several nodes may share one slot (chain interior nodes
    all read the same bit), but every node reads exactly one slot.
    """

    slot_arities: tuple[int, ...]
    node_slots: tuple[int, ...]

    def __post_init__(self):
        for s in self.node_slots:
            if not 0 <= s < len(self.slot_arities):
                raise ValueError(f"node wired to undefined slot {s}")

    def inputs(self) -> list[tuple[int, ...]]:
        """All network inputs in lexicographic order (first slot slowest)."""
        return list(itertools.product(*[range(a) for a in self.slot_arities]))

    def node_inputs(self, x: tuple[int, ...]) -> tuple[int, ...]:
        """Per-node input values for network input x."""
        for slot, arity in zip(x, self.slot_arities):
            if not 0 <= slot < arity:
                raise ValueError(f"input {x} outside declared arities {self.slot_arities}")
        return tuple(x[s] for s in self.node_slots)


def build_star(n: int) -> tuple[Topology, InputWiring]:
    """Star network: n two-qubit sources, n single-qubit exterior nodes, and
    one central node holding the remaining n qubits.

    n=1 is the two-device CHSH scenario; n=2 is the bilocal network, laid out
    identically to the two-source chain (exterior qubits q0 and q3, central
    pair q1,q2).
    """
    if n < 1:
        raise ValueError("star network needs at least one source")
    if n == 2:
        sources = (Source("L1", (0, 1)), Source("L2", (2, 3)))
        nodes = (Node("A1", (0,)), Node("A2", (3,)), Node("B", (1, 2)))
        topo = Topology(4, sources, nodes)
        wiring = InputWiring((2, 2, 2), (0, 1, 2))
        return topo, wiring
    sources = tuple(Source(f"L{i + 1}", (i, n + i)) for i in range(n))
    exterior = tuple(Node(f"A{j + 1}", (j,)) for j in range(n))
    central = Node("B", tuple(range(n, 2 * n)))
    topo = Topology(2 * n, sources, exterior + (central,))
    wiring = InputWiring((2,) * (n + 1), tuple(range(n + 1)))
    return topo, wiring


def build_chain(n: int) -> tuple[Topology, InputWiring]:
    """Chain network: n two-qubit sources linking n+1 nodes in a line.

    The two exterior nodes hold the first and last qubits; each interior node
    holds one qubit from each of its two neighboring sources. All interior
    nodes share a single input bit but keep independent parameters.
    """
    if n < 2:
        raise ValueError("chain network needs at least two sources")
    if n == 2:
        return build_star(2)
    sources = tuple(Source(f"L{i + 1}", (2 * i, 2 * i + 1)) for i in range(n))
    interior = tuple(
        Node(f"B{j}", (2 * j - 3, 2 * j - 2)) for j in range(2, n + 1)
    )
    nodes = (Node("A1", (0,)), Node("A2", (2 * n - 1,))) + interior
    topo = Topology(2 * n, sources, nodes)
    wiring = InputWiring((2, 2, 2), (0, 1) + (2,) * (n - 1))
    return topo, wiring


@dataclass(frozen=True)
class SettingsLayout:
    """Index ranges partitioning a flat settings vector.

    `source_counts[i]` parameters for source i come first, then for node j
    and each input value v of that node, `node_counts[j]` parameters.
    """

    source_counts: tuple[int, ...]
    node_counts: tuple[int, ...]
    node_arities: tuple[int, ...]
    source_offsets: tuple[int, ...] = field(init=False)
    node_offsets: tuple[tuple[int, ...], ...] = field(init=False)
    total: int = field(init=False)

    def __post_init__(self):
        off = 0
        src = []
        for c in self.source_counts:
            src.append(off)
            off += c
        node = []
        for count, arity in zip(self.node_counts, self.node_arities):
            per_input = []
            for _ in range(arity):
                per_input.append(off)
                off += count
            node.append(tuple(per_input))
        object.__setattr__(self, "source_offsets", tuple(src))
        object.__setattr__(self, "node_offsets", tuple(node))
        object.__setattr__(self, "total", off)

    def source_range(self, i: int) -> slice:
        return slice(self.source_offsets[i], self.source_offsets[i] + self.source_counts[i])

    def node_range(self, j: int, value: int) -> slice:
        if not 0 <= value < self.node_arities[j]:
            raise ValueError(f"input value {value} outside arity {self.node_arities[j]} of node {j}")
        start = self.node_offsets[j][value]
        return slice(start, start + self.node_counts[j])


@dataclass(frozen=True)
class SettingsVector:
    layout: SettingsLayout
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.layout.total,):
            raise ValueError(f"expected {self.layout.total} settings, got shape {vals.shape}")


@dataclass(frozen=True)
class SettingsSlice:
    """Per-gate parameter views for one network input."""

    source_params: tuple[np.ndarray, ...]
    node_params: tuple[np.ndarray, ...]


def slice_settings(settings: SettingsVector, wiring: InputWiring, x: tuple[int, ...]) -> SettingsSlice:
    """Extract every source block plus each node's block for network input x."""
    layout = settings.layout
    vals = settings.values
    node_inputs = wiring.node_inputs(x)
    src = tuple(vals[layout.source_range(i)] for i in range(len(layout.source_counts)))
    nod = tuple(vals[layout.node_range(j, v)] for j, v in enumerate(node_inputs))
    return SettingsSlice(src, nod)
