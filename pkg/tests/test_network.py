import numpy as np
import pytest

from bellopt.network import (
    SettingsLayout,
    SettingsVector,
    build_chain,
    build_star,
    slice_settings,
)


class TestBuildStar:
    def test_one_source_is_two_device_scenario(self):
        topo, wiring = build_star(1)
        assert topo.num_qubits == 2
        assert [n.qubits for n in topo.nodes] == [(0,), (1,)]
        assert len(topo.sources) == 1
        assert wiring.slot_arities == (2, 2)

    def test_two_sources_use_bilocal_layout(self):
        topo, _ = build_star(2)
        by_id = {n.id: n.qubits for n in topo.nodes}
        assert by_id["A1"] == (0,)
        assert by_id["A2"] == (3,)
        assert by_id["B"] == (1, 2)
        assert [s.qubits for s in topo.sources] == [(0, 1), (2, 3)]

    def test_three_sources_central_holds_three_qubits(self):
        topo, wiring = build_star(3)
        assert topo.num_qubits == 6
        assert topo.nodes[-1].qubits == (3, 4, 5)
        assert len(wiring.slot_arities) == 4

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            build_star(0)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_qubit_partition(self, n):
        topo, _ = build_star(n)
        assert sum(len(s.qubits) for s in topo.sources) == topo.num_qubits
        assert sum(len(a.qubits) for a in topo.nodes) == topo.num_qubits


class TestBuildChain:
    def test_two_sources_identical_to_star(self):
        assert build_chain(2) == build_star(2)

    def test_three_sources(self):
        topo, wiring = build_chain(3)
        assert topo.num_qubits == 6
        interior = [n for n in topo.nodes if len(n.qubits) == 2]
        assert len(interior) == 2
        # all interior nodes share the last input slot
        slots = [wiring.node_slots[i] for i, n in enumerate(topo.nodes) if len(n.qubits) == 2]
        assert slots == [2, 2]

    def test_four_sources(self):
        topo, _ = build_chain(4)
        assert topo.num_qubits == 8
        assert sum(1 for n in topo.nodes if len(n.qubits) == 2) == 3

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            build_chain(1)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_qubit_partition(self, n):
        topo, _ = build_chain(n)
        assert sum(len(s.qubits) for s in topo.sources) == topo.num_qubits
        assert sum(len(a.qubits) for a in topo.nodes) == topo.num_qubits


class TestSettingsLayout:
    def test_ranges_partition_without_gaps(self):
        layout = SettingsLayout((2, 3), (1, 2), (2, 2))
        seen = np.zeros(layout.total, dtype=int)
        for i in range(2):
            seen[layout.source_range(i)] += 1
        for j in range(2):
            for v in range(2):
                seen[layout.node_range(j, v)] += 1
        assert np.all(seen == 1)
        assert layout.total == 2 + 3 + 2 * 1 + 2 * 2

    def test_out_of_arity_rejected(self):
        layout = SettingsLayout((1,), (1,), (2,))
        with pytest.raises(ValueError):
            layout.node_range(0, 2)

    def test_settings_vector_length_checked(self):
        layout = SettingsLayout((1,), (1,), (2,))
        with pytest.raises(ValueError):
            SettingsVector(layout, np.zeros(layout.total + 1))


class TestSliceSettings:
    def test_chsh_slice_picks_input_blocks(self):
        _, wiring = build_star(1)
        layout = SettingsLayout((0,), (1, 1), (2, 2))
        vals = np.array([10.0, 11.0, 20.0, 21.0])
        s = slice_settings(SettingsVector(layout, vals), wiring, (0, 0))
        assert [list(p) for p in s.node_params] == [[10.0], [20.0]]
        s = slice_settings(SettingsVector(layout, vals), wiring, (1, 0))
        assert [list(p) for p in s.node_params] == [[11.0], [20.0]]

    def test_bilocal_central_gets_its_y_block(self):
        _, wiring = build_star(2)
        layout = SettingsLayout((0, 0), (1, 1, 2), (2, 2, 2))
        vals = np.arange(8, dtype=float)
        s = slice_settings(SettingsVector(layout, vals), wiring, (1, 0, 0))
        assert list(s.node_params[2]) == [4.0, 5.0]
        s = slice_settings(SettingsVector(layout, vals), wiring, (1, 0, 1))
        assert list(s.node_params[2]) == [6.0, 7.0]

    def test_chain_interior_nodes_share_input_but_not_parameters(self):
        _, wiring = build_chain(3)
        layout = SettingsLayout((0, 0, 0), (1, 1, 2, 2), (2, 2, 2, 2))
        vals = np.arange(layout.total, dtype=float)
        s = slice_settings(SettingsVector(layout, vals), wiring, (0, 0, 1))
        b2, b3 = s.node_params[2], s.node_params[3]
        assert not np.shares_memory(b2, b3) or not np.array_equal(b2, b3)
        r2, r3 = layout.node_range(2, 1), layout.node_range(3, 1)
        assert set(range(r2.start, r2.stop)).isdisjoint(range(r3.start, r3.stop))

    def test_out_of_range_input_rejected(self):
        _, wiring = build_star(1)
        layout = SettingsLayout((0,), (1, 1), (2, 2))
        with pytest.raises(ValueError):
            slice_settings(SettingsVector(layout, np.zeros(4)), wiring, (2, 0))

    def test_every_block_touched_expected_number_of_times(self):
        _, wiring = build_chain(3)
        layout = SettingsLayout((1, 1, 1), (1, 1, 1, 1), (2, 2, 2, 2))
        counts = np.zeros(layout.total, dtype=int)
        sv = SettingsVector(layout, np.arange(layout.total, dtype=float))
        inputs = wiring.inputs()
        for x in inputs:
            s = slice_settings(sv, wiring, x)
            for i, p in enumerate(s.source_params):
                counts[layout.source_range(i)] += 1
            for j, v in enumerate(wiring.node_inputs(x)):
                counts[layout.node_range(j, v)] += 1
        for i in range(3):
            assert np.all(counts[layout.source_range(i)] == len(inputs))
        for j in range(4):
            for v in range(2):
                expected = sum(1 for x in inputs if wiring.node_inputs(x)[j] == v)
                assert np.all(counts[layout.node_range(j, v)] == expected)
