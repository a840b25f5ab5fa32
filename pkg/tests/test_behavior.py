import numpy as np
import pytest

from bellopt.ansatz import hardware_ansatz, make_ansatz
from bellopt.behavior import Behavior, Evaluator, behavior_matrix, correlators, sample_shots, simulate_probs
from bellopt.bell import ChshInequality
from bellopt.channels import NOISELESS, build_noise_model
from bellopt.network import SettingsVector, build_chain, build_star, slice_settings

CHSH_OPTIMAL = np.array([0.0, np.pi / 2, np.pi / 4, -np.pi / 4])


def _ansatz(build, n):
    topo, wiring = build(n)
    return topo, wiring, hardware_ansatz(topo, wiring)


class TestSimulateProbs:
    def test_bell_state_in_computational_basis(self):
        topo, wiring, ans = _ansatz(build_star, 1)
        sv = SettingsVector(ans.layout, np.zeros(4))
        probs = simulate_probs(ans, slice_settings(sv, wiring, (0, 0)))
        assert np.allclose(probs, [0.5, 0, 0, 0.5], atol=1e-12)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(0)
        topo, wiring, ans = _ansatz(build_chain, 3)
        noise = build_noise_model(topo, "depolarizing_source", "uniform", 0.4)
        sv = SettingsVector(ans.layout, rng.uniform(0, 2 * np.pi, ans.num_settings))
        probs = simulate_probs(ans, slice_settings(sv, wiring, (0, 1, 1)), noise)
        assert probs.sum() == pytest.approx(1.0, abs=1e-10)

    def test_optimal_settings_reach_tsirelson(self):
        topo, wiring, ans = _ansatz(build_star, 1)
        beh = behavior_matrix(ans, CHSH_OPTIMAL)
        score = ChshInequality().score(correlators(beh))
        assert score == pytest.approx(2 * np.sqrt(2), abs=1e-12)

    def test_bilocal_optimal_settings_reach_root_two(self):
        from bellopt.bell import StarInequality

        topo, wiring, ans = _ansatz(build_star, 2)
        # exterior (z +/- x)/sqrt2, central z(x)z / x(x)x strings per input
        theta = np.array([np.pi / 4, -np.pi / 4,      # A1
                          np.pi / 4, -np.pi / 4,      # A2
                          0.0, 0.0, np.pi / 2, np.pi / 2])  # B: y=0, y=1
        beh = behavior_matrix(ans, theta)
        score = StarInequality(2).score(correlators(beh))
        assert score == pytest.approx(np.sqrt(2), abs=1e-12)

    def test_fully_depolarized_sources_give_uniform_output(self):
        rng = np.random.default_rng(1)
        topo, wiring, ans = _ansatz(build_star, 2)
        noise = build_noise_model(topo, "depolarizing_source", "uniform", 15 / 16)
        sv = SettingsVector(ans.layout, rng.uniform(0, 2 * np.pi, ans.num_settings))
        probs = simulate_probs(ans, slice_settings(sv, wiring, (0, 0, 0)), noise)
        assert np.allclose(probs, np.full(16, 1 / 16), atol=1e-12)


class TestBehaviorMatrix:
    def test_columns_are_normalized_across_channels_and_topologies(self):
        rng = np.random.default_rng(2)
        topologies = [(build_star, n) for n in (1, 2, 3, 4)] + [(build_chain, n) for n in (3, 4)]
        models = ["depolarizing_qubit", "dephasing", "amplitude_damping",
                  "depolarizing_source", "colored", "white_noise_detector", "biased_detector"]
        for build, n in topologies:
            topo, wiring, ans = _ansatz(build, n)
            for model in models:
                for gamma in (0.0, 0.5, 1.0):
                    noise = build_noise_model(topo, model, "uniform", gamma)
                    theta = rng.uniform(0, 2 * np.pi, ans.num_settings)
                    beh = behavior_matrix(ans, theta, noise)
                    beh.validate(atol=1e-9)

    def test_identity_measurement_on_zero_sources_is_deterministic(self):
        topo, wiring = build_star(1)
        ans = make_ansatz(topo, wiring, prep="none", meas="local_ry")
        beh = behavior_matrix(ans, np.zeros(ans.num_settings))
        for col in beh.matrix.T:
            assert col[0] == pytest.approx(1.0, abs=1e-12)

    def test_white_noise_gamma_one_marginal_uniform(self):
        rng = np.random.default_rng(3)
        topo, wiring, ans = _ansatz(build_star, 1)
        noise = build_noise_model(topo, "white_noise_detector", [0], 1.0)
        theta = rng.uniform(0, 2 * np.pi, ans.num_settings)
        beh = behavior_matrix(ans, theta, noise)
        dist = beh.matrix[:, 0].reshape(2, 2)
        assert np.allclose(dist.sum(axis=1), [0.5, 0.5], atol=1e-12)

    def test_csv_export_shape(self):
        topo, wiring, ans = _ansatz(build_star, 1)
        csv = behavior_matrix(ans, CHSH_OPTIMAL).to_csv()
        lines = csv.strip().split("\n")
        assert lines[0] == "outcome,x=00,x=01,x=10,x=11"
        assert len(lines) == 5


class TestCorrelators:
    def test_all_plus_deterministic(self):
        beh = Behavior(((0,), (1,)), ("A", "B"), np.array([[1.0, 1.0], [0, 0], [0, 0], [0, 0]]))
        assert np.allclose(correlators(beh).values, [1.0, 1.0])

    def test_uniform_behavior_gives_zero(self):
        beh = Behavior(((0,),), ("A", "B"), np.full((4, 1), 0.25))
        assert np.allclose(correlators(beh).values, [0.0])

    def test_bell_state_zz_readout(self):
        topo, wiring, ans = _ansatz(build_star, 1)
        beh = behavior_matrix(ans, np.zeros(4))
        assert correlators(beh)[(0, 0)] == pytest.approx(1.0, abs=1e-12)

    def test_factorizes_for_product_states(self):
        rng = np.random.default_rng(4)
        topo, wiring = build_star(2)
        ans = make_ansatz(topo, wiring, prep="none", meas="local_rot")
        theta = rng.uniform(0, 2 * np.pi, ans.num_settings)
        ev = Evaluator(ans, NOISELESS)
        beh = ev.behavior(theta)
        m = len(topo.nodes)
        for col, x in enumerate(beh.inputs):
            joint = correlators(beh).values[col]
            product = 1.0
            dist = beh.matrix[:, col].reshape((2,) * m)
            for j in range(m):
                marg = dist.sum(axis=tuple(k for k in range(m) if k != j))
                product *= marg[0] - marg[1]
            assert joint == pytest.approx(product, abs=1e-10)

    def test_evaluator_contraction_matches_distribution_route(self):
        rng = np.random.default_rng(5)
        topo, wiring, ans = _ansatz(build_chain, 3)
        noise = build_noise_model(topo, "biased_detector", "uniform", 0.35)
        ev = Evaluator(ans, noise)
        theta = rng.uniform(0, 2 * np.pi, ans.num_settings)
        direct = ev.correlators(theta)
        via_behavior = correlators(ev.behavior(theta)).values
        assert np.abs(direct - via_behavior).max() < 1e-12


class TestNonsignaling:
    @pytest.mark.parametrize("build,n", [(build_star, 2), (build_chain, 3)])
    def test_marginals_independent_of_remote_inputs(self, build, n):
        rng = np.random.default_rng(6)
        topo, wiring, ans = _ansatz(build, n)
        noise = build_noise_model(topo, "depolarizing_qubit", "single", 0.3)
        theta = rng.uniform(0, 2 * np.pi, ans.num_settings)
        beh = behavior_matrix(ans, theta, noise)
        m = len(topo.nodes)
        for j in range(m):
            slot = wiring.node_slots[j]
            marginals = {}
            for col, x in enumerate(beh.inputs):
                dist = beh.matrix[:, col].reshape((2,) * m)
                marg = dist.sum(axis=tuple(k for k in range(m) if k != j))
                marginals.setdefault(x[slot], []).append(marg)
            for group in marginals.values():
                for marg in group[1:]:
                    assert np.abs(marg - group[0]).max() < 1e-10


class TestSimulatorModes:
    @pytest.mark.parametrize("model,placement", [("dephasing", "uniform"), ("amplitude_damping", "single")])
    def test_ancilla_circuit_mode_matches_operator_sum(self, model, placement):
        rng = np.random.default_rng(8)
        topo, wiring = build_star(2)
        ans = make_ansatz(topo, wiring, prep="nonmax_entangled", meas="local_ry")
        for gamma in np.linspace(0.0, 1.0, 11):
            noise = build_noise_model(topo, model, placement, gamma)
            theta = rng.uniform(0, 2 * np.pi, ans.num_settings)
            ev_anc = Evaluator(ans, noise, mode="ancilla")
            ev_mix = Evaluator(ans, noise, mode="mixed")
            assert np.abs(ev_anc.behavior(theta).matrix - ev_mix.behavior(theta).matrix).max() < 1e-10

    def test_ancilla_mode_rejected_for_two_qubit_channels(self):
        topo, wiring = build_star(1)
        ans = hardware_ansatz(topo, wiring)
        noise = build_noise_model(topo, "depolarizing_source", "uniform", 0.3)
        with pytest.raises(ValueError, match="ancilla"):
            Evaluator(ans, noise, mode="ancilla")

    def test_corrupted_channel_rejected_at_construction(self, monkeypatch):
        monkeypatch.setenv("BELLOPT_INJECT_FAULT", "dephasing")
        topo, wiring = build_star(1)
        ans = hardware_ansatz(topo, wiring)
        noise = build_noise_model(topo, "dephasing", "uniform", 0.5)
        with pytest.raises(ValueError, match="completeness"):
            Evaluator(ans, noise)


class TestFixedSourceStates:
    def test_fixed_state_is_embedded_on_source_qubits(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        topo, wiring = build_star(1)
        ans = make_ansatz(topo, wiring, prep="none", meas="local_ry", source_states=[rho])
        ev = Evaluator(ans, NOISELESS)
        sv = SettingsVector(ans.layout, np.zeros(ans.num_settings))
        s = slice_settings(sv, wiring, (0, 0))
        prepared = ev._prepared_state(s.source_params)
        assert np.abs(prepared - rho).max() < 1e-12


class TestSampleShots:
    def test_deterministic_distribution_exact(self):
        probs = np.array([0.0, 1.0, 0.0])
        assert np.array_equal(sample_shots(probs, 37, seed=0), probs)

    def test_uniform_four_outcomes_within_binomial_bound(self):
        emp = sample_shots(np.full(4, 0.25), 6000, seed=11)
        assert np.abs(emp - 0.25).max() < 0.05

    def test_same_seed_reproduces(self):
        probs = np.array([0.3, 0.2, 0.5])
        assert np.array_equal(sample_shots(probs, 500, seed=7), sample_shots(probs, 500, seed=7))

    def test_zero_shots_rejected(self):
        with pytest.raises(ValueError):
            sample_shots(np.array([1.0]), 0)

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            sample_shots(np.array([0.5, 0.2]), 10)

    def test_sampled_behavior_reproducible(self):
        topo, wiring, ans = _ansatz(build_star, 1)
        b1 = behavior_matrix(ans, CHSH_OPTIMAL, shots=200, seed=5)
        b2 = behavior_matrix(ans, CHSH_OPTIMAL, shots=200, seed=5)
        assert np.array_equal(b1.matrix, b2.matrix)
