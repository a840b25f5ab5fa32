import itertools

import numpy as np
import pytest

from bellopt.behavior import CorrelatorTable
from bellopt.bell import (
    BellScore,
    ChainInequality,
    ChshInequality,
    I_ny,
    StarInequality,
    chain_score,
    chsh_score,
    cost,
    parse_inequality,
    star_score,
)

ROOT2 = np.sqrt(2.0)


def table(n_exterior, fn):
    inputs = tuple(itertools.product(*([range(2)] * (n_exterior + 1))))
    return CorrelatorTable(inputs, np.array([fn(x) for x in inputs]))


def optimal_star_table(n):
    # exterior observables (z + (-1)^x x)/sqrt2 against central z- or x-strings
    return table(n, lambda x: ((-1) ** (x[-1] * sum(x[:-1]))) * 2 ** (-n / 2))


def uniform_table(n, value):
    return table(n, lambda x: value)


class TestIny:
    def test_all_ones(self):
        assert I_ny(uniform_table(2, 1.0), 2, 0) == pytest.approx(1.0)

    def test_all_zero(self):
        assert I_ny(uniform_table(3, 0.0), 3, 1) == 0.0

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_optimal_settings_magnitude(self, n):
        t = optimal_star_table(n)
        assert abs(I_ny(t, n, 0)) == pytest.approx(2 ** (-n / 2), abs=1e-12)
        assert abs(I_ny(t, n, 1)) == pytest.approx(2 ** (-n / 2), abs=1e-12)

    def test_missing_entries_rejected(self):
        t = CorrelatorTable(((0, 0), (1, 0)), np.array([1.0, 1.0]))
        with pytest.raises(ValueError, match="expected"):
            I_ny(t, 2, 0)


class TestChsh:
    def test_noiseless_optimum(self):
        t = table(1, lambda x: (1 if x != (1, 1) else -1) / ROOT2)
        s = chsh_score(t)
        assert s.value == pytest.approx(2 * ROOT2, abs=1e-12)
        assert s.classical_bound == 2.0
        assert s.violated

    def test_deterministic_strategy_bounded(self):
        for a0, a1, b0, b1 in itertools.product([-1, 1], repeat=4):
            t = table(1, lambda x: (a0, a1)[x[0]] * (b0, b1)[x[1]])
            assert chsh_score(t).value <= 2 + 1e-12

    def test_two_sided_dephasing_value(self):
        g = 0.5
        # correlators of the optimal strategy for the dephased Bell pair
        mu1, mu2 = 1.0, (1 - g) ** 2
        best = 2 * np.sqrt(mu1 + mu2)
        t = table(1, lambda x: (1 if x != (1, 1) else -1) * best / 4)
        assert chsh_score(t).value == pytest.approx(2 * np.sqrt(1.25), abs=1e-12)

    def test_normalized_variant_halves(self):
        t = table(1, lambda x: (1 if x != (1, 1) else -1) / ROOT2)
        assert chsh_score(t, normalized=True).value == pytest.approx(ROOT2, abs=1e-12)


class TestStarScore:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_noiseless_optimum(self, n):
        s = star_score(optimal_star_table(n), n)
        assert s.value == pytest.approx(ROOT2, abs=1e-12)
        assert s.classical_bound == 1.0

    def test_zero_correlators(self):
        assert star_score(uniform_table(2, 0.0), 2).value == 0.0

    def test_partially_classical_strategy_value(self):
        # one classical source: correlators vanish for x1=1, halve for x1=0
        n = 3
        def corr(x):
            if x[0] == 1:
                return 0.0
            return ((-1) ** (x[-1] * sum(x[1:-1]))) * 2 ** (-(n - 1) / 2)
        s = star_score(table(n, corr), n)
        assert s.value == pytest.approx(2 ** (1 / 3), abs=1e-12)

    def test_bilocal_id(self):
        assert star_score(uniform_table(2, 0.0), 2).inequality == "bilocal"


class TestChainScore:
    def test_noiseless_optimum(self):
        s = chain_score(optimal_star_table(2), 2)
        assert s.value == pytest.approx(ROOT2, abs=1e-12)

    def test_uniform_source_visibility_scaling(self):
        n, v = 3, 0.7
        base = optimal_star_table(2)
        scaled = CorrelatorTable(base.inputs, base.values * v**n)
        assert chain_score(scaled, n).value == pytest.approx(ROOT2 * v ** (n / 2), abs=1e-12)

    def test_classical_interior_equals_bilocal(self):
        # interior z-readouts contribute +1, leaving the bilocal pattern
        assert chain_score(optimal_star_table(2), 3).value == pytest.approx(ROOT2, abs=1e-12)


class TestCost:
    def test_negation(self):
        assert cost(2 * ROOT2) == -2 * ROOT2
        assert cost(0.0) == 0.0
        assert cost(BellScore(1.0, "chsh", 2.0, 2 * ROOT2)) == -1.0


class TestCrossInequalityInvariants:
    def test_star2_equals_chain2_exactly(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            t = table(2, lambda x: rng.uniform(-1, 1))
            assert star_score(t, 2).value == chain_score(t, 2).value

    def test_star1_is_half_the_rearranged_chsh(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            t = table(1, lambda x: rng.uniform(-1, 1))
            c = t.as_dict()
            rearranged = abs(c[(0, 0)] + c[(1, 0)]) + abs(c[(0, 1)] - c[(1, 1)])
            assert star_score(t, 1).value == pytest.approx(rearranged / 2, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 4])
    def test_global_sign_flip_invariance(self, n):
        rng = np.random.default_rng(2)
        vals = rng.uniform(-1, 1, 2 ** (n + 1))
        inputs = tuple(itertools.product(*([range(2)] * (n + 1))))
        t = CorrelatorTable(inputs, vals)
        t_flip = CorrelatorTable(inputs, -vals)
        assert star_score(t, n).value == pytest.approx(star_score(t_flip, n).value, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_deterministic_strategies_respect_classical_bound(self, n):
        # every deterministic assignment of +/-1 outputs per node input
        m = n + 1
        for outputs in itertools.product([(1, 1), (1, -1), (-1, 1), (-1, -1)], repeat=m):
            def corr(x, outputs=outputs):
                prod = 1
                for j in range(n):
                    prod *= outputs[j][x[j]]
                return prod * outputs[n][x[-1]]
            t = table(n, corr)
            assert star_score(t, n).value <= 1 + 1e-9
            if n >= 2:
                def chain_corr(x, outputs=outputs):
                    prod = outputs[0][x[0]] * outputs[1][x[1]]
                    for j in range(2, m):
                        prod *= outputs[j][x[2]]
                    return prod
                tc = table(2, chain_corr)
                assert chain_score(tc, n).value <= 1 + 1e-9


class TestScoreGradients:
    @pytest.mark.parametrize(
        "ineq,n_ext",
        [(ChshInequality(), 1), (StarInequality(2), 2), (StarInequality(3), 3), (ChainInequality(3), 2)],
    )
    def test_analytic_gradient_matches_finite_differences(self, ineq, n_ext):
        rng = np.random.default_rng(3)
        for _ in range(10):
            vals = rng.uniform(-0.9, 0.9, 2 ** (n_ext + 1))
            inputs = tuple(itertools.product(*([range(2)] * (n_ext + 1))))
            t = CorrelatorTable(inputs, vals)
            if hasattr(ineq, "_iy") and np.min(np.abs(ineq._iy(t))) < 0.05:
                continue
            grad = ineq.grad_wrt_correlators(t)
            h = 1e-7
            for k in range(len(vals)):
                up, down = vals.copy(), vals.copy()
                up[k] += h
                down[k] -= h
                fd = (ineq.score(CorrelatorTable(inputs, up)) - ineq.score(CorrelatorTable(inputs, down))) / (2 * h)
                assert grad[k] == pytest.approx(fd, abs=1e-6)

    def test_gradient_clamps_at_tiny_i(self):
        t = uniform_table(2, 0.0)
        assert np.all(StarInequality(2).grad_wrt_correlators(t) == 0.0)


class TestParseInequality:
    def test_ids(self):
        assert parse_inequality("chsh").id == "chsh"
        assert parse_inequality("bilocal").id == "bilocal"
        assert parse_inequality("star:3").n == 3
        assert parse_inequality("chain:4").n == 4

    def test_unknown_rejected(self):
        with pytest.raises(ValueError):
            parse_inequality("ghz:2")
        with pytest.raises(ValueError):
            parse_inequality("star:x")
