import math

import numpy as np
import pytest

from maxent_markov import (
    Distribution,
    ReducibleChainError,
    StateSequence,
    StateSpace,
    StochasticMatrix,
    detailed_balance_residual,
    entropy_rate,
    is_irreducible,
    matrix_autocorrelation,
    simulate,
    stationary_distribution,
)
from maxent_markov.chains import simulate_batch

from conftest import power_iteration_stationary, random_irreducible


def mat2(a, b, c, d):
    return StochasticMatrix(np.array([[a, b], [c, d]]), StateSpace.binary())


class TestTypes:
    def test_state_space_requires_increasing(self):
        with pytest.raises(ValueError):
            StateSpace((1.0, -1.0))
        with pytest.raises(ValueError):
            StateSpace((0.0, 0.0))
        with pytest.raises(ValueError):
            StateSpace((1.0,))

    def test_default_state_codes(self):
        assert StateSpace.default(2).values == (-1.0, 1.0)
        assert StateSpace.default(3).values == (-1.0, 0.0, 1.0)
        assert StateSpace.default(5).values == (-2.0, -1.0, 0.0, 1.0, 2.0)
        assert StateSpace.default(4).values == (-3.0, -1.0, 1.0, 3.0)

    def test_distribution_validation(self):
        with pytest.raises(ValueError):
            Distribution(np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            Distribution(np.array([1.2, -0.2]))
        d = Distribution(np.array([0.25, 0.75]))
        assert d.mass.flags.writeable is False

    def test_matrix_row_sum_tolerance(self):
        with pytest.raises(ValueError):
            mat2(0.6, 0.5, 0.4, 0.6)
        w = mat2(0.6, 0.4, 0.4, 0.6)
        assert w.entries.flags.writeable is False
        with pytest.raises(ValueError):
            StochasticMatrix(np.array([[1.0, 0.0]]), StateSpace.binary())

    def test_uniform_rows_sum_to_one(self):
        for k in (2, 3, 5):
            w = StochasticMatrix.uniform(StateSpace.default(k))
            assert np.abs(w.entries.sum(axis=1) - 1.0).max() <= 1e-12

    def test_state_sequence_bounds(self):
        with pytest.raises(ValueError):
            StateSequence(np.array([0, 2]), 2)
        with pytest.raises(ValueError):
            StateSequence(np.array([0.5]), 2)
        s = StateSequence(np.array([0, 1, 0]), 2)
        assert len(s) == 3
        assert list(s.values(StateSpace.binary())) == [-1.0, 1.0, -1.0]


class TestStationary:
    def test_symmetric_matrix_is_uniform(self):
        p = stationary_distribution(mat2(0.6, 0.4, 0.4, 0.6))
        np.testing.assert_allclose(p.mass, [0.5, 0.5], atol=1e-12)

    def test_asymmetric_matches_closed_form_and_power_iteration(self):
        w = mat2(0.7, 0.3, 0.5, 0.5)
        p = stationary_distribution(w)
        # closed form for two states: p_low = (1 - stay_high) / (2 - stay_low - stay_high)
        assert p.mass[0] == pytest.approx(0.625, abs=1e-12)
        oracle = power_iteration_stationary(w.entries)
        np.testing.assert_allclose(p.mass, oracle, atol=1e-10)

    def test_identity_is_rejected(self):
        with pytest.raises(ReducibleChainError):
            stationary_distribution(mat2(1.0, 0.0, 0.0, 1.0))

    def test_absorbing_chain_is_rejected(self):
        with pytest.raises(ReducibleChainError):
            stationary_distribution(mat2(1.0, 0.0, 0.5, 0.5))

    def test_periodic_chain_has_uniform_stationary(self):
        p = stationary_distribution(mat2(0.0, 1.0, 1.0, 0.0))
        np.testing.assert_allclose(p.mass, [0.5, 0.5], atol=1e-12)

    def test_random_matrices_satisfy_fixed_point(self, rng):
        for _ in range(1000):
            k = int(rng.integers(2, 4))
            w = random_irreducible(rng, k)
            p = stationary_distribution(w)
            assert np.abs(p.mass @ w.entries - p.mass).max() <= 1e-10

    def test_irreducibility_detector(self):
        assert is_irreducible(mat2(0.5, 0.5, 0.5, 0.5))
        assert not is_irreducible(mat2(1.0, 0.0, 0.0, 1.0))


class TestEntropyRate:
    def test_uniform_two_state_is_log2(self):
        h = entropy_rate(Distribution.uniform(2), mat2(0.5, 0.5, 0.5, 0.5))
        assert h == pytest.approx(math.log(2), abs=1e-12)

    def test_deterministic_chain_is_zero(self):
        w = mat2(1.0, 0.0, 0.0, 1.0)
        assert entropy_rate(Distribution.uniform(2), w) == 0.0
        assert entropy_rate(Distribution(np.array([0.3, 0.7])), w) == 0.0

    def test_direct_summation_oracle(self):
        # -(0.6 ln 0.6 + 0.4 ln 0.4), summed by hand
        expected = -(0.6 * math.log(0.6) + 0.4 * math.log(0.4))
        assert expected == pytest.approx(0.6730116670092565, abs=1e-12)
        h = entropy_rate(Distribution.uniform(2), mat2(0.6, 0.4, 0.4, 0.6))
        assert h == pytest.approx(expected, abs=1e-12)

    def test_bounded_by_log_k(self, rng):
        for k in (2, 3):
            for _ in range(50):
                w = random_irreducible(rng, k)
                p = stationary_distribution(w)
                h = entropy_rate(p, w)
                assert -1e-12 <= h <= math.log(k) + 1e-12

    def test_permutation_invariance(self, rng):
        w = random_irreducible(rng, 3)
        p = stationary_distribution(w)
        perm = np.array([2, 0, 1])
        w_perm = StochasticMatrix(w.entries[np.ix_(perm, perm)], w.states)
        p_perm = Distribution(p.mass[perm])
        assert entropy_rate(p, w) == pytest.approx(entropy_rate(p_perm, w_perm), abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            entropy_rate(Distribution.uniform(3), mat2(0.5, 0.5, 0.5, 0.5))


class TestAutocorrelation:
    def test_maxent_form_roundtrip(self):
        # stay probability (1+A)/2 with uniform stationary gives back A
        a = 0.2
        w = mat2((1 + a) / 2, (1 - a) / 2, (1 - a) / 2, (1 + a) / 2)
        p = stationary_distribution(w)
        assert matrix_autocorrelation(p, w) == pytest.approx(a, abs=1e-12)

    def test_identity_is_one(self):
        w = mat2(1.0, 0.0, 0.0, 1.0)
        assert matrix_autocorrelation(Distribution.uniform(2), w) == pytest.approx(1.0)

    def test_uniform_ternary_is_zero(self):
        w = StochasticMatrix.uniform(StateSpace.ternary())
        assert matrix_autocorrelation(Distribution.uniform(3), w) == pytest.approx(0.0, abs=1e-12)

    def test_plus_minus_one_range(self, rng):
        for _ in range(100):
            w = random_irreducible(rng, 2)
            p = stationary_distribution(w)
            assert -1 - 1e-12 <= matrix_autocorrelation(p, w) <= 1 + 1e-12

    def test_time_reversal_invariance_under_detailed_balance(self, rng):
        from conftest import detailed_balance_pair

        pair = None
        while pair is None:
            pair = detailed_balance_pair(rng, StateSpace.ternary(), 0.25)
        w, p = pair
        reversed_entries = (p.mass[:, None] * w.entries).T / p.mass[:, None]
        w_rev = StochasticMatrix(reversed_entries, w.states)
        assert matrix_autocorrelation(p, w) == pytest.approx(
            matrix_autocorrelation(p, w_rev), abs=1e-12
        )


class TestDetailedBalance:
    def test_symmetric_uniform_is_zero(self):
        assert detailed_balance_residual(Distribution.uniform(2), mat2(0.6, 0.4, 0.4, 0.6)) == 0.0

    def test_maxent_form_satisfies_balance(self):
        a = 0.2
        w = mat2((1 + a) / 2, (1 - a) / 2, (1 - a) / 2, (1 + a) / 2)
        p = stationary_distribution(w)
        assert detailed_balance_residual(p, w) <= 1e-15

    def test_hand_evaluation(self):
        # |0.5 * 0.1 - 0.5 * 0.5| = 0.2
        w = mat2(0.9, 0.1, 0.5, 0.5)
        assert detailed_balance_residual(Distribution.uniform(2), w) == pytest.approx(0.2)


class TestSimulate:
    def test_identity_stays_put(self):
        w = mat2(1.0, 0.0, 0.0, 1.0)
        seq = simulate(w, Distribution.point(2, 0), 5, seed=1)
        assert list(seq.indices) == [0, 0, 0, 0, 0]

    def test_uniform_chain_autocorrelation_vanishes(self):
        w = mat2(0.5, 0.5, 0.5, 0.5)
        n = 100_000
        seq = simulate(w, Distribution.uniform(2), n, seed=7)
        x = seq.values(StateSpace.binary())
        acf = (x[:-1] * x[1:]).mean()
        assert abs(acf) < 0.02  # ~3 sigma at this length

    def test_same_seed_reproduces(self):
        w = mat2(0.7, 0.3, 0.2, 0.8)
        a = simulate(w, Distribution.uniform(2), 500, seed=42)
        b = simulate(w, Distribution.uniform(2), 500, seed=42)
        assert np.array_equal(a.indices, b.indices)
        c = simulate(w, Distribution.uniform(2), 500, seed=43)
        assert not np.array_equal(a.indices, c.indices)

    def test_empirical_frequencies_converge(self, rng):
        w = random_irreducible(rng, 3)
        seq = simulate(w, Distribution.uniform(3), 200_000, seed=3)
        idx = seq.indices
        counts = np.zeros((3, 3))
        np.add.at(counts, (idx[:-1], idx[1:]), 1.0)
        freq = counts / counts.sum(axis=1, keepdims=True)
        assert np.abs(freq - w.entries).max() < 0.02

    def test_batch_matches_marginals(self, rng):
        w = mat2(0.7, 0.3, 0.4, 0.6)
        p = stationary_distribution(w)
        paths = simulate_batch(w.entries, p.mass, 50, 4000, rng)
        assert paths.shape == (4000, 50)
        occupancy = (paths == 0).mean()
        assert abs(occupancy - p.mass[0]) < 0.02

    def test_rejects_bad_length(self):
        with pytest.raises(ValueError):
            simulate(mat2(0.5, 0.5, 0.5, 0.5), Distribution.uniform(2), 0, seed=0)
