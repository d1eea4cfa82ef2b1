import math

import numpy as np
import pytest

from twochoice.eval_model import sample_capabilities
from twochoice.strategies import (
    FinalLabel,
    Strategy,
    StrategyKind,
    apply_strategy,
    majority_vote,
    max_three_final,
)


def pool_of(value, size):
    return sample_capabilities(value, value, size, seed=0)


class TestMajorityVote:
    def test_two_of_three(self):
        assert majority_vote([1, 1, 0]) == 1

    def test_unanimity(self):
        assert majority_vote([0, 0, 0, 0, 0]) == 0

    def test_four_against_three(self):
        votes = [1, 0, 1, 0, 1, 0, 1]
        assert majority_vote(votes) == 1
        assert sum(votes) > len(votes) // 2  # brute-force count agrees

    @pytest.mark.parametrize("votes", [[], [1, 0], [1, 1, 0, 0]])
    def test_rejects_even_or_empty(self, votes):
        with pytest.raises(ValueError):
            majority_vote(votes)


class TestMaxThreeFinal:
    def test_agreement_skips_the_tiebreaker(self):
        calls = []
        for value in (0, 1):
            final = max_three_final(value, value, lambda: calls.append(1) or 0)
            assert final.label == value
            assert final.effort == 2
            assert final.voter_labels == (value, value)
        assert calls == []

    def test_disagreement_invokes_supplier_once(self):
        calls = []

        def supplier():
            calls.append(1)
            return 0

        final = max_three_final(1, 0, supplier)
        assert final.label == 0
        assert final.effort == 3
        assert final.voter_labels == (1, 0, 0)
        assert calls == [1]


class TestStrategyType:
    def test_names_round_trip(self):
        for name in ("fixed-worker", "one-worker", "max-three", "n-workers:5"):
            assert Strategy.from_name(name).name == name

    def test_even_n_rejected(self):
        with pytest.raises(ValueError, match="N must be odd"):
            Strategy.from_name("n-workers:4")

    def test_n_below_three_rejected(self):
        with pytest.raises(ValueError):
            Strategy.from_name("n-workers:1")

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError, match="unknown strategy"):
            Strategy.from_name("two-workers")

    def test_n_workers_only_for_majority(self):
        with pytest.raises(ValueError):
            Strategy(kind=StrategyKind.ONE_WORKER, n_workers=3)

    def test_final_label_checks_effort(self):
        with pytest.raises(ValueError):
            FinalLabel(label=1, effort=2, voter_labels=(1,))


class TestApplyStrategy:
    def test_one_worker_deterministic_corner(self):
        final = apply_strategy(Strategy.from_name("one-worker"), 1.0, pool_of(1.0, 10), seed=3)
        assert final.label == 1
        assert final.effort == 1

    def test_majority_unanimous_for_a_prime(self):
        final = apply_strategy(Strategy.from_name("n-workers:5"), -1.0, pool_of(1.0, 10), seed=3)
        assert final.label == 0
        assert final.effort == 5
        assert final.voter_labels == (0, 0, 0, 0, 0)

    def test_fixed_worker_requires_index(self):
        with pytest.raises(ValueError, match="fixed_worker_index"):
            apply_strategy(Strategy.from_name("fixed-worker"), 0.5, pool_of(1.0, 10), seed=0)

    def test_fixed_worker_index_must_be_in_pool(self):
        with pytest.raises(ValueError):
            apply_strategy(Strategy.from_name("fixed-worker"), 0.5, pool_of(1.0, 10),
                           seed=0, fixed_worker_index=10)

    def test_index_rejected_for_other_kinds(self):
        with pytest.raises(ValueError):
            apply_strategy(Strategy.from_name("one-worker"), 0.5, pool_of(1.0, 10),
                           seed=0, fixed_worker_index=0)

    def test_effort_accounting_over_random_draws(self):
        rng = np.random.default_rng(8)
        pool = sample_capabilities(0.6, 1.0, 30, seed=1)
        for _ in range(300):
            d = rng.uniform(-1, 1)
            one = apply_strategy(Strategy.from_name("one-worker"), d, pool, rng)
            assert one.effort == 1
            fixed = apply_strategy(Strategy.from_name("fixed-worker"), d, pool, rng,
                                   fixed_worker_index=int(rng.integers(0, 30)))
            assert fixed.effort == 1
            maj = apply_strategy(Strategy.from_name("n-workers:7"), d, pool, rng)
            assert maj.effort == 7
            assert maj.label == majority_vote(maj.voter_labels)
            m3 = apply_strategy(Strategy.from_name("max-three"), d, pool, rng)
            assert m3.effort in (2, 3)
            assert (m3.effort == 2) == (m3.voter_labels[0] == m3.voter_labels[1])

    def test_max_three_disagreement_rate_at_coin_flip(self):
        # at P(a)=0.5 the two first voters disagree with probability 2*0.5*0.5
        rng = np.random.default_rng(12)
        strategy = Strategy.from_name("max-three")
        pool = pool_of(1.0, 10)
        trials = 10**5
        tiebreaks = sum(
            apply_strategy(strategy, 0.0, pool, rng).effort == 3 for _ in range(trials)
        )
        assert abs(tiebreaks / trials - 0.5) < 0.01

    def test_majority_of_three_matches_binomial_closed_form(self):
        # P(a) = 0.6125 via c=1, d=0.225; closed form 3 p^2 (1-p) + p^3
        p = 0.6125
        expected = 3 * p**2 * (1 - p) + p**3
        assert expected == pytest.approx(0.66590234375, abs=1e-15)
        rng = np.random.default_rng(40)
        strategy = Strategy.from_name("n-workers:3")
        pool = pool_of(1.0, 10)
        trials = 10**5
        wins = sum(apply_strategy(strategy, 0.225, pool, rng).label for _ in range(trials))
        tolerance = 3 * math.sqrt(expected * (1 - expected) / trials)
        assert abs(wins / trials - expected) < tolerance

    def test_pool_never_mutated(self):
        pool = sample_capabilities(0.8, 1.0, 10, seed=2)
        before = pool.capabilities.copy()
        rng = np.random.default_rng(0)
        for name in ("one-worker", "max-three", "n-workers:3"):
            apply_strategy(Strategy.from_name(name), 0.3, pool, rng)
        assert np.array_equal(pool.capabilities, before)

    def test_distinct_voters_needs_a_big_enough_pool(self):
        strategy = Strategy(kind=StrategyKind.N_WORKERS_MAJORITY, n_workers=5, distinct_voters=True)
        with pytest.raises(ValueError, match="distinct"):
            apply_strategy(strategy, 0.5, pool_of(1.0, 3), seed=0)

    def test_distinct_voters_smoke(self):
        strategy = Strategy(kind=StrategyKind.N_WORKERS_MAJORITY, n_workers=5, distinct_voters=True)
        final = apply_strategy(strategy, 1.0, pool_of(1.0, 5), seed=0)
        assert final.label == 1
        assert final.effort == 5
