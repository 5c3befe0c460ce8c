import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from screening import core
from screening.core import (
    BudgetPlan,
    ProblemInstance,
    Relation,
    SampleState,
    SelectionResult,
    budget_from_money,
    good_set,
    ibr_relation,
    is_correct_selection,
    is_good_ranking,
    is_good_screening,
    top_m_select,
)
from screening.exceptions import ConfigurationError


def _result(selected, terminal):
    sel = np.asarray(selected)
    return SelectionResult(sel, np.asarray(terminal, dtype=float), np.ones(len(sel), int), len(sel))


class TestProblemInstance:
    def test_rejects_m_not_below_k(self):
        with pytest.raises(ConfigurationError):
            ProblemInstance(k=5, m=5)

    def test_rejects_negative_delta(self):
        with pytest.raises(ConfigurationError):
            ProblemInstance(k=5, m=2, delta=-0.1)

    def test_true_means_shape_checked(self):
        with pytest.raises(ConfigurationError):
            ProblemInstance(k=3, m=1, true_means=[1.0, 2.0])


class TestSampleState:
    def test_fresh_state(self):
        s = SampleState(4)
        assert s.total == 0
        assert np.all(s.counts == 0)
        assert np.all(np.isnan(s.means))

    def test_update_and_copy_are_independent(self):
        s = SampleState(3).update(1, 2.0).update(1, 4.0)
        c = s.copy()
        c.update(1, 100.0)
        assert s.means[1] == 3.0
        assert s.counts[1] == 2 and s.total == 2
        assert c.counts[1] == 3

    def test_update_many_matches_loop(self, rng):
        alts = rng.integers(0, 5, 200)
        vals = rng.normal(size=200)
        a = SampleState(5).update_many(alts, vals)
        b = SampleState(5)
        for i, x in zip(alts, vals):
            b.update(int(i), float(x))
        np.testing.assert_array_equal(a.counts, b.counts)
        np.testing.assert_array_equal(a.means, b.means)

    def test_reset(self):
        s = SampleState(2).update(0, 1.0).reset()
        assert s.total == 0 and np.isnan(s.means[0])

    def test_update_mean_helper(self):
        s = core.update_mean(SampleState(2), 0, 5.0)
        assert s.means[0] == 5.0

    def test_running_mean_drift_over_a_million_updates(self):
        x = np.random.default_rng(7).uniform(-1.0, 1.0, 1_000_000)
        s = SampleState(1).update_many(np.zeros(x.size, dtype=np.int64), x)
        assert abs(s.means[0] - np.mean(x, dtype=np.longdouble)) <= 1e-9


class TestBudgetPlan:
    def test_from_fractions_adds_up(self):
        plan = BudgetPlan.from_fractions(1024, 100, greedy_fraction=0.2, seeding_fraction=0.2)
        assert plan.total == 102_400
        assert plan.seeding_per_alt == 20 and plan.explore_per_alt == 60
        plan.check(1024)

    def test_rounding_slack_goes_to_greedy(self):
        plan = BudgetPlan.from_fractions(10, 33, greedy_fraction=0.2)
        assert plan.explore_per_alt == 26
        assert plan.greedy_total == 330 - 260

    @pytest.mark.parametrize("g,s", [(0.6, 0.5), (1.0, 0.0), (-0.1, 0.0)])
    def test_bad_fractions(self, g, s):
        with pytest.raises(ConfigurationError):
            BudgetPlan.from_fractions(10, 100, g, s)

    def test_check_detects_mismatch(self):
        with pytest.raises(ConfigurationError):
            BudgetPlan(total=100, seeding_per_alt=0, explore_per_alt=5, greedy_total=10).check(10)


class TestTopM:
    def test_ties_go_to_lower_index(self):
        np.testing.assert_array_equal(top_m_select(np.array([1.0, 3.0, 3.0, 2.0]), 2), [1, 2])

    def test_accepts_state(self):
        s = SampleState(3).update_many([0, 1, 2], [1.0, 5.0, 3.0])
        np.testing.assert_array_equal(top_m_select(s, 2), [1, 2])

    @given(
        arrays(np.float64, st.integers(2, 60),
               elements=st.sampled_from([-1.0, 0.0, 0.5, 1.0, 2.0]) | st.floats(-5, 5)),
        st.data(),
    )
    def test_agrees_with_stable_sort(self, means, data):
        m = data.draw(st.integers(1, means.size))
        expected = np.argsort(-means, kind="stable")[:m]
        np.testing.assert_array_equal(top_m_select(means, m), expected)

    def test_ten_thousand_random_instances(self):
        rng = np.random.default_rng(0)
        for _ in range(10_000):
            k = int(rng.integers(2, 40))
            means = rng.integers(0, 6, k).astype(float)
            m = int(rng.integers(1, k + 1))
            assert np.array_equal(top_m_select(means, m), np.argsort(-means, kind="stable")[:m])


class TestGoodSet:
    def test_boundary_counts_as_good(self):
        gs = good_set([1.0, 0.9, 0.8], m=1, delta=0.1)
        assert 1 in gs and 2 not in gs

    @given(arrays(np.float64, st.integers(2, 30), elements=st.floats(-3, 3)),
           st.floats(0, 2), st.floats(0, 2), st.data())
    def test_monotone_in_delta(self, means, d1, d2, data):
        m = data.draw(st.integers(1, means.size))
        small, large = sorted([d1, d2])
        assert good_set(means, m, small).members <= good_set(means, m, large).members

    def test_huge_delta_contains_everything(self):
        assert len(good_set(np.arange(10.0), 3, 1e9)) == 10


class TestPredicates:
    def test_correct_selection_ignores_order(self):
        r = _result([2, 0], [5.0, 4.0])
        assert is_correct_selection(r, [3.0, 1.0, 4.0])

    def test_screening(self):
        gs = core.GoodSet(frozenset({0, 1, 2}), 0.0)
        assert is_good_screening(_result([0, 2], [1, 0]), gs)
        assert not is_good_screening(_result([0, 3], [1, 0]), gs)

    def test_ranking_consistent_and_inverted(self):
        mu = [1.2, 1.0]
        assert is_good_ranking(_result([0, 1], [3.0, 2.0]), mu, 0.1)
        assert not is_good_ranking(_result([0, 1], [2.0, 3.0]), mu, 0.1)

    def test_ranking_without_dominance_pairs(self):
        assert is_good_ranking(_result([0, 1], [2.0, 3.0]), [1.0, 0.95], 0.1)

    def test_ranking_needs_strict_gap(self):
        # mean gap equal to delta is not a dominance pair for ranking
        assert is_good_ranking(_result([0, 1], [2.0, 3.0]), [1.0, 0.5], 0.5)

    def test_ranking_needs_means(self):
        with pytest.raises(ValueError):
            is_good_ranking(_result([0], [1.0]), None, 0.1)


class TestIbr:
    def test_examples(self):
        assert ibr_relation(1.0, 0.95, 0.1) is Relation.INDIFFERENT
        assert ibr_relation(1.0, 0.75, 0.25) is Relation.A_DOMINATES
        assert ibr_relation(0.0, 0.5, 0.25) is Relation.B_DOMINATES

    def test_gap_equal_to_delta_dominates(self):
        assert ibr_relation(1.0, 0.5, 0.5) is Relation.A_DOMINATES

    @given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 5))
    def test_trichotomy(self, a, b, d):
        rel = ibr_relation(a, b, d)
        flags = [rel is r for r in Relation]
        assert sum(flags) == 1
        mirrored = ibr_relation(b, a, d)
        swap = {Relation.A_DOMINATES: Relation.B_DOMINATES, Relation.B_DOMINATES: Relation.A_DOMINATES,
                Relation.INDIFFERENT: Relation.INDIFFERENT}
        assert mirrored is swap[rel]

    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.floats(0.01, 3))
    def test_dominance_is_transitive(self, abc, d):
        a, b, c = abc
        if ibr_relation(a, b, d) is Relation.A_DOMINATES and ibr_relation(b, c, d) is Relation.A_DOMINATES:
            assert ibr_relation(a, c, d) is Relation.A_DOMINATES

    def test_negative_delta(self):
        with pytest.raises(ValueError):
            ibr_relation(0, 0, -1)


class TestBudgetFromMoney:
    def test_examples(self):
        assert budget_from_money(10.0, 3.0) == 3
        assert budget_from_money(0.0, 0.5) == 0

    def test_cost_analysis_inputs(self):
        assert budget_from_money(62.4, 0.6 * 80 / 1e6) == 1_300_000

    def test_nonpositive_cost(self):
        with pytest.raises(ValueError):
            budget_from_money(1.0, 0.0)
