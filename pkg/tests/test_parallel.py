import numpy as np
import pytest

from screening.algorithms import EfgParams, plan_for, run_efg_M, run_efg_M_plus
from screening.core import BudgetPlan, ProblemInstance, SampleState
from screening.evaluators import ConstantEvaluator, SyntheticConfig, build_synthetic
from screening.exceptions import ConfigurationError, ScreeningError
from screening.parallel import CoordinatorState, keyed_for_seed, run_parallel


def rm_problem(k=64, m=4, seed=0):
    cfg = SyntheticConfig.preset("RM-Normal", k=k, m=m, g=min(8, k // 2), seed=seed)
    ev, mu = build_synthetic(cfg)
    return ProblemInstance(k=k, m=m, delta=cfg.gamma_or_delta, true_means=mu), ev


def explore_plan(k, n0, greedy):
    return BudgetPlan(total=n0 * k + greedy, seeding_per_alt=0, explore_per_alt=n0, greedy_total=greedy)


def coordinator(means, width=2, budget=10, keep_log=False):
    state = SampleState(len(means))
    for i, mu in enumerate(means):
        state.update(i, mu)
    return CoordinatorState(state, width, budget, keep_log=keep_log)


class TestCoordinator:
    def test_batch_is_clipped_to_remaining_budget(self):
        c = coordinator([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], width=5, budget=3)
        assert len(c.next_tasks(5)) == 3
        assert c.remaining_budget == 0
        assert c.next_tasks(5) == []

    def test_tasks_come_from_current_top(self):
        c = coordinator([0.0, 5.0, 1.0, 4.0], width=2, budget=10)
        assert sorted(c.next_tasks(2)) == [1, 3]

    def test_issue_report_advances_count_by_one(self):
        c = coordinator([0.0, 5.0, 1.0], width=1, budget=4)
        (alt,) = c.next_tasks(1)
        before = c.state.counts[alt]
        c.report(alt, 2.0)
        assert c.state.counts[alt] == before + 1
        assert c.in_flight == 0 and c.completed == 1

    def test_unissued_report_is_rejected(self):
        c = coordinator([0.0, 5.0, 1.0], width=1, budget=4)
        with pytest.raises(ScreeningError):
            c.report(0, 1.0)
        (alt,) = c.next_tasks(1)
        c.report(alt, 1.0)
        with pytest.raises(ScreeningError):
            c.report(alt, 1.0)

    def test_next_tasks_outside_greedy_phase(self):
        c = coordinator([0.0, 1.0], width=1, budget=0)
        assert c.phase == "done"
        with pytest.raises(ScreeningError):
            c.next_tasks(1)

    def test_accounting_holds_through_a_run(self):
        rng = np.random.default_rng(0)
        c = coordinator(rng.normal(size=8), width=3, budget=40)
        in_flight = []
        while c.phase != "done":
            if c.remaining_budget and rng.random() < 0.6:
                in_flight.extend(c.next_tasks(int(rng.integers(1, 4))))
            elif in_flight:
                alt = in_flight.pop(int(rng.integers(len(in_flight))))
                c.report(alt, rng.normal())
            c.check_accounting()
        assert c.completed == 40 and c.in_flight == 0

    def test_concurrent_batches_may_overlap(self):
        c = coordinator([0.0, 5.0, 1.0, 4.0], width=2, budget=10, keep_log=True)
        first = c.next_tasks(2)
        second = c.next_tasks(2)
        assert set(first) & set(second)
        assert [a for a, _ in c.issued_log] == first + second

    def test_dropped_task_returns_its_budget(self):
        c = coordinator([0.0, 5.0], width=1, budget=2)
        (alt,) = c.next_tasks(1)
        c.drop(alt)
        assert c.remaining_budget == 2 and c.in_flight == 0

    def test_report_order_on_distinct_alternatives_is_irrelevant(self):
        a = coordinator([0.0, 5.0, 4.0], width=2, budget=2)
        b = coordinator([0.0, 5.0, 4.0], width=2, budget=2)
        ta, tb = a.next_tasks(2), b.next_tasks(2)
        for alt in ta:
            a.report(alt, 10.0 * alt)
        for alt in reversed(tb):
            b.report(alt, 10.0 * alt)
        np.testing.assert_array_equal(a.state.means, b.state.means)

    def test_same_alternative_reports_in_either_order(self):
        a = coordinator([0.0, 5.0], width=1, budget=2)
        b = coordinator([0.0, 5.0], width=1, budget=2)
        ta = a.next_tasks(1) + a.next_tasks(1)
        tb = b.next_tasks(1) + b.next_tasks(1)
        assert ta == tb == [1, 1]
        a.report(1, 1.0).report(1, 7.0)
        b.report(1, 7.0).report(1, 1.0)
        assert a.state.means[1] == pytest.approx(b.state.means[1], abs=1e-15)


class TestRunParallel:
    @pytest.mark.parametrize("seed", range(5))
    def test_single_worker_without_latency_matches_sequential(self, seed):
        problem, ev = rm_problem(seed=seed)
        plan = explore_plan(problem.k, 5, 700)
        params = EfgParams(m=problem.m, M=2 * problem.m)
        rep = run_parallel(problem, ev, plan, params, q=1, latency_max=0.0, seed=seed)
        ref = run_efg_M(problem, keyed_for_seed(ev, seed), plan, params)
        np.testing.assert_array_equal(rep.selection.state.counts, ref.state.counts)
        np.testing.assert_array_equal(rep.selection.state.means, ref.state.means)
        np.testing.assert_array_equal(rep.selection.selected, ref.selected)

    def test_single_worker_matches_sequential_with_seeding(self):
        problem, ev = rm_problem(k=128)
        plan = plan_for("efg_M_plus", problem.k, 40 * problem.k, 0.2, 0.2)
        params = EfgParams(m=problem.m, M=2 * problem.m, seeding_fraction=0.2)
        rep = run_parallel(problem, ev, plan, params, q=1, latency_max=1e-3, seed=3)
        ref = run_efg_M_plus(problem, keyed_for_seed(ev, 3), plan, params)
        np.testing.assert_array_equal(rep.selection.state.counts, ref.state.counts)
        np.testing.assert_array_equal(rep.selection.selected, ref.selected)

    @pytest.mark.parametrize("q", [1, 3, 8, 40])
    def test_consumes_exactly_the_budget(self, q):
        problem, ev = rm_problem()
        plan = explore_plan(problem.k, 4, 999)
        rep = run_parallel(problem, ev, plan, EfgParams(m=problem.m, M=8), q=q, seed=q)
        assert rep.selection.consumed_budget == plan.total
        assert int(rep.selection.state.counts.sum()) == plan.total

    def test_no_draw_is_used_twice(self):
        problem, ev = rm_problem(k=32)
        plan = explore_plan(problem.k, 2, 300)
        rep = run_parallel(problem, ev, plan, EfgParams(m=problem.m, M=8), q=6, seed=1, keep_log=True)
        draws = [tuple(entry) for entry in rep.issued_log]
        assert len(draws) == len(set(draws)) == 300

    def test_utilization_is_speedup_over_q(self):
        problem, ev = rm_problem(k=256)
        plan = explore_plan(problem.k, 5, 2000)
        rep = run_parallel(problem, ev, plan, EfgParams(m=problem.m, M=8), q=8, seed=2)
        assert rep.utilization == pytest.approx(rep.speedup / 8)
        assert rep.speedup > 1.0

    def test_provided_baseline_is_used(self):
        problem, ev = rm_problem(k=32)
        plan = explore_plan(problem.k, 2, 100)
        rep = run_parallel(problem, ev, plan, q=4, seed=0, baseline_wall_clock=1.0)
        assert rep.baseline_wall_clock == 1.0
        assert rep.speedup == pytest.approx(1.0 / rep.wall_clock)

    def test_many_workers_overlap_in_the_greedy_phase(self):
        problem, ev = rm_problem()
        plan = explore_plan(problem.k, 3, 800)
        rep = run_parallel(problem, ev, plan, EfgParams(m=problem.m, M=4), q=16, seed=0)
        assert rep.overlapping_issues > 0

    def test_zero_staleness_drops_queued_tasks(self):
        problem, ev = rm_problem()
        plan = explore_plan(problem.k, 3, 800)
        params = EfgParams(m=problem.m, M=4)
        strict = run_parallel(problem, ev, plan, params, q=16, seed=0, staleness=0)
        assert strict.dropped_stale > 0
        assert strict.selection.consumed_budget == plan.total

    def test_deterministic_given_seed(self):
        problem, ev = rm_problem()
        plan = explore_plan(problem.k, 3, 500)
        a = run_parallel(problem, ev, plan, q=5, seed=9)
        b = run_parallel(problem, ev, plan, q=5, seed=9)
        np.testing.assert_array_equal(a.selection.state.means, b.selection.state.means)
        assert a.wall_clock == b.wall_clock

    def test_threaded_mode_consumes_the_budget(self):
        problem, ev = rm_problem(k=16, m=2)
        plan = explore_plan(problem.k, 2, 40)
        rep = run_parallel(problem, ev, plan, EfgParams(m=2, M=4), q=4, latency_max=2e-4,
                           seed=0, mode="threaded", baseline_wall_clock=0.05)
        assert rep.mode == "threaded"
        assert rep.selection.consumed_budget == plan.total
        assert rep.wall_clock > 0

    def test_zero_variance_selects_the_top(self):
        means = np.arange(20.0)
        problem = ProblemInstance(k=20, m=3, true_means=means)
        rep = run_parallel(problem, ConstantEvaluator(means), explore_plan(20, 1, 60), q=7, seed=0)
        assert sorted(rep.selection.selected.tolist()) == [17, 18, 19]

    @pytest.mark.parametrize("kwargs", [dict(q=0), dict(latency_max=-1.0), dict(staleness=-1),
                                        dict(mode="cluster")])
    def test_rejects_bad_settings(self, kwargs):
        problem, ev = rm_problem(k=16, m=2)
        with pytest.raises(ConfigurationError):
            run_parallel(problem, ev, explore_plan(16, 1, 10), **kwargs)

    def test_rejects_mismatched_evaluator(self):
        problem, _ = rm_problem(k=16, m=2)
        with pytest.raises(ConfigurationError):
            run_parallel(problem, ConstantEvaluator(np.zeros(8)), explore_plan(16, 1, 10))
