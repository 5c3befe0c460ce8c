import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from screening.core import SelectionResult
from screening.exceptions import ConfigurationError
from screening.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    aggregate,
    budget_for,
    replication_seed,
    run_experiment,
    run_replications,
    score_replication,
    sweep,
)
from screening.harness.runner import audit_path


def quick_config(**changes):
    base = ExperimentConfig.from_dict({
        "problem": {"kind": "synthetic", "preset": "SC-Normal", "k": 32, "m": 4, "delta": 0.1},
        "algorithm": {"name": "efg_m"},
        "budget": {"rule": "per_alt", "c": 20},
        "replications": 40,
        "seed": 7,
    })
    return base.replace(**changes) if changes else base


def constant_dataset(path, means, copies=5):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"meta": {"k": len(means)}}) + "\n")
        for i, mu in enumerate(means):
            fh.write(json.dumps({"id": i, "obs": [mu] * copies}) + "\n")
    return str(path)


def result(selected, terminal_means):
    return SelectionResult(np.asarray(selected), np.asarray(terminal_means, dtype=float),
                           np.ones(len(selected), dtype=int), 0)


class TestConfig:
    def test_toml_round_trip(self, tmp_path):
        cfg = quick_config(**{"algorithm.name": "efg_M", "algorithm.M_ratio": 2.0,
                              "parallel.workers": 4, "parallel.staleness": 3})
        path = tmp_path / "exp.toml"
        cfg.save(path)
        again = ExperimentConfig.load(path)
        assert again == cfg
        assert again.digest() == cfg.digest()

    def test_digest_ignores_output_only(self):
        cfg = quick_config()
        assert cfg.replace(output="elsewhere.csv").digest() == cfg.digest()
        assert cfg.replace(seed=8).digest() != cfg.digest()

    def test_integer_and_float_spellings_agree(self):
        assert quick_config(**{"budget.c": 20}).digest() == quick_config(**{"budget.c": 20.0}).digest()

    @pytest.mark.parametrize("changes", [
        {"problem.kind": "quantum"},
        {"problem.preset": "SC-Cauchy"},
        {"algorithm.name": "annealing"},
        {"budget.rule": "whatever"},
        {"replications": 0},
        {"metrics": ["PCS", "AUC"]},
        {"parallel.workers": 2, "algorithm.name": "sar"},
        {"algorithm.M": 8, "algorithm.M_ratio": 2.0},
    ])
    def test_invalid_configs(self, changes):
        with pytest.raises(ConfigurationError):
            quick_config(**changes)

    def test_unknown_keys_are_rejected(self):
        with pytest.raises(ConfigurationError, match="colour"):
            ExperimentConfig.loads('[problem]\ncolour = "red"\n')

    def test_bad_toml(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.loads("[problem\n")

    def test_consistent_budget_rule(self):
        cfg = quick_config(**{"budget.rule": "consistent", "budget.alpha": 0.1, "budget.sigma_bar": 1.0,
                              "problem.m": 10})
        plan = budget_for(cfg, 64, 10)
        assert plan.explore_per_alt == 4239
        assert plan.greedy_total == 41 * 64


class TestScoring:
    means = np.array([5.0, 4.0, 3.95, 1.0, 0.0])

    def test_correct_and_ranked(self):
        assert score_replication(result([0, 1], [5.1, 3.9]), self.means, 2, 0.1) == (True, True, True)

    def test_good_but_not_correct(self):
        correct, good, _ = score_replication(result([0, 2], [5.0, 3.9]), self.means, 2, 0.1)
        assert (correct, good) == (False, True)

    def test_not_good_fails_everything(self):
        assert score_replication(result([0, 3], [5.0, 4.5]), self.means, 2, 0.1) == (False, False, False)

    def test_misordered_selection(self):
        assert score_replication(result([1, 0], [5.0, 4.9]), self.means, 2, 0.1) == (True, True, False)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            score_replication(result([0], [5.0]), self.means, 2, 0.1)

    @given(st.lists(st.floats(-10, 10), min_size=4, max_size=12, unique=True), st.data())
    def test_joint_event_containment(self, means, data):
        means = np.asarray(means)
        m = data.draw(st.integers(1, len(means) - 1))
        sel = data.draw(st.lists(st.integers(0, len(means) - 1), min_size=m, max_size=m, unique=True))
        xbar = data.draw(st.lists(st.floats(-10, 10), min_size=m, max_size=m))
        correct, good, rank = score_replication(result(sel, xbar), means, m, 0.5)
        assert rank <= good
        assert correct <= good


class TestRunExperiment:
    def test_deterministic_evaluator_is_always_right(self, tmp_path):
        path = constant_dataset(tmp_path / "const.jsonl", [float(i) for i in range(12)])
        cfg = ExperimentConfig.from_dict({
            "problem": {"kind": "empirical", "path": path, "m": 3, "delta": 0.5},
            "budget": {"rule": "per_alt", "c": 5},
            "replications": 25,
        })
        for name in ("efg_m", "efg_M", "sar", "ocbam"):
            reports = run_experiment(cfg.replace(**{"algorithm.name": name}))
            assert {r.metric: (r.estimate, r.standard_error) for r in reports} == {
                "PCS": (1.0, 0.0), "PGS": (1.0, 0.0), "PGSR": (1.0, 0.0)}

    def test_standard_error_formula(self):
        reports = run_experiment(quick_config())
        for r in reports:
            assert r.standard_error == pytest.approx(math.sqrt(r.estimate * (1 - r.estimate) / r.R))
            assert r.R == 40

    def test_metric_ordering(self):
        by_metric = {r.metric: r.estimate for r in run_experiment(quick_config(**{"problem.preset": "RM-Normal",
                                                                                   "problem.g": 8}))}
        assert by_metric["PGSR"] <= by_metric["PGS"] <= 1.0
        assert by_metric["PCS"] <= by_metric["PGS"]

    def test_rerun_reproduces_rows(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_experiment(quick_config(output=str(a)))
        run_experiment(quick_config(output=str(b)))

        def rows(p):
            with open(p, newline="") as fh:
                return [row[:-1] for row in csv.reader(fh)]

        assert rows(a) == rows(b)

    def test_jobs_do_not_change_results(self):
        cfg = quick_config(replications=12)
        serial = run_replications(cfg, jobs=1)
        pooled = run_replications(cfg, jobs=3)
        assert [(r.r, r.selected, r.correct) for r in serial] == [(r.r, r.selected, r.correct) for r in pooled]

    def test_replication_seeds_do_not_depend_on_order(self):
        a = replication_seed(3, 5).generate_state(4)
        b = replication_seed(3, 5).generate_state(4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, replication_seed(3, 6).generate_state(4))

    def test_csv_schema_and_audit_log(self, tmp_path):
        out = tmp_path / "res.csv"
        cfg = quick_config(output=str(out), replications=10)
        run_experiment(cfg)
        raw = out.read_bytes()
        assert b"\r\n" not in raw
        with open(out, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert [row[2] for row in rows[1:]] == ["PCS", "PGS", "PGSR"]
        assert all(row[0] == cfg.digest() for row in rows[1:])
        lines = [json.loads(s) for s in open(audit_path(out), encoding="utf-8")]
        assert lines[0]["config_digest"] == cfg.digest()
        assert [rec["r"] for rec in lines[1:]] == list(range(10))

    def test_parallel_runs_report_utilization(self):
        cfg = quick_config(**{"problem.preset": "RM-Normal", "problem.g": 8, "algorithm.name": "efg_M",
                              "algorithm.M_ratio": 2.0, "parallel.workers": 4}, replications=6)
        metrics = {r.metric: r for r in run_experiment(cfg)}
        assert 0.0 < metrics["utilization"].estimate <= 1.0 + 1e-9

    def test_redrawn_means(self):
        cfg = quick_config(**{"problem.preset": "RM-Normal", "problem.g": 8, "problem.redraw_means": True},
                           replications=10)
        records = run_replications(cfg)
        assert len(records) == 10

    def test_split_halves_agree(self):
        cfg = quick_config(replications=200, **{"budget.c": 10})
        records = run_replications(cfg)
        p1 = np.mean([r.good for r in records[::2]])
        p2 = np.mean([r.good for r in records[1::2]])
        se = math.sqrt(p1 * (1 - p1) / 100 + p2 * (1 - p2) / 100)
        assert abs(p1 - p2) <= 4 * max(se, 1e-12)

    def test_aggregate_uses_requested_metrics(self):
        cfg = quick_config(metrics=["PGS"], replications=5)
        reports = aggregate(run_replications(cfg), cfg)
        assert [r.metric for r in reports] == ["PGS"]


class TestSweep:
    def test_rows_for_every_value(self, tmp_path):
        out = tmp_path / "sweep.csv"
        cfg = quick_config(output=str(out), replications=5)
        reports = sweep(cfg, "c", [5, 10])
        assert [(r.axis_value, r.metric) for r in reports] == [
            (5, "PCS"), (5, "PGS"), (5, "PGSR"), (10, "PCS"), (10, "PGS"), (10, "PGSR")]
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 7 and rows[0] == list(CSV_COLUMNS)
        assert rows[1][0] != rows[4][0]

    @pytest.mark.parametrize("axis", ["alpha", "M_ratio", "banana"])
    def test_inapplicable_axis(self, axis):
        with pytest.raises(ConfigurationError):
            sweep(quick_config(replications=2), axis, [1])

    def test_sigma_axis_changes_the_noise(self):
        reports = sweep(quick_config(replications=5), "sigma", [0.5, 2.0])
        digests = {r.config_digest for r in reports}
        assert len(digests) == 2
