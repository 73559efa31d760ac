"""Evaluation aggregates against brute-force recomputation."""

import csv
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempoprobe.evaluator import (
    EvalError,
    EntropyCurve,
    F1Result,
    closed_set_entropy,
    corpus_perplexity,
    duration_buckets,
    entropy_curve,
    evaluate_f1,
    future_loglik_curve,
    gap_curve,
    partition_by_multiplicity,
    write_report,
)
from tempoprobe.metrics import SpanScore, bootstrap_ci, max_f1
from tempoprobe.corpus import sample_stream
from tempoprobe.models import train
from tempoprobe.probes import MASK, ClozeQuery, query_id
from tempoprobe.synthetic import make_drift_world


def make_query(subject, year, answers, relation="P54", duration=1):
    return ClozeQuery(
        id=query_id(subject, relation, year),
        year=year,
        text=f"{subject} plays for {MASK}.",
        answers=tuple(answers),
        relation_id=relation,
        subject_id=subject,
        duration_years=duration,
    )


class FixedModel:
    """Answers from a lookup table keyed by (text, year)."""

    def __init__(self, table, default="nothing"):
        self.table = table
        self.default = default

    def predict(self, text, year, top_n=1):
        return [(self.table.get((text, year), self.default), -1.0)]

    def score(self, text, year, target):
        prob = 0.5 if self.table.get((text, year)) == target else 0.25
        return SpanScore(log_prob=math.log(prob), target_len=max(1, len(target.split())))


class FailingModel:
    def __init__(self, bad_texts):
        self.bad_texts = bad_texts

    def predict(self, text, year, top_n=1):
        if text in self.bad_texts:
            raise RuntimeError("backend fell over")
        return [("alpha", -1.0)]


# ---------------------------------------------------------------------------
# evaluate_f1

class TestEvaluateF1:
    def test_all_correct_macro_is_one(self):
        queries = [make_query(f"S{i}", 2010 + i % 3, ["alpha"]) for i in range(9)]
        model = FixedModel({}, default="alpha")
        result = evaluate_f1(model, queries)
        assert result.macro == 1.0
        assert all(v == 1.0 for v in result.per_year.values())

    def test_macro_is_unweighted_over_years(self):
        # year 2010 has 4 queries all wrong, year 2011 has 1 query right;
        # macro must be 0.5 regardless of the count imbalance
        queries = [make_query(f"A{i}", 2010, ["alpha"]) for i in range(4)]
        queries.append(make_query("B", 2011, ["beta"]))
        model = FixedModel({(queries[-1].text, 2011): "beta"}, default="zzz")
        result = evaluate_f1(model, queries)
        assert result.per_year[2010] == 0.0
        assert result.per_year[2011] == 1.0
        assert result.macro == 0.5

    def test_matches_brute_force(self):
        world = make_drift_world(seed=3, n_subjects=40, examples_per_year=4)
        model = train(sample_stream(world.corpus, seed=0), regime="temporal", steps=20000)
        queries = world.queries[:500]
        result = evaluate_f1(model, queries)

        by_year = {}
        for q in queries:
            pred = model.predict(q.text, q.year, top_n=1)[0][0]
            by_year.setdefault(q.year, []).append(max_f1(pred, q.answers))
        expected_year = {y: sum(v) / len(v) for y, v in by_year.items()}
        assert set(result.per_year) == set(expected_year)
        for year, value in expected_year.items():
            assert abs(result.per_year[year] - value) <= 1e-12
        expected_macro = sum(expected_year.values()) / len(expected_year)
        assert abs(result.macro - expected_macro) <= 1e-12

    def test_partitions_split_at_future_from(self):
        queries = [make_query("A", y, ["alpha"]) for y in (2017, 2018, 2019, 2020)]
        model = FixedModel(
            {(queries[0].text, 2017): "alpha", (queries[0].text, 2018): "alpha"},
            default="zzz",
        )
        result = evaluate_f1(model, queries, future_from=2019)
        assert result.partitions["seen"] == 1.0
        assert result.partitions["future"] == 0.0

    def test_partition_keys_absent_when_empty(self):
        queries = [make_query("A", 2012, ["alpha"])]
        result = evaluate_f1(FixedModel({}, default="alpha"), queries)
        assert "future" not in result.partitions
        assert result.partitions["seen"] == 1.0

    def test_failures_recorded_not_fatal(self):
        good = make_query("G", 2010, ["alpha"])
        bad = make_query("B", 2010, ["alpha"])
        model = FailingModel({bad.text})
        result = evaluate_f1(model, [good, bad])
        assert result.per_year[2010] == 1.0
        assert len(result.failures) == 1
        assert result.failures[0][0] == bad.id
        assert "fell over" in result.failures[0][1]

    def test_no_queries_rejected(self):
        with pytest.raises(EvalError):
            evaluate_f1(FixedModel({}), [])

    def test_all_failures_rejected(self):
        q = make_query("A", 2010, ["alpha"])
        with pytest.raises(EvalError):
            evaluate_f1(FailingModel({q.text}), [q])

    @given(st.integers(2, 5), st.integers(1, 4))
    @settings(max_examples=20, deadline=None)
    def test_duplicating_queries_keeps_per_year_means(self, n_years, copies):
        queries = []
        for i in range(n_years):
            queries.append(make_query(f"S{i}", 2010 + i, ["alpha"]))
            queries.append(make_query(f"T{i}", 2010 + i, ["beta"]))
        model = FixedModel({}, default="alpha")
        base = evaluate_f1(model, queries)
        dup = evaluate_f1(model, queries * copies)
        assert dup.per_year == base.per_year
        assert dup.macro == base.macro


# ---------------------------------------------------------------------------
# gap_curve

class ExpertStub:
    """Right on its own year's queries, wrong elsewhere."""

    def __init__(self, year):
        self.year = year

    def predict(self, text, year, top_n=1):
        return [(f"team{self.year}", -1.0)]


class TestGapCurve:
    def make_inputs(self, years=(2010, 2011, 2012), n=5):
        experts = {y: ExpertStub(y) for y in years}
        test_sets = {
            y: [make_query(f"S{i}", y, [f"team{y}"]) for i in range(n)] for y in years
        }
        return experts, test_sets

    def test_gap_coverage(self):
        experts, test_sets = self.make_inputs()
        curve = gap_curve(experts, test_sets, n_resamples=50)
        assert sorted(curve.points) == [-2, -1, 0, 1, 2]

    def test_diagonal_is_perfect_and_off_diagonal_zero(self):
        experts, test_sets = self.make_inputs()
        curve = gap_curve(experts, test_sets, n_resamples=50)
        assert curve.points[0].mean_f1 == 1.0
        assert curve.points[0].count == 3
        for gap in (-2, -1, 1, 2):
            assert curve.points[gap].mean_f1 == 0.0

    def test_pair_counts(self):
        experts, test_sets = self.make_inputs(years=(2010, 2011, 2012, 2013))
        curve = gap_curve(experts, test_sets, n_resamples=50)
        assert curve.points[0].count == 4
        assert curve.points[1].count == 3
        assert curve.points[-3].count == 1

    def test_mean_matches_brute_force(self):
        experts, test_sets = self.make_inputs()
        # make one expert partially right off-diagonal
        class Half(ExpertStub):
            def predict(self, text, year, top_n=1):
                if text.startswith("S0") or text.startswith("S1"):
                    return [(f"team{year}", -1.0)]
                return [("zzz", -1.0)]

        experts[2010] = Half(2010)
        curve = gap_curve(experts, test_sets, n_resamples=50)
        expected = {}
        for e_year, model in experts.items():
            for t_year, queries in test_sets.items():
                scores = [
                    max_f1(model.predict(q.text, q.year, 1)[0][0], q.answers)
                    for q in queries
                ]
                expected.setdefault(t_year - e_year, []).append(sum(scores) / len(scores))
        for gap, means in expected.items():
            assert abs(curve.points[gap].mean_f1 - sum(means) / len(means)) <= 1e-12

    def test_ci_matches_seeded_bootstrap(self):
        experts, test_sets = self.make_inputs(years=(2010, 2011, 2012, 2013))
        curve = gap_curve(experts, test_sets, n_resamples=200, seed=7)
        means = [1.0, 1.0, 1.0, 1.0]
        lo, hi = bootstrap_ci(means, n_resamples=200, seed=7)
        assert (curve.points[0].ci_low, curve.points[0].ci_high) == (lo, hi)

    def test_missing_test_year_rejected(self):
        experts, test_sets = self.make_inputs()
        del test_sets[2011]
        with pytest.raises(EvalError, match="2011"):
            gap_curve(experts, test_sets)

    def test_single_expert_rejected(self):
        experts, test_sets = self.make_inputs(years=(2010,))
        with pytest.raises(EvalError, match="2 expert"):
            gap_curve(experts, test_sets)

    def test_empty_test_set_rejected(self):
        experts, test_sets = self.make_inputs()
        test_sets[2012] = []
        with pytest.raises(EvalError, match="empty test set"):
            gap_curve(experts, test_sets)


# ---------------------------------------------------------------------------
# duration buckets

class TestDurationBuckets:
    def test_groups_and_cap(self):
        queries = [
            make_query("A", 2010, ["x"], duration=1),
            make_query("B", 2010, ["x"], duration=1),
            make_query("C", 2010, ["x"], duration=4),
            make_query("D", 2010, ["x"], duration=9),
            make_query("E", 2010, ["x"], duration=11),
        ]
        per_query = [(q.id, f1) for q, f1 in zip(queries, [1.0, 0.0, 0.5, 1.0, 0.0])]
        result = F1Result(per_query, {2010: 0.5}, 0.5, {})
        buckets = duration_buckets(result, queries, cap=9, n_resamples=50)
        assert set(buckets) == {"1", "4", ">=9"}
        assert buckets["1"]["mean_f1"] == 0.5
        assert buckets["1"]["count"] == 2
        assert buckets["4"]["mean_f1"] == 0.5
        assert buckets[">=9"]["count"] == 2
        assert buckets[">=9"]["mean_f1"] == 0.5

    def test_lower_cap_pools_more(self):
        queries = [make_query(f"Q{d}", 2010, ["x"], duration=d) for d in (1, 5, 8)]
        per_query = [(q.id, 1.0) for q in queries]
        result = F1Result(per_query, {2010: 1.0}, 1.0, {})
        buckets = duration_buckets(result, queries, cap=5, n_resamples=50)
        assert set(buckets) == {"1", ">=5"}
        assert buckets[">=5"]["count"] == 2

    def test_matches_brute_force_grouping(self):
        world = make_drift_world(seed=5, n_subjects=30, examples_per_year=3)
        model = train(sample_stream(world.corpus, seed=1), regime="uniform", steps=8000)
        queries = world.queries[:300]
        result = evaluate_f1(model, queries)
        buckets = duration_buckets(result, queries, cap=9, n_resamples=50)

        scores = dict(result.per_query)
        expected: dict[str, list[float]] = {}
        for q in queries:
            if q.id not in scores:
                continue
            label = str(q.duration_years) if q.duration_years < 9 else ">=9"
            expected.setdefault(label, []).append(scores[q.id])
        assert set(buckets) == set(expected)
        for label, values in expected.items():
            assert abs(buckets[label]["mean_f1"] - sum(values) / len(values)) <= 1e-12
            assert buckets[label]["count"] == len(values)


# ---------------------------------------------------------------------------
# multiplicity partition and future log-likelihood

class TestPartitionByMultiplicity:
    def test_partition_from_reference(self):
        reference = [
            make_query("A", 2010, ["x"]),
            make_query("A", 2011, ["y"]),
            make_query("B", 2010, ["z"]),
            make_query("B", 2011, ["z"]),
        ]
        anchor_only = [reference[0], reference[2]]
        parts = partition_by_multiplicity(anchor_only, reference)
        assert [q.subject_id for q in parts["multiple"]] == ["A"]
        assert [q.subject_id for q in parts["single"]] == ["B"]

    def test_multi_answer_single_query_counts_as_multiple(self):
        q = make_query("A", 2010, ["x", "y"])
        parts = partition_by_multiplicity([q])
        assert parts["multiple"] == [q]

    def test_defaults_to_own_answers_without_reference(self):
        queries = [make_query("A", 2010, ["x"]), make_query("B", 2010, ["y", "z"])]
        parts = partition_by_multiplicity(queries)
        assert len(parts["single"]) == 1
        assert len(parts["multiple"]) == 1


class TestFutureLoglik:
    def test_year_blind_model_is_flat(self):
        world = make_drift_world(seed=2, n_subjects=30, examples_per_year=3)
        model = train(sample_stream(world.corpus, seed=0), regime="uniform", steps=8000)
        anchor = [q for q in world.queries if q.year == 2015][:40]
        curve = future_loglik_curve(model, anchor, 2015, 3, reference=world.queries)
        for series in curve.values():
            for _, delta in series:
                assert delta == 0.0

    def test_years_and_groups(self):
        world = make_drift_world(seed=2, n_subjects=30, examples_per_year=3)
        model = train(sample_stream(world.corpus, seed=0), regime="temporal", steps=8000)
        anchor = [q for q in world.queries if q.year == 2014][:60]
        curve = future_loglik_curve(model, anchor, 2014, 4, reference=world.queries)
        assert set(curve) == {"single", "multiple"}
        for series in curve.values():
            assert [year for year, _ in series] == [2015, 2016, 2017, 2018]

    def test_matches_brute_force(self):
        world = make_drift_world(seed=4, n_subjects=24, examples_per_year=3)
        model = train(sample_stream(world.corpus, seed=0), regime="temporal", steps=8000)
        anchor = [q for q in world.queries if q.year == 2013][:30]
        curve = future_loglik_curve(model, anchor, 2013, 2, reference=world.queries)

        parts = partition_by_multiplicity(anchor, world.queries)
        for group, queries in parts.items():
            if not queries:
                assert curve[group] == []
                continue
            for idx, year in enumerate((2014, 2015)):
                deltas = []
                for q in queries:
                    answer = model.predict(q.text, q.year, top_n=1)[0][0]
                    base = model.score(q.text, 2013, answer).log_prob
                    deltas.append(model.score(q.text, year, answer).log_prob - base)
                expected = sum(deltas) / len(deltas)
                assert abs(curve[group][idx][1] - expected) <= 1e-12

    def test_rewrite_prefixes_input(self):
        calls = []

        class Spy:
            def predict(self, text, year, top_n=1):
                return [("alpha", -1.0)]

            def score(self, text, year, target):
                calls.append((text, year))
                return SpanScore(log_prob=-1.0, target_len=1)

        q = make_query("A", 2015, ["alpha"])
        future_loglik_curve(Spy(), [q], 2015, 1, rewrite_in_year=True)
        assert (f"In 2015, {q.text}", 2015) in calls
        assert (f"In 2016, {q.text}", 2016) in calls

    def test_bad_horizon_rejected(self):
        with pytest.raises(EvalError):
            future_loglik_curve(FixedModel({}), [make_query("A", 2010, ["x"])], 2010, 0)


# ---------------------------------------------------------------------------
# entropy

class TestClosedSetEntropy:
    def test_untrained_prior_is_uniform_maximum(self):
        world = make_drift_world(seed=1, n_subjects=20, examples_per_year=2)
        model = train(sample_stream(world.corpus, seed=0), regime="temporal", steps=4000)
        candidates = ["cand-a", "cand-b", "cand-c", "cand-d"]
        series = closed_set_entropy(
            model, f"nothing ever seen {MASK}.", candidates, [2012, 2016]
        )
        for _, h in series:
            assert abs(h - math.log(4)) <= 1e-12

    def test_accepts_query_objects(self):
        world = make_drift_world(seed=1, n_subjects=20, examples_per_year=2)
        model = train(sample_stream(world.corpus, seed=0), regime="uniform", steps=4000)
        q = world.queries[0]
        series = closed_set_entropy(model, q, list(world.team_pool), [q.year])
        assert len(series) == 1
        assert series[0][1] >= 0.0

    def test_empty_candidates_rejected(self):
        with pytest.raises(EvalError):
            closed_set_entropy(FixedModel({}), "x", [], [2010])

    def test_entropy_curve_means(self):
        world = make_drift_world(seed=1, n_subjects=20, examples_per_year=2)
        model = train(sample_stream(world.corpus, seed=0), regime="temporal", steps=4000)
        probes = {
            "frequent": world.probe_texts("frequent")[:3],
            "never": world.probe_texts("never")[:3],
        }
        years = [2012, 2013]
        curve = entropy_curve(model, probes, list(world.team_pool), years)
        assert set(curve.series) == {"frequent", "never"}
        for category, series in curve.series.items():
            for idx, year in enumerate(years):
                per_probe = [
                    closed_set_entropy(model, p, list(world.team_pool), [year])[0][1]
                    for p in probes[category]
                ]
                assert abs(series[idx][1] - sum(per_probe) / len(per_probe)) <= 1e-12

    def test_entropy_curve_rejects_empty_category(self):
        with pytest.raises(EvalError, match="no probes"):
            entropy_curve(FixedModel({}), {"x": []}, ["a"], [2010])


# ---------------------------------------------------------------------------
# corpus perplexity plumbing

def test_corpus_perplexity_uses_scores():
    class Flat:
        def score(self, text, year, target):
            return SpanScore(log_prob=math.log(0.5), target_len=1)

    class Ex:
        def __init__(self):
            self.input = f"a {MASK}."
            self.target = "b"
            self.year = 2010

    assert abs(corpus_perplexity(Flat(), [Ex(), Ex()]) - 2.0) <= 1e-12


# ---------------------------------------------------------------------------
# report files

class TestWriteReport:
    def build_sections(self):
        f1 = F1Result(
            [("q1", 1.0), ("q2", 0.5)],
            {2010: 1.0, 2011: 0.5},
            0.75,
            {"seen": 0.75},
            [("q3", "boom")],
        )
        gap = gap_curve(
            {y: ExpertStub(y) for y in (2010, 2011)},
            {
                y: [make_query("S", y, [f"team{y}"])] for y in (2010, 2011)
            },
            n_resamples=20,
        )
        durations = {"1": {"mean_f1": 0.75, "count": 2, "ci_low": 0.5, "ci_high": 1.0}}
        future = {"single": [(2012, -0.1)], "multiple": [(2012, -0.4)]}
        entropies = EntropyCurve({"frequent": [(2010, 1.5)], "never": [(2010, 0.2)]})
        return f1, gap, durations, future, entropies

    def test_files_written(self, tmp_path):
        f1, gap, durations, future, entropies = self.build_sections()
        report = write_report(
            tmp_path, f1=f1, gap=gap, durations=durations, future=future, entropies=entropies
        )
        for name in (
            "report.json",
            "f1_by_year.csv",
            "gap_curve.csv",
            "duration_f1.csv",
            "future_loglik.csv",
            "entropy_curve.csv",
        ):
            assert (tmp_path / name).exists(), name
        loaded = json.loads((tmp_path / "report.json").read_text())
        assert loaded == json.loads(json.dumps(report))
        assert loaded["f1"]["macro"] == 0.75
        assert loaded["f1"]["n_failures"] == 1

    def test_csv_contents(self, tmp_path):
        f1, gap, durations, future, entropies = self.build_sections()
        write_report(tmp_path, f1=f1, gap=gap, durations=durations, future=future,
                     entropies=entropies)
        with (tmp_path / "f1_by_year.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["year", "mean_f1"]
        assert rows[1] == ["2010", "1.0"]
        with (tmp_path / "gap_curve.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["gap", "mean_f1", "count", "ci_low", "ci_high"]
        assert [r[0] for r in rows[1:]] == ["-1", "0", "1"]
        with (tmp_path / "future_loglik.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert rows[1] == ["multiple", "2012", "-0.4"]

    def test_deterministic_bytes(self, tmp_path):
        f1, gap, durations, future, entropies = self.build_sections()
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            write_report(out, f1=f1, gap=gap, durations=durations, future=future,
                         entropies=entropies)
        for name in ("report.json", "gap_curve.csv", "entropy_curve.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_sections_optional(self, tmp_path):
        report = write_report(tmp_path, extra={"note": "empty run"})
        assert report == {"note": "empty run"}
        assert (tmp_path / "report.json").exists()
        assert not (tmp_path / "f1_by_year.csv").exists()

    def test_duration_bucket_ordering_in_csv(self, tmp_path):
        durations = {
            ">=9": {"mean_f1": 0.1, "count": 1, "ci_low": 0.1, "ci_high": 0.1},
            "2": {"mean_f1": 0.2, "count": 1, "ci_low": 0.2, "ci_high": 0.2},
            "10": {"mean_f1": 0.3, "count": 1, "ci_low": 0.3, "ci_high": 0.3},
            "1": {"mean_f1": 0.4, "count": 1, "ci_low": 0.4, "ci_high": 0.4},
        }
        write_report(tmp_path, durations=durations)
        with (tmp_path / "duration_f1.csv").open() as handle:
            rows = list(csv.reader(handle))
        assert [r[0] for r in rows[1:]] == ["1", "2", ">=9", "10"]
