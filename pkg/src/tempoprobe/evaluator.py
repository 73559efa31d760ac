"""Evaluation aggregates: F1 by year, gap curves, duration buckets,
future log-likelihood decay, closed-set entropy, and report files.

Models are anything exposing predict/score/candidate_distribution in the
count-model shape; aggregation itself is model-agnostic.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from tempoprobe.metrics import bootstrap_ci, entropy, max_f1, mlm_perplexity
from tempoprobe.probes import ClozeQuery


class EvalError(ValueError):
    """Raised for unusable evaluation inputs."""


@dataclass
class F1Result:
    per_query: list[tuple[str, float]]
    per_year: dict[int, float]
    macro: float
    partitions: dict[str, float]
    failures: list[tuple[str, str]] = field(default_factory=list)


@dataclass(frozen=True)
class GapPoint:
    gap: int
    mean_f1: float
    count: int
    ci_low: float
    ci_high: float


@dataclass
class GapCurve:
    points: dict[int, GapPoint]


@dataclass
class EntropyCurve:
    series: dict[str, list[tuple[int, float]]]


def _top1(model, query: ClozeQuery) -> str:
    ranked = model.predict(query.text, query.year, top_n=1)
    if not ranked:
        raise EvalError("model returned an empty ranking")
    return ranked[0][0]


def evaluate_f1(model, queries: Sequence[ClozeQuery], future_from: int = 2019) -> F1Result:
    """Top-1 max-F1 per query, averaged per year, macro over years.

    Years below `future_from` aggregate into a "seen" partition, the rest
    into "future".  Per-query model failures are recorded, not fatal.
    """
    if not queries:
        raise EvalError("no queries to evaluate")
    per_query: list[tuple[str, float]] = []
    year_scores: dict[int, list[float]] = {}
    failures: list[tuple[str, str]] = []
    for query in queries:
        try:
            prediction = _top1(model, query)
        except Exception as exc:
            failures.append((query.id, str(exc)))
            continue
        f1 = max_f1(prediction, query.answers)
        per_query.append((query.id, f1))
        year_scores.setdefault(query.year, []).append(f1)
    if not year_scores:
        raise EvalError("every query failed; nothing to aggregate")
    per_year = {year: sum(scores) / len(scores) for year, scores in sorted(year_scores.items())}
    macro = sum(per_year.values()) / len(per_year)
    partitions = {}
    seen = [f1 for year, f1 in per_year.items() if year < future_from]
    future = [f1 for year, f1 in per_year.items() if year >= future_from]
    if seen:
        partitions["seen"] = sum(seen) / len(seen)
    if future:
        partitions["future"] = sum(future) / len(future)
    return F1Result(per_query, per_year, macro, partitions, failures)


def corpus_perplexity(model, examples) -> float:
    """Masked-LM perplexity of a model over masked examples."""
    scores = [model.score(ex.input, ex.year, ex.target) for ex in examples]
    return mlm_perplexity(scores)


def gap_curve(
    experts: Mapping[int, object],
    test_sets: Mapping[int, Sequence[ClozeQuery]],
    n_resamples: int = 1000,
    seed: int = 0,
) -> GapCurve:
    """Mean F1 of every (expert year, test year) pair, grouped by gap.

    The gap is test_year - expert_year; each gap's CI is a seeded
    percentile bootstrap over its pair means.
    """
    if len(experts) < 2:
        raise EvalError(f"need at least 2 expert years, got {len(experts)}")
    for year in experts:
        if year not in test_sets:
            raise EvalError(f"missing test set for year {year}")
    for year, queries in test_sets.items():
        if not queries:
            raise EvalError(f"empty test set for year {year}")

    pair_means: dict[int, list[float]] = {}
    for expert_year in sorted(experts):
        model = experts[expert_year]
        for test_year in sorted(test_sets):
            queries = test_sets[test_year]
            scores = [
                max_f1(_top1(model, query), query.answers) for query in queries
            ]
            mean = sum(scores) / len(scores)
            pair_means.setdefault(test_year - expert_year, []).append(mean)

    points = {}
    for gap, means in sorted(pair_means.items()):
        lo, hi = bootstrap_ci(means, n_resamples=n_resamples, seed=seed)
        points[gap] = GapPoint(gap, sum(means) / len(means), len(means), lo, hi)
    return GapCurve(points)


def duration_buckets(
    result: F1Result,
    queries: Sequence[ClozeQuery],
    cap: int = 9,
    n_resamples: int = 1000,
    seed: int = 0,
) -> dict[str, dict[str, float]]:
    """Mean F1 grouped by how many years the answer stayed valid.

    Durations of cap or more pool into one ">=cap" bucket.
    """
    durations = {query.id: query.duration_years for query in queries}
    grouped: dict[str, list[float]] = {}
    for query_id, f1 in result.per_query:
        duration = durations.get(query_id)
        if duration is None:
            continue
        label = str(duration) if duration < cap else f">={cap}"
        grouped.setdefault(label, []).append(f1)
    buckets = {}
    for label, scores in grouped.items():
        lo, hi = bootstrap_ci(scores, n_resamples=n_resamples, seed=seed)
        buckets[label] = {
            "mean_f1": sum(scores) / len(scores),
            "count": len(scores),
            "ci_low": lo,
            "ci_high": hi,
        }
    return buckets


def partition_by_multiplicity(
    queries: Sequence[ClozeQuery],
    reference: Sequence[ClozeQuery] | None = None,
) -> dict[str, list[ClozeQuery]]:
    """Split queries by whether their (subject, relation) pair ever has
    more than one distinct answer (judged over `reference` when given)."""
    basis = reference if reference is not None else queries
    answers_by_pair: dict[tuple[str, str], set[str]] = {}
    for query in basis:
        answers_by_pair.setdefault((query.subject_id, query.relation_id), set()).update(
            query.answers
        )
    parts: dict[str, list[ClozeQuery]] = {"single": [], "multiple": []}
    for query in queries:
        pair = (query.subject_id, query.relation_id)
        answers = answers_by_pair.get(pair, set(query.answers))
        parts["multiple" if len(answers) > 1 else "single"].append(query)
    return parts


def future_loglik_curve(
    model,
    queries_correct_at_anchor: Sequence[ClozeQuery],
    anchor_year: int,
    horizon_years: int,
    reference: Sequence[ClozeQuery] | None = None,
    rewrite_in_year: bool = False,
) -> dict[str, list[tuple[int, float]]]:
    """Mean change in log P(anchor answer) as the queried year advances.

    For each query the tracked answer is the model's top-1 at the anchor.
    rewrite_in_year prepends "In {year}," to the input instead of relying
    on the model's year conditioning (for year-blind models).
    """
    if horizon_years < 1:
        raise EvalError(f"horizon_years must be >= 1, got {horizon_years}")
    parts = partition_by_multiplicity(queries_correct_at_anchor, reference)
    curve: dict[str, list[tuple[int, float]]] = {}
    for group, queries in parts.items():
        if not queries:
            curve[group] = []
            continue
        anchored = []
        for query in queries:
            answer = _top1(model, query)
            text = f"In {anchor_year}, {query.text}" if rewrite_in_year else query.text
            base = model.score(text, anchor_year, answer).log_prob
            anchored.append((query, answer, base))
        series = []
        for year in range(anchor_year + 1, anchor_year + horizon_years + 1):
            deltas = []
            for query, answer, base in anchored:
                text = f"In {year}, {query.text}" if rewrite_in_year else query.text
                log_prob = model.score(text, year, answer).log_prob
                deltas.append(log_prob - base)
            series.append((year, sum(deltas) / len(deltas)))
        curve[group] = series
    return curve


def closed_set_entropy(
    model,
    probe,
    candidates: Sequence[str],
    years: Iterable[int],
) -> list[tuple[int, float]]:
    """Entropy (nats) of the model's candidate distribution per year."""
    if not candidates:
        raise EvalError("candidates must be non-empty")
    text = probe.text if hasattr(probe, "text") else str(probe)
    series = []
    for year in years:
        dist = model.candidate_distribution(text, year, candidates)
        series.append((year, entropy(dist)))
    return series


def entropy_curve(
    model,
    probes_by_category: Mapping[str, Sequence],
    candidates: Sequence[str],
    years: Iterable[int],
) -> EntropyCurve:
    """Mean closed-set entropy per probe category per year."""
    years = list(years)
    series: dict[str, list[tuple[int, float]]] = {}
    for category, probes in probes_by_category.items():
        if not probes:
            raise EvalError(f"category {category!r} has no probes")
        sums = {year: 0.0 for year in years}
        for probe in probes:
            for year, h in closed_set_entropy(model, probe, candidates, years):
                sums[year] += h
        series[category] = [(year, sums[year] / len(probes)) for year in years]
    return EntropyCurve(series)


# ---------------------------------------------------------------------------
# report files

def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def write_report(
    out_dir: str | Path,
    f1: F1Result | None = None,
    gap: GapCurve | None = None,
    durations: Mapping[str, Mapping[str, float]] | None = None,
    future: Mapping[str, list[tuple[int, float]]] | None = None,
    entropies: EntropyCurve | None = None,
    extra: Mapping | None = None,
) -> dict:
    """Write report.json plus one plot-ready CSV per supplied section.

    Returns the assembled report dictionary.  Output is deterministic:
    sorted keys, no timestamps.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report: dict = {}

    if f1 is not None:
        report["f1"] = {
            "macro": f1.macro,
            "per_year": {str(year): value for year, value in sorted(f1.per_year.items())},
            "partitions": dict(sorted(f1.partitions.items())),
            "n_queries": len(f1.per_query),
            "n_failures": len(f1.failures),
        }
        _write_csv(
            out_dir / "f1_by_year.csv",
            ["year", "mean_f1"],
            [[year, value] for year, value in sorted(f1.per_year.items())],
        )

    if gap is not None:
        report["gap_curve"] = {
            str(point.gap): {
                "mean_f1": point.mean_f1,
                "count": point.count,
                "ci_low": point.ci_low,
                "ci_high": point.ci_high,
            }
            for point in gap.points.values()
        }
        _write_csv(
            out_dir / "gap_curve.csv",
            ["gap", "mean_f1", "count", "ci_low", "ci_high"],
            [
                [point.gap, point.mean_f1, point.count, point.ci_low, point.ci_high]
                for _, point in sorted(gap.points.items())
            ],
        )

    if durations is not None:
        report["duration_f1"] = {label: dict(stats) for label, stats in durations.items()}

        def bucket_order(label: str) -> int:
            return int(label.lstrip(">=")) if label else 0

        _write_csv(
            out_dir / "duration_f1.csv",
            ["bucket", "mean_f1", "count", "ci_low", "ci_high"],
            [
                [label, stats["mean_f1"], stats["count"], stats["ci_low"], stats["ci_high"]]
                for label, stats in sorted(durations.items(), key=lambda kv: bucket_order(kv[0]))
            ],
        )

    if future is not None:
        report["future_loglik"] = {
            group: [[year, delta] for year, delta in series] for group, series in future.items()
        }
        rows = []
        for group in sorted(future):
            for year, delta in future[group]:
                rows.append([group, year, delta])
        _write_csv(out_dir / "future_loglik.csv", ["group", "year", "delta_loglik"], rows)

    if entropies is not None:
        report["entropy"] = {
            category: [[year, h] for year, h in series]
            for category, series in entropies.series.items()
        }
        rows = []
        for category in sorted(entropies.series):
            for year, h in entropies.series[category]:
                rows.append([category, year, h])
        _write_csv(out_dir / "entropy_curve.csv", ["category", "year", "mean_entropy"], rows)

    if extra:
        report.update(extra)

    (out_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return report
