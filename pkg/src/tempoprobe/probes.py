"""Cloze probe construction from a temporal fact store.

Builds year-stamped masked queries ("Cristiano Ronaldo plays for _X_.")
for subject/relation pairs whose answer changes over time, expands one
query per year of validity, merges overlapping answers, and produces
subject-disjoint train/validation/test splits.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from tempoprobe.facts import FactStore, TemporalFact, YearInterval

# The masked-span placeholder used across probes, corpora, and diagnostics.
MASK = "_X_"


class ProbeError(ValueError):
    """Raised for malformed templates or probe-construction failures."""


@dataclass(frozen=True)
class RelationTemplate:
    """A cloze pattern for one relation, e.g. "<subject> plays for <object>."."""

    relation_id: str
    pattern: str

    def __post_init__(self) -> None:
        if not self.relation_id:
            raise ProbeError("relation_id must be non-empty")
        for placeholder in ("<subject>", "<object>"):
            if self.pattern.count(placeholder) != 1:
                raise ProbeError(
                    f"template {self.relation_id}: pattern must contain {placeholder} exactly once"
                )

    def render(self, subject_name: str) -> str:
        """Fill in the subject and replace the object slot with the mask."""
        text = self.pattern.replace("<subject>", subject_name)
        return text.replace("<object>", MASK)


@dataclass(frozen=True)
class ClozeQuery:
    """A single year-stamped probe with its full answer set."""

    id: str
    year: int
    text: str
    answers: tuple[str, ...]
    relation_id: str
    subject_id: str
    duration_years: int

    def __post_init__(self) -> None:
        if self.text.count(MASK) != 1:
            raise ProbeError(f"query {self.id}: text must contain {MASK} exactly once")
        if not self.answers:
            raise ProbeError(f"query {self.id}: answers must be non-empty")
        if len(set(self.answers)) != len(self.answers):
            raise ProbeError(f"query {self.id}: duplicate answers")
        if self.duration_years < 1:
            raise ProbeError(f"query {self.id}: duration_years must be positive")


@dataclass
class DatasetSplit:
    train: list[ClozeQuery]
    validation: list[ClozeQuery]
    test: list[ClozeQuery]
    fractions: tuple[float, float, float]

    def parts(self) -> dict[str, list[ClozeQuery]]:
        return {"train": self.train, "validation": self.validation, "test": self.test}


def load_templates(path: str | Path) -> dict[str, RelationTemplate]:
    """Load a relation_id<TAB>pattern file into a template map."""
    templates: dict[str, RelationTemplate] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ProbeError(f"row {lineno}: expected relation_id<TAB>pattern")
        relation_id, pattern = parts
        try:
            template = RelationTemplate(relation_id, pattern)
        except ProbeError as exc:
            raise ProbeError(f"row {lineno}: {exc}") from None
        if relation_id in templates:
            raise ProbeError(f"row {lineno}: duplicate relation {relation_id}")
        templates[relation_id] = template
    if not templates:
        raise ProbeError("template file contains no templates")
    return templates


def default_templates() -> dict[str, RelationTemplate]:
    """The nine relation templates shipped with the package."""
    source = resources.files("tempoprobe").joinpath("data/relation_templates.tsv")
    with resources.as_file(source) as path:
        return load_templates(path)


def query_id(subject_id: str, relation_id: str, year: int) -> str:
    """Stable id for a (subject, relation, year) probe."""
    key = f"{subject_id}|{relation_id}|{year}".encode("utf-8")
    return hashlib.sha1(key).hexdigest()[:16]


def select_probe_pairs(store: FactStore) -> set[tuple[str, str]]:
    """Pairs whose answer set changes: at least two distinct objects whose
    validity intervals (resolved against the store period) differ."""
    pairs = set()
    for (subject_id, relation_id), facts in store.index.items():
        spans = {
            (fact.object_id, fact.interval.resolved_bounds(store.period)) for fact in facts
        }
        for object_a, bounds_a in spans:
            for object_b, bounds_b in spans:
                if object_a != object_b and bounds_a != bounds_b:
                    pairs.add((subject_id, relation_id))
                    break
            else:
                continue
            break
    return pairs


def select_top_subjects(store: FactStore, relation_id: str, k: int) -> list[str]:
    """Subjects ranked by fact count for the relation; ties break on id."""
    if k < 1:
        raise ProbeError(f"k must be >= 1, got {k}")
    counts: Counter[str] = Counter()
    for fact in store.facts:
        if fact.relation_id == relation_id:
            counts[fact.subject_id] += 1
    ranked = sorted(counts, key=lambda s: (-counts[s], s))
    return ranked[:k]


def _active_facts(facts: Sequence[TemporalFact], period: YearInterval, year: int):
    for fact in facts:
        start, end = fact.interval.resolved_bounds(period)
        if start <= year <= end:
            yield fact, (start, end)


def expand_queries(
    store: FactStore,
    templates: Mapping[str, RelationTemplate],
    pairs: Iterable[tuple[str, str]],
) -> list[ClozeQuery]:
    """One query per (pair, year of validity), answers merged across overlaps.

    Answers are ordered by interval start year then object name; the first
    answer's interval (clamped to the store period) defines duration_years.
    """
    period = store.period
    queries: list[ClozeQuery] = []
    for subject_id, relation_id in sorted(pairs):
        template = templates.get(relation_id)
        if template is None:
            raise ProbeError(f"no template for relation {relation_id}")
        facts = store.lookup(subject_id, relation_id)
        if not facts:
            continue
        subject_name = facts[0].subject_name
        years: set[int] = set()
        for fact in facts:
            start, end = fact.interval.resolved_bounds(period)
            years.update(range(max(start, period.start), min(end, period.end) + 1))
        text = template.render(subject_name)
        for year in sorted(years):
            active = sorted(
                _active_facts(facts, period, year),
                key=lambda item: (item[1][0], item[0].object_name),
            )
            answers: list[str] = []
            for fact, _bounds in active:
                if fact.object_name not in answers:
                    answers.append(fact.object_name)
            first_start, first_end = active[0][1]
            duration = min(first_end, period.end) - max(first_start, period.start) + 1
            queries.append(
                ClozeQuery(
                    id=query_id(subject_id, relation_id, year),
                    year=year,
                    text=text,
                    answers=tuple(answers),
                    relation_id=relation_id,
                    subject_id=subject_id,
                    duration_years=duration,
                )
            )
    return queries


def split_by_subject(
    queries: Sequence[ClozeQuery],
    fractions: tuple[float, float, float] = (0.2, 0.1, 0.7),
    seed: int = 0,
) -> DatasetSplit:
    """Partition queries into subject-disjoint train/validation/test sets.

    Subjects are shuffled with the seed and assigned greedily to the part
    whose share of the total query mass is furthest below target.  Parts
    with a positive fraction are guaranteed non-empty when possible.
    """
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ProbeError(f"fractions must sum to 1, got {fractions}")
    if any(fraction < 0 for fraction in fractions):
        raise ProbeError(f"fractions must be non-negative, got {fractions}")
    subjects = sorted({query.subject_id for query in queries})
    if len(subjects) < 3:
        raise ProbeError(f"need at least 3 subjects to split, got {len(subjects)}")

    query_mass = Counter(query.subject_id for query in queries)
    total = len(queries)
    rng = random.Random(seed)
    rng.shuffle(subjects)

    assignment: dict[str, int] = {}
    filled = [0, 0, 0]
    members: list[list[str]] = [[], [], []]
    for subject in subjects:
        deficits = [fractions[i] * total - filled[i] for i in range(3)]
        part = max(range(3), key=lambda i: deficits[i])
        assignment[subject] = part
        filled[part] += query_mass[subject]
        members[part].append(subject)

    # a tiny dataset can starve a positive-fraction part; steal the lightest
    # subject from the most populous part
    for part in range(3):
        if fractions[part] > 0 and not members[part]:
            donor = max(range(3), key=lambda i: len(members[i]))
            if len(members[donor]) < 2:
                continue
            mover = min(members[donor], key=lambda s: (query_mass[s], s))
            members[donor].remove(mover)
            members[part].append(mover)
            assignment[mover] = part

    parts: tuple[list[ClozeQuery], list[ClozeQuery], list[ClozeQuery]] = ([], [], [])
    for query in queries:
        parts[assignment[query.subject_id]].append(query)
    return DatasetSplit(parts[0], parts[1], parts[2], tuple(fractions))


def build_probe_dataset(
    store: FactStore,
    templates: Mapping[str, RelationTemplate] | None = None,
    top_k: int | None = 1000,
    fractions: tuple[float, float, float] = (0.2, 0.1, 0.7),
    seed: int = 0,
) -> tuple[list[ClozeQuery], DatasetSplit]:
    """Full probe build: select changing pairs, expand per year, split.

    Only relations with a template participate.  top_k restricts each
    relation to its most frequent subjects (None disables the cap).
    """
    if templates is None:
        templates = default_templates()
    pairs = {
        (subject_id, relation_id)
        for subject_id, relation_id in select_probe_pairs(store)
        if relation_id in templates
    }
    if top_k is not None:
        allowed: set[tuple[str, str]] = set()
        for relation_id in {relation_id for _, relation_id in pairs}:
            for subject_id in select_top_subjects(store, relation_id, top_k):
                allowed.add((subject_id, relation_id))
        pairs &= allowed
    queries = expand_queries(store, templates, pairs)
    split = split_by_subject(queries, fractions, seed)
    return queries, split


def save_queries(queries: Iterable[ClozeQuery], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for query in queries:
            record = {
                "id": query.id,
                "year": query.year,
                "query": query.text,
                "answer": list(query.answers),
                "relation": query.relation_id,
                "subject_id": query.subject_id,
                "duration": query.duration_years,
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_queries(path: str | Path) -> list[ClozeQuery]:
    queries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProbeError(f"row {lineno}: invalid JSON ({exc.msg})") from None
        try:
            queries.append(
                ClozeQuery(
                    id=str(record["id"]),
                    year=int(record["year"]),
                    text=str(record["query"]),
                    answers=tuple(str(a) for a in record["answer"]),
                    relation_id=str(record["relation"]),
                    subject_id=str(record["subject_id"]),
                    duration_years=int(record["duration"]),
                )
            )
        except KeyError as exc:
            raise ProbeError(f"row {lineno}: missing key {exc}") from None
    return queries


_PUBLISHED_MASKS = ("<extra_id_0>", "__X__")


def load_published_queries(path: str | Path) -> list[ClozeQuery]:
    """Load an externally released probe file (the public dataset shape).

    Records carry `query`, `answer` (list of {name, ...}), `date`, `id`,
    `relation`; the mask literal is normalized and missing fields get
    conservative defaults (duration 1, subject from the id prefix).
    """
    queries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProbeError(f"row {lineno}: invalid JSON ({exc.msg})") from None
        text = str(record.get("query", ""))
        for alias in _PUBLISHED_MASKS:
            text = text.replace(alias, MASK)
        raw_answers = record.get("answer", [])
        answers = []
        for entry in raw_answers:
            name = entry.get("name") if isinstance(entry, dict) else str(entry)
            if name and name not in answers:
                answers.append(name)
        date = str(record.get("date", ""))
        year_match = re.search(r"\d{4}", date)
        if year_match is None:
            raise ProbeError(f"row {lineno}: no 4-digit year in date {date!r}")
        raw_id = str(record.get("id", f"row{lineno}"))
        subject_id = raw_id.split("_")[0] if "_" in raw_id else raw_id
        try:
            queries.append(
                ClozeQuery(
                    id=raw_id,
                    year=int(year_match.group()),
                    text=text,
                    answers=tuple(answers),
                    relation_id=str(record.get("relation", "")),
                    subject_id=subject_id,
                    duration_years=int(record.get("duration", 1)),
                )
            )
        except ProbeError as exc:
            raise ProbeError(f"row {lineno}: {exc}") from None
    return queries
