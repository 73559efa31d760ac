"""Seeded synthetic worlds with controllable answer drift.

Generates a roster of subjects whose team membership changes every 1-5
years (plus never-changing controls), the matching fact store, year-
stamped probe queries, and a masked-sentence corpus covering the whole
period.  Used to reproduce averaging, forgetting, calibration, and
adaptation phenomena at desk scale.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from tempoprobe.corpus import MaskedExample
from tempoprobe.facts import FactStore, TemporalFact, YearInterval
from tempoprobe.probes import MASK, ClozeQuery, RelationTemplate, expand_queries

TEAM_POOL = (
    "Alpha", "Bravo", "Charlie", "Delta", "Echo", "Foxtrot", "Golf", "Hotel",
    "India", "Juliett", "Kilo", "Lima", "Mike", "Nimbus", "Oscar", "Papa",
    "Quebec", "Romeo", "Sierra", "Tango", "Umbra", "Victor", "Whiskey",
    "Xenon", "Yankee", "Zulu", "Aurora", "Borealis", "Cascade", "Dynamo",
)

CATEGORIES = ("frequent", "rare", "never")

_TEMPLATE = RelationTemplate("P54", "<subject> plays for <object>.")


@dataclass
class DriftWorld:
    store: FactStore
    queries: list[ClozeQuery]
    corpus: list[MaskedExample]
    categories: dict[str, str]  # subject_id -> category
    change_period: dict[str, int]  # subject_id -> years between changes (0 = never)
    team_pool: tuple[str, ...]
    period: YearInterval
    seed: int

    def subjects(self, category: str | None = None) -> list[str]:
        if category is None:
            return sorted(self.categories)
        if category not in CATEGORIES:
            raise ValueError(f"unknown category {category!r}")
        return sorted(s for s, c in self.categories.items() if c == category)

    def probe_texts(self, category: str) -> list[str]:
        """One rendered cloze text per subject in the category."""
        wanted = set(self.subjects(category))
        seen: dict[str, str] = {}
        for query in self.queries:
            if query.subject_id in wanted and query.subject_id not in seen:
                seen[query.subject_id] = query.text
        return [seen[s] for s in sorted(seen)]

    def queries_for_years(self, years) -> list[ClozeQuery]:
        wanted = set(years)
        return [query for query in self.queries if query.year in wanted]


def _category_for_index(index: int) -> str:
    slot = index % 10
    if slot < 4:
        return "frequent"
    if slot < 7:
        return "rare"
    return "never"


def _period_for(category: str, index: int) -> int:
    if category == "never":
        return 0
    if category == "frequent":
        return 1 + (index // 10) % 2  # alternates 1, 2
    return 3 + (index // 10) % 3  # cycles 3, 4, 5


def _pick_team(rng: random.Random, pool: tuple[str, ...], previous: str | None) -> str:
    team = pool[rng.randrange(len(pool))]
    while team == previous:
        team = pool[rng.randrange(len(pool))]
    return team


def make_drift_world(
    seed: int = 0,
    n_subjects: int = 200,
    period: YearInterval = YearInterval(2010, 2020),
    examples_per_year: int = 10,
) -> DriftWorld:
    """Build the drift fixture: 40% frequent changers (period 1-2 years),
    30% rare changers (period 3-5), 30% never-changing controls.

    Change boundaries carry a one-year overlap (the old and new team are
    both valid in the handover year), like real transfer records.
    """
    if period.start is None or period.end is None:
        raise ValueError("period must be bounded")
    rng = random.Random(seed)
    facts: list[TemporalFact] = []
    categories: dict[str, str] = {}
    change_period: dict[str, int] = {}

    for index in range(n_subjects):
        subject_id = f"S{index:03d}"
        subject_name = f"Player {index:03d}"
        category = _category_for_index(index)
        categories[subject_id] = category
        p = _period_for(category, index)
        change_period[subject_id] = p

        if p == 0:
            team = _pick_team(rng, TEAM_POOL, None)
            facts.append(
                TemporalFact(subject_id, subject_name, "P54", f"T-{team}", team,
                             YearInterval(period.start, period.end))
            )
            continue

        phase = rng.randrange(p)
        anchors = [period.start]
        year = period.start + phase
        while year <= period.end:
            if year != period.start:
                anchors.append(year)
            year += p
        team = None
        for i, anchor in enumerate(anchors):
            team = _pick_team(rng, TEAM_POOL, team)
            end = anchors[i + 1] if i + 1 < len(anchors) else period.end
            facts.append(
                TemporalFact(subject_id, subject_name, "P54", f"T-{team}", team,
                             YearInterval(anchor, end))
            )

    store = FactStore(tuple(facts), period)
    pairs = sorted({(fact.subject_id, "P54") for fact in store.facts})
    queries = expand_queries(store, {"P54": _TEMPLATE}, pairs)

    corpus: list[MaskedExample] = []
    for subject_id, _relation in pairs:
        subject_facts = store.lookup(subject_id, "P54")
        subject_name = subject_facts[0].subject_name
        for year in range(period.start, period.end + 1):
            active = []
            for fact in subject_facts:
                start, end = fact.interval.resolved_bounds(period)
                if start <= year <= end and fact.object_name not in active:
                    active.append(fact.object_name)
            for team in active:
                for copy_index in range(examples_per_year):
                    corpus.append(
                        MaskedExample(
                            input=f"{subject_name} plays for {MASK}.",
                            target=team,
                            year=year,
                            kind="entity",
                            doc_id=f"{subject_id}-{year}-{copy_index}",
                        )
                    )

    return DriftWorld(
        store=store,
        queries=queries,
        corpus=corpus,
        categories=categories,
        change_period=change_period,
        team_pool=TEAM_POOL,
        period=period,
        seed=seed,
    )
