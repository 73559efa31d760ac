"""Storage and querying of temporally-scoped facts.

A fact is a (subject, relation, object) triple that holds over an interval
of calendar years.  Facts are loaded from TSV or JSONL files, validated,
and indexed by (subject_id, relation_id) so that "which objects were valid
in year t" is a cheap lookup.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)

FACT_COLUMNS = (
    "subject_id",
    "subject_name",
    "relation_id",
    "object_id",
    "object_name",
    "start_year",
    "end_year",
)

# Leading 4-digit year; any finer-grained date suffix is truncated.
_YEAR_RE = re.compile(r"^(\d{4})(?:-\d{1,2})?(?:-\d{1,2})?$")


class FactError(ValueError):
    """Raised for malformed fact files or invalid fact fields."""


@dataclass(frozen=True)
class YearInterval:
    """A closed interval of calendar years; either endpoint may be missing.

    A missing start means "from the beginning of the configured period",
    a missing end means "through the end of the configured period".
    """

    start: int | None = None
    end: int | None = None

    def __post_init__(self) -> None:
        if self.start is not None and self.end is not None and self.start > self.end:
            raise FactError(f"interval start {self.start} exceeds end {self.end}")

    def resolved_bounds(self, period: "YearInterval") -> tuple[int, int]:
        """Raw (start, end) after filling missing endpoints from the period.

        May be an empty range (start > end) if a bounded endpoint falls
        outside the period; callers treat that as "never active"."""
        if period.start is None or period.end is None:
            raise FactError("period must have both endpoints")
        start = period.start if self.start is None else self.start
        end = period.end if self.end is None else self.end
        return start, end

    def resolve(self, period: "YearInterval") -> "YearInterval":
        """Fill missing endpoints from an enclosing period (both bounds set)."""
        start, end = self.resolved_bounds(period)
        if start > end:
            raise FactError(f"resolved interval [{start},{end}] is empty")
        return YearInterval(start, end)

    def contains(self, year: int) -> bool:
        """Inclusive containment; missing endpoints are unbounded."""
        if self.start is not None and year < self.start:
            return False
        if self.end is not None and year > self.end:
            return False
        return True

    def clamp(self, period: "YearInterval") -> "YearInterval":
        """Resolve against period, then intersect with it."""
        resolved = self.resolve(period)
        start = max(resolved.start, period.start)
        end = min(resolved.end, period.end)
        if start > end:
            raise FactError(f"interval {resolved} does not intersect period {period}")
        return YearInterval(start, end)


DEFAULT_PERIOD = YearInterval(2010, 2020)


@dataclass(frozen=True)
class TemporalFact:
    subject_id: str
    subject_name: str
    relation_id: str
    object_id: str
    object_name: str
    interval: YearInterval

    def __post_init__(self) -> None:
        for name in ("subject_id", "subject_name", "relation_id", "object_id", "object_name"):
            if not getattr(self, name):
                raise FactError(f"{name} must be non-empty")


@dataclass
class FactStore:
    """An immutable, indexed collection of temporal facts.

    ``period`` is the global time window used to resolve missing interval
    endpoints; both of its bounds must be present.
    """

    facts: tuple[TemporalFact, ...]
    period: YearInterval = DEFAULT_PERIOD
    index: dict[tuple[str, str], tuple[TemporalFact, ...]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.period.start is None or self.period.end is None:
            raise FactError("store period must have both endpoints")
        self.facts = tuple(self.facts)
        grouped: dict[tuple[str, str], list[TemporalFact]] = {}
        for fact in self.facts:
            grouped.setdefault((fact.subject_id, fact.relation_id), []).append(fact)
        self.index = {key: tuple(group) for key, group in grouped.items()}

    def __len__(self) -> int:
        return len(self.facts)

    def lookup(self, subject_id: str, relation_id: str) -> tuple[TemporalFact, ...]:
        return self.index.get((subject_id, relation_id), ())

    def subjects(self) -> set[str]:
        return {fact.subject_id for fact in self.facts}

    def relations(self) -> set[str]:
        return {fact.relation_id for fact in self.facts}


def _parse_year(raw: str | int | None, row: int, column: str) -> int | None:
    """Parse a year field; empty or null means missing.  Sub-year precision
    (YYYY-MM, YYYY-MM-DD) is truncated to the year."""
    if raw is None:
        return None
    if isinstance(raw, int):
        if not 1000 <= raw <= 9999:
            raise FactError(f"row {row}, column {column}: year {raw} is not 4-digit")
        return raw
    text = raw.strip()
    if not text:
        return None
    match = _YEAR_RE.match(text)
    if match is None:
        raise FactError(f"row {row}, column {column}: cannot parse year {text!r}")
    return int(match.group(1))


def _fact_from_fields(fields: dict[str, object], row: int) -> TemporalFact:
    start = _parse_year(fields.get("start_year"), row, "start_year")  # type: ignore[arg-type]
    end = _parse_year(fields.get("end_year"), row, "end_year")  # type: ignore[arg-type]
    try:
        interval = YearInterval(start, end)
        return TemporalFact(
            subject_id=str(fields.get("subject_id") or ""),
            subject_name=str(fields.get("subject_name") or ""),
            relation_id=str(fields.get("relation_id") or ""),
            object_id=str(fields.get("object_id") or ""),
            object_name=str(fields.get("object_name") or ""),
            interval=interval,
        )
    except FactError as exc:
        raise FactError(f"row {row}: {exc}") from None


def _iter_tsv(lines: list[str]) -> list[tuple[int, dict[str, object]]]:
    header = lines[0].rstrip("\n").split("\t")
    if tuple(header) != FACT_COLUMNS:
        raise FactError(f"row 1: expected header {list(FACT_COLUMNS)}, got {header}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != len(FACT_COLUMNS):
            raise FactError(f"row {lineno}: expected {len(FACT_COLUMNS)} fields, got {len(parts)}")
        rows.append((lineno, dict(zip(FACT_COLUMNS, parts))))
    return rows


def _iter_jsonl(lines: list[str]) -> list[tuple[int, dict[str, object]]]:
    rows = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FactError(f"row {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise FactError(f"row {lineno}: expected an object")
        unknown = set(record) - set(FACT_COLUMNS)
        if unknown:
            raise FactError(f"row {lineno}: unknown keys {sorted(unknown)}")
        rows.append((lineno, record))
    return rows


def load_facts(path: str | Path, period: YearInterval = DEFAULT_PERIOD) -> FactStore:
    """Load a fact file (TSV with header, or JSONL) into an indexed store.

    Malformed rows raise FactError naming the offending row.  Exact
    duplicates are dropped with a warning.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FactError("row 1: file is empty")
    if path.suffix in (".jsonl", ".json"):
        rows = _iter_jsonl(lines)
    else:
        rows = _iter_tsv(lines)

    facts: list[TemporalFact] = []
    seen: set[TemporalFact] = set()
    duplicates = 0
    for lineno, fields in rows:
        fact = _fact_from_fields(fields, lineno)
        if fact in seen:
            duplicates += 1
            continue
        seen.add(fact)
        facts.append(fact)
    if duplicates:
        log.warning("dropped %d duplicate fact(s) from %s", duplicates, path)
    return FactStore(tuple(facts), period)


def save_facts(store: FactStore, path: str | Path) -> None:
    """Write the store back out (TSV by default, JSONL for .jsonl paths)."""
    path = Path(path)
    if path.suffix in (".jsonl", ".json"):
        with path.open("w", encoding="utf-8") as handle:
            for fact in store.facts:
                record = {
                    "subject_id": fact.subject_id,
                    "subject_name": fact.subject_name,
                    "relation_id": fact.relation_id,
                    "object_id": fact.object_id,
                    "object_name": fact.object_name,
                    "start_year": fact.interval.start,
                    "end_year": fact.interval.end,
                }
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
        return
    with path.open("w", encoding="utf-8") as handle:
        handle.write("\t".join(FACT_COLUMNS) + "\n")
        for fact in store.facts:
            start = "" if fact.interval.start is None else str(fact.interval.start)
            end = "" if fact.interval.end is None else str(fact.interval.end)
            handle.write(
                "\t".join(
                    (
                        fact.subject_id,
                        fact.subject_name,
                        fact.relation_id,
                        fact.object_id,
                        fact.object_name,
                        start,
                        end,
                    )
                )
                + "\n"
            )


def filter_temporal(store: FactStore, cutoff: int) -> FactStore:
    """Keep facts whose raw start or end year falls after cutoff-1.

    Facts with neither endpoint after cutoff-1 (including facts with both
    endpoints missing) are dropped.  Idempotent for a fixed cutoff.
    """
    kept = tuple(
        fact
        for fact in store.facts
        if (fact.interval.start is not None and fact.interval.start > cutoff - 1)
        or (fact.interval.end is not None and fact.interval.end > cutoff - 1)
    )
    log.info("filter_temporal(cutoff=%d): kept %d of %d facts", cutoff, len(kept), len(store))
    return FactStore(kept, store.period)


def active_objects(
    store: FactStore, subject_id: str, relation_id: str, year: int
) -> set[tuple[str, str]]:
    """Objects valid for (subject, relation) in the given year.

    Intervals are resolved against the store period before the containment
    test, so open-ended facts match every year inside the period.
    """
    result = set()
    for fact in store.lookup(subject_id, relation_id):
        start, end = fact.interval.resolved_bounds(store.period)
        if start <= year <= end:
            result.add((fact.object_id, fact.object_name))
    return result
