"""Hand-built probe suites: future-relation probes over closed candidate
sets, and synthetic date-comparison pairs rendered in 24 date formats.

Date comparisons ask a model whether the first date falls before or after
the second.  Numeric renderings like 04/05 admit a day/month swap; pairs
whose interpretations disagree on the ordering are flagged ambiguous and
skipped during scoring unless explicitly included.
"""

from __future__ import annotations

import json
import logging
import math
import random
import re
from dataclasses import dataclass
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from tempoprobe.corpus import MaskedExample
from tempoprobe.metrics import SpanScore
from tempoprobe.probes import MASK

log = logging.getLogger(__name__)


class DiagnosticsError(ValueError):
    """Raised for malformed probe files or unusable generation inputs."""


FUTURE_CATEGORIES = ("frequent", "rare", "never")
ANSWER_DOMAINS = ("cities", "countries")
EXPECTED_FUTURE_PROBES = 86

_MONTHS_FULL = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)
_MONTHS_ABBR = (
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
)
_WEEKDAYS = (
    "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday",
)
# leap-permissive month lengths; parsed dates never know their year for sure
_DAYS_IN_MONTH = (31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)


@dataclass(frozen=True)
class FutureProbe:
    text: str
    category: str
    answer_domain: str

    def __post_init__(self) -> None:
        if self.text.count(MASK) != 1:
            raise DiagnosticsError(
                f"probe must contain {MASK!r} exactly once: {self.text!r}"
            )
        if self.category not in FUTURE_CATEGORIES:
            raise DiagnosticsError(f"unknown category {self.category!r}")
        if self.answer_domain not in ANSWER_DOMAINS:
            raise DiagnosticsError(f"unknown answer domain {self.answer_domain!r}")


@dataclass(frozen=True)
class DateFormat:
    """One way of writing a calendar date.

    specificity counts the encoded components: month and day always,
    plus the year and the weekday when present.
    """

    id: str
    order: str  # "mdy" or "dmy"
    month_style: str  # "full", "abbrev", "numeric"
    weekday: bool
    year: bool

    @property
    def specificity(self) -> int:
        return 2 + int(self.year) + int(self.weekday)

    def render(self, value: date) -> str:
        if self.month_style == "numeric":
            core = f"{value.month:02d}/{value.day:02d}"
            if self.order == "dmy":
                core = f"{value.day:02d}/{value.month:02d}"
            if self.year:
                core = f"{core}/{value.year:04d}"
        else:
            names = _MONTHS_FULL if self.month_style == "full" else _MONTHS_ABBR
            month = names[value.month - 1]
            if self.order == "mdy":
                core = f"{month} {value.day}, {value.year:04d}" if self.year else f"{month} {value.day}"
            else:
                core = f"{value.day} {month} {value.year:04d}" if self.year else f"{value.day} {month}"
        if self.weekday:
            core = f"{_WEEKDAYS[value.weekday()]}, {core}"
        return core

    def parse(self, text: str) -> dict:
        """Recover the encoded fields from this format's own rendering.

        Returns {"month", "day"} plus "year" and "weekday" when encoded.
        Numeric fields are read as written (no day/month swap).
        """
        match = re.fullmatch(self._pattern(), text)
        if match is None:
            raise DiagnosticsError(f"{text!r} does not match format {self.id}")
        groups = match.groupdict()
        fields: dict = {"day": int(groups["day"])}
        if self.month_style == "numeric":
            fields["month"] = int(groups["month"])
        else:
            names = _MONTHS_FULL if self.month_style == "full" else _MONTHS_ABBR
            fields["month"] = names.index(groups["month"]) + 1
        if self.year:
            fields["year"] = int(groups["year"])
        if self.weekday:
            fields["weekday"] = _WEEKDAYS.index(groups["weekday"])
        # reject readings that are not calendar dates (e.g. month 25 from
        # parsing an MDY rendering as DMY); Feb 29 allowed, year unknown
        if not 1 <= fields["month"] <= 12:
            raise DiagnosticsError(f"{text!r}: month {fields['month']} out of range")
        if not 1 <= fields["day"] <= _DAYS_IN_MONTH[fields["month"] - 1]:
            raise DiagnosticsError(f"{text!r}: day {fields['day']} out of range")
        return fields

    def _pattern(self) -> str:
        if self.month_style == "numeric":
            month = r"(?P<month>\d{2})"
            day = r"(?P<day>\d{2})"
            parts = [month, day] if self.order == "mdy" else [day, month]
            if self.year:
                parts.append(r"(?P<year>\d{4})")
            core = "/".join(parts)
        else:
            names = _MONTHS_FULL if self.month_style == "full" else _MONTHS_ABBR
            month = f"(?P<month>{'|'.join(names)})"
            day = r"(?P<day>\d{1,2})"
            if self.order == "mdy":
                core = f"{month} {day}, (?P<year>\\d{{4}})" if self.year else f"{month} {day}"
            else:
                core = f"{day} {month} (?P<year>\\d{{4}})" if self.year else f"{day} {month}"
        if self.weekday:
            core = f"(?P<weekday>{'|'.join(_WEEKDAYS)}), {core}"
        return core


def _build_registry() -> dict[str, DateFormat]:
    registry: dict[str, DateFormat] = {}
    for order in ("mdy", "dmy"):
        for month_style in ("full", "abbrev", "numeric"):
            for weekday in (False, True):
                for year in (True, False):
                    format_id = f"{order}-{month_style}"
                    if weekday:
                        format_id += "-wd"
                    if not year:
                        format_id += "-noyear"
                    registry[format_id] = DateFormat(
                        format_id, order, month_style, weekday, year
                    )
    return registry


FORMAT_REGISTRY = _build_registry()
assert len(FORMAT_REGISTRY) == 24


@dataclass(frozen=True)
class DatePair:
    date_a: date
    date_b: date
    format_a: str
    format_b: str
    rendered: str
    label: str  # "before" or "after"
    ambiguous: bool


def load_future_probes(path: str | Path | None = None) -> list[FutureProbe]:
    """Read the future-relation probe file (TSV: text, category, domain).

    A row count other than the expected 86 logs a warning naming the
    expected count; schema problems raise.
    """
    if path is None:
        source = resources.files("tempoprobe.data") / "future_probes.tsv"
        lines = source.read_text(encoding="utf-8").splitlines()
    else:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    probes = []
    for row_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DiagnosticsError(
                f"row {row_no}: expected 3 tab-separated fields, got {len(parts)}"
            )
        try:
            probes.append(FutureProbe(parts[0], parts[1], parts[2]))
        except DiagnosticsError as exc:
            raise DiagnosticsError(f"row {row_no}: {exc}") from exc
    if len(probes) != EXPECTED_FUTURE_PROBES:
        log.warning(
            "future probe file has %d rows, expected %d",
            len(probes),
            EXPECTED_FUTURE_PROBES,
        )
    return probes


def load_candidate_set(path: str | Path) -> tuple[str, ...]:
    """Newline-delimited candidate answers; # lines are comments."""
    names = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            names.append(line)
    if not names:
        raise DiagnosticsError(f"no candidates in {path}")
    return tuple(names)


def default_candidates(domain: str) -> tuple[str, ...]:
    """The shipped candidate list for an answer domain."""
    files = {"cities": "us_cities_200.txt", "countries": "countries_249.txt"}
    if domain not in files:
        raise DiagnosticsError(f"unknown answer domain {domain!r}")
    source = resources.files("tempoprobe.data") / files[domain]
    names = []
    for line in source.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            names.append(line)
    return tuple(names)


# ---------------------------------------------------------------------------
# date pair generation

def _interpretations(value: date, fmt: DateFormat, assume_year: int) -> list[tuple]:
    """All (year, month, day) readings of the rendered date.

    Numeric renderings admit the day/month swap when the day could be a
    month number; name renderings are unambiguous.
    """
    year = value.year if fmt.year else assume_year
    readings = [(year, value.month, value.day)]
    if fmt.month_style == "numeric" and value.day <= 12 and value.day != value.month:
        readings.append((year, value.day, value.month))
    return readings


def _is_ambiguous(a: date, fmt_a: DateFormat, b: date, fmt_b: DateFormat) -> bool:
    assume_year = a.year  # generation forces equal years when a format omits one
    orderings = set()
    for reading_a in _interpretations(a, fmt_a, assume_year):
        for reading_b in _interpretations(b, fmt_b, assume_year):
            orderings.add((reading_a > reading_b) - (reading_a < reading_b))
    return len(orderings) > 1


def render_pair(a: date, fmt_a: DateFormat, b: date, fmt_b: DateFormat) -> str:
    return f"{fmt_a.render(a)} is {MASK} {fmt_b.render(b)}."


def gen_date_pairs(
    count: int,
    year_range: tuple[int, int],
    formats: Sequence[str] | None = None,
    seed: int = 0,
) -> list[DatePair]:
    """Seeded uniform sample of date pairs with before/after labels.

    Pairs where a year-less format would need the year to order the dates
    are resampled; ambiguous numeric pairs are kept but flagged.
    """
    if count < 1:
        raise DiagnosticsError(f"count must be >= 1, got {count}")
    lo, hi = year_range
    if lo > hi:
        raise DiagnosticsError(f"degenerate year range {lo}:{hi}")
    if formats is None:
        format_ids = sorted(FORMAT_REGISTRY)
    else:
        format_ids = list(formats)
        unknown = [f for f in format_ids if f not in FORMAT_REGISTRY]
        if unknown:
            raise DiagnosticsError(f"unknown formats: {', '.join(unknown)}")
        if not format_ids:
            raise DiagnosticsError("formats list is empty")

    rng = random.Random(seed)
    first = date(lo, 1, 1).toordinal()
    last = date(hi, 12, 31).toordinal()
    pairs: list[DatePair] = []
    attempts = 0
    while len(pairs) < count:
        attempts += 1
        if attempts > 1000 * count:
            raise DiagnosticsError("resampling budget exhausted; inputs too constrained")
        a = date.fromordinal(rng.randint(first, last))
        b = date.fromordinal(rng.randint(first, last))
        fmt_a = FORMAT_REGISTRY[format_ids[rng.randrange(len(format_ids))]]
        fmt_b = FORMAT_REGISTRY[format_ids[rng.randrange(len(format_ids))]]
        if a == b:
            continue
        if (not fmt_a.year or not fmt_b.year) and a.year != b.year:
            continue
        label = "before" if a < b else "after"
        pairs.append(
            DatePair(
                date_a=a,
                date_b=b,
                format_a=fmt_a.id,
                format_b=fmt_b.id,
                rendered=render_pair(a, fmt_a, b, fmt_b),
                label=label,
                ambiguous=_is_ambiguous(a, fmt_a, b, fmt_b),
            )
        )
    return pairs


def save_date_pairs(pairs: Iterable[DatePair], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for pair in pairs:
            record = {
                "date_a": pair.date_a.isoformat(),
                "date_b": pair.date_b.isoformat(),
                "format_a": pair.format_a,
                "format_b": pair.format_b,
                "rendered": pair.rendered,
                "label": pair.label,
                "ambiguous": pair.ambiguous,
            }
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def load_date_pairs(path: str | Path) -> list[DatePair]:
    pairs = []
    for row_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            pairs.append(
                DatePair(
                    date_a=date.fromisoformat(record["date_a"]),
                    date_b=date.fromisoformat(record["date_b"]),
                    format_a=record["format_a"],
                    format_b=record["format_b"],
                    rendered=record["rendered"],
                    label=record["label"],
                    ambiguous=bool(record["ambiguous"]),
                )
            )
        except (KeyError, ValueError) as exc:
            raise DiagnosticsError(f"row {row_no}: {exc}") from exc
    return pairs


# ---------------------------------------------------------------------------
# scoring

@dataclass
class DateReport:
    accuracy: float
    n_scored: int
    per_format: dict[str, float]
    per_specificity: dict[int, float]
    n_ambiguous: int
    ambiguous_accuracy: float | None = None


def _scoring_year(pair: DatePair, anchor_year: int) -> int:
    # the document year is whatever the rendering shows; fully year-less
    # probes fall back to the generation anchor
    if FORMAT_REGISTRY[pair.format_a].year:
        return pair.date_a.year
    if FORMAT_REGISTRY[pair.format_b].year:
        return pair.date_b.year
    return anchor_year


def date_pairs_to_examples(
    pairs: Iterable[DatePair], anchor_year: int
) -> list[MaskedExample]:
    """Masked training examples whose target is the before/after word."""
    examples = []
    for index, pair in enumerate(pairs):
        examples.append(
            MaskedExample(
                input=pair.rendered,
                target=pair.label,
                year=_scoring_year(pair, anchor_year),
                kind="date",
                doc_id=f"datepair-{index}",
            )
        )
    return examples


def eval_date_comparison(
    model,
    pairs: Sequence[DatePair],
    anchor_year: int,
    include_ambiguous: bool = False,
) -> DateReport:
    """Score before/after choices by strict comparison of word scores.

    A pair is correct iff the label word outscores the other word; ties
    count as wrong.  Ambiguous pairs are excluded unless included, in
    which case they form a separate stratum.  A pair's specificity is
    the weaker of its two formats'.
    """
    scored = [p for p in pairs if not p.ambiguous]
    ambiguous = [p for p in pairs if p.ambiguous]
    if not scored:
        raise DiagnosticsError("no unambiguous pairs to score")

    def is_correct(pair: DatePair) -> bool:
        year = _scoring_year(pair, anchor_year)
        other = "after" if pair.label == "before" else "before"
        right = model.score(pair.rendered, year, pair.label).log_prob
        wrong = model.score(pair.rendered, year, other).log_prob
        return right > wrong

    format_hits: dict[str, list[bool]] = {}
    spec_hits: dict[int, list[bool]] = {}
    hits = []
    for pair in scored:
        correct = is_correct(pair)
        hits.append(correct)
        for format_id in (pair.format_a, pair.format_b):
            format_hits.setdefault(format_id, []).append(correct)
        fmt_a = FORMAT_REGISTRY[pair.format_a]
        fmt_b = FORMAT_REGISTRY[pair.format_b]
        spec_hits.setdefault(min(fmt_a.specificity, fmt_b.specificity), []).append(correct)

    ambiguous_accuracy = None
    if include_ambiguous and ambiguous:
        amb_hits = [is_correct(pair) for pair in ambiguous]
        ambiguous_accuracy = sum(amb_hits) / len(amb_hits)

    return DateReport(
        accuracy=sum(hits) / len(hits),
        n_scored=len(hits),
        per_format={
            fid: sum(h) / len(h) for fid, h in sorted(format_hits.items())
        },
        per_specificity={
            spec: sum(h) / len(h) for spec, h in sorted(spec_hits.items())
        },
        n_ambiguous=len(ambiguous),
        ambiguous_accuracy=ambiguous_accuracy,
    )


class OracleDateModel:
    """Cheats by parsing both rendered dates; validates pair labels."""

    def score(self, text: str, year: int, target: str) -> SpanScore:
        left, right = self._split(text)
        year_a, month_a, day_a = self._parse_side(left)
        year_b, month_b, day_b = self._parse_side(right)
        # a side without a printed year shares the other side's year,
        # falling back to the conditioning year when neither shows one
        year_a = year_a or year_b or year
        year_b = year_b or year_a
        answer = "before" if (year_a, month_a, day_a) < (year_b, month_b, day_b) else "after"
        prob = 0.9 if target == answer else 0.1
        return SpanScore(log_prob=math.log(prob), target_len=1)

    @staticmethod
    def _split(text: str) -> tuple[str, str]:
        separator = f" is {MASK} "
        if separator not in text:
            raise DiagnosticsError(f"not a date comparison probe: {text!r}")
        left, right = text.split(separator, 1)
        return left, right.rstrip(".")

    @staticmethod
    def _parse_side(side: str) -> tuple:
        for format_id in sorted(FORMAT_REGISTRY):
            fmt = FORMAT_REGISTRY[format_id]
            try:
                fields = fmt.parse(side)
            except DiagnosticsError:
                continue
            return (fields.get("year"), fields["month"], fields["day"])
        raise DiagnosticsError(f"unparseable date {side!r}")


class RandomScoreModel:
    """Seeded coin-flip scorer; baseline for the comparison accuracy."""

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)

    def score(self, text: str, year: int, target: str) -> SpanScore:
        prob = self.rng.random() or 1e-12
        return SpanScore(log_prob=math.log(prob), target_len=1)
