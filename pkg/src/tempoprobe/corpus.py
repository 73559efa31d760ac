"""Masked-span corpora from timestamped documents.

Documents are split into sentences, salient spans (dates by regex,
entities by a pluggable tagger) are located, and one span per example is
replaced with the mask literal.  Sampling streams deliver the examples
uniformly per year, restricted to one year, or as an α-mixture of a new
and an old time slice, plus a deterministic corpus/probe interleave.
"""

from __future__ import annotations

import json
import random
import re
import subprocess
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from tempoprobe.facts import YearInterval
from tempoprobe.probes import MASK


class CorpusError(ValueError):
    """Raised for malformed documents, spans, or stream misconfiguration."""


@dataclass(frozen=True)
class TimestampedDoc:
    doc_id: str
    date: str
    text: str

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise CorpusError("doc_id must be non-empty")
        self.year  # validate eagerly

    @property
    def year(self) -> int:
        match = re.match(r"(\d{4})(?:-\d{2})?(?:-\d{2})?$", self.date)
        if match is None:
            raise CorpusError(f"doc {self.doc_id}: unparseable date {self.date!r}")
        return int(match.group(1))


@dataclass(frozen=True)
class SalientSpan:
    start: int
    end: int
    kind: str  # "entity" or "date"
    surface: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise CorpusError(f"invalid span [{self.start},{self.end})")
        if self.kind not in ("entity", "date"):
            raise CorpusError(f"unknown span kind {self.kind!r}")
        if len(self.surface) != self.end - self.start:
            raise CorpusError("surface length does not match span bounds")


@dataclass(frozen=True)
class MaskedExample:
    input: str
    target: str
    year: int
    kind: str
    doc_id: str = ""

    def __post_init__(self) -> None:
        if self.input.count(MASK) != 1:
            raise CorpusError(f"input must contain {MASK} exactly once: {self.input!r}")
        if not self.target:
            raise CorpusError("target must be non-empty")


# ---------------------------------------------------------------------------
# sentence splitting

ABBREVIATIONS = frozenset(
    """Dr. Mr. Mrs. Ms. Prof. St. Jr. Sr. vs. etc. Inc. Ltd. Corp. Co. Gen.
    Sen. Rep. Gov. Capt. Lt. Col. Sgt. Maj. Adm. Rev. Hon. Fr. Jan. Feb.
    Mar. Apr. Jun. Jul. Aug. Sep. Sept. Oct. Nov. Dec. Mon. Tue. Wed. Thu.
    Fri. Sat. Sun. a.m. p.m. No. Mt. Ft. Ave. Blvd. Rd. approx. est.
    U.S. U.K. U.N. D.C. e.g. i.e. cf.""".split()
)

_CLOSERS = "\"')]»”’"


def _word_ending_at(text: str, dot_index: int) -> str:
    start = dot_index
    while start > 0 and (text[start - 1].isalnum() or text[start - 1] == "."):
        start -= 1
    return text[start : dot_index + 1]


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of sentences; whitespace between spans is separator.

    Splits on terminal punctuation (., !, ?) followed by whitespace or end
    of text, with a guard list of common abbreviations.
    """
    spans: list[tuple[int, int]] = []
    start: int | None = None
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if start is None and not ch.isspace():
            start = i
        if start is not None and ch in ".!?":
            if ch == "." and _word_ending_at(text, i) in ABBREVIATIONS:
                i += 1
                continue
            j = i + 1
            while j < n and text[j] in ".!?" + _CLOSERS:
                j += 1
            if j >= n or text[j].isspace():
                spans.append((start, j))
                start = None
                i = j
                continue
        i += 1
    if start is not None:
        spans.append((start, n))
    return spans


def split_sentences(doc: TimestampedDoc | str) -> list[str]:
    """Sentences of a document (or raw text), in order."""
    text = doc.text if isinstance(doc, TimestampedDoc) else doc
    return [text[a:b] for a, b in sentence_spans(text)]


# ---------------------------------------------------------------------------
# salient spans

_MONTH = (
    r"(?:January|February|March|April|May|June|July|August|September|October"
    r"|November|December|Jan\.?|Feb\.?|Mar\.?|Apr\.?|Jun\.?|Jul\.?|Aug\.?"
    r"|Sept?\.?|Oct\.?|Nov\.?|Dec\.?)"
)

DATE_PATTERNS = (
    re.compile(rf"\b{_MONTH} \d{{1,2}}, (?:19|20)\d{{2}}\b"),  # January 5, 2014
    re.compile(rf"\b\d{{1,2}} {_MONTH} (?:19|20)\d{{2}}\b"),  # 5 January 2014
    re.compile(r"\b\d{1,2}/\d{1,2}/\d{4}\b"),  # 01/05/2014
    re.compile(r"\b(?:19|20)\d{2}\b"),  # standalone year
)


class EntityTagger(ABC):
    """Batch interface: sentences in, character spans out."""

    @abstractmethod
    def tag(self, sentences: Sequence[str]) -> list[list[tuple[int, int]]]:
        """Return one list of (start, end) entity spans per sentence."""


class GazetteerTagger(EntityTagger):
    """Exact-match tagger over a fixed name list, longest match first."""

    def __init__(self, names: Iterable[str], case_sensitive: bool = True):
        cleaned = [name.strip() for name in names if name.strip()]
        if not cleaned:
            raise CorpusError("gazetteer must contain at least one name")
        self.case_sensitive = case_sensitive
        key = (lambda s: s) if case_sensitive else str.lower
        self._names = sorted({key(name) for name in cleaned}, key=len, reverse=True)
        self._key = key

    @classmethod
    def from_file(cls, path: str | Path, case_sensitive: bool = True) -> "GazetteerTagger":
        names = [
            line.strip()
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.startswith("#")
        ]
        return cls(names, case_sensitive)

    def _boundary_ok(self, text: str, start: int, end: int) -> bool:
        if start > 0 and text[start - 1].isalnum():
            return False
        if end < len(text) and text[end].isalnum():
            return False
        return True

    def tag(self, sentences: Sequence[str]) -> list[list[tuple[int, int]]]:
        results = []
        for sentence in sentences:
            haystack = self._key(sentence)
            spans: list[tuple[int, int]] = []
            i = 0
            while i < len(haystack):
                for name in self._names:
                    end = i + len(name)
                    if haystack.startswith(name, i) and self._boundary_ok(haystack, i, end):
                        spans.append((i, end))
                        i = end - 1
                        break
                i += 1
            results.append(spans)
        return results


class SubprocessTagger(EntityTagger):
    """Tagger speaking newline-delimited JSON over a child process's pipes.

    Request: {"id": int, "sentence": str}; response: {"id": int,
    "spans": [{"start": int, "end": int}, ...]}, one line each, in lockstep.
    """

    def __init__(self, cmd: Sequence[str]):
        self._cmd = list(cmd)
        self._proc = subprocess.Popen(
            self._cmd,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._next_id = 0

    def tag(self, sentences: Sequence[str]) -> list[list[tuple[int, int]]]:
        assert self._proc.stdin is not None and self._proc.stdout is not None
        results = []
        for sentence in sentences:
            request_id = self._next_id
            self._next_id += 1
            try:
                self._proc.stdin.write(
                    json.dumps({"id": request_id, "sentence": sentence}) + "\n"
                )
                self._proc.stdin.flush()
            except (BrokenPipeError, ValueError):
                raise CorpusError(f"tagger process died before sentence {request_id}")
            line = self._proc.stdout.readline()
            if not line:
                raise CorpusError(f"tagger gave no response for sentence {request_id}")
            try:
                response = json.loads(line)
            except json.JSONDecodeError:
                raise CorpusError(f"tagger sent invalid JSON for sentence {request_id}")
            if response.get("id") != request_id:
                raise CorpusError(
                    f"tagger answered id {response.get('id')} for sentence {request_id}"
                )
            results.append(
                [(int(span["start"]), int(span["end"])) for span in response.get("spans", ())]
            )
        return results

    def close(self) -> None:
        if self._proc.poll() is None:
            if self._proc.stdin is not None:
                self._proc.stdin.close()
            self._proc.wait(timeout=5)

    def __enter__(self) -> "SubprocessTagger":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _resolve_overlaps(candidates: list[SalientSpan]) -> list[SalientSpan]:
    # longest span wins; ties go to the leftmost
    ordered = sorted(candidates, key=lambda s: (-(s.end - s.start), s.start, s.kind))
    accepted: list[SalientSpan] = []
    for span in ordered:
        if all(span.end <= other.start or span.start >= other.end for other in accepted):
            accepted.append(span)
    return sorted(accepted, key=lambda s: s.start)


def find_salient_spans(
    sentence: str,
    tagger: EntityTagger | None = None,
    sentence_id: str = "",
) -> list[SalientSpan]:
    """Date-regex matches plus tagger entities, overlaps resolved."""
    candidates: list[SalientSpan] = []
    for pattern in DATE_PATTERNS:
        for match in pattern.finditer(sentence):
            candidates.append(
                SalientSpan(match.start(), match.end(), "date", match.group())
            )
    if tagger is not None:
        try:
            entity_spans = tagger.tag([sentence])[0]
        except CorpusError:
            raise
        except Exception as exc:
            label = sentence_id or sentence[:40]
            raise CorpusError(f"tagger failed on sentence {label!r}: {exc}") from exc
        for start, end in entity_spans:
            if not (0 <= start < end <= len(sentence)):
                label = sentence_id or sentence[:40]
                raise CorpusError(
                    f"tagger span [{start},{end}) out of bounds for sentence {label!r}"
                )
            candidates.append(SalientSpan(start, end, "entity", sentence[start:end]))
    return _resolve_overlaps(candidates)


# ---------------------------------------------------------------------------
# masking

def make_masked_examples(
    sentence: str,
    spans: Sequence[SalientSpan],
    year: int,
    policy: str = "one-per-span",
    seed: int = 0,
    doc_id: str = "",
) -> list[MaskedExample]:
    """Replace salient spans with the mask literal.

    one-per-span emits one example per span; random-one picks a single
    span with a seeded uniform draw.
    """
    if MASK in sentence:
        raise CorpusError(f"sentence already contains the mask literal: {sentence!r}")
    if policy not in ("one-per-span", "random-one"):
        raise CorpusError(f"unknown masking policy {policy!r}")
    if not spans:
        return []
    chosen = list(spans)
    if policy == "random-one":
        chosen = [chosen[random.Random(seed).randrange(len(chosen))]]
    examples = []
    for span in chosen:
        masked = sentence[: span.start] + MASK + sentence[span.end :]
        examples.append(
            MaskedExample(input=masked, target=span.surface, year=year, kind=span.kind, doc_id=doc_id)
        )
    return examples


_TIME_PREFIX_RE = re.compile(r"^year: \d{4} ")


def apply_time_prefix(example: MaskedExample) -> MaskedExample:
    """Prepend the year condition ("year: YYYY ") to the input."""
    if _TIME_PREFIX_RE.match(example.input):
        raise CorpusError(f"input already carries a time prefix: {example.input!r}")
    return replace(example, input=f"year: {example.year} {example.input}")


def build_corpus(
    docs: Iterable[TimestampedDoc],
    tagger: EntityTagger | None = None,
    policy: str = "one-per-span",
    seed: int = 0,
) -> list[MaskedExample]:
    """End-to-end: split, find spans, mask.  Deterministic order."""
    rng = random.Random(seed)
    examples: list[MaskedExample] = []
    for doc in docs:
        for k, sentence in enumerate(split_sentences(doc)):
            if MASK in sentence:
                continue
            spans = find_salient_spans(sentence, tagger, sentence_id=f"{doc.doc_id}#{k}")
            examples.extend(
                make_masked_examples(
                    sentence, spans, doc.year, policy, seed=rng.randrange(2**32), doc_id=doc.doc_id
                )
            )
    return examples


def explicit_year_stats(docs: Iterable[TimestampedDoc]) -> dict[str, float]:
    """How many sentences mention a year explicitly (measurement only)."""
    total = 0
    with_year = 0
    year_re = DATE_PATTERNS[3]
    for doc in docs:
        for sentence in split_sentences(doc):
            total += 1
            if year_re.search(sentence):
                with_year += 1
    return {
        "sentences": total,
        "with_explicit_year": with_year,
        "fraction": with_year / total if total else 0.0,
    }


# ---------------------------------------------------------------------------
# sampling streams

@dataclass(frozen=True)
class MixtureSpec:
    alpha: float
    new_slice: frozenset[int]
    old_slices: frozenset[int]

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise CorpusError(f"alpha must be in [0,1], got {self.alpha}")
        object.__setattr__(self, "new_slice", frozenset(self.new_slice))
        object.__setattr__(self, "old_slices", frozenset(self.old_slices))
        if self.new_slice & self.old_slices:
            raise CorpusError("mixture slices must be disjoint")
        if not self.new_slice or not self.old_slices:
            raise CorpusError("both mixture slices must be non-empty")


def _by_year(examples: Sequence[MaskedExample]) -> dict[int, list[MaskedExample]]:
    pools: dict[int, list[MaskedExample]] = {}
    for example in examples:
        pools.setdefault(example.year, []).append(example)
    return pools


def _draw_uniform_by_year(
    pools: dict[int, list[MaskedExample]], years: list[int], rng: random.Random
) -> MaskedExample:
    year = years[rng.randrange(len(years))]
    pool = pools[year]
    return pool[rng.randrange(len(pool))]


def sample_stream(
    examples: Sequence[MaskedExample],
    mode: str = "uniform-by-year",
    seed: int = 0,
    year: int | None = None,
    mixture: MixtureSpec | None = None,
) -> Iterator[MaskedExample]:
    """Infinite seeded sampler over masked examples.

    uniform-by-year draws a year uniformly, then an example uniformly
    within it; single-year restricts to one year; mixture draws the new
    slice with probability α, the old slices otherwise, each side
    uniform-by-year internally.
    """
    pools = _by_year(examples)
    rng = random.Random(seed)

    if mode == "uniform-by-year":
        if not pools:
            raise CorpusError("no examples to sample")
        years = sorted(pools)

        def generate() -> Iterator[MaskedExample]:
            while True:
                yield _draw_uniform_by_year(pools, years, rng)

        return generate()

    if mode == "single-year":
        if year is None:
            raise CorpusError("single-year mode needs a year")
        if year not in pools:
            raise CorpusError(f"no examples for year {year}")
        pool = pools[year]

        def generate_single() -> Iterator[MaskedExample]:
            while True:
                yield pool[rng.randrange(len(pool))]

        return generate_single()

    if mode == "mixture":
        if mixture is None:
            raise CorpusError("mixture mode needs a MixtureSpec")
        new_pools = {y: p for y, p in pools.items() if y in mixture.new_slice}
        old_pools = {y: p for y, p in pools.items() if y in mixture.old_slices}
        if not new_pools:
            raise CorpusError("new slice has no examples")
        if not old_pools:
            raise CorpusError("old slices have no examples")
        new_years, old_years = sorted(new_pools), sorted(old_pools)

        def generate_mixture() -> Iterator[MaskedExample]:
            while True:
                if rng.random() < mixture.alpha:
                    yield _draw_uniform_by_year(new_pools, new_years, rng)
                else:
                    yield _draw_uniform_by_year(old_pools, old_years, rng)

        return generate_mixture()

    raise CorpusError(f"unknown stream mode {mode!r}")


def mix_probe_stream(
    corpus_stream: Iterator,
    probe_stream: Iterator,
    ratio: tuple[int, int] = (1000, 1),
) -> Iterator:
    """Deterministic interleave: n corpus items, then m probe items."""
    n_corpus, n_probe = ratio
    if n_corpus < 1 or n_probe < 1:
        raise CorpusError(f"ratio components must be >= 1, got {ratio}")

    def generate() -> Iterator:
        while True:
            for _ in range(n_corpus):
                try:
                    yield next(corpus_stream)
                except StopIteration:
                    return
            for _ in range(n_probe):
                try:
                    yield next(probe_stream)
                except StopIteration:
                    return

    return generate()


# ---------------------------------------------------------------------------
# document / example I/O

def load_docs(path: str | Path, window: YearInterval | None = None) -> list[TimestampedDoc]:
    """Read JSONL documents {doc_id, date, text}; optionally enforce a
    validity window on document years."""
    docs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"row {lineno}: invalid JSON ({exc.msg})") from None
        try:
            doc = TimestampedDoc(
                doc_id=str(record["doc_id"]), date=str(record["date"]), text=str(record["text"])
            )
        except KeyError as exc:
            raise CorpusError(f"row {lineno}: missing key {exc}") from None
        except CorpusError as exc:
            raise CorpusError(f"row {lineno}: {exc}") from None
        if window is not None and not window.contains(doc.year):
            raise CorpusError(f"row {lineno}: year {doc.year} outside window {window}")
        docs.append(doc)
    return docs


def save_examples(examples: Iterable[MaskedExample], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for example in examples:
            record = {
                "input": example.input,
                "target": example.target,
                "year": example.year,
                "kind": example.kind,
                "doc_id": example.doc_id,
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_examples(path: str | Path) -> list[MaskedExample]:
    examples = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            examples.append(
                MaskedExample(
                    input=str(record["input"]),
                    target=str(record["target"]),
                    year=int(record["year"]),
                    kind=str(record["kind"]),
                    doc_id=str(record.get("doc_id", "")),
                )
            )
        except json.JSONDecodeError as exc:
            raise CorpusError(f"row {lineno}: invalid JSON ({exc.msg})") from None
        except (KeyError, CorpusError) as exc:
            raise CorpusError(f"row {lineno}: {exc}") from None
    return examples
