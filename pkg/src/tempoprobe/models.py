"""Reference conditional models P(answer | masked input, year).

One count-model class covers three training regimes:

* uniform   -- one table keyed by normalized input; the year is ignored.
* yearly    -- one expert table per training year; queries route to the
               nearest expert (ties toward the later year).
* temporal  -- a year-conditioned table interpolated with the global one.

All probabilities are add-k smoothed over the observed answer vocabulary
plus a single shared UNK bucket, so every scoring path returns a proper
distribution.
"""

from __future__ import annotations

import copy
import json
import re
import string
from collections import Counter
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from tempoprobe.corpus import MaskedExample
from tempoprobe.metrics import SpanScore, target_length
from tempoprobe.probes import MASK

import math

REGIMES = ("uniform", "yearly", "temporal")

_PUNCT = set(string.punctuation)
_PREFIX_RE = re.compile(r"^year: \d{4} ")
_SENTINEL = "\x00"


class ModelError(ValueError):
    """Raised for bad regimes, empty training streams, or format errors."""


def normalize_key(text: str) -> str:
    """Canonical condition key for a masked input.

    Any "year: YYYY " prefix is stripped (the year is a separate model
    input), the mask literal survives punctuation removal, and casing and
    whitespace are collapsed.
    """
    text = _PREFIX_RE.sub("", text)
    text = text.replace(MASK, _SENTINEL)
    text = text.lower()
    text = "".join(ch for ch in text if ch not in _PUNCT)
    text = " ".join(text.split())
    return text.replace(_SENTINEL, MASK)


def route_year(expert_years: Iterable[int], query_year: int) -> int:
    """Nearest trained year; distance ties resolve to the later year."""
    years = sorted(expert_years)
    if not years:
        raise ModelError("no expert years trained")
    return min(years, key=lambda y: (abs(y - query_year), -y))


class TemporalCountModel:
    """Smoothed answer-count tables conditioned on (input key, year)."""

    def __init__(
        self,
        regime: str = "temporal",
        smoothing_k: float = 0.1,
        interpolation_lambda: float = 0.8,
        year_decay: float = 0.5,
    ):
        if regime not in REGIMES:
            raise ModelError(f"unknown regime {regime!r}; expected one of {REGIMES}")
        if smoothing_k <= 0:
            raise ModelError(f"smoothing_k must be positive, got {smoothing_k}")
        if not 0.0 <= interpolation_lambda <= 1.0:
            raise ModelError(f"interpolation_lambda must be in [0,1], got {interpolation_lambda}")
        if not 0.0 <= year_decay <= 1.0:
            raise ModelError(f"year_decay must be in [0,1], got {year_decay}")
        self.regime = regime
        self.smoothing_k = smoothing_k
        self.interpolation_lambda = interpolation_lambda
        self.year_decay = year_decay

        self.table: dict[str, Counter[str]] = {}
        self.year_table: dict[tuple[str, int], Counter[str]] = {}
        self.year_prior: dict[int, Counter[str]] = {}
        self.prior: Counter[str] = Counter()
        self.steps_trained = 0

        self._table_totals: dict[str, int] = {}
        self._year_totals: dict[tuple[str, int], int] = {}
        self._year_prior_totals: dict[int, int] = {}
        self._prior_total = 0
        self._key_years: dict[str, list[int]] = {}

    # ------------------------------------------------------------------
    # training

    @property
    def vocab(self) -> set[str]:
        return set(self.prior)

    @property
    def expert_years(self) -> list[int]:
        return sorted(self.year_prior)

    def observe(self, example: MaskedExample) -> None:
        key = normalize_key(example.input)
        target = example.target
        self.prior[target] += 1
        self._prior_total += 1
        self.table.setdefault(key, Counter())[target] += 1
        self._table_totals[key] = self._table_totals.get(key, 0) + 1
        if self.regime in ("yearly", "temporal"):
            year_key = (key, example.year)
            self.year_table.setdefault(year_key, Counter())[target] += 1
            self._year_totals[year_key] = self._year_totals.get(year_key, 0) + 1
            self.year_prior.setdefault(example.year, Counter())[target] += 1
            self._year_prior_totals[example.year] = (
                self._year_prior_totals.get(example.year, 0) + 1
            )
            years = self._key_years.setdefault(key, [])
            if example.year not in years:
                years.append(example.year)
                years.sort()
        self.steps_trained += 1

    def fit(self, stream: Iterable[MaskedExample], steps: int | None = None) -> "TemporalCountModel":
        """Consume examples (at most `steps` when given) and update counts."""
        count = 0
        iterator: Iterator[MaskedExample] = iter(stream)
        if steps is not None:
            if steps < 1:
                raise ModelError(f"steps must be >= 1, got {steps}")
            iterator = islice(iterator, steps)
        for example in iterator:
            self.observe(example)
            count += 1
        if count == 0 and self.steps_trained == 0:
            raise ModelError("training stream yielded no examples")
        return self

    # ------------------------------------------------------------------
    # scoring

    def _smoothed(self, counter: Counter[str] | None, total: int, target: str) -> float:
        k = self.smoothing_k
        denom = total + k * (len(self.prior) + 1)
        count = counter.get(target, 0) if counter is not None else 0
        return (count + k) / denom

    def _global_prob(self, key: str, target: str) -> float:
        counter = self.table.get(key)
        if counter is not None:
            return self._smoothed(counter, self._table_totals[key], target)
        return self._smoothed(self.prior, self._prior_total, target)

    def _yearly_prob(self, key: str, year: int, target: str) -> float:
        if not self.year_prior:
            return self._smoothed(self.prior, self._prior_total, target)
        expert = route_year(self.year_prior, year)
        counter = self.year_table.get((key, expert))
        if counter is not None:
            return self._smoothed(counter, self._year_totals[(key, expert)], target)
        return self._smoothed(self.year_prior[expert], self._year_prior_totals[expert], target)

    def _temporal_prob(self, key: str, year: int, target: str) -> float:
        global_prob = self._global_prob(key, target)
        trained_years = self._key_years.get(key)
        if not trained_years:
            year_prob = global_prob
        else:
            nearest = min(trained_years, key=lambda y: (abs(y - year), -y))
            counter = self.year_table[(key, nearest)]
            table_prob = self._smoothed(counter, self._year_totals[(key, nearest)], target)
            distance = abs(year - nearest)
            if distance == 0:
                year_prob = table_prob
            else:
                gamma = self.year_decay**distance
                year_prob = gamma * table_prob + (1.0 - gamma) * global_prob
        lam = self.interpolation_lambda
        return lam * year_prob + (1.0 - lam) * global_prob

    def prob(self, input_text: str, year: int, target: str) -> float:
        """P(target | input, year) under this model's regime."""
        if MASK not in input_text:
            raise ModelError(f"input must contain the mask literal: {input_text!r}")
        key = normalize_key(input_text)
        if self.regime == "uniform":
            return self._global_prob(key, target)
        if self.regime == "yearly":
            return self._yearly_prob(key, year, target)
        return self._temporal_prob(key, year, target)

    def score(self, input_text: str, year: int, target: str) -> SpanScore:
        """Span log-probability with the target's token length."""
        return SpanScore(
            log_prob=math.log(self.prob(input_text, year, target)),
            target_len=target_length(target),
        )

    def predict(
        self, input_text: str, year: int, top_n: int | None = None
    ) -> list[tuple[str, float]]:
        """Answers ranked by probability; ties break on the answer string."""
        if not self.prior:
            raise ModelError("untrained model cannot rank answers")
        scored = [
            (answer, self.prob(input_text, year, answer)) for answer in self.prior
        ]
        scored.sort(key=lambda item: (-item[1], item[0]))
        if top_n is not None:
            scored = scored[:top_n]
        return [(answer, math.log(p)) for answer, p in scored]

    def candidate_distribution(
        self, input_text: str, year: int, candidates: Sequence[str]
    ) -> list[float]:
        """Model probabilities renormalized over a closed candidate set."""
        if not candidates:
            raise ModelError("candidates must be non-empty")
        raw = [self.prob(input_text, year, candidate) for candidate in candidates]
        total = sum(raw)
        return [p / total for p in raw]

    def copy(self) -> "TemporalCountModel":
        return copy.deepcopy(self)

    # ------------------------------------------------------------------
    # serialization: sorted-key text lines, one record per line

    _HEADER = "tempoprobe-count-model v1"

    def save(self, path: str | Path) -> None:
        lines = [self._HEADER]
        meta = {
            "regime": self.regime,
            "smoothing_k": self.smoothing_k,
            "interpolation_lambda": self.interpolation_lambda,
            "year_decay": self.year_decay,
            "steps": self.steps_trained,
        }
        lines.append("meta\t" + json.dumps(meta, sort_keys=True))
        for answer in sorted(self.prior):
            lines.append(f"prior\t{json.dumps(answer)}\t{self.prior[answer]}")
        for key in sorted(self.table):
            counter = self.table[key]
            for answer in sorted(counter):
                lines.append(f"table\t{json.dumps(key)}\t{json.dumps(answer)}\t{counter[answer]}")
        for key, year in sorted(self.year_table):
            counter = self.year_table[(key, year)]
            for answer in sorted(counter):
                lines.append(
                    f"year\t{json.dumps(key)}\t{year}\t{json.dumps(answer)}\t{counter[answer]}"
                )
        for year in sorted(self.year_prior):
            counter = self.year_prior[year]
            for answer in sorted(counter):
                lines.append(f"yearprior\t{year}\t{json.dumps(answer)}\t{counter[answer]}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TemporalCountModel":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != cls._HEADER:
            raise ModelError(f"{path}: not a count-model file")
        if len(lines) < 2 or not lines[1].startswith("meta\t"):
            raise ModelError(f"{path}: missing meta record")
        meta = json.loads(lines[1].split("\t", 1)[1])
        model = cls(
            regime=meta["regime"],
            smoothing_k=meta["smoothing_k"],
            interpolation_lambda=meta["interpolation_lambda"],
            year_decay=meta.get("year_decay", 0.5),
        )
        model.steps_trained = int(meta.get("steps", 0))
        for lineno, line in enumerate(lines[2:], start=3):
            if not line:
                continue
            parts = line.split("\t")
            try:
                if parts[0] == "prior":
                    _, answer_json, count = parts
                    model.prior[json.loads(answer_json)] = int(count)
                elif parts[0] == "table":
                    _, key_json, answer_json, count = parts
                    key = json.loads(key_json)
                    model.table.setdefault(key, Counter())[json.loads(answer_json)] = int(count)
                elif parts[0] == "year":
                    _, key_json, year, answer_json, count = parts
                    key = json.loads(key_json)
                    counter = model.year_table.setdefault((key, int(year)), Counter())
                    counter[json.loads(answer_json)] = int(count)
                elif parts[0] == "yearprior":
                    _, year, answer_json, count = parts
                    counter = model.year_prior.setdefault(int(year), Counter())
                    counter[json.loads(answer_json)] = int(count)
                else:
                    raise ModelError(f"unknown record type {parts[0]!r}")
            except (ValueError, IndexError) as exc:
                raise ModelError(f"{path}: line {lineno}: {exc}") from None
        model._rebuild_caches()
        return model

    def _rebuild_caches(self) -> None:
        self._prior_total = sum(self.prior.values())
        self._table_totals = {key: sum(c.values()) for key, c in self.table.items()}
        self._year_totals = {yk: sum(c.values()) for yk, c in self.year_table.items()}
        self._year_prior_totals = {y: sum(c.values()) for y, c in self.year_prior.items()}
        self._key_years = {}
        for key, year in self.year_table:
            years = self._key_years.setdefault(key, [])
            if year not in years:
                years.append(year)
        for years in self._key_years.values():
            years.sort()


def train(
    stream: Iterable[MaskedExample],
    regime: str = "temporal",
    steps: int = 1,
    smoothing_k: float = 0.1,
    interpolation_lambda: float = 0.8,
    year_decay: float = 0.5,
) -> TemporalCountModel:
    """Train a fresh count model on `steps` draws from a stream."""
    model = TemporalCountModel(
        regime=regime,
        smoothing_k=smoothing_k,
        interpolation_lambda=interpolation_lambda,
        year_decay=year_decay,
    )
    return model.fit(stream, steps=steps)
